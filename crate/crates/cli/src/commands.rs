use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use covparam::ensembles::{compare_groups, random_stable, EnsembleSpec};
use covparam::excitability::{abscissa_bounds, excitability_threshold};
use covparam::frequency::{
    energy_identity_check, highpass_checks, resonance_2d, spectrum_table, HighpassConfig, QuadratureConfig,
};
use covparam::grid::GridSpec;
use covparam::io::{fmt_f64, read_matrix_csv, read_matrix_dir, save_matrix_csv, to_json_string, write_matrix_csv, write_rows_csv, MatrixJson};
use covparam::model::{identity, lyapunov_residual};
use covparam::simulate::{dc_identity_residual, estimate_stats, simulate_ou, SimConfig};
use covparam::spectrum::{asymptotic_limits, eigen_sweep};
use covparam::{
    forward_param, inverse_param, AlphaFamily64, Error, Matrix64, Parametrization64, SystemModel64, Tolerances,
};
use serde::Serialize;
use serde_json::json;

use crate::args::{
    Command, Common, Ensemble, EnergyCheck, FamilyArgs, FamilySweep, Format, ParamForward, ParamInverse, Psd,
    Resonance2d, Simulate,
};

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Core(Error),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "{m}"),
            CliError::Core(e) => write!(f, "{e}"),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Core(e)
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError::Core(Error::Io(e))
    }
}

type CliResult<T> = Result<T, CliError>;

pub fn run(cmd: Command) -> CliResult<()> {
    let common = cmd.common();
    if let Some(t) = common.threads {
        if t == 0 {
            return Err(CliError::Usage("--threads must be at least 1".into()));
        }
        // only fails if a pool already exists, which cannot happen this early
        let _ = rayon::ThreadPoolBuilder::new().num_threads(t).build_global();
    }
    let tol = tolerances(common)?;
    let mut config = serde_json::to_value(&cmd).map_err(Error::from)?;
    config["tolerances"] = serde_json::to_value(tol).map_err(Error::from)?;
    eprintln!("{}", to_json_string(&config)?);
    match &cmd {
        Command::ParamForward(c) => param_forward(c, &tol, &config),
        Command::ParamInverse(c) => param_inverse(c, &tol, &config),
        Command::EigSweep(c) => eig_sweep(c, &tol, &config),
        Command::Abscissa(c) => abscissa(c, &tol, &config),
        Command::Psd(c) => psd(c, &tol, &config),
        Command::EnergyCheck(c) => energy_check(c, &tol, &config),
        Command::Resonance2d(c) => resonance(c, &config),
        Command::Simulate(c) => simulate(c, &tol, &config),
        Command::Ensemble(c) => ensemble(c, &tol, &config),
    }
}

fn tolerances(c: &Common) -> CliResult<Tolerances> {
    let mut t = Tolerances::default();
    if let Some(v) = c.spd_floor {
        t.spd_eig_floor = v;
    }
    if let Some(v) = c.lyap_tol {
        t.lyap_residual = v;
    }
    if let Some(v) = c.skew_tol {
        t.skew_sym = v;
    }
    if let Some(v) = c.match_tol {
        t.match_rel = v;
    }
    t.validate()?;
    Ok(t)
}

fn emit(common: &Common, body: impl FnOnce(&mut dyn Write) -> CliResult<()>) -> CliResult<()> {
    match &common.out {
        Some(path) => {
            let mut f = io::BufWriter::new(fs::File::create(path)?);
            body(&mut f)?;
            f.flush()?;
        }
        None => {
            let stdout = io::stdout();
            let mut lock = stdout.lock();
            body(&mut lock)?;
            lock.flush()?;
        }
    }
    Ok(())
}

fn emit_json(common: &Common, value: &impl Serialize) -> CliResult<()> {
    let text = to_json_string(value)?;
    emit(common, |w| {
        writeln!(w, "{text}")?;
        Ok(())
    })
}

fn emit_rows<R: Serialize>(common: &Common, rows: &[R]) -> CliResult<()> {
    emit(common, |w| Ok(write_rows_csv(w, rows)?))
}

fn write_json_file(path: &Path, value: &impl Serialize) -> CliResult<()> {
    fs::write(path, to_json_string(value)? + "\n")?;
    Ok(())
}

fn noise_cov(path: &Option<PathBuf>, n: usize) -> CliResult<Matrix64> {
    match path {
        Some(p) => Ok(read_matrix_csv(p)?),
        None => Ok(identity(n)),
    }
}

fn load_family(f: &FamilyArgs, tol: &Tolerances) -> CliResult<AlphaFamily64> {
    let sigma: Matrix64 = read_matrix_csv(&f.sigma)?;
    let s_bar: Matrix64 = read_matrix_csv(&f.sbar)?;
    let sigma_w = noise_cov(&f.sigma_w, sigma.nrows())?;
    Ok(AlphaFamily64::new(sigma, sigma_w, s_bar, tol)?)
}

fn grid(spec: &GridSpec, log: bool) -> CliResult<Vec<f64>> {
    Ok(spec.with_log(log || spec.log).points()?)
}

fn mj(m: &Matrix64) -> MatrixJson {
    MatrixJson::from_matrix(m)
}

fn param_forward(c: &ParamForward, tol: &Tolerances, config: &serde_json::Value) -> CliResult<()> {
    let sigma: Matrix64 = read_matrix_csv(&c.sigma)?;
    let s: Matrix64 = read_matrix_csv(&c.s)?;
    let sigma_w = noise_cov(&c.sigma_w, sigma.nrows())?;
    let p = Parametrization64::new(sigma, s, sigma_w, tol)?;
    let model = forward_param(&p, tol)?;
    match c.common.format.unwrap_or(Format::Csv) {
        Format::Csv => emit(&c.common, |w| Ok(write_matrix_csv(w, model.a())?)),
        Format::Json => emit_json(
            &c.common,
            &json!({
                "config": config,
                "n": model.dim(),
                "A": mj(model.a()),
                "lyap_residual": lyapunov_residual(model.a(), p.sigma(), p.sigma_w()),
            }),
        ),
    }
}

fn param_inverse(c: &ParamInverse, tol: &Tolerances, config: &serde_json::Value) -> CliResult<()> {
    let a: Matrix64 = read_matrix_csv(&c.a)?;
    let sigma_w = noise_cov(&c.sigma_w, a.nrows())?;
    let model = SystemModel64::new(a, sigma_w, tol)?;
    let p = inverse_param(&model, tol)?;
    if let Some(path) = &c.sigma_out {
        save_matrix_csv(path, p.sigma())?;
    }
    if let Some(path) = &c.s_out {
        save_matrix_csv(path, p.s())?;
    }
    match c.common.format.unwrap_or(Format::Json) {
        Format::Json => emit_json(
            &c.common,
            &json!({
                "config": config,
                "n": p.dim(),
                "Sigma": mj(p.sigma()),
                "S": mj(p.s()),
                "lyap_residual": lyapunov_residual(model.a(), p.sigma(), model.sigma_w()),
            }),
        ),
        Format::Csv => {
            if c.sigma_out.is_none() || c.s_out.is_none() {
                return Err(CliError::Usage("--format csv needs --sigma-out and --s-out".into()));
            }
            Ok(())
        }
    }
}

fn eig_sweep(c: &FamilySweep, tol: &Tolerances, config: &serde_json::Value) -> CliResult<()> {
    let family = load_family(&c.family, tol)?;
    let alphas = grid(&c.alpha, c.log)?;
    let locus = eigen_sweep(&family, &alphas, tol)?;
    let report = asymptotic_limits(family.sigma(), family.sigma_w(), family.s_bar(), tol)?;
    let summary = json!({
        "config": config,
        "n": family.dim(),
        "alpha_scale": family.alpha_scale()?,
        "mu_im": report.mu.iter().map(|m| m.im).collect::<Vec<_>>(),
        "re_limits": report.re_limits,
        "simple_spectrum": report.simple_spectrum,
    });
    if let Some(path) = &c.summary {
        write_json_file(path, &summary)?;
    }
    let rows = locus.rows();
    match c.common.format.unwrap_or(Format::Csv) {
        Format::Csv => emit_rows(&c.common, &rows),
        Format::Json => {
            let mut v = summary;
            v["rows"] = serde_json::to_value(&rows).map_err(Error::from)?;
            emit_json(&c.common, &v)
        }
    }
}

fn abscissa(c: &FamilySweep, tol: &Tolerances, config: &serde_json::Value) -> CliResult<()> {
    let family = load_family(&c.family, tol)?;
    let alphas = grid(&c.alpha, c.log)?;
    let sweep = abscissa_bounds(&family, &alphas, tol)?;
    let threshold = excitability_threshold(&family, tol)?;
    let summary = json!({
        "config": config,
        "n": family.dim(),
        "p_eigs": [sweep.p_eigs.0, sweep.p_eigs.1],
        "m_lambda_max": sweep.m_lambda_max,
        "sufficient_alpha": sweep.sufficient_alpha,
        "threshold": threshold,
        "bound_violations": sweep.violations(tol.match_rel * (1.0 + sweep.p_eigs.0.abs())).len(),
    });
    if let Some(path) = &c.summary {
        write_json_file(path, &summary)?;
    }
    let rows = sweep.rows();
    match c.common.format.unwrap_or(Format::Csv) {
        Format::Csv => emit_rows(&c.common, &rows),
        Format::Json => {
            let mut v = summary;
            v["rows"] = serde_json::to_value(&rows).map_err(Error::from)?;
            emit_json(&c.common, &v)
        }
    }
}

fn psd(c: &Psd, tol: &Tolerances, config: &serde_json::Value) -> CliResult<()> {
    let family = load_family(&c.family, tol)?;
    let alphas = grid(&c.alpha, c.log)?;
    let omegas = grid(&c.omega, c.omega_log)?;
    let table = spectrum_table(&family, &alphas, &omegas, false)?;
    let rows = table.rows();
    match c.common.format.unwrap_or(Format::Csv) {
        Format::Csv => emit_rows(&c.common, &rows),
        Format::Json => {
            let highpass = highpass_checks(&family, &alphas, &omegas, &HighpassConfig::default(), tol).ok();
            emit_json(
                &c.common,
                &json!({ "config": config, "highpass": highpass, "rows": rows }),
            )
        }
    }
}

fn energy_check(c: &EnergyCheck, tol: &Tolerances, config: &serde_json::Value) -> CliResult<()> {
    let model = match (&c.a, &c.sigma, &c.sbar) {
        (Some(a), _, _) => {
            let a: Matrix64 = read_matrix_csv(a)?;
            let w = noise_cov(&c.sigma_w, a.nrows())?;
            SystemModel64::new_stable(a, w, tol)?
        }
        (None, Some(sigma), Some(sbar)) => {
            let fam = load_family(
                &FamilyArgs { sigma: sigma.clone(), sbar: sbar.clone(), sigma_w: c.sigma_w.clone() },
                tol,
            )?;
            if c.at_alpha < 0.0 {
                return Err(CliError::Usage("--at-alpha must be nonnegative".into()));
            }
            fam.model(c.at_alpha)
        }
        _ => return Err(CliError::Usage("give --a, or --sigma with --sbar".into())),
    };
    let cfg = QuadratureConfig { omega_max: c.omega_max, rel_tol: c.rel_tol, ..Default::default() };
    let report = energy_identity_check(&model, &cfg, tol)?;
    emit_json(&c.common, &json!({ "config": config, "report": report }))
}

fn resonance(c: &Resonance2d, config: &serde_json::Value) -> CliResult<()> {
    let alphas = grid(&c.alpha, c.log)?;
    let r = resonance_2d(c.sigma2, c.d1, c.d2, &alphas)?;
    match c.common.format.unwrap_or(Format::Json) {
        Format::Json => emit_json(
            &c.common,
            &json!({ "config": config, "alpha_th": r.alpha_th, "rows": r.rows }),
        ),
        Format::Csv => emit_rows(&c.common, &r.rows),
    }
}

fn simulate(c: &Simulate, tol: &Tolerances, config: &serde_json::Value) -> CliResult<()> {
    let a: Matrix64 = read_matrix_csv(&c.a)?;
    let w = noise_cov(&c.sigma_w, a.nrows())?;
    let model = SystemModel64::new_stable(a, w, tol)?;
    let burn_in = match c.burn_in {
        Some(b) => b,
        None => SimConfig::minimal_burn_in(&model, c.dt)?,
    };
    let cfg = SimConfig {
        dt: c.dt,
        n_steps: c.steps,
        burn_in,
        seed: c.seed,
        n_trajectories: c.trajectories,
        scheme: c.scheme.into(),
    };
    let traj = simulate_ou(&model, &cfg, tol)?;
    if let Some(path) = &c.dump {
        let mut f = io::BufWriter::new(fs::File::create(path)?);
        let header: Vec<String> = (1..=traj.dim).map(|i| format!("x_{i}")).collect();
        writeln!(f, "t,{}", header.join(","))?;
        for (k, x) in traj.states(0).enumerate() {
            let cells: Vec<String> = x.iter().map(|v| fmt_f64(*v)).collect();
            writeln!(f, "{},{}", fmt_f64(k as f64 * c.dt), cells.join(","))?;
        }
        f.flush()?;
    }
    let stats = estimate_stats(&traj, model.sigma_w())?;
    emit_json(
        &c.common,
        &json!({
            "config": config,
            "sim": cfg,
            "Sigma_hat": mj(&stats.sigma_hat),
            "DC_hat": mj(&stats.dc_hat),
            "S_hat": mj(&stats.s_hat),
            "n_samples": stats.n_samples,
            "seed": c.seed,
            "dc_identity_residual": dc_identity_residual(&stats, model.a()),
        }),
    )
}

#[derive(Serialize)]
struct NormRow<'a> {
    group: &'a str,
    index: usize,
    norm: f64,
}

fn ensemble(c: &Ensemble, tol: &Tolerances, config: &serde_json::Value) -> CliResult<()> {
    let sigma_w = noise_cov(&c.sigma_w, c.n)?;
    let mut spec = EnsembleSpec::new(c.n, c.count, c.margin, c.imag, c.seed);
    spec.sigma_w = sigma_w.clone();
    let models = random_stable(&spec, tol)?;
    let reference = match &c.reference_dir {
        Some(dir) => {
            let mats = read_matrix_dir::<f64>(dir)?;
            if let Some((p, _)) = mats.iter().find(|(_, m)| m.nrows() != c.n || m.ncols() != c.n) {
                return Err(Error::DimensionMismatch(format!("{} is not {}x{}", p.display(), c.n, c.n)).into());
            }
            Some(mats.into_iter().map(|(_, m)| m).collect::<Vec<_>>())
        }
        None => None,
    };
    let cmp = compare_groups(&models, reference.as_deref(), &sigma_w, c.norm.into(), tol)?;
    match c.common.format.unwrap_or(Format::Json) {
        Format::Json => emit_json(&c.common, &json!({ "config": config, "report": cmp })),
        Format::Csv => {
            let mut rows: Vec<NormRow> = cmp
                .random
                .norms
                .iter()
                .enumerate()
                .map(|(index, &norm)| NormRow { group: "random", index, norm })
                .collect();
            if let Some(r) = &cmp.reference {
                rows.extend(r.norms.iter().enumerate().map(|(index, &norm)| NormRow { group: "reference", index, norm }));
            }
            emit_rows(&c.common, &rows)
        }
    }
}
