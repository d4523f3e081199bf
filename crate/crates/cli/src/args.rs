use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use covparam::ensembles::NormKind;
use covparam::grid::GridSpec;
use covparam::simulate::Scheme;
use serde::Serialize;

#[derive(Debug, Parser)]
#[command(name = "covparam", version, about = "Covariance/skew parametrization of stable linear stochastic systems")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(tag = "command", rename_all = "kebab-case")]
pub enum Command {
    /// A = (−½Σ_w + S)Σ⁻¹ from (Σ, S, Σ_w).
    ParamForward(ParamForward),
    /// (Σ, S) from a Hurwitz A.
    ParamInverse(ParamInverse),
    /// Eigenvalue branches of A(α) with their large-α limits.
    EigSweep(FamilySweep),
    /// Numerical abscissa of A(α) with its linear bounds.
    Abscissa(FamilySweep),
    /// Trace of the power spectral density over (ω, α).
    Psd(Psd),
    /// Compares the integrated spectral density with the Lyapunov covariance.
    EnergyCheck(EnergyCheck),
    /// Resonance peak of the planar system.
    Resonance2d(Resonance2d),
    /// Euler–Maruyama simulation and empirical Σ, DC and S.
    Simulate(Simulate),
    /// Random Hurwitz ensemble and ‖S‖ statistics.
    Ensemble(Ensemble),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum NormArg {
    Spectral,
    Frobenius,
}

impl From<NormArg> for NormKind {
    fn from(n: NormArg) -> Self {
        match n {
            NormArg::Spectral => NormKind::Spectral,
            NormArg::Frobenius => NormKind::Frobenius,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SchemeArg {
    EulerMaruyama,
    Exact,
}

impl From<SchemeArg> for Scheme {
    fn from(s: SchemeArg) -> Self {
        match s {
            SchemeArg::EulerMaruyama => Scheme::EulerMaruyama,
            SchemeArg::Exact => Scheme::Exact,
        }
    }
}

/// Options shared by every subcommand.
#[derive(Debug, Args, Serialize)]
pub struct Common {
    /// Output format (csv or json); each subcommand has its own default.
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Output file (stdout when omitted).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Worker threads for grid evaluation.
    #[arg(long, env = "COVPARAM_THREADS")]
    pub threads: Option<usize>,
    /// Relative SPD eigenvalue floor.
    #[arg(long)]
    pub spd_floor: Option<f64>,
    /// Relative Lyapunov residual tolerance.
    #[arg(long)]
    pub lyap_tol: Option<f64>,
    /// Relative (skew-)symmetry tolerance on input matrices.
    #[arg(long)]
    pub skew_tol: Option<f64>,
    /// Relative tolerance for analytic cross-checks.
    #[arg(long)]
    pub match_tol: Option<f64>,
}

#[derive(Debug, Args, Serialize)]
pub struct ParamForward {
    #[arg(long)]
    pub sigma: PathBuf,
    #[arg(long = "s")]
    pub s: PathBuf,
    /// Noise covariance (identity when omitted).
    #[arg(long)]
    pub sigma_w: Option<PathBuf>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args, Serialize)]
pub struct ParamInverse {
    #[arg(long)]
    pub a: PathBuf,
    #[arg(long)]
    pub sigma_w: Option<PathBuf>,
    /// Also write Σ as a CSV matrix.
    #[arg(long)]
    pub sigma_out: Option<PathBuf>,
    /// Also write S as a CSV matrix.
    #[arg(long)]
    pub s_out: Option<PathBuf>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args, Serialize)]
pub struct FamilyArgs {
    #[arg(long)]
    pub sigma: PathBuf,
    /// Skew direction S̄ (S = α·S̄).
    #[arg(long)]
    pub sbar: PathBuf,
    #[arg(long)]
    pub sigma_w: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct FamilySweep {
    #[command(flatten)]
    pub family: FamilyArgs,
    /// α grid as start:stop:count.
    #[arg(long, value_parser = parse_grid)]
    pub alpha: GridSpec,
    /// Logarithmic α spacing.
    #[arg(long)]
    pub log: bool,
    /// Write the JSON summary here in addition to the main output.
    #[arg(long)]
    pub summary: Option<PathBuf>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args, Serialize)]
pub struct Psd {
    #[command(flatten)]
    pub family: FamilyArgs,
    #[arg(long, value_parser = parse_grid)]
    pub alpha: GridSpec,
    #[arg(long)]
    pub log: bool,
    /// ω grid as start:stop:count.
    #[arg(long, value_parser = parse_grid)]
    pub omega: GridSpec,
    #[arg(long)]
    pub omega_log: bool,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args, Serialize)]
pub struct EnergyCheck {
    /// State matrix; alternatively give --sigma, --sbar and --at-alpha.
    #[arg(long, conflicts_with_all = ["sigma", "sbar"])]
    pub a: Option<PathBuf>,
    #[arg(long, requires = "sbar")]
    pub sigma: Option<PathBuf>,
    #[arg(long, requires = "sigma")]
    pub sbar: Option<PathBuf>,
    #[arg(long, default_value_t = 0.0)]
    pub at_alpha: f64,
    #[arg(long)]
    pub sigma_w: Option<PathBuf>,
    /// Truncation frequency (automatic when omitted).
    #[arg(long)]
    pub omega_max: Option<f64>,
    #[arg(long, default_value_t = 1e-9)]
    pub rel_tol: f64,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args, Serialize)]
pub struct Resonance2d {
    #[arg(long)]
    pub sigma2: f64,
    #[arg(long)]
    pub d1: f64,
    #[arg(long)]
    pub d2: f64,
    #[arg(long, value_parser = parse_grid)]
    pub alpha: GridSpec,
    #[arg(long)]
    pub log: bool,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args, Serialize)]
pub struct Simulate {
    #[arg(long)]
    pub a: PathBuf,
    #[arg(long)]
    pub sigma_w: Option<PathBuf>,
    #[arg(long, default_value_t = 1e-3)]
    pub dt: f64,
    #[arg(long, default_value_t = 200_000)]
    pub steps: usize,
    /// Discarded steps (five relaxation times when omitted).
    #[arg(long)]
    pub burn_in: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 1)]
    pub trajectories: usize,
    #[arg(long, value_enum, default_value_t = SchemeArg::EulerMaruyama)]
    pub scheme: SchemeArg,
    /// Write trajectory 0 as CSV (t, x_1..x_n).
    #[arg(long)]
    pub dump: Option<PathBuf>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args, Serialize)]
pub struct Ensemble {
    #[arg(long)]
    pub n: usize,
    #[arg(long, default_value_t = 20)]
    pub count: usize,
    /// Target max Re λ (negative).
    #[arg(long, allow_hyphen_values = true)]
    pub margin: f64,
    /// Target max |Im λ|.
    #[arg(long)]
    pub imag: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub sigma_w: Option<PathBuf>,
    /// Directory of reference state matrices (one CSV each).
    #[arg(long)]
    pub reference_dir: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = NormArg::Spectral)]
    pub norm: NormArg,
    #[command(flatten)]
    pub common: Common,
}

fn parse_grid(s: &str) -> Result<GridSpec, String> {
    s.parse::<GridSpec>().map_err(|e| e.to_string())
}

impl Command {
    pub fn common(&self) -> &Common {
        match self {
            Command::ParamForward(c) => &c.common,
            Command::ParamInverse(c) => &c.common,
            Command::EigSweep(c) | Command::Abscissa(c) => &c.common,
            Command::Psd(c) => &c.common,
            Command::EnergyCheck(c) => &c.common,
            Command::Resonance2d(c) => &c.common,
            Command::Simulate(c) => &c.common,
            Command::Ensemble(c) => &c.common,
        }
    }
}
