use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn covparam(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_covparam"))
        .current_dir(dir)
        .args(args)
        .env_remove("COVPARAM_THREADS")
        .output()
        .expect("binary runs")
}

fn fixture() -> TempDir {
    let dir = TempDir::new().unwrap();
    fs::write(dir.path().join("sigma.csv"), "0.5,0\n0,1\n").unwrap();
    fs::write(dir.path().join("sbar.csv"), "0,1\n-1,0\n").unwrap();
    fs::write(dir.path().join("w.csv"), "2,0\n0,2\n").unwrap();
    dir
}

fn read_matrix(path: &Path) -> Vec<Vec<f64>> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .map(|l| l.split(',').map(|x| x.trim().parse().unwrap()).collect())
        .collect()
}

fn max_diff(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    a.iter().flatten().zip(b.iter().flatten()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn json(out: &Output) -> serde_json::Value {
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

#[test]
fn forward_then_inverse_round_trips_through_files() {
    let dir = fixture();
    let p = dir.path();
    let fwd = covparam(p, &["param-forward", "--sigma", "sigma.csv", "--s", "sbar.csv", "--sigma-w", "w.csv", "--out", "a.csv"]);
    assert!(fwd.status.success());
    let a = read_matrix(&p.join("a.csv"));
    assert!(max_diff(&a, &[vec![-2.0, 1.0], vec![-2.0, -1.0]]) < 1e-12);
    let inv = covparam(
        p,
        &["param-inverse", "--a", "a.csv", "--sigma-w", "w.csv", "--sigma-out", "sig.csv", "--s-out", "s.csv"],
    );
    let report = json(&inv);
    assert_eq!(report["n"], 2);
    assert!(max_diff(&read_matrix(&p.join("sig.csv")), &read_matrix(&p.join("sigma.csv"))) < 1e-8);
    assert!(max_diff(&read_matrix(&p.join("s.csv")), &read_matrix(&p.join("sbar.csv"))) < 1e-8);
    assert!(report["lyap_residual"].as_f64().unwrap() < 1e-10);
}

#[test]
fn repeated_runs_are_byte_identical() {
    let dir = fixture();
    let p = dir.path();
    fs::write(p.join("a.csv"), "-2,1\n-2,-1\n").unwrap();
    let runs: [&[&str]; 4] = [
        &["simulate", "--a", "a.csv", "--sigma-w", "w.csv", "--steps", "20000", "--seed", "9", "--trajectories", "2"],
        &["ensemble", "--n", "5", "--count", "20", "--margin", "-0.4", "--imag", "1.5", "--seed", "3"],
        &["eig-sweep", "--sigma", "sigma.csv", "--sbar", "sbar.csv", "--sigma-w", "w.csv", "--alpha", "0:5:11"],
        &["psd", "--sigma", "sigma.csv", "--sbar", "sbar.csv", "--sigma-w", "w.csv", "--alpha", "0:2:3", "--omega", "0:10:21"],
    ];
    for args in runs {
        let first = covparam(p, args);
        assert!(first.status.success(), "{}", String::from_utf8_lossy(&first.stderr));
        let threaded: Vec<&str> = args.iter().copied().chain(["--threads", "3"]).collect();
        let second = covparam(p, &threaded);
        assert!(second.status.success());
        if args[0] == "eig-sweep" || args[0] == "psd" {
            // CSV carries no config echo, so thread count cannot leak into it
            assert_eq!(first.stdout, second.stdout);
        }
        assert_eq!(first.stdout, covparam(p, args).stdout);
    }
}

#[test]
fn exit_codes_separate_input_and_numerical_failures() {
    let dir = fixture();
    let p = dir.path();
    fs::write(p.join("unstable.csv"), "1,0\n0,-1\n").unwrap();
    fs::write(p.join("bad.csv"), "1,x\n0,1\n").unwrap();
    fs::write(p.join("ragged.csv"), "1,0\n0\n").unwrap();
    fs::write(p.join("notspd.csv"), "1,2\n2,1\n").unwrap();
    let code = |args: &[&str]| covparam(p, args).status.code().unwrap();
    assert_eq!(code(&["param-inverse", "--a", "unstable.csv"]), 2);
    assert_eq!(code(&["param-inverse", "--a", "bad.csv"]), 2);
    assert_eq!(code(&["param-inverse", "--a", "ragged.csv"]), 2);
    assert_eq!(code(&["param-forward", "--sigma", "notspd.csv", "--s", "sbar.csv"]), 2);
    assert_eq!(code(&["param-inverse", "--a", "missing.csv"]), 2);
    assert_eq!(code(&["eig-sweep", "--sigma", "sigma.csv"]), 2);
    assert_eq!(code(&["simulate", "--a", "sigma.csv", "--dt", "1"]), 2);
    // Hurwitz, but 2λ_1 is too close to zero for the Lyapunov solve
    fs::write(p.join("singular.csv"), "-1e-14,0\n0,-1\n").unwrap();
    assert_eq!(code(&["param-inverse", "--a", "singular.csv"]), 1);
    assert_eq!(code(&["param-forward", "--sigma", "sigma.csv", "--s", "sbar.csv", "--sigma-w", "w.csv"]), 0);
}

#[test]
fn resonance_reports_planar_threshold() {
    let dir = fixture();
    let out = covparam(dir.path(), &["resonance2d", "--sigma2", "2", "--d1", "2", "--d2", "1", "--alpha", "2:10:5"]);
    let v = json(&out);
    let th = v["alpha_th"].as_f64().unwrap();
    assert!((th - 5f64.sqrt() / 2.0).abs() < 1e-12);
    let rows = v["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 5);
    let wr = rows[0]["omega_r_formula"].as_f64().unwrap();
    assert!((wr - 44f64.sqrt() / (2.0 * 2f64.sqrt())).abs() < 1e-12);
    assert!(v["config"]["command"] == "resonance2d");
}

#[test]
fn config_is_echoed_on_stderr() {
    let dir = fixture();
    let out = covparam(dir.path(), &["abscissa", "--sigma", "sigma.csv", "--sbar", "sbar.csv", "--sigma-w", "w.csv", "--alpha", "0:4:5"]);
    assert!(out.status.success());
    let echo: serde_json::Value = serde_json::from_slice(out.stderr.split(|b| *b == b'\n').next().unwrap()).unwrap();
    assert_eq!(echo["command"], "abscissa");
    assert!(echo["tolerances"]["match_rel"].as_f64().unwrap() > 0.0);
    let csv = String::from_utf8(out.stdout).unwrap();
    assert_eq!(csv.lines().next().unwrap(), "alpha,omega,lower,upper");
    assert_eq!(csv.lines().count(), 6);
}

#[test]
fn energy_check_matches_lyapunov_covariance() {
    let dir = fixture();
    let v = json(&covparam(
        dir.path(),
        &["energy-check", "--sigma", "sigma.csv", "--sbar", "sbar.csv", "--sigma-w", "w.csv", "--at-alpha", "2"],
    ));
    assert!(v["report"]["rel_error"].as_f64().unwrap() < 1e-3);
}

#[test]
fn simulate_dump_has_time_column() {
    let dir = fixture();
    let p = dir.path();
    fs::write(p.join("a.csv"), "-2,1\n-2,-1\n").unwrap();
    let v = json(&covparam(
        p,
        &["simulate", "--a", "a.csv", "--sigma-w", "w.csv", "--steps", "20000", "--seed", "4", "--dump", "traj.csv"],
    ));
    assert_eq!(v["n_samples"], 20000);
    assert_eq!(v["seed"], 4);
    let dump = fs::read_to_string(p.join("traj.csv")).unwrap();
    assert_eq!(dump.lines().next().unwrap(), "t,x_1,x_2");
    assert_eq!(dump.lines().count(), 20002);
}

#[test]
fn ensemble_compares_reference_directory() {
    let dir = fixture();
    let p = dir.path();
    fs::create_dir(p.join("refs")).unwrap();
    fs::write(p.join("refs/one.csv"), "-2,1\n-2,-1\n").unwrap();
    fs::write(p.join("refs/two.csv"), "-1,0\n0,-1\n").unwrap();
    let v = json(&covparam(
        p,
        &["ensemble", "--n", "2", "--count", "4", "--margin", "-0.5", "--imag", "1", "--seed", "1", "--reference-dir", "refs"],
    ));
    let norms = v["report"]["reference"]["norms"].as_array().unwrap();
    assert_eq!(norms.len(), 2);
    assert!(norms[1].as_f64().unwrap().abs() < 1e-12);
    assert_eq!(v["report"]["random"]["norms"].as_array().unwrap().len(), 4);
}
