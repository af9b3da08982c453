use std::fs;
use std::path::Path;

use polya_cli::app::{run, EXIT_FAILED, EXIT_OK, EXIT_USAGE};
use polya_cli::output::{parse_stats_csv, stats_csv, stats_rows};
use polya_cli::{parse_config, render_config};
use polya_core::model::{InitialState, NavigationMatrix, ScenarioConfig};
use polya_core::simulate::{run_ensemble, EnsembleStats, Sequential};
use proptest::prelude::*;

const EHRENFEST: &str = "\
dimension = 2
matrix = [-1, 1,
           1, -1]
init = [3, 5]
horizon = 2
checkpoints = [0.5, 2]
ensemble_size = 600
seed = 3
";

fn polya(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("polya").chain(args.iter().copied());
    let code = run(argv, &mut out, &mut err);
    (
        code,
        String::from_utf8(out).unwrap(),
        String::from_utf8(err).unwrap(),
    )
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn help_lists_global_flags() {
    let (code, out, _) = polya(&["--help"]);
    assert_eq!(code, EXIT_OK);
    for flag in [
        "--seed",
        "--workers",
        "--output",
        "--format",
        "--ensemble-size",
        "simulate",
        "kolmogorov",
    ] {
        assert!(out.contains(flag), "help lacks {flag}:\n{out}");
    }
    let bin = std::process::Command::new(env!("CARGO_BIN_EXE_polya"))
        .arg("--help")
        .output()
        .unwrap();
    assert_eq!(bin.status.code(), Some(0));
}

#[test]
fn usage_and_config_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(polya(&["--bogus"]).0, EXIT_USAGE);
    assert_eq!(polya(&["simulate", "/nonexistent/cfg"]).0, EXIT_USAGE);
    let bad = write(dir.path(), "bad.cfg", &format!("{EHRENFEST}turbo = true\n"));
    let (code, _, err) = polya(&["simulate", &bad]);
    assert_eq!(code, EXIT_USAGE);
    assert!(err.contains("line 9, column 1"), "{err}");
    let untenable = write(
        dir.path(),
        "u.cfg",
        &EHRENFEST.replace("init = [3, 5]", "init = [3.5, 5]"),
    );
    let (code, _, err) = polya(&["simulate", &untenable]);
    assert_eq!(code, EXIT_USAGE);
    assert!(err.contains("tenable"), "{err}");
    let good = write(dir.path(), "e.cfg", EHRENFEST);
    assert_eq!(polya(&["simulate", &good, "--workers", "0"]).0, EXIT_USAGE);
}

#[test]
fn kolmogorov_table() {
    let (code, out, _) = polya(&[
        "kolmogorov",
        "--i",
        "2",
        "--delta",
        "1",
        "--ell-max",
        "60",
        "--t",
        "1",
    ]);
    assert_eq!(code, EXIT_OK);
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines.len(), 62);
    assert_eq!(lines[0], "ell,probability,ode_probability");
    let f: Vec<&str> = lines[1].split(',').collect();
    assert_eq!(f[0], "0");
    let p0: f64 = f[1].parse().unwrap();
    assert!((p0 - (-2.0f64).exp()).abs() <= 1e-15 * p0);
    let q0: f64 = f[2].parse().unwrap();
    assert!((q0 - p0).abs() < 1e-10);
}

#[test]
fn simulate_is_worker_independent_and_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = write(dir.path(), "e.cfg", EHRENFEST);
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    assert_eq!(
        polya(&[
            "simulate",
            &cfg_path,
            "--workers",
            "1",
            "--output",
            a.to_str().unwrap()
        ])
        .0,
        EXIT_OK
    );
    assert_eq!(
        polya(&[
            "simulate",
            &cfg_path,
            "--workers",
            "3",
            "--output",
            b.to_str().unwrap()
        ])
        .0,
        EXIT_OK
    );
    let text = fs::read(&a).unwrap();
    assert_eq!(text, fs::read(&b).unwrap());

    let cfg = parse_config(EHRENFEST).unwrap();
    let stats = run_ensemble(&cfg, &Sequential).unwrap();
    let text = String::from_utf8(text).unwrap();
    assert_eq!(text, stats_csv(&stats));
    let rows = parse_stats_csv(&text).unwrap();
    assert_eq!(rows, stats_rows(&stats));
    // header + (coordinate 1 with partner 2, coordinate 2) per checkpoint
    assert_eq!(text.lines().count(), 5);
    assert_eq!(rows[0].covariance_partner, Some(2));
    let var = rows[0].variance.0;
    // X + Y is conserved, so Cov(X, Y) = -Var(X)
    assert!((rows[0].covariance.unwrap().0 + var).abs() <= 1e-9 * var);
}

#[test]
fn overrides_and_json() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = write(dir.path(), "e.cfg", EHRENFEST);
    let (code, out, _) = polya(&[
        "simulate",
        &cfg_path,
        "--format",
        "json",
        "--seed",
        "11",
        "--ensemble-size",
        "300",
    ]);
    assert_eq!(code, EXIT_OK);
    let doc: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(doc["n"], 300);
    let mut cfg = parse_config(EHRENFEST).unwrap();
    cfg.master_seed = 11;
    cfg.ensemble_size = 300;
    let stats = run_ensemble(&cfg, &Sequential).unwrap();
    assert_eq!(doc["rows"][0]["mean"].as_f64().unwrap(), stats.mean(0, 0));
}

#[test]
fn analyze_triangular() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "t.cfg",
        "dimension = 2\nmatrix = [1, 1, 0, 2]\ninit = [1, 1]\nhorizon = 1\n",
    );
    let (code, out, err) = polya(&["analyze", &cfg, "--times", "0.5,1", "--u", "0,0;0.1,0.05"]);
    assert_eq!(code, EXIT_OK, "{err}");
    let rows: Vec<Vec<&str>> = out
        .lines()
        .skip(1)
        .map(|l| l.split(',').collect())
        .collect();
    let value = |t: f64, q: &str, i: &str| -> f64 {
        rows.iter()
            .find(|r| r[0].parse::<f64>().unwrap() == t && r[1] == q && r[2] == i)
            .map(|r| r[5].parse().unwrap())
            .unwrap()
    };
    assert!((value(1.0, "mean", "1") - std::f64::consts::E).abs() < 1e-14);
    let e = std::f64::consts::E;
    assert!((value(1.0, "mean", "2") - (2.0 * e * e - e)).abs() < 1e-12);
    let origin = rows
        .iter()
        .find(|r| r[1] == "mgf" && r[4].starts_with("0.0"))
        .unwrap();
    assert_eq!(origin[5].parse::<f64>().unwrap(), 1.0);
    assert_eq!(polya(&["analyze", &cfg, "--u", "0.1"]).0, EXIT_USAGE);
}

#[test]
fn verify_config_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let hill = write(
        dir.path(),
        "h.cfg",
        "dimension = 2\nmatrix = [-1, -1, 1, 1]\ninit = [1, 3]\nhorizon = 2\nensemble_size = 2000\nseed = 1\n",
    );
    let (code, out, err) = polya(&["verify", &hill]);
    assert_eq!(code, EXIT_OK, "{out}{err}");
    assert!(out.contains("config/hill-conservation/violations"));
    assert!(out.starts_with("# master_seed=1\n"));

    let general = write(
        dir.path(),
        "g.cfg",
        "dimension = 2\nmatrix = [1, 2, 3, 4]\ninit = [1, 1]\nhorizon = 1\n",
    );
    assert_eq!(polya(&["verify", &general]).0, EXIT_USAGE);
}

#[test]
fn verify_failure_exit_1() {
    // a tiny canonical battery has too few samples for the Monte Carlo items
    let (code, out, err) = polya(&[
        "verify",
        "canonical",
        "--ensemble-size",
        "20",
        "--workers",
        "1",
    ]);
    assert_eq!(code, EXIT_FAILED, "{err}");
    assert!(out.contains("# overall_pass=false"));
    assert!(err.contains("insufficient samples"), "{err}");
}

fn small_config() -> impl Strategy<Value = ScenarioConfig> {
    (
        prop::collection::vec(0.0f64..5.0, 4),
        prop::collection::vec(0.01f64..10.0, 2),
        0.1f64..5.0,
        1u64..1000,
        any::<u64>(),
    )
        .prop_map(|(m, init, horizon, n, seed)| {
            let matrix = NavigationMatrix::from_constants(&[[m[0], m[1]], [m[2], m[3]]]).unwrap();
            let init = InitialState::new(init).unwrap();
            ScenarioConfig::new(matrix, init, horizon, vec![horizon / 3.0, horizon], n, seed)
                .unwrap()
        })
}

proptest! {
    #[test]
    fn config_render_parse_round_trip(cfg in small_config()) {
        prop_assert_eq!(parse_config(&render_config(&cfg)).unwrap(), cfg);
    }

    #[test]
    fn stats_csv_round_trip(xs in prop::collection::vec((-1e6f64..1e6, -1e-3f64..1e3, 0.0f64..1e-200), 1..40)) {
        let mut stats = EnsembleStats::new(&[0.25, 1.0], 3);
        for &(a, b, c) in &xs {
            stats.push_values(0, &[a, b, c]);
            stats.push_values(1, &[b, c, a]);
        }
        let text = stats_csv(&stats);
        prop_assert_eq!(parse_stats_csv(&text).unwrap(), stats_rows(&stats));
        prop_assert_eq!(stats_csv(&stats), text);
    }
}
