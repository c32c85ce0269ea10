use std::fs;
use std::process::Command;

use nalgebra::{DMatrix, DVector};
use secl::harness::csv::{rates_csv, rms_csv};
use secl::harness::{emit_csv, run_monte_carlo, Case, ExperimentConfig, RateMode, Scenario};
use secl::model::LinearGaussianModel;
use secl::numerics::SpdMatrix;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_secl"));
    c.env_remove("SECL_OUT_DIR");
    c
}

fn small(case: Case) -> ExperimentConfig {
    ExperimentConfig {
        case,
        trials: 20,
        steps: 15,
        rate_trial_index: 4,
        ..ExperimentConfig::default()
    }
}

#[test]
fn nearly_noiseless_model_tracks_exactly() {
    let n = 2;
    let model = LinearGaussianModel::new(
        DMatrix::from_row_slice(n, n, &[1.0, 1.0, 0.0, 1.0]),
        DMatrix::identity(n, n),
        DMatrix::identity(n, n) * 1e-14,
        DMatrix::identity(n, n) * 1e-14,
        DVector::zeros(n),
        DMatrix::identity(n, n),
    )
    .unwrap();
    let cfg = ExperimentConfig {
        // tight bound: any visible error is transmitted
        case: Case::Custom(SpdMatrix::identity(n).scaled(1e-12).unwrap()),
        scenario: Scenario { model, true_x0: None },
        trials: 1,
        steps: 30,
        rate_trial_index: 1,
        ..ExperimentConfig::default()
    };
    let s = run_monte_carlo(&cfg).unwrap();
    for row in &s.rms[1..] {
        assert!(row.iter().all(|&v| v < 1e-5), "{row:?}");
    }
}

#[test]
fn rates_file_has_one_row_per_step_and_files_exist() {
    let dir = tempfile::tempdir().unwrap();
    let s = run_monte_carlo(&small(Case::Case2)).unwrap();
    let paths = emit_csv(&s, dir.path()).unwrap();
    let rates = fs::read_to_string(dir.path().join("rates.csv")).unwrap();
    assert_eq!(rates.lines().count(), 1 + 15);
    assert!(paths.iter().all(|p| p.exists()));
    let summary = fs::read_to_string(dir.path().join("summary.csv")).unwrap();
    assert!(summary.starts_with("case,avg_empirical,avg_alg1,avg_alg2\ncase2,"));
}

#[test]
fn same_seed_gives_identical_files() {
    let a = run_monte_carlo(&small(Case::Case1)).unwrap();
    let b = run_monte_carlo(&small(Case::Case1)).unwrap();
    assert_eq!(rms_csv(&a), rms_csv(&b));
    assert_eq!(rates_csv(&a), rates_csv(&b));
}

#[test]
fn two_step_prediction_tracks_empirical_rate_within_three_standard_errors() {
    for case in Case::ALL {
        let s = run_monte_carlo(&ExperimentConfig {
            case,
            trials: 5000,
            rate_mode: RateMode::Averaged,
            ..ExperimentConfig::default()
        })
        .unwrap();
        let n = s.comm_rate_empirical.len();
        let within = (2..n)
            .filter(|&k| {
                let se = s.comm_rate_stderr[k].max(1e-12);
                (s.comm_rate_empirical[k] - s.comm_rate_alg2[k]).abs() <= 3.0 * se
            })
            .count();
        let frac = within as f64 / (n - 2) as f64;
        assert!(frac >= 0.9, "{}: {frac}", s.case_label);
    }
}

#[test]
fn cli_simulate_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin()
        .args(["simulate", "--case", "2", "--trials", "6", "--steps", "8", "--trial-index", "2", "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stdout).starts_with("case2: trials=6"));
    for f in ["rms.csv", "rates.csv", "rate_stderr.csv", "summary.csv"] {
        assert!(dir.path().join(f).exists(), "{f}");
    }
}

#[test]
fn cli_flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    let out_dir = dir.path().join("res");
    fs::write(
        &cfg,
        format!("# small run\ntrials = 3\nsteps = 7\ntrial_index = 1\nout = {}\n", out_dir.display()),
    )
    .unwrap();
    let out = bin().arg("--config").arg(&cfg).args(["simulate", "--steps", "9"]).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let rates = fs::read_to_string(out_dir.join("rates.csv")).unwrap();
    assert_eq!(rates.lines().count(), 1 + 9);
    assert!(String::from_utf8_lossy(&out.stdout).contains("trials=3"));
}

#[test]
fn cli_env_sets_default_output_directory() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin()
        .env("SECL_OUT_DIR", dir.path())
        .args(["rates", "--case", "3", "--steps", "6"])
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let body = fs::read_to_string(dir.path().join("trial_rates.csv")).unwrap();
    assert!(body.starts_with("k,gamma,alg1,alg2\n"));
    assert_eq!(body.lines().count(), 7);
}

#[test]
fn cli_reports_bad_input_with_nonzero_exit() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.cfg");
    fs::write(&cfg, "trials = many\n").unwrap();
    let out = bin().arg("--config").arg(&cfg).arg("simulate").output().unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 1"));
    let out = bin().args(["simulate", "--steps", "1"]).output().unwrap();
    assert!(!out.status.success());
}

#[test]
fn cli_check_suite_passes() {
    let out = bin().arg("--check").output().unwrap();
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(out.status.success(), "{text}");
    assert_eq!(text.lines().filter(|l| l.starts_with("[PASS]")).count(), 7);
}

#[test]
fn cli_table_with_few_trials_notes_wider_tolerance() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin()
        .args(["table1", "--trials", "4", "--steps", "6", "--trial-index", "1", "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("note:"));
    let summary = fs::read_to_string(dir.path().join("summary.csv")).unwrap();
    assert_eq!(summary.lines().count(), 4);
    assert!(dir.path().join("case3").join("rms.csv").exists());
}
