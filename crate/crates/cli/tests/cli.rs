//! End-to-end tests of the binary: artifact schemas, exit statuses, and
//! the byte-determinism acceptance criterion for `validate`.

use std::fs;
use std::path::PathBuf;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_shotcox"))
}

fn write_config(name: &str, text: &str) -> PathBuf {
    let path = std::env::temp_dir().join(format!("shotcox-test-{name}-{}.conf", std::process::id()));
    fs::write(&path, text).unwrap();
    path
}

fn standard_config() -> PathBuf {
    write_config(
        "standard",
        "nu = 1.0\nrho = 1.0\nkernel.type = exponential\nkernel.a = 1.0\nkernel.b = 1.0\n",
    )
}

fn poisson_config() -> PathBuf {
    write_config("poisson", "nu = 1.0\nrho = 0.0\nkernel.type = zero\n")
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout_of(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

#[test]
fn validate_report_is_byte_identical_across_runs() {
    let a = run(&["validate", "--seed", "42"]);
    let b = run(&["validate", "--seed", "42"]);
    assert!(a.status.success(), "validate failed: {}", stdout_of(&a));
    assert_eq!(a.stdout, b.stdout, "criterion 11: reports must be byte-identical");
    println!("criterion 11 determinism: PASS — repeated `validate --seed 42` reports are byte-identical");
    let text = stdout_of(&a);
    assert!(text.contains("RESULT PASS"));
    for id in 1..=10 {
        assert!(
            text.contains(&format!("criterion {id:02} ")),
            "report lists criterion {id:02}"
        );
    }
}

#[test]
fn validate_writes_report_artifact() {
    let out_path = std::env::temp_dir().join(format!("shotcox-report-{}.txt", std::process::id()));
    let out = run(&["validate", "--seed", "7", "--out", out_path.to_str().unwrap()]);
    assert!(out.status.success());
    let file = fs::read_to_string(&out_path).unwrap();
    assert_eq!(file, stdout_of(&out));
    fs::remove_file(&out_path).ok();
}

#[test]
fn simulate_is_deterministic_per_seed() {
    let cfg = standard_config();
    let args = [
        "simulate",
        "--config",
        cfg.to_str().unwrap(),
        "--t",
        "5",
        "--n-paths",
        "500",
        "--seed",
        "9",
    ];
    let a = run(&args);
    let b = run(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let text = stdout_of(&a);
    assert!(text.contains("\"mean\":"));
    assert!(text.contains("\"mode\": \"counts\""));
}

#[test]
fn simulate_is_worker_count_invariant() {
    // Per-path streams are keyed by (seed, path index), so the batch must
    // be identical no matter how rayon schedules it.
    let cfg = standard_config();
    let args = [
        "simulate",
        "--config",
        cfg.to_str().unwrap(),
        "--t",
        "5",
        "--n-paths",
        "2000",
        "--seed",
        "11",
    ];
    let a = bin().args(args).env("RAYON_NUM_THREADS", "1").output().unwrap();
    let b = bin().args(args).env("RAYON_NUM_THREADS", "4").output().unwrap();
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout, "batch must not depend on the worker count");
}

#[test]
fn pmf_poisson_spot_value() {
    // probs[0] = e^{-nu t} for the pure Poisson model.
    let cfg = poisson_config();
    let out = run(&["pmf", "--config", cfg.to_str().unwrap(), "--t", "5"]);
    assert!(out.status.success());
    let text = stdout_of(&out);
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "k,prob");
    let first = lines.next().unwrap();
    let p0: f64 = first.split(',').nth(1).unwrap().parse().unwrap();
    assert!((p0 - (-5.0f64).exp()).abs() < 1e-12, "probs[0] = {p0}");
    // Metadata block goes to stderr when --meta is absent.
    let meta = String::from_utf8(out.stderr.clone()).unwrap();
    assert!(meta.contains("\"aliasing_bound\":"));
}

#[test]
fn cgf_and_rate_csv_schemas() {
    let cfg = standard_config();
    let out = run(&[
        "cgf",
        "--config",
        cfg.to_str().unwrap(),
        "--theta",
        "0.5,1.0",
        "--t",
        "10",
    ]);
    assert!(out.status.success());
    let text = stdout_of(&out);
    assert!(text.starts_with("theta,t,eta,eta_d1,eta_d2,psi,modphi_gap\n"));
    assert_eq!(text.lines().count(), 3);

    let out = run(&["rate", "--config", cfg.to_str().unwrap(), "--x", "2.5,3.0"]);
    assert!(out.status.success());
    let text = stdout_of(&out);
    assert!(text.starts_with("x,theta_star,rate,rate_d2\n"));
    assert_eq!(text.lines().count(), 3);
}

#[test]
fn asymptote_with_oracle_reports_ratio() {
    let cfg = standard_config();
    let out = run(&[
        "asymptote",
        "--config",
        cfg.to_str().unwrap(),
        "--t",
        "150",
        "--x",
        "2.6",
        "--kind",
        "tail",
        "--oracle",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = stdout_of(&out);
    assert!(text.starts_with("t,arg,estimate,log_estimate,theta_star,rate,exact,ratio\n"));
    let row = text.lines().nth(1).unwrap();
    let ratio: f64 = row.split(',').nth(7).unwrap().parse().unwrap();
    assert!((0.8..=1.2).contains(&ratio), "ratio {ratio}");
}

#[test]
fn moderate_speed_subcommands_run() {
    let cfg = standard_config();
    let out = run(&[
        "moderate",
        "--config",
        cfg.to_str().unwrap(),
        "--t",
        "500",
        "--y",
        "1.0",
        "--form",
        "gaussian",
    ]);
    assert!(out.status.success());
    assert!(stdout_of(&out).starts_with("t,arg,estimate,"));

    let out = run(&[
        "speed",
        "--config",
        cfg.to_str().unwrap(),
        "--theta",
        "0.5",
        "--t-grid",
        "10,20,40",
    ]);
    assert!(out.status.success());
    let text = stdout_of(&out);
    assert!(text.starts_with("t,gap,slope\n"));
    assert_eq!(text.lines().count(), 4);
}

#[test]
fn exit_codes_by_error_class() {
    // Usage error: unknown flag.
    let out = run(&["cgf", "--nonsense"]);
    assert_eq!(out.status.code(), Some(64));

    // Usage error: missing config file.
    let out = run(&[
        "cgf",
        "--config",
        "/nonexistent/path.conf",
        "--theta",
        "0.5",
        "--t",
        "10",
    ]);
    assert_eq!(out.status.code(), Some(64));

    // Domain error: tail estimate below the mean rate.
    let cfg = standard_config();
    let out = run(&[
        "asymptote",
        "--config",
        cfg.to_str().unwrap(),
        "--t",
        "100",
        "--x",
        "1.5",
        "--kind",
        "tail",
    ]);
    assert_eq!(out.status.code(), Some(65), "{}", String::from_utf8_lossy(&out.stderr));

    // Domain error: malformed config value.
    let bad = write_config("bad", "nu = abc\nrho = 1\nkernel.type = zero\n");
    let out = run(&["rate", "--config", bad.to_str().unwrap(), "--x", "2.0"]);
    assert_eq!(out.status.code(), Some(65));

    // Quality error: oracle value below the noise floor.
    let out = run(&[
        "asymptote",
        "--config",
        cfg.to_str().unwrap(),
        "--t",
        "400",
        "--x",
        "3.5",
        "--kind",
        "tail",
        "--oracle",
    ]);
    assert_eq!(out.status.code(), Some(66), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn help_succeeds() {
    let out = run(&["--help"]);
    assert!(out.status.success());
    let text = stdout_of(&out);
    for sub in ["cgf", "rate", "pmf", "simulate", "asymptote", "moderate", "speed", "validate"] {
        assert!(text.contains(sub), "help lists {sub}");
    }
}
