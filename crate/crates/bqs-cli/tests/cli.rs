//! End-to-end checks of the binary: CSV schemas, determinism, config
//! precedence and exit codes.

use std::path::PathBuf;
use std::process::{Command, Output};

fn bqs() -> Command {
    Command::new(env!("CARGO_BIN_EXE_bqs"))
}

fn run(args: &[&str]) -> Output {
    bqs().args(args).output().expect("binary runs")
}

fn stdout_of(args: &[&str]) -> String {
    let out = run(args);
    assert!(
        out.status.success(),
        "command {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn tmp_path(name: &str) -> PathBuf {
    let mut p = std::env::temp_dir();
    p.push(format!("bqs-cli-test-{}-{name}", std::process::id()));
    p
}

#[test]
fn sweep_eta1_matches_the_closed_form() {
    let text = stdout_of(&["sweep-eta1", "--grid", "1:1:1", "--no-header-timestamp"]);
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "alpha_sq,eta1_analytic,eta1_simulated,abs_diff"
    );
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    let analytic: f64 = row[1].parse().unwrap();
    let diff: f64 = row[3].parse().unwrap();
    assert!((analytic - 0.6321205588285577).abs() < 1e-10);
    assert!(diff < 1e-10);
}

#[test]
fn sweep_eta1_approaches_one_for_weak_inputs() {
    let text = stdout_of(&[
        "sweep-eta1",
        "--grid",
        "0.0001:0.0001:1",
        "--no-header-timestamp",
    ]);
    let row: Vec<&str> = text.lines().nth(1).unwrap().split(',').collect();
    let eta1: f64 = row[1].parse().unwrap();
    assert!((eta1 - 1.0).abs() < 1e-4, "eta1 {eta1}");
    let diff: f64 = row[3].parse().unwrap();
    assert!(diff < 1e-10);
}

#[test]
fn csv_output_is_deterministic_without_timestamp() {
    let args = [
        "sweep-bqs",
        "--k",
        "1,2",
        "--grid",
        "0.5:2:0.5",
        "--no-header-timestamp",
    ];
    assert_eq!(stdout_of(&args), stdout_of(&args));
}

#[test]
fn timestamp_header_is_present_by_default() {
    let text = stdout_of(&["sweep-eta1", "--grid", "1:1:1"]);
    assert!(text.starts_with("# generated-at "), "got: {text}");
}

#[test]
fn simulate_writes_the_documented_state_format() {
    let text = stdout_of(&[
        "simulate",
        "--input",
        "fock",
        "--n",
        "1",
        "--iterations",
        "2",
    ]);
    let body: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(
        body,
        vec![
            "2 - gv vh 0.7071067811865475 0",
            "2 - gv hv 0.7071067811865475 0",
        ]
    );
}

#[test]
fn w_dist_reproduces_the_near_unit_total() {
    let text = stdout_of(&["w-dist", "--no-header-timestamp"]);
    let last = text.lines().last().unwrap();
    let fields: Vec<&str> = last.split(',').collect();
    assert_eq!(fields[0], "10");
    let total: f64 = fields[2].parse().unwrap();
    assert!((total - 0.9551347978960477).abs() < 1e-9, "total {total}");
}

#[test]
fn loss_scan_stays_within_the_power_law_band() {
    let text = stdout_of(&[
        "loss-scan",
        "--grid",
        "0:0.05:0.01",
        "--no-header-timestamp",
    ]);
    for line in text.lines().skip(1) {
        let fields: Vec<&str> = line.split(',').collect();
        let rel: f64 = fields[4].parse().unwrap();
        assert!(rel < 0.01, "rel_err {rel} in row {line}");
    }
}

#[test]
fn fock_gen_finds_the_optimal_mean() {
    let text = stdout_of(&["fock-gen", "--k", "3", "--no-header-timestamp"]);
    let row: Vec<&str> = text.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(row[0], "3");
    let alpha_opt: f64 = row[1].parse().unwrap();
    assert!((alpha_opt - 2.0).abs() < 1e-12);
    let fidelity: f64 = row[4].parse().unwrap();
    assert!((fidelity - 1.0).abs() < 1e-12);
}

#[test]
fn flags_win_over_config_file_values() {
    let config = tmp_path("defaults.cfg");
    std::fs::write(&config, "alpha-sq=5\niterations=10\n").unwrap();
    // File alone: 10 iterations of mean 5 (the default W setup).
    let from_file = stdout_of(&[
        "w-dist",
        "--config",
        config.to_str().unwrap(),
        "--no-header-timestamp",
    ]);
    assert!(from_file.lines().any(|l| l.starts_with("10,")));
    // Flag overrides the file's iterations; sizes now stop at 4.
    let overridden = stdout_of(&[
        "w-dist",
        "--config",
        config.to_str().unwrap(),
        "--iterations",
        "4",
        "--no-header-timestamp",
    ]);
    assert!(overridden.lines().all(|l| !l.starts_with("10,")));
    assert!(overridden.lines().any(|l| l.starts_with("4,")));
    std::fs::remove_file(&config).ok();
}

#[test]
fn out_flag_writes_the_file() {
    let path = tmp_path("eta1.csv");
    let out = run(&[
        "sweep-eta1",
        "--grid",
        "1:1:1",
        "--no-header-timestamp",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let text = std::fs::read_to_string(&path).unwrap();
    assert!(text.starts_with("alpha_sq,"));
    std::fs::remove_file(&path).ok();
}

#[test]
fn exit_codes_follow_the_contract() {
    // 2: invalid input (bad flag value, rejected by clap).
    let out = run(&["simulate", "--input", "squeezed"]);
    assert_eq!(out.status.code(), Some(2));
    // 2: invalid input (library-level validation).
    let out = run(&["simulate", "--iterations", "0"]);
    assert_eq!(out.status.code(), Some(2));
    // 2: unknown config key.
    let config = tmp_path("bad.cfg");
    std::fs::write(&config, "alpha=5\n").unwrap();
    let out = run(&["w-dist", "--config", config.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    std::fs::remove_file(&config).ok();
    // 2: loss probability out of range (equals form reaches the range
    // check rather than clap's hyphen handling).
    let out = run(&["simulate", "--loss=-0.1"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("outside [0, 1)"));
    let out = run(&["simulate", "--loss", "1.5"]);
    assert_eq!(out.status.code(), Some(2));
    // 4: unwritable output path.
    let out = run(&[
        "sweep-eta1",
        "--grid",
        "1:1:1",
        "--out",
        "/nonexistent-dir/eta1.csv",
    ]);
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn seed_is_accepted_and_ignored() {
    let a = stdout_of(&["sweep-eta1", "--grid", "1:1:1", "--no-header-timestamp"]);
    let b = stdout_of(&[
        "sweep-eta1",
        "--grid",
        "1:1:1",
        "--no-header-timestamp",
        "--seed",
        "7",
    ]);
    assert_eq!(a, b);
}
