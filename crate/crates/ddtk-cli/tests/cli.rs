//! End-to-end checks of the binary: the exit-code contract, the emitted
//! files, and bit-reproducibility across reruns and worker counts.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn ddtk(out_dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ddtk"))
        .arg("--out")
        .arg(out_dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(output: &Output) -> i32 {
    output.status.code().expect("exited normally")
}

fn stdout(output: &Output) -> String {
    String::from_utf8_lossy(&output.stdout).into_owned()
}

fn stderr(output: &Output) -> String {
    String::from_utf8_lossy(&output.stderr).into_owned()
}

fn manifest_lines(dir: &Path) -> Vec<serde_json::Value> {
    let text = fs::read_to_string(dir.join("manifest.jsonl")).expect("manifest exists");
    text.lines()
        .map(|l| serde_json::from_str(l).expect("manifest line is JSON"))
        .collect()
}

#[test]
fn generate_writes_schedule_report_and_appends_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let first = ddtk(dir.path(), &["generate", "1", "--restarts", "1"]);
    assert_eq!(code(&first), 0, "{}", stderr(&first));

    let doc: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("schedule_k1_s7.json")).unwrap())
            .unwrap();
    assert_eq!(doc["version"], 1);
    assert_eq!(doc["K"], 1);
    assert_eq!(doc["cut_times"].as_array().unwrap().len(), 3);

    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("generate_k1_s7.json")).unwrap())
            .unwrap();
    assert_eq!(report["converged"], true);
    let intervals = report["intervals"].as_array().unwrap();
    assert_eq!(intervals.len(), 4);
    for dt in intervals {
        assert!((dt.as_f64().unwrap() - 0.25).abs() < 1e-9);
    }

    let second = ddtk(dir.path(), &["generate", "1", "--restarts", "1"]);
    assert_eq!(code(&second), 0);
    let records = manifest_lines(dir.path());
    assert_eq!(records.len(), 2, "manifest is append-only");
    assert_eq!(records[0]["master_seed"], 7);
    assert!(records[0]["outputs"].as_array().unwrap().len() == 2);
}

#[test]
fn verify_exit_codes_separate_fail_from_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let generated = ddtk(dir.path(), &["generate", "1", "--restarts", "1"]);
    assert_eq!(code(&generated), 0, "{}", stderr(&generated));
    let schedule = dir.path().join("schedule_k1_s7.json");
    let schedule = schedule.to_str().unwrap();

    let pass = ddtk(dir.path(), &["verify", schedule]);
    assert_eq!(code(&pass), 0, "{}", stderr(&pass));
    assert!(stdout(&pass).contains("PASS"));

    let fail = ddtk(dir.path(), &["verify", schedule, "--order", "2"]);
    assert_eq!(
        code(&fail),
        1,
        "an order the schedule lacks fails the check"
    );

    let corrupt = dir.path().join("corrupt.json");
    fs::write(&corrupt, "{\"version\": 1, \"K\": ").unwrap();
    let bad = ddtk(dir.path(), &["verify", corrupt.to_str().unwrap()]);
    assert_eq!(code(&bad), 2, "malformed input is a config error");

    let missing = ddtk(dir.path(), &["verify", "no_such_file.json"]);
    assert_eq!(code(&missing), 2);

    let usage = ddtk(dir.path(), &["verify"]);
    assert_eq!(code(&usage), 2, "missing argument is a usage error");
}

const TINY_SWEEP: &str = "\
version = 1
sequences = [\"published:2\"]
couplings = [1e-4]
metric = \"operator_norm\"
models = 2
master_seed = 9

[grid]
min = 1e-1
max = 1e1
points = 5
";

#[test]
fn sweep_output_is_bit_reproducible() {
    let config_dir = tempfile::tempdir().unwrap();
    let config = config_dir.path().join("tiny.toml");
    fs::write(&config, TINY_SWEEP).unwrap();

    let mut csv_bytes = Vec::new();
    for _ in 0..2 {
        let dir = tempfile::tempdir().unwrap();
        let output = ddtk(dir.path(), &["sweep", config.to_str().unwrap()]);
        assert_eq!(code(&output), 0, "{}", stderr(&output));
        csv_bytes.push(fs::read(dir.path().join("sweep_s9.csv")).unwrap());
    }
    assert_eq!(csv_bytes[0], csv_bytes[1], "same seed, same bytes");

    let text = String::from_utf8(csv_bytes.pop().unwrap()).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "sequence_id,K,J,T,seed,metric,value");
    assert_eq!(lines.count(), 2 * 5, "models x grid points");
}

#[test]
fn sweep_worker_count_does_not_change_results() {
    let config_dir = tempfile::tempdir().unwrap();
    let config = config_dir.path().join("tiny.toml");
    fs::write(&config, TINY_SWEEP).unwrap();

    let mut csv_bytes = Vec::new();
    for jobs in ["1", "3"] {
        let dir = tempfile::tempdir().unwrap();
        let output = ddtk(
            dir.path(),
            &["sweep", config.to_str().unwrap(), "--jobs", jobs],
        );
        assert_eq!(code(&output), 0, "{}", stderr(&output));
        csv_bytes.push(fs::read(dir.path().join("sweep_s9.csv")).unwrap());
    }
    assert_eq!(csv_bytes[0], csv_bytes[1]);
}

#[test]
fn sweep_rejects_bad_configs() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("bad.toml");

    fs::write(&config, TINY_SWEEP.replace("version = 1", "version = 9")).unwrap();
    let wrong_version = ddtk(dir.path(), &["sweep", config.to_str().unwrap()]);
    assert_eq!(code(&wrong_version), 2);
    assert!(stderr(&wrong_version).contains("version"));

    fs::write(&config, format!("{TINY_SWEEP}unknown_key = 3\n")).unwrap();
    let unknown_key = ddtk(dir.path(), &["sweep", config.to_str().unwrap()]);
    assert_eq!(code(&unknown_key), 2);

    fs::write(&config, TINY_SWEEP.replace("points = 5\n", "")).unwrap();
    let incomplete_grid = ddtk(dir.path(), &["sweep", config.to_str().unwrap()]);
    assert_eq!(code(&incomplete_grid), 2);

    fs::write(
        &config,
        TINY_SWEEP.replace("[\"published:2\"]", "[\"published:99\"]"),
    )
    .unwrap();
    let unknown_sequence = ddtk(dir.path(), &["sweep", config.to_str().unwrap()]);
    assert_eq!(code(&unknown_sequence), 2);
}

#[test]
fn compare_emits_paired_rows_and_win_fractions() {
    let dir = tempfile::tempdir().unwrap();
    let output = ddtk(
        dir.path(),
        &[
            "compare", "--ours", "2", "--qdd", "2", "--j", "1e-4", "--states", "2", "--models",
            "1", "--points", "3",
        ],
    );
    assert_eq!(code(&output), 0, "{}", stderr(&output));

    let csv = fs::read_to_string(dir.path().join("compare_2_vs_2_s42.csv")).unwrap();
    let rows: Vec<&str> = csv.lines().skip(1).collect();
    assert_eq!(rows.len(), 2 * 3, "both sequences at every grid point");
    assert!(rows.iter().any(|r| r.starts_with("published:2,")));
    assert!(rows.iter().any(|r| r.starts_with("qdd:2,")));

    let summary: serde_json::Value = serde_json::from_str(
        &fs::read_to_string(dir.path().join("compare_2_vs_2_s42.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(summary["first_pulses"], 7);
    assert_eq!(summary["second_pulses"], 8);
    let fractions = summary["win_fractions"].as_array().unwrap();
    assert_eq!(fractions.len(), 1);
    let fraction = fractions[0]["fraction"].as_f64().unwrap();
    assert!((0.0..=1.0).contains(&fraction));
}

#[test]
fn certify_reports_identity_and_grid_floor() {
    let dir = tempfile::tempdir().unwrap();
    let output = ddtk(
        dir.path(),
        &["certify", "--k", "2", "--samples", "20", "--grid", "30"],
    );
    assert_eq!(code(&output), 0, "{}", stderr(&output));

    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("certify_k2.json")).unwrap())
            .unwrap();
    assert!(report["max_deviation"].as_f64().unwrap() <= 1e-12);
    let grid = &report["grid_search"];
    assert_eq!(grid["order"], 2);
    assert!(grid["min_residual"].as_f64().unwrap() > 1e-3);
}

#[test]
fn jitter_emits_baseline_and_truncated_curves() {
    let dir = tempfile::tempdir().unwrap();
    let output = ddtk(
        dir.path(),
        &[
            "jitter",
            "--digits",
            "4",
            "--sequence",
            "published:2",
            "--models",
            "1",
            "--points",
            "21",
            "--t-min",
            "1e-3",
            "--t-max",
            "1e-1",
        ],
    );
    assert_eq!(code(&output), 0, "{}", stderr(&output));

    let csv = fs::read_to_string(dir.path().join("jitter_published-2_d4_s42.csv")).unwrap();
    let rows: Vec<&str> = csv.lines().skip(1).collect();
    assert_eq!(rows.len(), 2 * 21);
    assert!(rows.iter().any(|r| r.starts_with("published:2,")));
    assert!(rows.iter().any(|r| r.starts_with("published:2~d4,")));
}

#[test]
fn table_s1_prints_every_order_and_dumps_json() {
    let dir = tempfile::tempdir().unwrap();
    let output = Command::new(env!("CARGO_BIN_EXE_ddtk"))
        .env("DDTK_OUT", dir.path())
        .arg("table-s1")
        .output()
        .expect("binary runs");
    assert_eq!(code(&output), 0, "{}", stderr(&output));

    let text = stdout(&output);
    for k in 1..=8 {
        assert!(text.contains(&format!("K = {k}:")), "missing order {k}");
    }
    let dump: serde_json::Value = serde_json::from_str(
        &fs::read_to_string(dir.path().join("published_intervals.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(dump.as_array().unwrap().len(), 8);
    assert_eq!(dump[7]["intervals"].as_array().unwrap().len(), 25);
    assert_eq!(
        manifest_lines(dir.path()).len(),
        1,
        "env var sets the output root"
    );
}

#[test]
fn simulate_accepts_single_time_point() {
    let dir = tempfile::tempdir().unwrap();
    let output = ddtk(
        dir.path(),
        &["simulate", "published:2", "--t", "1.0", "--models", "1"],
    );
    assert_eq!(code(&output), 0, "{}", stderr(&output));

    let csv = fs::read_to_string(dir.path().join("simulate_published-2_s42.csv")).unwrap();
    let rows: Vec<&str> = csv.lines().skip(1).collect();
    assert_eq!(rows.len(), 1);
    let value: f64 = rows[0].rsplit(',').next().unwrap().parse().unwrap();
    assert!(value.is_finite() && value >= 0.0);
}
