//! End-to-end checks of the command-line surface: flag parsing, report
//! shapes, exit codes, config-file precedence and output determinism.

use std::process::{Command, Output};

use serde_json::Value;

fn snkl(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_snkl"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn json_stdout(output: &Output) -> Value {
    assert!(
        output.status.success(),
        "command failed: {}",
        String::from_utf8_lossy(&output.stderr)
    );
    serde_json::from_slice(&output.stdout).expect("valid json")
}

#[test]
fn bound_thm1_matches_frozen_value() {
    let out = snkl(&["bound", "--kind", "thm1", "--delta", "8", "--n", "200"]);
    let v = json_stdout(&out);
    let raw = v["bound"]["raw"].as_f64().unwrap();
    assert!((raw - 0.078421849037688).abs() < 1e-9);
    assert_eq!(v["bound"]["vacuous"], Value::Bool(false));
    assert_eq!(v["manifest"]["subcommand"], "bound");
    assert_eq!(v["manifest"]["schema_version"], 1);
}

#[test]
fn bound_compare_reports_ratio() {
    let out = snkl(&[
        "bound", "--kind", "thm1", "--delta", "8", "--n", "200", "--compare", "union",
    ]);
    let v = json_stdout(&out);
    let ratio = v["comparison"]["ratio"].as_f64().unwrap();
    let union = v["comparison"]["bound"]["raw"].as_f64().unwrap();
    assert!((union - 0.134185051161005).abs() < 1e-9);
    assert!(ratio < 1.0);
}

#[test]
fn missing_required_flag_is_usage_error() {
    let out = snkl(&["bound", "--delta", "8", "--n", "200"]);
    assert!(!out.status.success());
    let out = snkl(&["bound", "--kind", "thm1", "--n", "200"]);
    assert!(!out.status.success());
}

#[test]
fn calibrate_round_trips_through_bound() {
    let out = snkl(&["calibrate", "--kind", "thm1", "--alpha", "0.05", "--n", "1000"]);
    let v = json_stdout(&out);
    let delta = v["calibration"]["delta"].as_f64().unwrap();
    assert!((delta - 8.8141762).abs() < 1e-4);

    let out = snkl(&[
        "bound", "--kind", "thm1", "--delta", &delta.to_string(), "--n", "1000",
    ]);
    let v = json_stdout(&out);
    assert!(v["bound"]["raw"].as_f64().unwrap() <= 0.05);
}

#[test]
fn calibrate_rejects_invalid_alpha() {
    let out = snkl(&["calibrate", "--kind", "thm1", "--alpha", "1.5", "--n", "1000"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("alpha"));
}

#[test]
fn interval_values_and_flags() {
    let out = snkl(&[
        "interval", "--family", "bernoulli", "--xbar", "0.5", "--count", "100", "--delta", "2",
    ]);
    let v = json_stdout(&out);
    assert!((v["interval"]["lower"].as_f64().unwrap() - 0.400991716448).abs() < 1e-9);
    assert!((v["interval"]["upper"].as_f64().unwrap() - 0.599008283552).abs() < 1e-9);

    // Zero threshold collapses to the point estimate.
    let out = snkl(&[
        "interval", "--family", "bernoulli", "--xbar", "0.4", "--count", "10", "--delta", "0",
    ]);
    let v = json_stdout(&out);
    assert_eq!(v["interval"]["lower"], v["interval"]["upper"]);

    // A boundary empirical mean clips at the domain edge.
    let out = snkl(&[
        "interval", "--family", "bernoulli", "--xbar", "1.0", "--count", "10", "--delta", "2",
    ]);
    let v = json_stdout(&out);
    assert_eq!(v["interval"]["upper_clipped"], Value::Bool(true));
    assert_eq!(v["interval"]["upper"].as_f64().unwrap(), 1.0);

    // Calibrated variant embeds its certificate.
    let out = snkl(&[
        "interval", "--family", "bernoulli", "--xbar", "0.5", "--count", "50", "--alpha", "0.05",
        "--n", "1000",
    ]);
    let v = json_stdout(&out);
    let cert = &v["interval"]["certificate"];
    assert_eq!(cert["alpha"].as_f64().unwrap(), 0.05);
    assert!((cert["delta"].as_f64().unwrap() - 8.8141762).abs() < 1e-4);

    // Quadratic family takes its range from the flag.
    let out = snkl(&[
        "interval", "--family", "quadratic", "--range", "1", "--xbar", "0.5", "--count", "50",
        "--delta", "1",
    ]);
    let v = json_stdout(&out);
    let radius = (1.0f64 / 100.0).sqrt();
    assert!((v["interval"]["upper"].as_f64().unwrap() - (0.5 + radius)).abs() < 1e-9);
    // Missing range is a usage error.
    let out = snkl(&[
        "interval", "--family", "quadratic", "--xbar", "0.5", "--count", "50", "--delta", "1",
    ]);
    assert!(!out.status.success());
}

#[test]
fn coverage_report_and_assert_flag() {
    let out = snkl(&[
        "coverage", "--law", "bernoulli", "--mu", "0.3", "--n", "50", "--delta", "6", "--reps",
        "5000", "--seed", "1", "--assert",
    ]);
    let v = json_stdout(&out);
    assert_eq!(v["report"]["verdict"], "dominated");
    assert_eq!(v["report"]["replications"], 5000);
    assert_eq!(v["manifest"]["seed"], 1);
}

#[test]
fn coverage_rejects_zero_replications() {
    let out = snkl(&[
        "coverage", "--law", "bernoulli", "--mu", "0.3", "--n", "50", "--delta", "6", "--reps",
        "0",
    ]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("replications"));
}

#[test]
fn coverage_is_deterministic_modulo_wall_clock() {
    let args = [
        "coverage", "--law", "bernoulli", "--mu", "0.3", "--n", "50", "--delta", "6", "--reps",
        "3000", "--seed", "7",
    ];
    let first = snkl(&args);
    let second = snkl(&args);
    let strip = |out: &Output| {
        String::from_utf8_lossy(&out.stdout)
            .lines()
            .filter(|l| !l.contains("wall_clock_ms"))
            .collect::<Vec<_>>()
            .join("\n")
    };
    assert!(first.status.success() && second.status.success());
    assert_eq!(strip(&first), strip(&second));
}

#[test]
fn config_file_merges_under_flags() {
    let dir = std::env::temp_dir().join(format!("snkl-cli-test-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("coverage.toml");
    std::fs::write(
        &path,
        "law = \"bernoulli\"\nmu = 0.5\nn = 50\ndelta = 6.0\nreps = 1000\nseed = 3\n",
    )
    .unwrap();
    // The flag overrides the file's mu; everything else resolves from the file.
    let out = snkl(&["coverage", "--config", path.to_str().unwrap(), "--mu", "0.3"]);
    let v = json_stdout(&out);
    assert_eq!(v["manifest"]["params"]["mean"].as_f64().unwrap(), 0.3);
    assert_eq!(v["manifest"]["params"]["replications"], 1000);
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn bandit_csv_is_well_formed_and_deterministic() {
    let args = [
        "bandit", "--arms", "0.3,0.5", "--horizon", "500", "--policy", "klucb", "--reps", "10",
        "--seed", "5", "--checkpoint-every", "50",
    ];
    let first = snkl(&args);
    assert!(first.status.success());
    let text = String::from_utf8_lossy(&first.stdout).to_string();
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("# manifest: "));
    assert_eq!(lines.next().unwrap(), "t,mean_regret,stderr,policy");
    let mut prev = -1.0;
    for line in lines {
        let fields: Vec<&str> = line.split(',').collect();
        assert_eq!(fields.len(), 4);
        assert_eq!(fields[3], "klucb");
        let regret: f64 = fields[1].parse().unwrap();
        assert!(regret >= prev);
        prev = regret;
    }
    let second = snkl(&args);
    assert_eq!(first.stdout, second.stdout);
}

#[test]
fn bandit_rejects_bad_configs() {
    let out = snkl(&[
        "bandit", "--arms", "0.3,0.5", "--horizon", "500", "--policy", "nosuch", "--reps", "5",
    ]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("unknown policy"));

    let out = snkl(&[
        "bandit", "--arms", "0.3", "--horizon", "500", "--policy", "klucb", "--reps", "5",
    ]);
    assert!(!out.status.success());
}

#[test]
fn out_flag_writes_file() {
    let dir = std::env::temp_dir().join(format!("snkl-out-test-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("bound.json");
    let out = snkl(&[
        "bound", "--kind", "thm3_opt", "--delta", "8", "--out", path.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert!((v["bound"]["raw"].as_f64().unwrap() - 0.039660034826661735).abs() < 1e-12);
    std::fs::remove_dir_all(&dir).ok();
}
