use std::path::Path;
use std::process::{Command, Output};

fn uinfer(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_uinfer")).args(args).env_remove("UINFER_THREADS").output().unwrap()
}

fn write_csv(dir: &Path, name: &str, values: &[f64]) -> String {
    let path = dir.join(name);
    let body: String = values.iter().map(|v| format!("{v}\n")).collect();
    std::fs::write(&path, format!("y1\n{body}")).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn uniform_interval_example() {
    let dir = tempfile::tempdir().unwrap();
    let mut ys: Vec<f64> = (1..=9).map(|i| 0.08 * i as f64).collect();
    ys.push(0.8);
    ys.extend((1..=9).map(|i| 0.1 * i as f64));
    ys.push(1.0);
    let input = write_csv(dir.path(), "u.csv", &ys);
    let out = uinfer(&["interval-uniform", "--input", &input, "--split", "first-half", "--alpha", "0.1"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let rows: Vec<Vec<&str>> = text.lines().map(|l| l.split(',').collect()).collect();
    assert_eq!(rows[0], ["kind", "lo", "hi"]);
    assert_eq!(rows[1][0], "crossfit");
    assert_eq!(rows[1][1].parse::<f64>().unwrap(), 0.8);
    let hi: f64 = rows[1][2].parse().unwrap();
    assert!((hi - 20f64.powf(0.1)).abs() < 1e-12);
    assert!((hi - 1.34928).abs() < 5e-6);
    assert_eq!(rows[2][1].parse::<f64>().unwrap(), 1.0);
    let classical: f64 = rows[3][2].parse().unwrap();
    assert!((classical - 10f64.powf(1.0 / 20.0)).abs() < 1e-12);
}

#[test]
fn invalid_alpha_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let input = write_csv(dir.path(), "g.csv", &[0.1, -0.3, 0.8, 1.2]);
    for alpha in ["1.5", "0", "-0.1", "1"] {
        let out = uinfer(&["test-split", "--input", &input, &format!("--alpha={alpha}")]);
        assert_eq!(out.status.code(), Some(2), "alpha = {alpha}");
    }
}

#[test]
fn malformed_csv_reports_the_line() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.csv");
    std::fs::write(&path, "y1\n0.5\n1.5\nabc\n2.0\n").unwrap();
    let out = uinfer(&["test-split", "--input", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("line 4"), "{err}");

    std::fs::write(&path, "x\n0.5\n").unwrap();
    let out = uinfer(&["test-split", "--input", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8(out.stderr).unwrap().contains("line 1"));
}

#[test]
fn unknown_flags_and_subcommands_exit_2() {
    assert_eq!(uinfer(&["sim-radius", "--frobnicate"]).status.code(), Some(2));
    assert_eq!(uinfer(&["no-such-command"]).status.code(), Some(2));
    assert_eq!(uinfer(&[]).status.code(), Some(2));
}

#[test]
fn runtime_failures_exit_1() {
    // Point null θ = 0.5 below every observation, and the second half's
    // maximum exceeds the first half's: on the swapped fold both numerator and
    // denominator likelihoods vanish.
    let dir = tempfile::tempdir().unwrap();
    let input = write_csv(dir.path(), "u.csv", &[0.9, 0.95, 0.8, 0.99]);
    let out = uinfer(&[
        "test-crossfit",
        "--input",
        &input,
        "--split",
        "first-half",
        "--family",
        "uniform",
        "--theta0",
        "0.5",
    ]);
    assert_eq!(out.status.code(), Some(1), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn every_subcommand_help_lists_defaults() {
    let subcommands = [
        "test-split",
        "test-crossfit",
        "confset",
        "interval-uniform",
        "seq-monitor",
        "sieve",
        "sim-type1",
        "sim-power",
        "sim-radius",
        "sim-seq",
    ];
    for sub in subcommands {
        let out = uinfer(&[sub, "--help"]);
        assert_eq!(out.status.code(), Some(0), "{sub}");
        let text = String::from_utf8(out.stdout).unwrap();
        assert!(text.contains("[default: 0.1]"), "{sub}: alpha default missing");
    }
}

#[test]
fn radius_row_reports_theory_value() {
    let out = uinfer(&["sim-radius", "--d", "10", "--m", "50", "--alpha", "0.1", "--reps", "2000", "--seed", "7"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "d,n,alpha,emp_mean_r2,theory_r2,ratio_to_classical");
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(&row[..3], ["10", "100", "0.1"]);
    let theory: f64 = row[4].parse().unwrap();
    assert!((theory - 0.49210).abs() < 5e-6);
}

#[test]
fn seq_monitor_emits_one_row_per_observation() {
    let dir = tempfile::tempdir().unwrap();
    let input = write_csv(dir.path(), "s.csv", &[0.2, -0.4, 1.1, 0.5, 0.0]);
    let out = uinfer(&["seq-monitor", "--input", &input, "--burn-in", "0"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "t,log_m,p_t,p_bar");
    assert_eq!(lines.len(), 6);
    // M_1 = φ(y1; 0)/φ(y1; 0) = 1 under the default plug-in θ̂_{1,0} = θ0.
    assert_eq!(lines[1], "1,0,1,1");
}

#[test]
fn config_file_is_overridden_by_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    std::fs::write(&cfg, r#"{"reps": 300, "horizon": 50, "seed": 1}"#).unwrap();
    let cfg = cfg.to_str().unwrap();
    let from_file = uinfer(&["sim-seq", "--config", cfg]);
    let explicit = uinfer(&["sim-seq", "--reps", "300", "--horizon", "50", "--seed", "1"]);
    assert_eq!(from_file.status.code(), Some(0));
    assert_eq!(from_file.stdout, explicit.stdout);
    let overridden = uinfer(&["sim-seq", "--config", cfg, "--horizon", "20"]);
    let text = String::from_utf8(overridden.stdout).unwrap();
    assert!(text.lines().nth(1).unwrap().starts_with("20,"), "{text}");
}
