use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const QUICK: &str = "n = 32\nh = 0.25\nspinup_t = 0.2\nhorizon_t = 0.3\ndt = 0.002\nname = quick\n";

fn sqg(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sqg"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write_cfg(dir: &Path, text: &str) -> String {
    let path = dir.join("run.cfg");
    fs::write(&path, text).unwrap();
    path.display().to_string()
}

#[test]
fn twin_writes_a_reproducible_run_directory() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_cfg(tmp.path(), QUICK);
    let out = tmp.path().join("out");
    let out_s = out.display().to_string();
    let run = sqg(&["twin", "--config", &cfg, "--out", &out_s, "--snapshots", "75"]);
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));

    let dir = out.join("quick");
    let series = fs::read_to_string(dir.join("series.csv")).unwrap();
    let times: Vec<f64> = series
        .lines()
        .skip(1)
        .map(|l| l.split(',').next().unwrap().parse().unwrap())
        .collect();
    assert_eq!(times.len(), 151);
    assert!(times.windows(2).all(|w| w[1] > w[0]));
    assert!(dir.join("theta_0000.150.sqgf").exists());

    // Rerunning from the echoed config alone reproduces the series byte for byte.
    let echo = dir.join("config.echo").display().to_string();
    let out2 = tmp.path().join("again").display().to_string();
    let rerun = sqg(&["twin", "--config", &echo, "--out", &out2]);
    assert!(rerun.status.success());
    assert_eq!(
        fs::read(tmp.path().join("again/quick/series.csv")).unwrap(),
        series.as_bytes()
    );
}

#[test]
fn config_errors_exit_with_two() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_cfg(tmp.path(), "gamma = 1.0\ndelta = 0.0105\n");
    let run = sqg(&["twin", "--config", &cfg, "--out", &tmp.path().display().to_string()]);
    assert_eq!(run.status.code(), Some(2));
    let err = String::from_utf8_lossy(&run.stderr);
    assert!(err.contains("H1 violated"), "{err}");
    assert!(err.contains("multiple of dt"), "{err}");

    let cfg = write_cfg(tmp.path(), "n = 32\nbogus\n");
    let run = sqg(&["simulate", "--config", &cfg]);
    assert_eq!(run.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&run.stderr).contains("line 2"));
}

#[test]
fn blow_up_exits_with_three() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_cfg(tmp.path(), &format!("{QUICK}mu = 1e6\n"));
    let out = tmp.path().display().to_string();
    let run = sqg(&["twin", "--config", &cfg, "--out", &out]);
    assert_eq!(run.status.code(), Some(3));
    // The partial series survives.
    assert!(tmp.path().join("quick/series.csv").exists());
}

#[test]
fn sweep_writes_a_summary_row_per_run() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_cfg(tmp.path(), QUICK);
    let out = tmp.path().display().to_string();
    let run = sqg(&["sweep", "--config", &cfg, "--out", &out, "--mu", "0,5", "--delta", "0.01,0.02"]);
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    let summary = fs::read_to_string(tmp.path().join("quick/summary.csv")).unwrap();
    let lines: Vec<&str> = summary.lines().collect();
    assert_eq!(lines.len(), 5);
    assert!(lines[0].starts_with("name,mu,delta,h,status,lambda,r_squared"));
    assert!(tmp.path().join("quick/mu5_delta0.02_h0.25/series.csv").exists());
}

#[test]
fn verify_reports_zero_failures() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().display().to_string();
    let run = sqg(&["verify", "--seed", "1", "--fields", "4", "--out", &out]);
    assert!(run.status.success());
    let report = fs::read_to_string(tmp.path().join("verify/report.txt")).unwrap();
    assert!(report.contains("total_failures: 0"), "{report}");
}

#[test]
fn simulate_and_window() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_cfg(tmp.path(), QUICK);
    let out = tmp.path().display().to_string();
    assert!(sqg(&["simulate", "--config", &cfg, "--out", &out]).status.success());
    assert!(tmp.path().join("quick/series.csv").exists());
    let run = sqg(&["window", "--config", &cfg, "--out", &out]);
    assert!(run.status.success());
    assert!(String::from_utf8_lossy(&run.stdout).contains("exponent"));
}
