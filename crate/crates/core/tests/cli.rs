//! Runs the `bests-sim` binary end to end.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_bests-sim");

fn config_path() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/robot.toml")
}

fn run(args: &[&str], out: &Path) -> Output {
    Command::new(BIN)
        .args(args)
        .arg("--out")
        .arg(out)
        .env_remove("BESTS_SIM_OUT")
        .output()
        .unwrap()
}

fn run_ok(args: &[&str], out: &Path) {
    let o = run(args, out);
    assert!(
        o.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&o.stderr)
    );
}

#[test]
fn every_command_is_byte_identical_across_runs() {
    let cfg = config_path();
    let cfg = cfg.to_str().unwrap();
    let commands: [&[&str]; 7] = [
        &["characterize", "--config", cfg],
        &["twist-sweep", "--config", cfg],
        &["gait", "--config", cfg],
        &["simulate", "--config", cfg, "--schedule", "walk"],
        &["simulate", "--config", cfg, "--schedule", "o"],
        &["simulate", "--config", cfg, "--schedule", "s"],
        &["calibrate", "--config", cfg],
    ];
    for args in commands {
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        run_ok(args, a.path());
        run_ok(args, b.path());
        let mut files: Vec<_> = std::fs::read_dir(a.path())
            .unwrap()
            .map(|e| e.unwrap().file_name())
            .filter(|n| n != "run_report.json")
            .collect();
        files.sort();
        assert!(!files.is_empty());
        for f in files {
            let x = std::fs::read(a.path().join(&f)).unwrap();
            let y = std::fs::read(b.path().join(&f)).unwrap();
            assert!(x == y, "{args:?}: {f:?} differs");
        }
        let report = std::fs::read_to_string(a.path().join("run_report.json")).unwrap();
        let report: serde_json::Value = serde_json::from_str(&report).unwrap();
        assert_eq!(report["config_hash"].as_str().unwrap().len(), 64);
    }
}

#[test]
fn csv_headers_carry_units() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config_path();
    let cfg = cfg.to_str().unwrap();
    run_ok(&["simulate", "--config", cfg], dir.path());
    let csv = std::fs::read_to_string(dir.path().join("trajectory.csv")).unwrap();
    assert_eq!(
        csv.lines().next().unwrap(),
        "t_s,x_cm,y_cm,heading_rad,mode"
    );
    run_ok(&["gait", "--config", cfg, "--dt", "0.5"], dir.path());
    let csv = std::fs::read_to_string(dir.path().join("gait.csv")).unwrap();
    let header = csv.lines().next().unwrap();
    assert!(header.starts_with("t_s,phase_rad,mode,role_A,role_B,bend_A1_rad"));
    assert!(header.ends_with("contact_b2"));
}

#[test]
fn twist_sweep_accepts_rib_override() {
    let cfg = config_path();
    let cfg = cfg.to_str().unwrap();
    let four = tempfile::tempdir().unwrap();
    let six = tempfile::tempdir().unwrap();
    run_ok(
        &["twist-sweep", "--config", cfg, "--ribs", "4"],
        four.path(),
    );
    run_ok(&["twist-sweep", "--config", cfg, "--ribs", "6"], six.path());
    let a = std::fs::read_to_string(four.path().join("twist_sweep.csv")).unwrap();
    let b = std::fs::read_to_string(six.path().join("twist_sweep.csv")).unwrap();
    assert_ne!(a, b);
}

#[test]
fn schedule_files_are_accepted() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("sched.toml");
    std::fs::write(
        &file,
        "[[segment]]\nstart_rad = 0.0\nend_rad = 2.0943951023931953\nperiod_s = 2.8\nrepeats = 2\n",
    )
    .unwrap();
    let cfg = config_path();
    run_ok(
        &[
            "simulate",
            "--config",
            cfg.to_str().unwrap(),
            "--schedule",
            file.to_str().unwrap(),
        ],
        dir.path(),
    );
    let csv = std::fs::read_to_string(dir.path().join("trajectory.csv")).unwrap();
    let last = csv.lines().last().unwrap();
    assert!(last.starts_with("5.600000000,9.800000000,"), "{last}");
}

#[test]
fn config_errors_exit_with_2() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    let text = std::fs::read_to_string(config_path())
        .unwrap()
        .replace("ribs = 6", "ribs = \"six\"");
    std::fs::write(&bad, text).unwrap();
    let o = run(
        &["characterize", "--config", bad.to_str().unwrap()],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("ribs"));

    let o = run(
        &[
            "simulate",
            "--config",
            config_path().to_str().unwrap(),
            "--schedule",
            "nope",
        ],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn planning_failures_exit_with_3() {
    let dir = tempfile::tempdir().unwrap();
    let tight = dir.path().join("tight.toml");
    let text = std::fs::read_to_string(config_path())
        .unwrap()
        .replace("o_radius_cm = 25.0", "o_radius_cm = 6.0");
    std::fs::write(&tight, text).unwrap();
    let o = run(
        &[
            "simulate",
            "--config",
            tight.to_str().unwrap(),
            "--schedule",
            "o",
        ],
        dir.path(),
    );
    assert_eq!(
        o.status.code(),
        Some(3),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
}

#[test]
fn output_dir_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let o = Command::new(BIN)
        .args(["calibrate", "--config", config_path().to_str().unwrap()])
        .env("BESTS_SIM_OUT", dir.path())
        .output()
        .unwrap();
    assert!(o.status.success());
    assert!(dir.path().join("calibration.toml").exists());
    assert!(dir.path().join("run_report.json").exists());
}
