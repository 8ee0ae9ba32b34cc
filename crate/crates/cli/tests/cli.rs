//! Smoke tests of the command-line surface against a miniature scenario.

use std::path::Path;
use std::process::Command;

fn write_mini(dir: &Path) -> std::path::PathBuf {
    let path = dir.join("mini.toml");
    std::fs::write(
        &path,
        r#"
name = "mini"

[intersection]
phases = [[1], [3]]
detector_window_s = 30

[[intersection.movements]]
id = 1
is_straight = true
lane_count = 1
entry_arm = "N"
exit_arm = "S"

[[intersection.movements]]
id = 3
is_straight = true
lane_count = 1
entry_arm = "E"
exit_arm = "W"

[signal]
initial_durations = [20, 20]
min_green_s = 9
max_green_s = 60

[arrivals]
seed = 5
horizon_s = 300

[[arrivals.segments]]
movement = 1
start_s = 0
end_s = 300
rate_veh_per_s = 0.2
"#,
    )
    .unwrap();
    path
}

fn tsclab() -> Command {
    Command::new(env!("CARGO_BIN_EXE_tsclab"))
}

#[test]
fn train_eval_baseline_report_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = write_mini(dir.path());
    let runs = dir.path().join("runs");

    let out = tsclab()
        .args(["train", "--scenario"])
        .arg(&scenario)
        .args(["--method", "aap-ccda", "--dt", "0", "--seed", "1", "--episodes", "2", "--out"])
        .arg(&runs)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let run_dir = runs.join("mini__aap-ccda__dt0__seed1");
    assert!(run_dir.join("checkpoint.bin").is_file());

    let out = tsclab()
        .args(["eval", "--checkpoint"])
        .arg(run_dir.join("checkpoint.bin"))
        .args(["--scenario"])
        .arg(&scenario)
        .args(["--dt", "0", "--episodes", "2"])
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stdout).contains("mean queue"));

    let out = tsclab()
        .args(["baseline", "--kind", "ft30", "--scenario"])
        .arg(&scenario)
        .args(["--out"])
        .arg(&runs)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    let out = tsclab().args(["report", "--runs"]).arg(&runs).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(runs.join("report.csv").is_file());
}

#[test]
fn unknown_method_fails_cleanly() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = write_mini(dir.path());
    let out = tsclab()
        .args(["train", "--scenario"])
        .arg(&scenario)
        .args(["--method", "mystery", "--out"])
        .arg(dir.path().join("runs"))
        .output()
        .unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("unknown method"));
}
