use std::fs;
use std::process::Command;

fn vekua() -> Command {
    Command::new(env!("CARGO_BIN_EXE_vekua"))
}

#[test]
fn solve_from_flags_writes_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let out = vekua()
        .args([
            "solve",
            "--case",
            "exponential",
            "-N",
            "5",
            "-P",
            "50",
            "-Q",
            "40",
            "--out",
        ])
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(
        stdout.contains("case=exponential") && stdout.contains("basis=11"),
        "{stdout}"
    );
    let report: serde_json::Value =
        serde_json::from_slice(&fs::read(dir.path().join("report.json")).unwrap()).unwrap();
    assert_eq!(report["basis_size"], 11);
    let csv = fs::read_to_string(dir.path().join("residual.csv")).unwrap();
    assert_eq!(csv.lines().count(), 41);
}

#[test]
fn flags_override_the_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.json");
    fs::write(
        &path,
        r#"{"case": "lorentzian", "alpha": 0.5, "N": 4, "P": 40, "Q": 30}"#,
    )
    .unwrap();
    let out = vekua()
        .args(["solve", "--config"])
        .arg(&path)
        .args(["-N", "6", "--mode", "ystrip"])
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(
        stdout.contains("N=6") && stdout.contains("basis=13"),
        "{stdout}"
    );
    assert!(stdout.contains("case=lorentzian"), "{stdout}");
}

#[test]
fn solve_without_parameters_fails() {
    let out = vekua()
        .args(["solve", "--case", "exponential"])
        .output()
        .unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("required"));
}

#[test]
fn bad_configs_are_rejected() {
    let out = vekua()
        .args([
            "solve",
            "--case",
            "exponential",
            "-N",
            "30",
            "-P",
            "50",
            "-Q",
            "20",
        ])
        .output()
        .unwrap();
    assert!(!out.status.success());
    let out = vekua().args(["table", "--id", "12"]).output().unwrap();
    assert!(!out.status.success());
}

#[test]
fn oracles_pass_and_the_delta_sentinel_fails() {
    let ok = vekua().args(["oracles", "--json"]).output().unwrap();
    assert!(
        ok.status.success(),
        "{}",
        String::from_utf8_lossy(&ok.stdout)
    );
    let summary: serde_json::Value = serde_json::from_slice(&ok.stdout).unwrap();
    assert!(!summary["checks"].as_array().unwrap().is_empty());
    let bad = vekua().args(["oracles", "--delta", "9"]).output().unwrap();
    assert!(!bad.status.success());
}
