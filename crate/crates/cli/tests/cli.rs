use std::path::Path;
use std::process::{Command, Output};

fn run(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fermi-lab"))
        .args(args)
        .arg("--out")
        .arg(out)
        .env_remove("FERMI_LAB_OUT")
        .output()
        .unwrap()
}

fn error_line(o: &Output) -> serde_json::Value {
    let stderr = String::from_utf8_lossy(&o.stderr);
    let line = stderr.lines().last().expect("stderr line");
    serde_json::from_str(line).unwrap_or_else(|_| panic!("not JSON: {line}"))
}

#[test]
fn malformed_config_exits_2_without_output() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, "experiment = \"theorem2\"\nbeta = -1.0\n").unwrap();
    let out = dir.path().join("out");
    let o = run(&["--config", cfg.to_str().unwrap()], &out);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(error_line(&o)["error"], "config");
    assert!(!out.exists());

    std::fs::write(&cfg, "experiment = \"theorem2\"\nunknown_key = 1\n").unwrap();
    let o = run(&["--config", cfg.to_str().unwrap()], &out);
    assert_eq!(o.status.code(), Some(2));
    assert!(!out.exists());
}

#[test]
fn theorem2_zero_ratio_column() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["thm2", "--potential", "zero"], dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(dir.path().join("theorem2.csv")).unwrap();
    let rows: Vec<&str> = csv.lines().skip(1).collect();
    assert_eq!(rows.len(), 5);
    for row in rows {
        let ratio: f64 = row.split(',').nth(1).unwrap().parse().unwrap();
        assert_eq!(ratio, 1.0);
    }
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("theorem2.json")).unwrap()).unwrap();
    assert_eq!(json["data"]["rows"].as_array().unwrap().len(), 5);
}

#[test]
fn theorem1_default_schedule_within_bound() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["thm1", "--potential", "cosine", "--amplitude", "1"], dir.path());
    assert!(o.status.success());
    let csv = std::fs::read_to_string(dir.path().join("theorem1.csv")).unwrap();
    let mut lines = csv.lines();
    assert!(lines.next().unwrap().starts_with("control,ratio,bound,flag,aux_"));
    let mut n = 0;
    for row in lines {
        let f: Vec<f64> = row.split(',').map(|x| x.parse().unwrap()).collect();
        assert!(f[2] >= (f[1] - 1.0).abs(), "{row}");
        n += 1;
    }
    assert_eq!(n, 9);
    assert!(String::from_utf8_lossy(&o.stdout).starts_with("theorem1: rows=9 flagged=0"));
}

#[test]
fn capacity_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let o = run(&["grand", "--lambda", "10", "--mu", "1e10"], &out);
    assert_eq!(o.status.code(), Some(3));
    assert_eq!(error_line(&o)["error"], "capacity");
    assert!(!out.exists());
}

#[test]
fn flagged_rows_exit_4_and_are_written() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(
        &["weyl", "--potential", "cosine", "--amplitude", "2", "--t-grid", "1,20"],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(4));
    assert_eq!(error_line(&o)["error"], "flagged");
    let csv = std::fs::read_to_string(dir.path().join("weyl.csv")).unwrap();
    assert_eq!(csv.lines().nth(1).unwrap().split(',').nth(3), Some("1"));
}

#[test]
fn env_var_sets_output_dir() {
    let dir = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_fermi-lab"))
        .args(["spectrum", "--lambda", "2", "--levels", "4"])
        .env("FERMI_LAB_OUT", dir.path())
        .output()
        .unwrap();
    assert!(o.status.success());
    let csv = std::fs::read_to_string(dir.path().join("spectrum.csv")).unwrap();
    assert_eq!(csv.lines().count(), 5);
    assert!(!csv.contains('\r'));
}
