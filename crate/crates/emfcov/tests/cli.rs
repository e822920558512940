use std::process::Command;

fn emfcov(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_emfcov")).args(args).output().unwrap()
}

#[test]
fn moments_run_writes_provenance_header() {
    let dir = std::env::temp_dir().join(format!("emfcov-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let out = dir.join("moments.tsv");
    let o = emfcov(&["analyze", "--scenario", "brussels-lte1800", "--metric", "moments", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(&out).unwrap();
    assert!(text.lines().any(|l| l.starts_with("# source: brussels-lte1800 sha256=")));
    assert!(text.lines().any(|l| l == "# seed: 20240601"));
    assert!(text.contains("mean_ipd"));
}

#[test]
fn usage_errors_exit_with_two() {
    let o = emfcov(&["analyze", "--scenario", "brussels-lte1800", "--grid", "-40:-30:0"]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.starts_with("error\tusage\t"), "{err}");
}

#[test]
fn bad_scenarios_exit_with_one() {
    let dir = std::env::temp_dir().join(format!("emfcov-cli-bad-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("bad.toml");
    let text = emfcov::scenario::BRUSSELS_PRESET.replace("alpha = 3.2", "alpha = 1.8");
    std::fs::write(&path, text).unwrap();
    let o = emfcov(&["analyze", "--scenario", path.to_str().unwrap(), "--metric", "moments"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).starts_with("error\t"));

    let o = emfcov(&["map", "--scenario", "paris-5gnr2100", "--grid", "-1:1:3"]);
    assert_eq!(o.status.code(), Some(2));
}
