use std::process::Command;

fn foliq(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_foliq")).args(args).output().unwrap();
    (
        out.status.code().unwrap_or(-1),
        String::from_utf8_lossy(&out.stdout).into_owned(),
        String::from_utf8_lossy(&out.stderr).into_owned(),
    )
}

#[test]
fn build_reports_parameters() {
    let (code, out, _) = foliq(&["build", "--code", "C3", "--tau", "8"]);
    assert_eq!(code, 0);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["n"], 24);
    assert_eq!(v["d_nominal"], 3);
}

#[test]
fn trellis_decode_matches_red_path() {
    let (code, out, _) = foliq(&[
        "decode", "--code", "C3", "--tau", "8", "--boundary", "terminated", "--layers", "0", "--error",
        "000 000 000 000 110 000 000 000",
    ]);
    assert_eq!(code, 0);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["syndrome"], "000100");
    assert_eq!(v["correction"][3], "001");
    assert_eq!(v["logical_failure"], true);
}

#[test]
fn foliated_decode_of_clean_word() {
    let zeros = "0".repeat(32);
    let (code, out, err) = foliq(&["decode", "--code", "C3", "--tau", "8", "--layers", "1", "--error", &zeros]);
    assert_eq!(code, 0, "{err}");
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["correction_weight"], 0);
    assert_eq!(v["logical_failure"], false);
    assert_eq!(foliq(&["decode", "--code", "C3", "--tau", "8", "--error", "0101"]).0, 2);
}

#[test]
fn bad_input_exits_with_two() {
    assert_eq!(foliq(&["decode", "--code", "C3", "--error", "01x"]).0, 2);
    assert_eq!(foliq(&["build", "--code", "nope"]).0, 2);
    assert_eq!(foliq(&["sweep", "--code", "C3", "--p-grid", "", "--out", "/tmp/x"]).0, 2);
}

#[test]
fn sweep_writes_both_tables() {
    let dir = std::env::temp_dir().join(format!("foliq-sweep-{}", std::process::id()));
    let (code, _, err) = foliq(&[
        "sweep", "--code", "C3", "--tau", "8", "--layers", "1", "--p-grid", "0.01,0.02", "--j-max", "4",
        "--trials", "20", "--exhaustive-limit", "50", "--workers", "1", "--out", dir.to_str().unwrap(),
    ]);
    assert_eq!(code, 0, "{err}");
    let curve = std::fs::read_to_string(dir.join("curve.csv")).unwrap();
    assert_eq!(curve.lines().count(), 3);
    assert!(curve.starts_with("code,L,k,p,wer,wer_sigma"));
    let batches = std::fs::read_to_string(dir.join("batches.csv")).unwrap();
    assert!(batches.lines().count() >= 2);
    std::fs::remove_dir_all(dir).ok();
}

#[test]
fn schedule_check_reports_verdict() {
    let (code, out, _) = foliq(&["schedule-check", "--name", "C3", "--tau", "8"]);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["valid"], true);
    assert_eq!(v["weight_bound_holds"], true);
    assert_eq!(code, if v["pass"] == true { 0 } else { 1 });
}
