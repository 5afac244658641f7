use std::fs;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_endoscopy"))
}

fn without_timing(report: &str) -> String {
    report.lines().filter(|l| !l.starts_with("{\"summary\"")).collect::<Vec<_>>().join("\n")
}

#[test]
fn precision_one_exits_with_config_error() {
    let out = bin().args(["--suite", "tjd", "--prec", "1"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("config error"));
}

#[test]
fn unknown_suite_exits_with_config_error() {
    let out = bin().args(["--suite", "everything"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn tjd_campaign_writes_one_line_per_case() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("r.jsonl");
    let status = bin()
        .args(["--suite", "tjd", "--p", "3", "--prec", "4", "--n", "1", "--m", "1", "--trials", "20"])
        .arg("--out")
        .arg(&path)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    let text = fs::read_to_string(&path).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 21);
    let summary: serde_json::Value = serde_json::from_str(lines[20]).unwrap();
    assert_eq!(summary["summary"]["violations"], 0);
    assert_eq!(summary["summary"]["config"]["suite"], "tjd");
    for (i, l) in lines[..20].iter().enumerate() {
        let v: serde_json::Value = serde_json::from_str(l).unwrap();
        assert_eq!(v["case"], i);
    }
}

#[test]
fn identical_seeds_give_identical_reports() {
    let dir = tempfile::tempdir().unwrap();
    let mut texts = Vec::new();
    for name in ["a.jsonl", "b.jsonl"] {
        let path = dir.path().join(name);
        let status = bin()
            .args(["--suite", "block-reduce", "--seed", "11", "--trials", "12", "--prec", "6"])
            .arg("--out")
            .arg(&path)
            .status()
            .unwrap();
        assert!(status.success());
        texts.push(without_timing(&fs::read_to_string(&path).unwrap()));
    }
    assert_eq!(texts[0], texts[1]);
}

#[test]
fn config_file_and_conductor_csv() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    let csv = dir.path().join("t.csv");
    fs::write(&cfg, "suite = conductor-table\ndepths = 1,0,0\nm_max = 2\n").unwrap();
    let status = bin()
        .arg("--config")
        .arg(&cfg)
        .arg("--csv")
        .arg(&csv)
        .arg("--out")
        .arg(dir.path().join("r.jsonl"))
        .status()
        .unwrap();
    assert!(status.success());
    assert_eq!(
        fs::read_to_string(&csv).unwrap(),
        "m,gl_dim,h_dim,notes\n0,0,0,below conductor\n1,1,1,newform\n2,3,>=1,h dim at m+2 >= h dim at m\n"
    );
}

#[test]
fn malformed_config_file_exits_with_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    fs::write(&cfg, "suite = tjd\nprec: 4\n").unwrap();
    let out = bin().arg("--config").arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn violations_exit_with_one_and_carry_replay_data() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("r.jsonl");
    // a floor above the working precision makes every case give up
    let status = bin()
        .args(["--suite", "hilbert90", "--prec", "4", "--floor", "10", "--trials", "3", "--seed", "5"])
        .arg("--out")
        .arg(&path)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(1));
    let text = fs::read_to_string(&path).unwrap();
    let first: serde_json::Value = serde_json::from_str(text.lines().next().unwrap()).unwrap();
    assert_eq!(first["ok"], false);
    assert_eq!(first["data"]["replay"]["seed"], 5);
    let summary: serde_json::Value = serde_json::from_str(text.lines().last().unwrap()).unwrap();
    assert_eq!(summary["summary"]["counterexamples"], serde_json::json!([0, 1, 2]));
}
