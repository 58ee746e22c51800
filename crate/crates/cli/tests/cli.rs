use std::path::Path;
use std::process::{Command, Output};

fn mcfusion(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mcfusion")).args(args).output().unwrap()
}

fn ok(out: &Output) {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn generate_analyze_evaluate() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data/series.csv");
    ok(&mcfusion(&["generate", "--dataset", "moving_imbalance", "--points", "60", "--seed", "3", "--out", s(&data)]));
    let text = std::fs::read_to_string(&data).unwrap();
    assert!(text.starts_with("t,id,f1,f2,f3\n"));
    assert_eq!(text.lines().count(), 1 + 100 * 60);

    let report = dir.path().join("report");
    ok(&mcfusion(&[
        "analyze", "--input", s(&data), "--k-max", "2", "--restarts", "1", "--max-iter", "30",
        "--transition", "26,75", "--out", s(&report),
    ]));
    for f in ["scores.csv", "posteriors.csv", "alarms.csv", "eval.csv", "exp_mc.svg", "k.svg", "report.md"] {
        assert!(report.join(f).is_file(), "missing {f}");
    }

    let eval = dir.path().join("eval.csv");
    ok(&mcfusion(&["evaluate", "--scores", s(&report.join("scores.csv")), "--transition", "26,75", "--out", s(&eval)]));
    let table = std::fs::read_to_string(&eval).unwrap();
    assert!(table.starts_with("method,auc,delay,benefit,far\n"));
    assert_eq!(table.lines().count(), 6);
}

#[test]
fn config_file_and_flags_combine() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(&cfg, "k_max = 2\nmethods = [\"mc\", \"sdms\"]\n[em]\nrestarts = 1\nmax_iter = 20\n[schedule]\ntransition_start = 12\ntransition_end = 20\n").unwrap();
    let out_dir = dir.path().join("out");
    ok(&mcfusion(&["analyze", "--config", s(&cfg), "--steps", "30", "--points", "45", "--out", s(&out_dir)]));
    let scores = std::fs::read_to_string(out_dir.join("scores.csv")).unwrap();
    assert_eq!(scores.lines().count(), 1 + 30 * 2);
    let eval = std::fs::read_to_string(out_dir.join("eval.csv")).unwrap();
    assert_eq!(eval.lines().count(), 3);
}

#[test]
fn failures_exit_nonzero_with_a_message() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nope.csv");
    let out = mcfusion(&["analyze", "--input", s(&missing), "--out", s(dir.path())]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("error:"));

    let out = mcfusion(&["analyze", "--k-min", "5", "--k-max", "2", "--out", s(dir.path())]);
    assert!(!out.status.success());

    let scores = dir.path().join("scores.csv");
    std::fs::write(&scores, "t,method,value\n1,mc,0.5\n").unwrap();
    let out = mcfusion(&["evaluate", "--scores", s(&scores)]);
    assert!(!out.status.success());
    let out = mcfusion(&["evaluate", "--scores", s(&scores), "--transition", "26"]);
    assert!(!out.status.success());
}
