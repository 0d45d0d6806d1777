use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn medgnn(args: &[&str]) -> Output {
    let out = Command::new(env!("CARGO_BIN_EXE_medgnn"))
        .args(args)
        .output()
        .expect("binary runs");
    assert!(
        out.status.success(),
        "medgnn {args:?} failed:\n{}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

const TINY: &str = "n = 12\np = 0.35\nclasses = 3\ntrain_samples = 30\nval_samples = 6\n\
test_samples = 6\nt_max = 3\nfeatures = 4\ntaps = 2\nepochs = 2\nbatch_size = 10\n";

fn write_config(dir: &Path) -> String {
    let path = dir.join("tiny.cfg");
    fs::write(&path, TINY).unwrap();
    path.to_string_lossy().into_owned()
}

#[test]
fn gen_train_eval_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path());
    let data = dir.path().join("data");
    let run = dir.path().join("run");
    medgnn(&["gen", "--config", &cfg, "--out", data.to_str().unwrap()]);
    for f in ["graph.txt", "train.csv", "val.csv", "test.csv"] {
        assert!(data.join(f).exists(), "{f}");
    }
    medgnn(&["train", "--config", &cfg, "--activation", "median", "--out", run.to_str().unwrap()]);
    let metrics = fs::read_to_string(run.join("metrics.jsonl")).unwrap();
    assert_eq!(metrics.lines().filter(|l| l.contains("\"epoch\"")).count(), 3);
    assert!(metrics.contains("\"record\":\"summary\""));
    assert!(metrics.contains("\"record\":\"aggregate\""));
    assert!(!metrics.contains("\"relu\""));

    // the checkpoint evaluates on the trial's own graph
    let out = medgnn(&[
        "eval",
        "--checkpoint",
        run.join("trial0_median.ckpt").to_str().unwrap(),
        "--graph",
        run.join("trial0_graph.txt").to_str().unwrap(),
        "--signals",
        data.join("test.csv").to_str().unwrap(),
    ]);
    let line = String::from_utf8(out.stdout).unwrap();
    assert!(line.starts_with("{\"samples\":6,"), "{line}");
}

#[test]
fn training_output_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path());
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    medgnn(&["train", "--config", &cfg, "--seed", "5", "--out", a.to_str().unwrap()]);
    medgnn(&["train", "--config", &cfg, "--seed", "5", "--out", b.to_str().unwrap()]);
    let read = |d: &Path| fs::read(d.join("metrics.jsonl")).unwrap();
    assert_eq!(read(&a), read(&b));
}

#[test]
fn checks_report_json() {
    let out = medgnn(&["gradcheck", "--trials", "2", "--max-nodes", "8"]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().count(), 3);

    let out = medgnn(&["invariance", "--trials", "3", "--activation", "max"]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("\"selection_deviation\":0.0000000000000000e0"), "{text}");

    let out = medgnn(&["bench", "--nodes", "200", "--reps", "3", "--hops", "2"]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().count(), 2);
    assert!(text.contains("\"ratio\":"));
}

#[test]
fn bad_config_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.cfg");
    fs::write(&path, "n = 10\nlearning_rat = 0.1\n").unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_medgnn"))
        .args(["train", "--config", path.to_str().unwrap()])
        .output()
        .unwrap();
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line 2"), "{err}");
}
