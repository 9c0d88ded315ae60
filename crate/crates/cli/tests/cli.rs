use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn idreader(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_idreader")).args(args).output().expect("spawn idreader")
}

fn ok(args: &[&str]) -> Output {
    let out = idreader(args);
    assert_eq!(out.status.code(), Some(0), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    out
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn tree(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                files.push((p.strip_prefix(dir).unwrap().display().to_string(), fs::read(&p).unwrap()));
            }
        }
    }
    files.sort();
    files
}

#[test]
fn missing_input_exits_with_io_code() {
    let out = idreader(&["locate", "--input", "/nonexistent/photo.jpg"]);
    assert_eq!(out.status.code(), Some(3));
    let err = String::from_utf8(out.stderr).unwrap();
    assert_eq!(err.lines().count(), 1, "{err}");
}

#[test]
fn unknown_flag_is_a_usage_error() {
    let out = idreader(&["locate", "--frobnicate"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("Usage"));
    assert_eq!(idreader(&["gen", "--kind", "other", "--count", "1", "--out", "x"]).status.code(), Some(2));
}

#[test]
fn malformed_config_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    fs::write(&cfg, r#"{"locator": {"samples": "many"}}"#).unwrap();
    let out = idreader(&["--config", path(&cfg), "locate", "--input", "x.jpg"]);
    assert_eq!(out.status.code(), Some(2));
    let missing = idreader(&["--config", path(&dir.path().join("none.json")), "locate", "--input", "x.jpg"]);
    assert_eq!(missing.status.code(), Some(3));
}

#[test]
fn undecodable_image_is_a_processing_error() {
    let dir = tempfile::tempdir().unwrap();
    let img = dir.path().join("junk.jpg");
    fs::write(&img, b"not an image").unwrap();
    assert_eq!(idreader(&["locate", "--input", path(&img)]).status.code(), Some(4));
}

#[test]
fn locate_prints_a_quad() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("main");
    ok(&["gen", "--kind", "main", "--count", "1", "--seed", "5", "--out", path(&data)]);
    let out = ok(&["locate", "--input", path(&data.join("images/000000.jpg"))]);
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let verts = v["vertices"].as_array().unwrap();
    assert_eq!(verts.len(), 4);
    assert!(verts.iter().all(|p| p.as_array().unwrap().len() == 2));
}

#[test]
fn gen_is_byte_identical_across_runs_and_thread_modes() {
    let dir = tempfile::tempdir().unwrap();
    for kind in ["main", "classifier", "ocr"] {
        let a = dir.path().join(format!("{kind}-a"));
        let b = dir.path().join(format!("{kind}-b"));
        let out_a = ok(&["gen", "--kind", kind, "--count", "4", "--seed", "9", "--out", path(&a)]);
        let out_b = ok(&["--sequential", "gen", "--kind", kind, "--count", "4", "--seed", "9", "--out", path(&b)]);
        assert_eq!(tree(&a), tree(&b), "{kind}");
        assert_eq!(tree(&a).len(), 5);
        let strip = |o: &Output, d: &Path| String::from_utf8_lossy(&o.stdout).replace(path(d), "OUT");
        assert_eq!(strip(&out_a, &a), strip(&out_b, &b));
    }
}

#[test]
fn train_then_eval_covers_every_class() {
    let dir = tempfile::tempdir().unwrap();
    let (cls, main) = (dir.path().join("cls"), dir.path().join("main"));
    ok(&["gen", "--kind", "classifier", "--count", "9", "--seed", "1", "--out", path(&cls)]);
    ok(&["gen", "--kind", "main", "--count", "9", "--seed", "2", "--out", path(&main)]);
    let model = dir.path().join("m.idrn");
    ok(&["train", "--dataset", path(&cls), "--epochs", "1", "--out", path(&model)]);
    let report = dir.path().join("report.json");
    let first = ok(&["eval", "--dataset", path(&main), "--model", path(&model), "--report", path(&report)]);
    let summary: serde_json::Value = serde_json::from_slice(&first.stdout).unwrap();
    assert_eq!(summary["n_samples"], 9);
    let breakdown = fs::read_to_string(dir.path().join("report.breakdown.csv")).unwrap();
    assert_eq!(breakdown.lines().count(), 10);
    let json = fs::read(&report).unwrap();
    let again = ok(&["--sequential", "eval", "--dataset", path(&main), "--model", path(&model), "--report", path(&report)]);
    assert_eq!(first.stdout, again.stdout);
    assert_eq!(json, fs::read(&report).unwrap());

    let photo = main.join("images/000000.jpg");
    let read = ok(&["read", "--input", path(&photo), "--model", path(&model)]);
    let v: serde_json::Value = serde_json::from_slice(&read.stdout).unwrap();
    assert!(v["fields"].as_object().is_some_and(|f| !f.is_empty()));
    let c = ok(&["classify", "--input", path(&photo), "--model", path(&model)]);
    let v: serde_json::Value = serde_json::from_slice(&c.stdout).unwrap();
    assert_eq!(v["probs"].as_array().unwrap().len(), 9);
}
