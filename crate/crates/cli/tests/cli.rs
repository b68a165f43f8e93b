use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn rtfx(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rtfx")).args(args).output().expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = rtfx(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn synth_extract_eval_report() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    let cache = dir.path().join("hist.rtfx");
    let results = dir.path().join("results.csv");
    let classes = dir.path().join("classes.csv");

    ok(&["synth", "--out", s(&data), "--classes", "2", "--seed", "3"]);
    assert!(data.join("1").join("D65A24.png").exists());
    assert!(data.join("catalog.json").exists());

    ok(&["extract", "--dataset", s(&data), "--descriptor", "hist-chrom-rgb", "--normalize", "gray-world", "--cache", s(&cache)]);
    assert_eq!(&fs::read(&cache).unwrap()[..4], b"RTFX");

    ok(&["eval", "--cache", s(&cache), "--task", "all", "--out", s(&results), "--per-class", s(&classes)]);
    let csv = fs::read_to_string(&results).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "descriptor,normalizer,task,subset_id,train_cond,test_cond,n_test,accuracy");
    assert_eq!(lines.count(), 46 + 12 + 72 + 132 + 30 + 72 + 72 + 36 + 6);
    assert!(csv.contains("hist-chrom-rgb,gray-world,no-variations,0,I100,I100,16,"));
    assert_eq!(fs::read_to_string(&classes).unwrap().lines().count(), 1 + 9 * 2);

    let table = ok(&["report", "--in", s(&results), "--format", "table"]);
    assert!(table.lines().next().unwrap().starts_with("Descriptor"));
    assert!(table.contains("hist-chrom-rgb"));
    let summary = ok(&["report", "--in", s(&results), "--format", "csv"]);
    assert_eq!(summary.lines().count(), 10);

    let curve = ok(&["curves", "--in", s(&results), "--task", "intensity"]);
    let deltas: Vec<&str> = curve.lines().skip(1).map(|l| l.split(',').nth(2).unwrap()).collect();
    assert_eq!(deltas, ["25", "50", "75"]);
    assert!(!rtfx(&["curves", "--in", s(&results), "--task", "led"]).status.success());

    let single = dir.path().join("single.csv");
    ok(&["eval", "--cache", s(&cache), "--task", "daylight", "--out", s(&single)]);
    assert_eq!(fs::read_to_string(&single).unwrap().lines().count(), 133);
}

#[test]
fn incomplete_dataset_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    ok(&["synth", "--out", s(&data), "--classes", "1", "--seed", "1"]);
    fs::remove_file(data.join("0").join("L30.png")).unwrap();
    let out = rtfx(&["extract", "--dataset", s(&data), "--descriptor", "hist-l", "--cache", s(&dir.path().join("c"))]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("L30"));
}

#[test]
fn unknown_names_fail() {
    let dir = tempfile::tempdir().unwrap();
    let out = rtfx(&["eval", "--cache", s(&dir.path().join("nope.rtfx")), "--out", s(&dir.path().join("r.csv"))]);
    assert!(!out.status.success());
    let data = dir.path().join("data");
    ok(&["synth", "--out", s(&data), "--classes", "1"]);
    let out = rtfx(&["extract", "--dataset", s(&data), "--descriptor", "sift-magic", "--cache", s(&dir.path().join("c"))]);
    assert!(String::from_utf8_lossy(&out.stderr).contains("sift-magic"));
    let out = rtfx(&["extract", "--dataset", s(&data), "--descriptor", "fv", "--cache", s(&dir.path().join("c"))]);
    assert!(String::from_utf8_lossy(&out.stderr).contains("--models"));
}

#[test]
fn config_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("cfg.json");
    fs::write(&path, r#"{"corpus": {"classes": 4}, "codebook": {"bovw_words": 64}}"#).unwrap();
    let text = ok(&["--config", s(&path), "config"]);
    assert!(text.contains("\"classes\": 4"));
    assert!(text.contains("\"bovw_words\": 64"));
    assert!(text.contains("\"band_irradiance\": 0.8"));
}
