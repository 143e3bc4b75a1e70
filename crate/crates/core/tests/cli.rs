mod common;

use std::collections::BTreeSet;
use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use capbench::kgraph::KnowledgeGraph;
use capbench::metrics::{evaluate_corpus, EvalOptions, EvaluationReport};
use common::fixture;

fn capbench(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_capbench"))
        .args(args)
        .output()
        .unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn pipeline(out: &Path, extra: &[&str]) -> Output {
    let (pbp, roster, ocr) = (fixture("pbp.jsonl"), fixture("roster.jsonl"), fixture("ocr"));
    let mut args = vec![
        "pipeline",
        "--pbp",
        s(&pbp),
        "--roster",
        s(&roster),
        "--ocr-dir",
        s(&ocr),
        "--out-dir",
        s(out),
    ];
    args.extend_from_slice(extra);
    capbench(&args)
}

fn ids(path: &Path) -> Vec<String> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .map(|l| {
            serde_json::from_str::<serde_json::Value>(l).unwrap()["file_id"]
                .as_str()
                .unwrap()
                .to_string()
        })
        .collect()
}

fn error_json(out: &Output) -> serde_json::Value {
    let stderr = String::from_utf8_lossy(&out.stderr);
    let line = stderr
        .lines()
        .find(|l| l.starts_with('{'))
        .expect("JSON error on stderr");
    serde_json::from_str(line).unwrap()
}

#[test]
fn unknown_flag_is_a_usage_error() {
    let out = capbench(&["evaluate", "--bogus"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("Usage"));
    assert_eq!(capbench(&[]).status.code(), Some(2));
    assert_eq!(capbench(&["--help"]).status.code(), Some(0));
}

#[test]
fn missing_input_is_a_data_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = capbench(&[
        "build-kg",
        "--pbp",
        "/nonexistent/pbp.jsonl",
        "--out",
        s(&dir.path().join("g")),
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(error_json(&out)["stage"], "build-kg");
    assert!(!dir.path().join("g").exists());
}

#[test]
fn build_kg_counts() {
    let dir = tempfile::tempdir().unwrap();
    let g = dir.path().join("g.kg.jsonl");
    let (pbp, roster) = (fixture("pbp.jsonl"), fixture("roster.jsonl"));
    let out = capbench(&["build-kg", "--pbp", s(&pbp), "--roster", s(&roster), "--out", s(&g)]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let graph = KnowledgeGraph::load(&g).unwrap();
    assert_eq!((graph.node_count(), graph.relation_count()), (183, 198));

    // without a roster only the roster-derived nodes and relations disappear
    let bare = dir.path().join("bare.kg.jsonl");
    assert!(capbench(&["build-kg", "--pbp", s(&pbp), "--out", s(&bare)])
        .status
        .success());
    let graph = KnowledgeGraph::load(&bare).unwrap();
    assert_eq!((graph.node_count(), graph.relation_count()), (183 - 52, 198 - 48));
}

#[test]
fn evaluate_prints_report() {
    let (p, r, n) = (
        fixture("predictions.jsonl"),
        fixture("references.jsonl"),
        fixture("names.txt"),
    );
    let out = capbench(&["evaluate", "--pred", s(&p), "--ref", s(&r), "--roster", s(&n)]);
    assert_eq!(out.status.code(), Some(0));
    let report: EvaluationReport = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report, evaluate_corpus(&p, &r, &n, EvalOptions::default()).unwrap());
    assert_eq!(report.pairs, 6);
    assert!((report.role_precision - 1.0).abs() < 1e-12);
    assert!((report.role_recall - 0.75).abs() < 1e-12);

    let table = capbench(&[
        "evaluate",
        "--pred",
        s(&p),
        "--ref",
        s(&r),
        "--roster",
        s(&n),
        "--format",
        "table",
    ]);
    let text = String::from_utf8(table.stdout).unwrap();
    assert!(text.lines().next().unwrap().contains("CIDEr"));
    assert!(text.contains("100.0"));
}

#[test]
fn evaluate_rejects_unpaired_ids() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("p.jsonl");
    fs::write(&p, "{\"file_id\":\"nope\",\"caption\":\"x\"}\n").unwrap();
    let (r, n) = (fixture("references.jsonl"), fixture("names.txt"));
    let out = capbench(&["evaluate", "--pred", s(&p), "--ref", s(&r), "--roster", s(&n)]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(error_json(&out)["stage"], "evaluate");
}

#[test]
fn pipeline_is_deterministic_across_runs_and_jobs() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    assert!(pipeline(a.path(), &[]).status.success());
    assert!(pipeline(b.path(), &["--jobs", "1"]).status.success());
    for f in [
        "dataset.jsonl",
        "train.jsonl",
        "test.jsonl",
        "stats.json",
        "durations.jsonl",
        "graph.kg.jsonl",
        "report.json",
    ] {
        assert_eq!(
            fs::read(a.path().join(f)).unwrap(),
            fs::read(b.path().join(f)).unwrap(),
            "{f}"
        );
    }
    assert_eq!(
        fs::read_to_string(a.path().join("dataset.jsonl")).unwrap(),
        fs::read_to_string(fixture("golden/dataset.jsonl")).unwrap()
    );
}

#[test]
fn other_seed_keeps_samples_and_changes_split() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    assert!(pipeline(a.path(), &["--train-fraction", "0.5"]).status.success());
    assert!(pipeline(b.path(), &["--train-fraction", "0.5", "--seed", "7"])
        .status
        .success());
    let sorted = |p: &Path| ids(&p.join("dataset.jsonl")).into_iter().collect::<BTreeSet<_>>();
    assert_eq!(sorted(a.path()), sorted(b.path()));
    assert_ne!(ids(&a.path().join("train.jsonl")), ids(&b.path().join("train.jsonl")));
}

#[test]
fn config_file_supplies_defaults_and_flags_win() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    fs::write(
        &cfg,
        "[pipeline]\ntrain-fraction = 0.5\nsampling-mode = \"seeded-random\"\n",
    )
    .unwrap();
    let out = dir.path().join("o1");
    assert!(pipeline(&out, &["--config", s(&cfg)]).status.success());
    assert_eq!(ids(&out.join("train.jsonl")).len(), 5);
    assert_ne!(
        fs::read(out.join("dataset.jsonl")).unwrap(),
        fs::read(fixture("golden/dataset.jsonl")).unwrap()
    );

    let out2 = dir.path().join("o2");
    assert!(pipeline(
        &out2,
        &[
            "--config",
            s(&cfg),
            "--train-fraction",
            "0.801",
            "--sampling-mode",
            "midpoint"
        ]
    )
    .status
    .success());
    assert_eq!(ids(&out2.join("train.jsonl")).len(), 7);
    assert_eq!(
        fs::read(out2.join("dataset.jsonl")).unwrap(),
        fs::read(fixture("golden/dataset.jsonl")).unwrap()
    );
}

#[test]
fn failure_leaves_no_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let res = pipeline(&out, &["--train-fraction", "1.5"]);
    assert_eq!(res.status.code(), Some(1));
    assert_eq!(error_json(&res)["stage"], "extract-dataset");
    assert!(!out.exists());
}

#[test]
fn stages_compose() {
    let dir = tempfile::tempdir().unwrap();
    let g = dir.path().join("g.kg.jsonl");
    let (pbp, roster, ocr) = (fixture("pbp.jsonl"), fixture("roster.jsonl"), fixture("ocr"));
    let built = capbench(&[
        "build-kg",
        "--pbp",
        s(&pbp),
        "--roster",
        s(&roster),
        "--ocr-dir",
        s(&ocr),
        "--out",
        s(&g),
    ]);
    assert!(built.status.success());
    let ds = dir.path().join("ds");
    assert!(capbench(&["extract-dataset", "--graph", s(&g), "--out-dir", s(&ds)])
        .status
        .success());
    assert_eq!(
        fs::read(ds.join("dataset.jsonl")).unwrap(),
        fs::read(fixture("golden/dataset.jsonl")).unwrap()
    );

    let stats = capbench(&[
        "stats",
        "--dataset",
        s(&ds.join("dataset.jsonl")),
        "--durations",
        s(&ds.join("durations.jsonl")),
    ]);
    assert!(stats.status.success());
    assert_eq!(stats.stdout, fs::read(ds.join("stats.json")).unwrap());
}

#[test]
fn align_clock_reports_windows() {
    let dir = tempfile::tempdir().unwrap();
    let timeline = dir.path().join("t.jsonl");
    let ocr = fixture("ocr/202210190NOP.jsonl");
    let out = capbench(&[
        "align-clock",
        "--ocr",
        s(&ocr),
        "--out",
        s(&timeline),
        "--event",
        "1/11:41",
        "--event",
        "2/11:30",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["windows"][0]["start_frame"], 415);
    assert_eq!(v["windows"][0]["end_frame"], 565);
    assert_eq!(v["windows"][1]["start_frame"], 5000 + 25 * 30 - 60);
    assert!(fs::read_to_string(&timeline).unwrap().lines().count() > 0);

    let bad = capbench(&["align-clock", "--ocr", s(&ocr), "--event", "1/99:99"]);
    assert_eq!(bad.status.code(), Some(1));
    assert_eq!(error_json(&bad)["stage"], "align-clock");
}
