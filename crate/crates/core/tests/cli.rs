mod common;

use std::collections::BTreeSet;
use std::fs;

use chadpod::dataset::{read_dataset, segment_passes, BuildConfig, Kind, Label};
use common::*;
use tempfile::tempdir;

#[test]
fn build_dataset_matches_hand_counts() {
    let dir = tempdir().unwrap();
    let out = build_fixture_dataset(dir.path());
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let table = stdout(&out);
    assert!(table.contains("positives           13      2      1"), "{table}");
    assert!(table.contains("total               23      4      5"), "{table}");

    let split = read_dataset(dir.path()).unwrap();
    let counts = split.counts();
    let cell = |s: &str| {
        let c = &counts[s];
        (c.positive, c.hard_neg, c.easy_neg, c.total)
    };
    assert_eq!(cell("train"), (13, 4, 6, 23));
    assert_eq!(cell("dev"), (2, 1, 1, 4));
    assert_eq!(cell("test"), (1, 1, 3, 5));
    assert_eq!(cell("all"), (16, 6, 10, 32));

    let games: Vec<BTreeSet<&str>> = split.game_sets().to_vec();
    assert_eq!(games[0], BTreeSet::from(["caravan", "lighthouse", "orchard"]));
    assert_eq!(games[1], BTreeSet::from(["mine"]));
    assert_eq!(games[2], BTreeSet::from(["abbey", "marsh"]));

    let cfg = BuildConfig::default();
    for e in split.iter() {
        assert_eq!(e.label, e.kind.label());
        assert!(segment_passes(&e.prefix, &cfg) && segment_passes(&e.postfix, &cfg), "{}", e.id);
    }
    let manifest = read_json(&dir.path().join("manifest.json"));
    assert_eq!(manifest["subcommand"], "build-dataset");
    assert_eq!(manifest["summary"]["stats"]["triplets"], 36);
    assert_eq!(manifest["summary"]["stats"]["filtered_triplets"], 23);
    assert_eq!(manifest["input_digests"].as_object().unwrap().len(), 6);
}

#[test]
fn build_dataset_is_byte_identical_across_runs() {
    let a = tempdir().unwrap();
    let b = tempdir().unwrap();
    assert_eq!(code(&build_fixture_dataset(a.path())), 0);
    assert_eq!(code(&build_fixture_dataset(b.path())), 0);
    for f in ["train.jsonl", "dev.jsonl", "test.jsonl", "manifest.json"] {
        assert_eq!(read(&a.path().join(f)), read(&b.path().join(f)), "{f}");
    }
}

#[test]
fn rerun_from_manifest_reproduces_outputs() {
    let a = tempdir().unwrap();
    let b = tempdir().unwrap();
    let first = chadpod([
        "build-dataset",
        &path_arg(&fixture("games")),
        "--out",
        &path_arg(a.path()),
        "--seed",
        "17",
    ]);
    assert_eq!(code(&first), 0);
    let manifest = a.path().join("manifest.json");
    let second = chadpod([
        "build-dataset",
        &path_arg(&fixture("games")),
        "--out",
        &path_arg(b.path()),
        "--config",
        &path_arg(&manifest),
    ]);
    assert_eq!(code(&second), 0, "{}", stderr(&second));
    for f in ["train.jsonl", "dev.jsonl", "test.jsonl"] {
        assert_eq!(read(&a.path().join(f)), read(&b.path().join(f)), "{f}");
    }
    assert_eq!(read_json(&b.path().join("manifest.json"))["seed"], 17);
}

#[test]
fn config_file_and_flag_precedence() {
    let dir = tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    fs::write(&cfg, "[build]\nmin_chars = 100000\n").unwrap();
    let out = chadpod([
        "build-dataset",
        &path_arg(&fixture("games")),
        "--out",
        &path_arg(&dir.path().join("strict")),
        "--config",
        &path_arg(&cfg),
    ]);
    assert_eq!(code(&out), 3, "everything filtered out should fail the build");
    let out = chadpod([
        "build-dataset",
        &path_arg(&fixture("games")),
        "--out",
        &path_arg(&dir.path().join("flag")),
        "--config",
        &path_arg(&cfg),
        "--min-chars",
        "50",
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let snapshot = read_json(&dir.path().join("flag/manifest.json"));
    assert_eq!(snapshot["config_snapshot"]["build"]["min_chars"], 50);
}

#[test]
fn single_game_is_a_pipeline_error() {
    let dir = tempdir().unwrap();
    let graphs = dir.path().join("graphs");
    fs::create_dir(&graphs).unwrap();
    fs::copy(fixture("games/lighthouse.json"), graphs.join("lighthouse.json")).unwrap();
    let out = chadpod(["build-dataset", &path_arg(&graphs), "--out", &path_arg(&dir.path().join("o"))]);
    assert_eq!(code(&out), 3, "{}", stderr(&out));
}

#[test]
fn malformed_graph_is_an_input_error() {
    let dir = tempdir().unwrap();
    let graphs = dir.path().join("graphs");
    fs::create_dir(&graphs).unwrap();
    fs::write(graphs.join("bad.json"), r#"{"game_id":"x","nodes":[{"id":"a","text":"t"}],"edges":[{"source":"a","action":"go","target":"zz"}]}"#).unwrap();
    let out = chadpod(["build-dataset", &path_arg(&graphs), "--out", &path_arg(&dir.path().join("o"))]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("zz"), "{}", stderr(&out));
}

#[test]
fn import_graph_batch_with_one_bad_file() {
    let dir = tempdir().unwrap();
    let scene = dir.path().join("scenes.json");
    fs::write(
        &scene,
        r#"{"scenes": {"start": {"text": "A door.", "choices": [{"text": "Open it.", "next": "end"}]}, "end": {"text": "Done."}}}"#,
    )
    .unwrap();
    let bad = dir.path().join("broken.json");
    fs::write(&bad, "{\"nodes\": [").unwrap();
    let out_dir = dir.path().join("out");
    let out = chadpod([
        "import-graph",
        &path_arg(&fixture("games/mine.json")),
        &path_arg(&scene),
        &path_arg(&bad),
        "--out",
        &path_arg(&out_dir),
    ]);
    assert_eq!(code(&out), 2, "{}", stderr(&out));
    assert!(stdout(&out).contains("imported 2 of 3 files"));
    let report = read_json(&out_dir.join("import_report.json"));
    assert_eq!(report["converted"].as_array().unwrap().len(), 2);
    assert_eq!(report["failed"].as_array().unwrap().len(), 1);
    assert!(report["failed"][0]["input"].as_str().unwrap().ends_with("broken.json"));
    assert!(out_dir.join("mine.json").exists());
    let imported = read_json(&out_dir.join("scenes.json"));
    assert_eq!(imported["game_id"], "scenes");
    assert_eq!(imported["edges"][0]["action"], "Open it.");
    assert!(out_dir.join("manifest.json").exists());
}

#[test]
fn import_graph_round_trips_interchange() {
    let dir = tempdir().unwrap();
    let out = chadpod(["import-graph", &path_arg(&fixture("games/orchard.json")), "--out", &path_arg(dir.path())]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let original = chadpod::graph::parse_graph(&read(&fixture("games/orchard.json")), "").unwrap();
    let copy = chadpod::graph::parse_graph(&read(&dir.path().join("orchard.json")), "").unwrap();
    assert_eq!(original, copy);
}

#[test]
fn train_is_byte_identical_across_runs() {
    let dir = tempdir().unwrap();
    let ds = dir.path().join("ds");
    assert_eq!(code(&build_fixture_dataset(&ds)), 0);
    for run in ["a", "b"] {
        let out = chadpod(["train", &path_arg(&ds), "--out", &path_arg(&dir.path().join(run)), "--epochs", "5"]);
        assert_eq!(code(&out), 0, "{}", stderr(&out));
    }
    for f in ["model.json", "train_report.json", "manifest.json"] {
        assert_eq!(read(&dir.path().join("a").join(f)), read(&dir.path().join("b").join(f)), "{f}");
    }
}

#[test]
fn eval_with_oracle_stub_is_perfect() {
    let dir = tempdir().unwrap();
    let ds = dir.path().join("ds");
    assert_eq!(code(&build_fixture_dataset(&ds)), 0);
    let scorer = stub_scorer(&format!("--oracle {}", path_arg(&ds.join("test.jsonl"))));
    let out = chadpod(["eval", &path_arg(&ds), "--scorer", &scorer, "--out", &path_arg(&dir.path().join("ev"))]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let report = read_json(&dir.path().join("ev/eval.json"));
    assert_eq!(report["metrics"]["accuracy"], 1.0);
    assert_eq!(report["matrix"]["fp"], 0);
    assert_eq!(report["matrix"]["fn"], 0);
    assert_eq!(report["records"].as_array().unwrap().len(), 5);
    let csv = String::from_utf8(read(&dir.path().join("ev/eval.csv"))).unwrap();
    assert_eq!(csv.lines().next(), Some("id,gold,p,pred"));
    assert_eq!(csv.lines().count(), 6);
}

#[test]
fn eval_with_constant_stub_and_bad_probabilities() {
    let dir = tempdir().unwrap();
    let ds = dir.path().join("ds");
    assert_eq!(code(&build_fixture_dataset(&ds)), 0);
    let out = chadpod([
        "eval",
        &path_arg(&ds.join("train.jsonl")),
        "--scorer",
        &stub_scorer("--constant 0.9"),
        "--out",
        &path_arg(&dir.path().join("c")),
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let report = read_json(&dir.path().join("c/eval.json"));
    let acc = report["metrics"]["accuracy"].as_f64().unwrap();
    assert!((acc - 13.0 / 23.0).abs() < 1e-12);

    let out = chadpod([
        "eval",
        &path_arg(&ds),
        "--scorer",
        &stub_scorer("--constant 1.3"),
        "--out",
        &path_arg(&dir.path().join("bad")),
    ]);
    assert_eq!(code(&out), 4);
    assert!(stderr(&out).contains("out-of-range"), "{}", stderr(&out));
}

#[test]
fn eval_with_baseline_scorer() {
    let dir = tempdir().unwrap();
    let ds = dir.path().join("ds");
    assert_eq!(code(&build_fixture_dataset(&ds)), 0);
    let model = fixture("models/baseline.json");
    let out = chadpod([
        "eval",
        &path_arg(&ds),
        "--split",
        "train",
        "--scorer",
        &format!("baseline:{}", path_arg(&model)),
        "--out",
        &path_arg(&dir.path().join("ev")),
        "--jobs",
        "3",
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let report = read_json(&dir.path().join("ev/eval.json"));
    assert_eq!(report["metrics"]["accuracy"], 1.0);
    assert_eq!(report["scorer"], "baseline:baseline.json");
}

#[test]
fn grid_search_with_oracle_picks_lowest_perfect_threshold() {
    let dir = tempdir().unwrap();
    let ds = dir.path().join("ds");
    assert_eq!(code(&build_fixture_dataset(&ds)), 0);
    let scorer = stub_scorer(&format!("--oracle {}", path_arg(&ds.join("dev.jsonl"))));
    let out = chadpod([
        "grid-search",
        &path_arg(&ds),
        "--scorer",
        &scorer,
        "--grid",
        "0.7,0.3,0.5",
        "--out",
        &path_arg(&dir.path().join("gs")),
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let report = read_json(&dir.path().join("gs/grid_search.json"));
    assert_eq!(report["best_threshold"], 0.3);
    assert_eq!(report["sweep"].as_array().unwrap().len(), 3);
}

#[test]
fn segment_short_text_has_one_segment() {
    let dir = tempdir().unwrap();
    let text = dir.path().join("short.txt");
    fs::write(&text, "One thing happened. Then another. A third came. Then a fourth. Finally a fifth.").unwrap();
    let out = chadpod([
        "segment",
        &path_arg(&text),
        "--scorer",
        &stub_scorer("--constant 0.9"),
        "--out",
        &path_arg(&dir.path().join("s")),
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let report = read_json(&dir.path().join("s/segment.json"));
    assert_eq!(report["sentences"], 5);
    assert_eq!(report["peaks"].as_array().unwrap().len(), 0);
    assert_eq!(report["segments"].as_array().unwrap().len(), 1);
    for f in ["segment.csv", "segment.svg", "segments.txt", "manifest.json"] {
        assert!(dir.path().join("s").join(f).exists(), "{f}");
    }
}

fn run_golden_segment(out_dir: &std::path::Path, extra: &[&str]) {
    let mut args = vec![
        "segment".to_string(),
        path_arg(&fixture("text/alice_ch1.txt")),
        "--scorer".into(),
        format!("baseline:{}", path_arg(&fixture("models/baseline.json"))),
        "--out".into(),
        path_arg(out_dir),
    ];
    args.extend(extra.iter().map(|s| s.to_string()));
    let out = chadpod(&args);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
}

#[test]
fn segment_matches_golden_reports() {
    let dir = tempdir().unwrap();
    let cases: [(&str, &[&str]); 2] = [
        ("alice_default", &[]),
        ("alice_sensitive", &["--kernel-width", "5", "--th1", "0.35", "--th2", "0.4"]),
    ];
    for (name, extra) in cases {
        let out = dir.path().join(name);
        run_golden_segment(&out, extra);
        for f in ["segment.json", "segment.csv"] {
            assert_eq!(read(&out.join(f)), read(&fixture(&format!("golden/{name}/{f}"))), "{name}/{f}");
        }
    }
}

#[test]
fn segment_is_identical_across_runs_and_job_counts() {
    let dir = tempdir().unwrap();
    run_golden_segment(&dir.path().join("a"), &[]);
    run_golden_segment(&dir.path().join("b"), &["--jobs", "4"]);
    for f in ["segment.json", "segment.csv", "segment.svg", "segments.txt"] {
        assert_eq!(read(&dir.path().join("a").join(f)), read(&dir.path().join("b").join(f)), "{f}");
    }
}

#[test]
fn adapt_tp_emits_context_passing_turning_points() {
    let dir = tempdir().unwrap();
    let out = chadpod(["adapt-tp", &path_arg(&fixture("tripod/synopses.jsonl")), "--out", &path_arg(dir.path())]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let examples = chadpod::dataset::read_examples(&dir.path().join("adapted.jsonl")).unwrap();
    let positives: Vec<&str> = examples.iter().filter(|e| e.kind == Kind::Positive).map(|e| e.id.as_str()).collect();
    assert_eq!(
        positives,
        ["lantern-keeper/tp@6", "lantern-keeper/tp@14", "two-brothers/tp@3", "two-brothers/tp@5", "harvest/tp@9"]
    );
    assert!(examples.iter().all(|e| e.kind != Kind::Positive || e.label == Label::Branch));
}

#[test]
fn usage_and_scorer_errors_have_distinct_codes() {
    let dir = tempdir().unwrap();
    assert_eq!(code(&chadpod(["frobnicate"])), 1);
    assert_eq!(code(&chadpod(["segment", "x.txt"])), 1);
    assert_eq!(code(&chadpod(["--version"])), 0);
    let text = fixture("text/alice_ch1.txt");
    let o = path_arg(&dir.path().join("o"));
    let unknown = chadpod(["segment", &path_arg(&text), "--scorer", "magic:thing", "--out", &o]);
    assert_eq!(code(&unknown), 1);
    let missing = chadpod(["segment", &path_arg(&text), "--scorer", "baseline:/nonexistent/model.json", "--out", &o]);
    assert_eq!(code(&missing), 2);
    let dead = chadpod(["segment", &path_arg(&text), "--scorer", "external:exec:/nonexistent/scorer", "--out", &o]);
    assert_eq!(code(&dead), 4);
    let bad_cfg = chadpod(["segment", &path_arg(&text), "--scorer", &stub_scorer(""), "--out", &o, "--th1", "0.9"]);
    assert_eq!(code(&bad_cfg), 3);
}
