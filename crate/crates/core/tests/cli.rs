mod common;

use std::collections::BTreeMap;

use common::{cantolex, cantolex_ok, fixtures};
use serde_json::Value;

fn stdout(out: &std::process::Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

#[test]
fn usage_errors_exit_2() {
    let out = cantolex(["frobnicate"]);
    assert_eq!(out.status.code(), Some(2));
    let out = cantolex(["mine-terms", "--corpus", "x.jsonl"]);
    assert_eq!(out.status.code(), Some(2));
    let out = cantolex(["llm-annotate", "--kind", "emotion", "--words", "w", "--out", "o"]);
    assert_eq!(out.status.code(), Some(2), "needs --replay or --live");
}

#[test]
fn help_documents_defaults() {
    let out = cantolex(["mine-terms", "--help"]);
    assert_eq!(out.status.code(), Some(0));
    let help = stdout(&out);
    assert!(help.contains("[default: 20000]"));
    assert!(help.contains("a,ad,ag,an,b,g,h,i,j,l,q,v,vn,z"));
    for sub in [
        "lexicon-stats", "make-tasks", "serve", "llm-annotate", "aggregate", "alpha", "kappa",
        "build-lexicon", "extract", "evaluate",
    ] {
        let out = cantolex([sub, "--help"]);
        assert_eq!(out.status.code(), Some(0), "{sub}");
    }
}

#[test]
fn stage_errors_exit_1_and_name_the_stage() {
    let out = cantolex(["mine-terms", "--corpus", "/nonexistent/threads.jsonl", "--dict", "/nonexistent/d.tsv"]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("error: mine-terms:"), "{err}");
    assert!(err.contains("does not exist"), "{err}");

    let dir = tempfile::tempdir().unwrap();
    let words = dir.path().join("w.txt");
    std::fs::write(&words, "a\nb\n").unwrap();
    let out = cantolex([
        "make-tasks", "--kind", "emotion", "--words", words.to_str().unwrap(), "--portions", "5",
        "--seed", "1", "--out-dir", dir.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("error: make-tasks:"));
}

#[test]
fn config_file_supplies_flags_and_command_line_wins() {
    let dir = tempfile::tempdir().unwrap();
    let fx = fixtures();
    let config = dir.path().join("config.json");
    let body = serde_json::json!({
        "mine-terms": {
            "corpus": fx.join("corpus/threads.jsonl"),
            "dict": fx.join("corpus/dict.tsv"),
            "top-k": 3
        },
        "evaluate": {"baseline": "emolex-en"}
    });
    std::fs::write(&config, body.to_string()).unwrap();
    let cfg = config.to_str().unwrap();
    let out = cantolex_ok(["mine-terms", "--config", cfg]);
    assert_eq!(stdout(&out).lines().count(), 3);
    let out = cantolex_ok(["--config", cfg, "mine-terms", "--top-k", "5"]);
    assert_eq!(stdout(&out).lines().count(), 5);
}

#[test]
fn kappa_and_alpha_subcommands() {
    let dir = tempfile::tempdir().unwrap();
    let pairs = dir.path().join("pairs.tsv");
    let mut text = String::new();
    for (a, b, n) in [("x", "x", 40), ("x", "y", 20), ("y", "x", 10), ("y", "y", 30)] {
        for _ in 0..n {
            text.push_str(&format!("{a}\t{b}\n"));
        }
    }
    std::fs::write(&pairs, text).unwrap();
    let out = cantolex_ok(["kappa", "--pairs", pairs.to_str().unwrap()]);
    assert!(stdout(&out).starts_with("kappa\t0.400000\t(fair)\n"), "{}", stdout(&out));

    let matrix = dir.path().join("m.tsv");
    std::fs::write(&matrix, "unit\tr1\tr2\nu1\ta\ta\nu2\tb\tb\nu3\ta\t\n").unwrap();
    let out = cantolex_ok(["alpha", "--matrix", matrix.to_str().unwrap(), "--json"]);
    let report: Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(report["alpha"], 1.0);
    assert_eq!(report["n_units"], 2);
}

#[test]
fn trio_selection_from_demo_records() {
    let dir = tempfile::tempdir().unwrap();
    let records = dir.path().join("demo.jsonl");
    let answers: BTreeMap<&str, [&[&str]; 3]> = BTreeMap::from([
        ("c1", [&["joy"][..], &["anger"], &["fear", "negative"]]),
        ("c2", [&["joy"][..], &["anger"], &["fear", "negative"]]),
        ("c3", [&["joy"][..], &["anger"], &["fear"]]),
        ("c4", [&["sadness"][..], &[], &["trust"]]),
    ]);
    let mut lines = String::new();
    for (who, sets) in &answers {
        for (i, labels) in sets.iter().enumerate() {
            let rec = serde_json::json!({
                "annotator_id": who,
                "task_id": format!("emotion:w{i}"),
                "response": {"kind": "emotion-annotation", "labels": labels, "wrong_word": false}
            });
            lines.push_str(&format!("{rec}\n"));
        }
    }
    lines.push_str(r#"{"annotator_id":"c5","task_id":"emotion:w0","response":{"kind":"emotion-annotation","labels":[]}}"#);
    lines.push('\n');
    std::fs::write(&records, lines).unwrap();
    let out = cantolex_ok(["alpha", "--records", records.to_str().unwrap(), "--select-trio", "--json"]);
    let sel: Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(sel["trio"], serde_json::json!(["c1", "c2", "c3"]));
    assert_eq!(sel["excluded"], serde_json::json!(["c5"]));
    assert_eq!(sel["trios_evaluated"], 4);
}

#[test]
fn extract_single_text() {
    let fx = fixtures();
    let lex = fx.join("lexicons/emolex-yue.tsv");
    let out = cantolex_ok(["extract", "--lexicon", lex.to_str().unwrap(), "--text", "今日好快樂"]);
    let profile: Value = serde_json::from_str(stdout(&out).trim()).unwrap();
    assert_eq!(profile["presence"]["joy"], true);
    assert_eq!(profile["counts"]["positive"], 1);
    let terms: Vec<&str> =
        profile["matched_terms"].as_array().unwrap().iter().map(|m| m["term"].as_str().unwrap()).collect();
    assert!(terms.contains(&"快樂"), "{terms:?}");
}

#[test]
fn make_tasks_samples_half_and_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let words = dir.path().join("words.txt");
    std::fs::write(&words, (0..21).map(|i| format!("w{i}\n")).collect::<String>()).unwrap();
    let run = |out: &str| {
        cantolex_ok([
            "make-tasks", "--kind", "emotion", "--words", words.to_str().unwrap(), "--portions", "3",
            "--groups", "A,B", "--seed", "9", "--sample-half", "--out-dir", dir.path().join(out).to_str().unwrap(),
        ]);
        (
            std::fs::read_to_string(dir.path().join(out).join("tasks.jsonl")).unwrap(),
            std::fs::read_to_string(dir.path().join(out).join("manifest.json")).unwrap(),
        )
    };
    let (tasks, manifest) = run("a");
    assert_eq!(tasks.lines().count(), 10);
    let manifest: Vec<Value> = serde_json::from_str(&manifest).unwrap();
    assert_eq!(manifest.len(), 6);
    assert_eq!(manifest[0]["annotator_id"], "A01");
    assert_eq!(manifest[0]["task_ids"], manifest[1]["task_ids"]);
    assert_eq!(run("b"), run("a"));
}

#[test]
fn pipeline_leaves_inputs_untouched() {
    let fx = fixtures();
    let snapshot = || {
        let mut files = BTreeMap::new();
        let mut stack = vec![fx.clone()];
        while let Some(dir) = stack.pop() {
            for e in std::fs::read_dir(dir).unwrap() {
                let p = e.unwrap().path();
                if p.is_dir() {
                    stack.push(p);
                } else {
                    files.insert(p.clone(), std::fs::read(&p).unwrap());
                }
            }
        }
        files
    };
    let before = snapshot();
    let work = tempfile::tempdir().unwrap();
    common::run_pipeline(work.path());
    assert_eq!(snapshot(), before);
}
