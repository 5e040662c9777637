//! Helpers shared by the integration test targets: independent oracles,
//! fixture paths, and a driver for the command-line pipeline.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

pub fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures")
}

pub fn golden_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden")
}

pub fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_cantolex")
}

pub fn cantolex<I, S>(args: I) -> Output
where
    I: IntoIterator<Item = S>,
    S: AsRef<std::ffi::OsStr>,
{
    Command::new(bin())
        .args(args)
        .env("CANTOLEX_LOG", "warn")
        .output()
        .expect("spawn cantolex")
}

/// Runs the binary and panics with its stderr on failure.
pub fn cantolex_ok<I, S>(args: I) -> Output
where
    I: IntoIterator<Item = S>,
    S: AsRef<std::ffi::OsStr>,
{
    let out = cantolex(args);
    assert!(
        out.status.success(),
        "cantolex failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

// ---- TF-IDF -------------------------------------------------------------

pub struct OracleScore {
    pub term: String,
    pub pos: String,
    pub score: f64,
}

/// Brute-force ranking over pre-tokenized documents (whitespace separated).
///
/// Documents are split on whitespace only, so callers must keep every
/// multi-character Han token in `dict` and avoid punctuation.
pub fn tfidf_oracle(
    docs: &[&str],
    dict: &HashMap<&str, &str>,
    allowed: &BTreeSet<&str>,
    top_k: usize,
) -> Vec<OracleScore> {
    let tokenized: Vec<Vec<&str>> = docs.iter().map(|d| d.split_whitespace().collect()).collect();
    let n = docs.len() as f64;
    let vocab: BTreeSet<&str> = tokenized.iter().flatten().copied().collect();
    let mut out = Vec::new();
    for term in vocab {
        let df = tokenized.iter().filter(|t| t.contains(&term)).count() as f64;
        let idf = (n / (1.0 + df)).ln();
        let mut score = 0.0;
        for toks in &tokenized {
            let count = toks.iter().filter(|t| **t == term).count();
            if count > 0 {
                score += (count as f64 / toks.len() as f64) * idf;
            }
        }
        let pos = dict.get(term).copied().unwrap_or("x");
        if allowed.contains(pos) {
            out.push(OracleScore {
                term: term.to_string(),
                pos: pos.to_string(),
                score,
            });
        }
    }
    out.sort_by(|a, b| b.score.partial_cmp(&a.score).unwrap().then(a.term.cmp(&b.term)));
    out.truncate(top_k);
    out
}

// ---- Krippendorff's alpha -----------------------------------------------

/// Nominal alpha by literally enumerating ordered pairs of values within units.
pub fn alpha_oracle(rows: &[Vec<Option<String>>]) -> Option<f64> {
    let mut o: BTreeMap<(String, String), f64> = BTreeMap::new();
    for row in rows {
        let vals: Vec<&String> = row.iter().flatten().collect();
        let m = vals.len();
        if m < 2 {
            continue;
        }
        for i in 0..m {
            for j in 0..m {
                if i != j {
                    *o.entry((vals[i].clone(), vals[j].clone())).or_default() += 1.0 / (m as f64 - 1.0);
                }
            }
        }
    }
    let mut n_c: BTreeMap<String, f64> = BTreeMap::new();
    for ((c, _), v) in &o {
        *n_c.entry(c.clone()).or_default() += v;
    }
    let n: f64 = n_c.values().sum();
    let disagree: f64 = o.iter().filter(|((c, k), _)| c != k).map(|(_, v)| v).sum();
    let mut expected = 0.0;
    for (c, a) in &n_c {
        for (k, b) in &n_c {
            if c != k {
                expected += a * b;
            }
        }
    }
    if n == 0.0 || expected == 0.0 {
        return None;
    }
    Some(1.0 - (n - 1.0) * disagree / expected)
}

// ---- Cohen's kappa ------------------------------------------------------

/// Kappa straight from a square confusion table.
pub fn kappa_oracle(table: &[Vec<u64>]) -> f64 {
    let n: u64 = table.iter().flatten().sum();
    let n = n as f64;
    let k = table.len();
    let p_o: f64 = (0..k).map(|i| table[i][i] as f64).sum::<f64>() / n;
    let p_e: f64 = (0..k)
        .map(|i| {
            let row: u64 = table[i].iter().sum();
            let col: u64 = table.iter().map(|r| r[i]).sum();
            (row as f64 / n) * (col as f64 / n)
        })
        .sum();
    (p_o - p_e) / (1.0 - p_e)
}

/// Expands a confusion table into two aligned label sequences.
pub fn table_to_sequences(table: &[Vec<u64>]) -> (Vec<usize>, Vec<usize>) {
    let mut a = Vec::new();
    let mut b = Vec::new();
    for (i, row) in table.iter().enumerate() {
        for (j, &count) in row.iter().enumerate() {
            for _ in 0..count {
                a.push(i);
                b.push(j);
            }
        }
    }
    (a, b)
}

// ---- pipeline -----------------------------------------------------------

/// Files the golden pipeline writes, relative to its work directory.
pub const PIPELINE_OUTPUTS: &[&str] = &[
    "terms.tsv",
    "llm_emotion.jsonl",
    "llm_emotion_log.json",
    "llm_translation.jsonl",
    "emotion/tasks.jsonl",
    "emotion/manifest.json",
    "translation/tasks.jsonl",
    "translation/manifest.json",
    "annotated.tsv",
    "dropped.txt",
    "tmap.json",
    "lexicons/cantolex-yue.tsv",
    "stats.txt",
    "report.txt",
    "report.json",
];

/// mine-terms → llm-annotate → make-tasks → aggregate → build-lexicon → evaluate
/// over the bundled fixtures, writing into `work`.
pub fn run_pipeline(work: &Path) {
    let fx = fixtures();
    let f = |p: &str| fx.join(p).to_string_lossy().into_owned();
    let o = |p: &str| work.join(p).to_string_lossy().into_owned();
    std::fs::create_dir_all(work.join("lexicons")).unwrap();

    cantolex_ok([
        "mine-terms", "--corpus", &f("corpus/threads.jsonl"), "--dict", &f("corpus/dict.tsv"),
        "--top-k", "30", "--out", &o("terms.tsv"),
    ]);
    cantolex_ok([
        "llm-annotate", "--kind", "emotion", "--words", &o("terms.tsv"),
        "--replay", &f("llm/emotion_replay.json"), "--batch-cap", "10",
        "--out", &o("llm_emotion.jsonl"), "--log", &o("llm_emotion_log.json"),
    ]);
    cantolex_ok([
        "llm-annotate", "--kind", "translation", "--words", &f("annotation/translation_words.tsv"),
        "--replay", &f("llm/translation_replay.json"), "--batch-cap", "10",
        "--out", &o("llm_translation.jsonl"),
    ]);
    cantolex_ok([
        "make-tasks", "--kind", "emotion", "--words", &o("terms.tsv"), "--portions", "2",
        "--groups", "A,B,C", "--seed", "7", "--out-dir", &o("emotion"),
    ]);
    cantolex_ok([
        "make-tasks", "--kind", "translation", "--words", &f("annotation/translation_words.tsv"),
        "--portions", "2", "--groups", "A,B,C", "--seed", "7", "--out-dir", &o("translation"),
    ]);
    cantolex_ok([
        "aggregate", "--kind", "emotion", "--tasks", &o("emotion/tasks.jsonl"),
        "--records", &f("annotation/human_emotion.jsonl"), "--records", &o("llm_emotion.jsonl"),
        "--raters", "4", "--out", &o("annotated.tsv"), "--dropped", &o("dropped.txt"),
    ]);
    cantolex_ok([
        "aggregate", "--kind", "translation", "--tasks", &o("translation/tasks.jsonl"),
        "--records", &f("annotation/human_translation.jsonl"), "--records", &o("llm_translation.jsonl"),
        "--out", &o("tmap.json"),
    ]);
    cantolex_ok([
        "build-lexicon", "--base", &f("lexicons/emolex-en.tsv"), "--tmap", &o("tmap.json"),
        "--annotated", &o("annotated.tsv"), "--drop-source-terms", "--out", &o("lexicons/cantolex-yue.tsv"),
    ]);
    cantolex_ok([
        "lexicon-stats", "--lexicon", &o("lexicons/cantolex-yue.tsv"), "--base", &f("lexicons/emolex-en.tsv"),
        "--tmap", &o("tmap.json"), "--out", &o("stats.txt"),
    ]);

    for name in ["emolex-en.tsv", "emolex-zh.tsv", "emolex-yue.tsv"] {
        std::fs::copy(fx.join("lexicons").join(name), work.join("lexicons").join(name)).unwrap();
    }
    let catalog = r#"{
  "lexicons": [
    {"name": "emolex-en", "file": "emolex-en.tsv", "language": "en", "label": "EmoLex (en)"},
    {"name": "emolex-zh", "file": "emolex-zh.tsv", "language": "zh", "label": "EmoLex (zh)"},
    {"name": "emolex-yue", "file": "emolex-yue.tsv", "language": "yue", "label": "EmoLex translated (yue)"},
    {"name": "cantolex-yue", "file": "cantolex-yue.tsv", "language": "yue", "label": "Ours (yue)"}
  ],
  "reference": "EmoLex translated (yue)"
}
"#;
    std::fs::write(work.join("lexicons/lexicons.json"), catalog).unwrap();
    cantolex_ok([
        "evaluate", "--datasets", &f("datasets"), "--lexicons", &o("lexicons"), "--baseline", "emolex-en",
        "--out", &o("report.txt"), "--json", &o("report.json"),
    ]);
}

// ---- oracle corpora -----------------------------------------------------

pub struct OracleCorpus {
    pub name: &'static str,
    pub docs: Vec<String>,
    pub dict: Vec<(&'static str, &'static str)>,
    pub allowed: Vec<&'static str>,
    pub top_k: usize,
}

/// Five corpora for checking the term miner against the brute-force oracle.
///
/// Tokens are space separated so the oracle can tokenize without a segmenter.
pub fn oracle_corpora() -> Vec<OracleCorpus> {
    use rand::{Rng, SeedableRng};
    let everything: Vec<&'static str> = cantolex::corpus::POS_ALPHABET
        .iter()
        .copied()
        .chain(["x"])
        .collect();
    let small_dict = vec![
        ("開心", "a"), ("嬲", "a"), ("食飯", "v"), ("返工", "v"), ("睇", "v"),
        ("我", "r"), ("今日", "t"), ("好正", "a"), ("頂唔順", "l"),
    ];

    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
    let vocab: Vec<&str> = small_dict
        .iter()
        .map(|(t, _)| *t)
        .chain(["lol", "OK", "佢", "啦", "2024"])
        .collect();
    let random_docs: Vec<String> = (0..40)
        .map(|_| {
            let len = rng.random_range(1..12);
            (0..len)
                .map(|_| vocab[rng.random_range(0..vocab.len())])
                .collect::<Vec<_>>()
                .join(" ")
        })
        .collect();

    vec![
        OracleCorpus {
            name: "simple",
            docs: vec![
                "開心 食飯 開心".into(),
                "嬲 返工".into(),
                "開心 嬲 嬲 睇".into(),
                "今日 食飯 睇 睇".into(),
                "返工 頂唔順".into(),
            ],
            dict: small_dict.clone(),
            allowed: cantolex::corpus::DEFAULT_ALLOWED_POS.to_vec(),
            top_k: 20_000,
        },
        OracleCorpus {
            name: "mixed-script",
            docs: vec![
                "lol 開心 OK".into(),
                "OK OK 好正".into(),
                "2024 lol lol 嬲".into(),
                "佢 開心 啦".into(),
            ],
            dict: small_dict.clone(),
            allowed: everything.clone(),
            top_k: 20_000,
        },
        OracleCorpus {
            name: "ubiquitous-term",
            docs: vec![
                "我 開心".into(),
                "我 我 嬲".into(),
                "我 食飯 食飯 開心".into(),
                "我 返工".into(),
            ],
            dict: small_dict.clone(),
            allowed: everything.clone(),
            top_k: 20_000,
        },
        OracleCorpus {
            name: "ties",
            docs: vec![
                "開心 嬲".into(),
                "食飯 睇".into(),
                "返工 好正".into(),
                "頂唔順 今日".into(),
                "".into(),
            ],
            dict: small_dict.clone(),
            allowed: everything,
            top_k: 5,
        },
        OracleCorpus {
            name: "random",
            docs: random_docs,
            dict: small_dict,
            allowed: cantolex::corpus::DEFAULT_ALLOWED_POS.to_vec(),
            top_k: 4,
        },
    ]
}

/// Ranks `c` with the library and with the oracle; `Err` describes the first mismatch.
pub fn compare_miner_with_oracle(c: &OracleCorpus) -> Result<usize, String> {
    use cantolex::corpus::{mine_terms, Corpus, Document, MineConfig, PosTag, SegmenterDictionary};
    let corpus = Corpus::new(
        c.docs
            .iter()
            .enumerate()
            .map(|(i, d)| Document { id: format!("d{i}"), text: d.clone() })
            .collect(),
    )
    .unwrap();
    let dict = SegmenterDictionary::new(c.dict.iter().map(|(t, p)| (*t, p.parse::<PosTag>().unwrap()))).unwrap();
    let config = MineConfig {
        allowed_pos: c.allowed.iter().map(|p| p.parse().unwrap()).collect(),
        top_k: c.top_k,
        ..MineConfig::default()
    };
    let got = mine_terms(&corpus, &dict, &config).map_err(|e| e.to_string())?;
    let docs: Vec<&str> = c.docs.iter().map(String::as_str).collect();
    let dict_map: HashMap<&str, &str> = c.dict.iter().copied().collect();
    let allowed: BTreeSet<&str> = c.allowed.iter().copied().collect();
    let want = tfidf_oracle(&docs, &dict_map, &allowed, c.top_k);
    if got.len() != want.len() {
        return Err(format!("{}: {} terms, oracle has {}", c.name, got.len(), want.len()));
    }
    for (i, (g, w)) in got.iter().zip(&want).enumerate() {
        if g.term != w.term || g.pos.as_str() != w.pos || (g.tfidf - w.score).abs() > 1e-12 {
            return Err(format!(
                "{}: rank {i}: got {} {} {}, oracle {} {} {}",
                c.name, g.term, g.pos, g.tfidf, w.term, w.pos, w.score
            ));
        }
    }
    Ok(got.len())
}
