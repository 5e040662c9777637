//! Thread-corpus ingestion, dictionary segmentation and TF-IDF term mining.
//!
//! A document is a forum thread: its topic followed by every reply, one per
//! line. Text is segmented by forward maximum matching against a POS-tagged
//! dictionary, then every term is scored with
//!
//! ```text
//! tf(t, d)  = count(t in d) / terms(d)
//! idf(t)    = ln(N / (1 + df(t)))
//! score(t)  = Σ_d tf(t, d) · idf(t)      (or max_d, see `Aggregate`)
//! ```
//!
//! The `1 + df` smoothing makes `idf` zero for a term found in all but one
//! document and negative for a term found everywhere. Such terms are kept.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::read_to_string;

/// Number of ranked terms kept by default.
pub const DEFAULT_TOP_K: usize = 20_000;

/// POS tags retained by default: adjective-, verb- and idiom-like classes.
pub const DEFAULT_ALLOWED_POS: [&str; 14] = [
    "a", "ad", "ag", "an", "b", "g", "h", "i", "j", "l", "q", "v", "vn", "z",
];

/// Tag given to characters and runs that are not in the dictionary.
pub const FALLBACK_POS: &str = "x";

/// The ICTCLAS-style tag alphabet accepted in dictionary files.
pub const POS_ALPHABET: [&str; 56] = [
    "a", "ad", "ag", "an", "b", "bg", "c", "d", "df", "dg", "e", "eng", "f", "g", "h", "i", "j",
    "k", "l", "m", "mg", "mq", "n", "ng", "nr", "nrfg", "nrt", "ns", "nt", "nz", "o", "p", "q",
    "r", "rg", "rr", "rz", "s", "t", "tg", "u", "ud", "ug", "uj", "ul", "uv", "uz", "v", "vd",
    "vg", "vi", "vn", "vq", "y", "z", "zg",
];

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct PosTag(String);

impl PosTag {
    pub fn fallback() -> Self {
        PosTag(FALLBACK_POS.to_string())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl FromStr for PosTag {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == FALLBACK_POS || POS_ALPHABET.contains(&s) {
            Ok(PosTag(s.to_string()))
        } else {
            Err(Error::Invalid(format!("unknown POS tag `{s}`")))
        }
    }
}

impl TryFrom<String> for PosTag {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<PosTag> for String {
    fn from(tag: PosTag) -> String {
        tag.0
    }
}

impl fmt::Display for PosTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

pub fn default_allowed_pos() -> BTreeSet<PosTag> {
    DEFAULT_ALLOWED_POS
        .iter()
        .map(|s| PosTag(s.to_string()))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    pub id: String,
    pub text: String,
}

impl Document {
    /// Topic followed by each reply, newline separated.
    pub fn from_thread(id: impl Into<String>, topic: &str, replies: &[String]) -> Self {
        let mut text = String::from(topic);
        for reply in replies {
            text.push('\n');
            text.push_str(reply);
        }
        Document { id: id.into(), text }
    }
}

/// A pre-crawled thread as stored on disk.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ThreadRecord {
    pub id: String,
    pub topic: String,
    pub replies: Vec<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Corpus {
    documents: Vec<Document>,
}

impl Corpus {
    pub fn new(documents: Vec<Document>) -> Result<Self> {
        let mut seen = HashSet::new();
        for doc in &documents {
            if !seen.insert(doc.id.as_str()) {
                return Err(Error::DuplicateId(doc.id.clone()));
            }
        }
        Ok(Corpus { documents })
    }

    pub fn documents(&self) -> &[Document] {
        &self.documents
    }

    pub fn len(&self) -> usize {
        self.documents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.documents.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&Document> {
        self.documents.iter().find(|d| d.id == id)
    }
}

/// Reads newline-delimited thread records `{"id", "topic", "replies"}`.
pub fn load_corpus(path: &Path) -> Result<Corpus> {
    let text = read_to_string(path)?;
    parse_corpus(path, &text)
}

pub fn parse_corpus(path: &Path, text: &str) -> Result<Corpus> {
    let mut documents = Vec::new();
    let mut seen = HashSet::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let record: ThreadRecord =
            serde_json::from_str(line).map_err(|e| Error::parse(path, i + 1, e.to_string()))?;
        if !seen.insert(record.id.clone()) {
            return Err(Error::parse(
                path,
                i + 1,
                format!("duplicate document id `{}`", record.id),
            ));
        }
        documents.push(Document::from_thread(record.id, &record.topic, &record.replies));
    }
    if documents.is_empty() {
        tracing::warn!(path = %path.display(), "corpus file contains no thread records");
    }
    Ok(Corpus { documents })
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Token {
    pub surface: String,
    pub pos: PosTag,
}

impl Token {
    pub fn is_whitespace(&self) -> bool {
        self.surface.chars().all(char::is_whitespace)
    }
}

#[derive(Debug, Clone, Default)]
pub struct SegmenterDictionary {
    entries: HashMap<String, PosTag>,
    max_chars: usize,
}

impl SegmenterDictionary {
    pub fn new<I, S>(entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = (S, PosTag)>,
        S: Into<String>,
    {
        let mut dict = SegmenterDictionary::default();
        for (term, pos) in entries {
            dict.insert(term.into(), pos)?;
        }
        Ok(dict)
    }

    fn insert(&mut self, term: String, pos: PosTag) -> Result<()> {
        if term.is_empty() {
            return Err(Error::Invalid("empty dictionary term".into()));
        }
        self.max_chars = self.max_chars.max(term.chars().count());
        self.entries.insert(term, pos);
        Ok(())
    }

    /// Reads a UTF-8 `term<TAB>pos` file. Later rows override earlier ones.
    pub fn load(path: &Path) -> Result<Self> {
        let text = read_to_string(path)?;
        Self::parse(path, &text)
    }

    pub fn parse(path: &Path, text: &str) -> Result<Self> {
        let mut dict = SegmenterDictionary::default();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let mut cols = line.split('\t');
            let (Some(term), Some(pos), None) = (cols.next(), cols.next(), cols.next()) else {
                return Err(Error::parse(path, i + 1, "expected `term<TAB>pos`"));
            };
            let pos: PosTag = pos
                .trim()
                .parse()
                .map_err(|e: Error| Error::parse(path, i + 1, e.to_string()))?;
            dict.insert(term.to_string(), pos)
                .map_err(|e| Error::parse(path, i + 1, e.to_string()))?;
        }
        Ok(dict)
    }

    pub fn get(&self, term: &str) -> Option<&PosTag> {
        self.entries.get(term)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn max_term_chars(&self) -> usize {
        self.max_chars
    }

    /// Longest dictionary term starting at `chars[start]`, as a char count.
    fn longest_match(&self, text: &str, boundaries: &[usize], start: usize) -> Option<usize> {
        let available = boundaries.len() - 1 - start;
        let upper = self.max_chars.min(available);
        (1..=upper)
            .rev()
            .find(|&len| self.entries.contains_key(&text[boundaries[start]..boundaries[start + len]]))
    }
}

pub(crate) fn is_han(c: char) -> bool {
    matches!(c as u32,
        0x3007
        | 0x3400..=0x4DBF
        | 0x4E00..=0x9FFF
        | 0xF900..=0xFAFF
        | 0x20000..=0x2FA1F)
}

fn is_run_char(c: char) -> bool {
    c.is_alphanumeric() && !is_han(c)
}

/// Forward maximum matching segmentation.
///
/// Tokens concatenate back to `text`. Han text takes the longest dictionary
/// match at each position, falling back to a single `x` character.
/// Alphanumeric runs in other scripts and whitespace runs are emitted whole;
/// other symbols become single-character `x` tokens.
pub fn segment_text(text: &str, dict: &SegmenterDictionary) -> Vec<Token> {
    let boundaries: Vec<usize> = text
        .char_indices()
        .map(|(i, _)| i)
        .chain(std::iter::once(text.len()))
        .collect();
    let chars: Vec<char> = text.chars().collect();
    let mut tokens = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let run_len = if c.is_whitespace() {
            chars[i..].iter().take_while(|c| c.is_whitespace()).count()
        } else if is_run_char(c) {
            chars[i..].iter().take_while(|c| is_run_char(**c)).count()
        } else {
            0
        };
        let dict_len = if c.is_whitespace() {
            None
        } else {
            dict.longest_match(text, &boundaries, i)
        };
        let len = match dict_len {
            Some(d) if d >= run_len => d,
            _ if run_len > 0 => run_len,
            _ => 1,
        };
        let surface = &text[boundaries[i]..boundaries[i + len]];
        let pos = dict.get(surface).cloned().unwrap_or_else(PosTag::fallback);
        tokens.push(Token {
            surface: surface.to_string(),
            pos,
        });
        i += len;
    }
    tokens
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TfIdf {
    pub tf: f64,
    pub idf: f64,
    pub tfidf: f64,
}

/// Inverse document frequency with `1 + df` smoothing in the denominator.
pub fn idf(n_docs: usize, df: usize) -> f64 {
    (n_docs as f64 / (1.0 + df as f64)).ln()
}

/// A corpus segmented once, with per-document term counts and document frequencies.
#[derive(Debug, Clone)]
pub struct SegmentedCorpus {
    docs: Vec<SegmentedDoc>,
    df: HashMap<String, usize>,
    pos: HashMap<String, PosTag>,
}

#[derive(Debug, Clone)]
struct SegmentedDoc {
    id: String,
    // first-occurrence order keeps iteration deterministic
    counts: Vec<(String, usize)>,
    total: usize,
}

impl SegmentedCorpus {
    pub fn new(corpus: &Corpus, dict: &SegmenterDictionary) -> Self {
        let segmented: Vec<(SegmentedDoc, Vec<Token>)> = corpus
            .documents()
            .par_iter()
            .map(|doc| {
                let tokens: Vec<Token> = segment_text(&doc.text, dict)
                    .into_iter()
                    .filter(|t| !t.is_whitespace())
                    .collect();
                let mut index: HashMap<&str, usize> = HashMap::new();
                let mut counts: Vec<(String, usize)> = Vec::new();
                for t in &tokens {
                    match index.get(t.surface.as_str()) {
                        Some(&k) => counts[k].1 += 1,
                        None => {
                            index.insert(&t.surface, counts.len());
                            counts.push((t.surface.clone(), 1));
                        }
                    }
                }
                let total = tokens.len();
                let doc = SegmentedDoc {
                    id: doc.id.clone(),
                    counts,
                    total,
                };
                (doc, tokens)
            })
            .collect();

        let mut df: HashMap<String, usize> = HashMap::new();
        let mut pos: HashMap<String, PosTag> = HashMap::new();
        let mut docs = Vec::with_capacity(segmented.len());
        for (doc, tokens) in segmented {
            for (term, _) in &doc.counts {
                *df.entry(term.clone()).or_default() += 1;
            }
            for t in tokens {
                pos.entry(t.surface).or_insert(t.pos);
            }
            docs.push(doc);
        }
        SegmentedCorpus { docs, df, pos }
    }

    pub fn n_docs(&self) -> usize {
        self.docs.len()
    }

    pub fn df(&self, term: &str) -> usize {
        self.df.get(term).copied().unwrap_or(0)
    }

    pub fn tfidf(&self, term: &str, doc_id: &str) -> Result<TfIdf> {
        if self.docs.is_empty() {
            return Err(Error::Invalid("empty corpus".into()));
        }
        let doc = self
            .docs
            .iter()
            .find(|d| d.id == doc_id)
            .ok_or_else(|| Error::Invalid(format!("document `{doc_id}` is not in the corpus")))?;
        if doc.total == 0 {
            return Err(Error::Invalid(format!(
                "document `{doc_id}` has no terms; term frequency is undefined"
            )));
        }
        let count = doc
            .counts
            .iter()
            .find(|(t, _)| t == term)
            .map_or(0, |(_, c)| *c);
        let tf = count as f64 / doc.total as f64;
        let idf = idf(self.docs.len(), self.df(term));
        Ok(TfIdf {
            tf,
            idf,
            tfidf: tf * idf,
        })
    }
}

/// TF-IDF of `term` in `doc`, segmenting the corpus with `dict`.
pub fn tfidf(term: &str, doc: &Document, corpus: &Corpus, dict: &SegmenterDictionary) -> Result<TfIdf> {
    SegmentedCorpus::new(corpus, dict).tfidf(term, &doc.id)
}

/// How per-document scores are folded into one corpus-level score.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Aggregate {
    #[default]
    Sum,
    Max,
}

impl FromStr for Aggregate {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sum" => Ok(Aggregate::Sum),
            "max" => Ok(Aggregate::Max),
            other => Err(Error::Invalid(format!("unknown aggregate `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MineConfig {
    pub allowed_pos: BTreeSet<PosTag>,
    pub top_k: usize,
    pub aggregate: Aggregate,
}

impl Default for MineConfig {
    fn default() -> Self {
        MineConfig {
            allowed_pos: default_allowed_pos(),
            top_k: DEFAULT_TOP_K,
            aggregate: Aggregate::Sum,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TermScore {
    pub term: String,
    pub pos: PosTag,
    pub tf_sum: f64,
    pub idf: f64,
    pub tfidf: f64,
}

/// Ranks every term of the corpus and keeps the `top_k` best with an allowed tag.
///
/// Ordering is by score descending, then by term code points ascending.
pub fn mine_terms(
    corpus: &Corpus,
    dict: &SegmenterDictionary,
    config: &MineConfig,
) -> Result<Vec<TermScore>> {
    if corpus.is_empty() {
        return Err(Error::Invalid("cannot mine terms from an empty corpus".into()));
    }
    if config.top_k == 0 {
        return Err(Error::Invalid("top_k must be at least 1".into()));
    }
    let segmented = SegmentedCorpus::new(corpus, dict);
    Ok(rank_segmented(&segmented, config))
}

fn rank_segmented(segmented: &SegmentedCorpus, config: &MineConfig) -> Vec<TermScore> {
    let n = segmented.n_docs();
    let mut scores: HashMap<&str, (f64, f64)> = HashMap::new();
    for doc in &segmented.docs {
        if doc.total == 0 {
            continue;
        }
        for (term, count) in &doc.counts {
            let tf = *count as f64 / doc.total as f64;
            let score = tf * idf(n, segmented.df(term));
            match scores.get_mut(term.as_str()) {
                Some((tf_sum, agg)) => {
                    *tf_sum += tf;
                    *agg = match config.aggregate {
                        Aggregate::Sum => *agg + score,
                        Aggregate::Max => agg.max(score),
                    };
                }
                None => {
                    scores.insert(term, (tf, score));
                }
            }
        }
    }

    let mut ranked: Vec<TermScore> = scores
        .into_iter()
        .filter_map(|(term, (tf_sum, score))| {
            let pos = segmented.pos.get(term)?;
            config.allowed_pos.contains(pos).then(|| TermScore {
                term: term.to_string(),
                pos: pos.clone(),
                tf_sum,
                idf: idf(n, segmented.df(term)),
                tfidf: score,
            })
        })
        .collect();
    ranked.sort_by(|a, b| b.tfidf.total_cmp(&a.tfidf).then_with(|| a.term.cmp(&b.term)));
    ranked.truncate(config.top_k);
    ranked
}

/// `term<TAB>pos<TAB>tfidf` rows, one per ranked term.
pub fn format_term_scores(scores: &[TermScore]) -> String {
    let mut out = String::new();
    for s in scores {
        out.push_str(&format!("{}\t{}\t{:.6}\n", s.term, s.pos, s.tfidf));
    }
    out
}
