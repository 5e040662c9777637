//! Keyword-matching emotion extraction with a lexicon.

use std::collections::{BTreeMap, HashMap};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::emotion::{EmotionDimension, EmotionSet};
use crate::error::Error;
use crate::lexicon::Lexicon;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MatchMode {
    /// Whitespace tokens, edge punctuation stripped, case-folded, exact lookup.
    Token,
    /// Longest lexicon term at each position, non-overlapping, for unspaced scripts.
    Substring,
}

impl FromStr for MatchMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        match s {
            "token" => Ok(MatchMode::Token),
            "substring" => Ok(MatchMode::Substring),
            other => Err(Error::Invalid(format!("unknown match mode `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatchedTerm {
    pub term: String,
    pub labels: EmotionSet,
    /// Byte span in the input text.
    pub start: usize,
    pub end: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EmotionProfile {
    pub presence: BTreeMap<EmotionDimension, bool>,
    pub counts: BTreeMap<EmotionDimension, u32>,
    pub matched_terms: Vec<MatchedTerm>,
}

impl EmotionProfile {
    fn from_matches(matched_terms: Vec<MatchedTerm>) -> Self {
        let mut counts = [0u32; 10];
        for m in &matched_terms {
            for d in m.labels.iter() {
                counts[d.index()] += 1;
            }
        }
        EmotionProfile {
            presence: EmotionDimension::ALL
                .iter()
                .map(|d| (*d, counts[d.index()] > 0))
                .collect(),
            counts: EmotionDimension::ALL
                .iter()
                .map(|d| (*d, counts[d.index()]))
                .collect(),
            matched_terms,
        }
    }

    pub fn present(&self) -> EmotionSet {
        self.presence
            .iter()
            .filter(|(_, p)| **p)
            .map(|(d, _)| *d)
            .collect()
    }

    pub fn count(&self, dim: EmotionDimension) -> u32 {
        self.counts.get(&dim).copied().unwrap_or(0)
    }
}

#[derive(Debug, Default, Clone)]
struct TrieNode {
    children: HashMap<char, usize>,
    labels: Option<EmotionSet>,
}

/// Character prefix tree over lexicon terms.
#[derive(Debug, Clone)]
struct Trie {
    nodes: Vec<TrieNode>,
}

impl Trie {
    fn new() -> Self {
        Trie {
            nodes: vec![TrieNode::default()],
        }
    }

    fn insert(&mut self, term: &str, labels: EmotionSet) {
        let mut node = 0;
        for c in term.chars() {
            node = match self.nodes[node].children.get(&c) {
                Some(&next) => next,
                None => {
                    self.nodes.push(TrieNode::default());
                    let next = self.nodes.len() - 1;
                    self.nodes[node].children.insert(c, next);
                    next
                }
            };
        }
        let slot = &mut self.nodes[node].labels;
        *slot = Some(slot.unwrap_or_default().union(labels));
    }

    /// Byte length and labels of the longest term that prefixes `text`.
    fn longest_prefix(&self, text: &str) -> Option<(usize, EmotionSet)> {
        let mut node = 0;
        let mut best = None;
        for (i, c) in text.char_indices() {
            match self.nodes[node].children.get(&c) {
                Some(&next) => node = next,
                None => break,
            }
            if let Some(labels) = self.nodes[node].labels {
                best = Some((i + c.len_utf8(), labels));
            }
        }
        best
    }
}

/// Matching structures built once per lexicon; shareable across threads.
#[derive(Debug, Clone)]
pub struct Extractor {
    trie: Trie,
    folded: HashMap<String, EmotionSet>,
}

impl Extractor {
    pub fn new(lex: &Lexicon) -> Self {
        let mut trie = Trie::new();
        let mut folded: HashMap<String, EmotionSet> = HashMap::new();
        for entry in lex.entries() {
            trie.insert(&entry.term, entry.labels);
            let key = entry.term.to_lowercase();
            let slot = folded.entry(key).or_default();
            *slot = slot.union(entry.labels);
        }
        Extractor { trie, folded }
    }

    pub fn extract(&self, text: &str, mode: MatchMode) -> EmotionProfile {
        let matches = match mode {
            MatchMode::Token => self.match_tokens(text),
            MatchMode::Substring => self.match_substrings(text),
        };
        EmotionProfile::from_matches(matches)
    }

    fn match_tokens(&self, text: &str) -> Vec<MatchedTerm> {
        let mut out = Vec::new();
        for raw in text.split_whitespace() {
            let start = raw.as_ptr() as usize - text.as_ptr() as usize;
            let trimmed = raw.trim_matches(|c: char| !c.is_alphanumeric());
            if trimmed.is_empty() {
                continue;
            }
            let token = trimmed.to_lowercase();
            if let Some(labels) = self.folded.get(&token) {
                let lead = raw.len() - raw.trim_start_matches(|c: char| !c.is_alphanumeric()).len();
                out.push(MatchedTerm {
                    term: token,
                    labels: *labels,
                    start: start + lead,
                    end: start + lead + trimmed.len(),
                });
            }
        }
        out
    }

    fn match_substrings(&self, text: &str) -> Vec<MatchedTerm> {
        let mut out = Vec::new();
        let mut pos = 0;
        while pos < text.len() {
            match self.trie.longest_prefix(&text[pos..]) {
                Some((len, labels)) => {
                    out.push(MatchedTerm {
                        term: text[pos..pos + len].to_string(),
                        labels,
                        start: pos,
                        end: pos + len,
                    });
                    pos += len;
                }
                None => {
                    pos += text[pos..].chars().next().map_or(1, char::len_utf8);
                }
            }
        }
        out
    }
}

pub fn extract(text: &str, lex: &Lexicon, mode: MatchMode) -> EmotionProfile {
    Extractor::new(lex).extract(text, mode)
}

/// A document to extract from, as read by the batch mode.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TextDocument {
    pub id: String,
    pub text: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DocumentProfile {
    pub id: String,
    #[serde(flatten)]
    pub profile: EmotionProfile,
}

#[cfg(test)]
mod tests {
    use super::*;
    use EmotionDimension::*;

    fn lex(entries: &[(&str, &[EmotionDimension])]) -> Lexicon {
        let mut l = Lexicon::new("t");
        for (t, d) in entries {
            l.add(t, d.iter().copied().collect(), &[]);
        }
        l
    }

    #[test]
    fn substring_mode_on_han_text() {
        let l = lex(&[("開心", &[Joy, Positive])]);
        let p = extract("好開心", &l, MatchMode::Substring);
        assert_eq!(p.present(), EmotionSet::from([Joy, Positive]));
        assert_eq!(p.count(Joy), 1);
        assert_eq!(p.count(Positive), 1);
        assert_eq!(p.matched_terms[0].start, "好".len());
    }

    #[test]
    fn token_mode_folds_and_strips() {
        let l = lex(&[("awful", &[Negative, Disgust])]);
        let p = extract("Awful, awful food", &l, MatchMode::Token);
        assert_eq!(p.count(Negative), 2);
        assert_eq!(p.count(Disgust), 2);
        assert_eq!(p.count(Joy), 0);
        assert_eq!(&"Awful, awful food"[p.matched_terms[0].start..p.matched_terms[0].end], "Awful");
    }

    #[test]
    fn no_hits_is_all_false() {
        let l = lex(&[("開心", &[Joy])]);
        let p = extract("今日落雨", &l, MatchMode::Substring);
        assert!(p.presence.values().all(|v| !v));
        assert!(p.counts.values().all(|c| *c == 0));
        assert_eq!(p.presence.len(), 10);
    }

    #[test]
    fn longest_term_wins_without_double_counting() {
        let l = lex(&[("開心", &[Joy]), ("心", &[Sadness]), ("好開心", &[Positive])]);
        let p = extract("好開心", &l, MatchMode::Substring);
        assert_eq!(p.matched_terms.len(), 1);
        assert_eq!(p.present(), EmotionSet::from([Positive]));
    }

    #[test]
    fn greedy_matching_is_not_lexicon_monotone() {
        // Adding "ab" hides the "bc" match that the smaller lexicon finds.
        let small = lex(&[("bc", &[Joy])]);
        let large = lex(&[("bc", &[Joy]), ("ab", &[Fear])]);
        assert_eq!(extract("abc", &small, MatchMode::Substring).count(Joy), 1);
        assert_eq!(extract("abc", &large, MatchMode::Substring).count(Joy), 0);
    }
}
