//! Emotion lexicons in the NRC word-level TSV layout, expression merging and
//! summary statistics.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::emotion::{EmotionDimension, EmotionSet};
use crate::error::{Error, Result};
use crate::io::{read_to_string, write_atomic};

/// Where an entry or an expression came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    NrcTranslated,
    Llm,
    Human,
    Merged,
}

impl Provenance {
    pub fn name(self) -> &'static str {
        match self {
            Provenance::NrcTranslated => "nrc-translated",
            Provenance::Llm => "llm",
            Provenance::Human => "human",
            Provenance::Merged => "merged",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LexiconEntry {
    pub term: String,
    pub labels: EmotionSet,
    #[serde(default)]
    pub provenance: BTreeSet<Provenance>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Lexicon {
    pub name: String,
    entries: BTreeMap<String, LexiconEntry>,
}

impl Lexicon {
    pub fn new(name: impl Into<String>) -> Self {
        Lexicon {
            name: name.into(),
            entries: BTreeMap::new(),
        }
    }

    /// Adds labels to `term`, creating the entry if needed. Labels are unioned.
    pub fn add(&mut self, term: &str, labels: EmotionSet, provenance: &[Provenance]) {
        let entry = self
            .entries
            .entry(term.to_string())
            .or_insert_with(|| LexiconEntry {
                term: term.to_string(),
                labels: EmotionSet::empty(),
                provenance: BTreeSet::new(),
            });
        entry.labels = entry.labels.union(labels);
        entry.provenance.extend(provenance.iter().copied());
    }

    pub fn get(&self, term: &str) -> Option<&LexiconEntry> {
        self.entries.get(term)
    }

    pub fn contains(&self, term: &str) -> bool {
        self.entries.contains_key(term)
    }

    pub fn remove(&mut self, term: &str) -> Option<LexiconEntry> {
        self.entries.remove(term)
    }

    /// Entries in term code-point order.
    pub fn entries(&self) -> impl Iterator<Item = &LexiconEntry> {
        self.entries.values()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Same terms and labels; provenance and name are ignored.
    pub fn same_labels(&self, other: &Lexicon) -> bool {
        self.entries.len() == other.entries.len()
            && self
                .entries
                .iter()
                .zip(other.entries.iter())
                .all(|((ta, a), (tb, b))| ta == tb && a.labels == b.labels)
    }
}

/// Reads a `term<TAB>dimension<TAB>flag` file.
///
/// Provenance is not part of the format; parsed entries have none.
pub fn parse_lexicon(path: &Path) -> Result<Lexicon> {
    let text = read_to_string(path)?;
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    parse_lexicon_str(&name, path, &text)
}

pub fn parse_lexicon_str(name: &str, path: &Path, text: &str) -> Result<Lexicon> {
    let mut lex = Lexicon::new(name);
    for (i, line) in text.lines().enumerate() {
        let row = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        let [term, dim, flag] = cols[..] else {
            return Err(Error::parse(path, row, "expected `term<TAB>dimension<TAB>flag`"));
        };
        if term.is_empty() {
            return Err(Error::parse(path, row, "empty term"));
        }
        let dim: EmotionDimension = dim
            .trim()
            .parse()
            .map_err(|e: crate::emotion::UnknownDimension| Error::parse(path, row, e.to_string()))?;
        let labels = match flag.trim() {
            "1" => EmotionSet::from([dim]),
            "0" => EmotionSet::empty(),
            other => {
                return Err(Error::parse(
                    path,
                    row,
                    format!("flag must be 0 or 1, got `{other}`"),
                ))
            }
        };
        lex.add(term, labels, &[]);
    }
    Ok(lex)
}

/// Ten rows per term, dimensions in canonical order, terms in code-point order.
pub fn format_lexicon(lex: &Lexicon) -> String {
    let mut out = String::new();
    for entry in lex.entries() {
        for dim in EmotionDimension::ALL {
            let flag = u8::from(entry.labels.contains(dim));
            let _ = writeln!(out, "{}\t{}\t{}", entry.term, dim, flag);
        }
    }
    out
}

pub fn write_lexicon(lex: &Lexicon, path: &Path) -> Result<()> {
    write_atomic(path, format_lexicon(lex).as_bytes())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Expression {
    pub text: String,
    pub sources: BTreeSet<Provenance>,
}

/// Source word to ordered, de-duplicated target expressions.
///
/// The given translation comes first and carries `nrc-translated`; later
/// expressions are the ones annotators added.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TranslationMap {
    map: BTreeMap<String, Vec<Expression>>,
}

impl TranslationMap {
    pub fn new() -> Self {
        Self::default()
    }

    /// Appends `expression` for `source`, or records another contributor if it is already listed.
    pub fn add(&mut self, source: &str, expression: &str, source_kind: Provenance) -> Result<()> {
        let expression = expression.trim();
        if source.is_empty() || expression.is_empty() {
            return Err(Error::Invalid(format!(
                "empty source word or expression for `{source}`"
            )));
        }
        let list = self.map.entry(source.to_string()).or_default();
        match list.iter_mut().find(|e| e.text == expression) {
            Some(e) => {
                e.sources.insert(source_kind);
            }
            None => list.push(Expression {
                text: expression.to_string(),
                sources: BTreeSet::from([source_kind]),
            }),
        }
        Ok(())
    }

    pub fn get(&self, source: &str) -> Option<&[Expression]> {
        self.map.get(source).map(Vec::as_slice)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &[Expression])> {
        self.map.iter().map(|(k, v)| (k.as_str(), v.as_slice()))
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = read_to_string(path)?;
        let tmap: TranslationMap = serde_json::from_str(&text)
            .map_err(|e| Error::parse(path, e.line(), e.to_string()))?;
        tmap.validate()?;
        Ok(tmap)
    }

    fn validate(&self) -> Result<()> {
        for (source, exprs) in &self.map {
            let mut seen = BTreeSet::new();
            for e in exprs {
                if e.text.is_empty() {
                    return Err(Error::Invalid(format!("empty expression for `{source}`")));
                }
                if !seen.insert(e.text.as_str()) {
                    return Err(Error::Invalid(format!(
                        "duplicate expression `{}` for `{source}`",
                        e.text
                    )));
                }
            }
        }
        Ok(())
    }

    fn additional(exprs: &[Expression]) -> impl Iterator<Item = &Expression> {
        exprs
            .iter()
            .filter(|e| !e.sources.contains(&Provenance::NrcTranslated))
    }
}

/// Adds every target expression as an entry inheriting its source word's labels.
///
/// Existing entries are extended by label union and marked `merged`.
pub fn merge_expressions(base: &Lexicon, tmap: &TranslationMap) -> Result<Lexicon> {
    let mut out = base.clone();
    for (source, exprs) in tmap.iter() {
        let source_entry = base
            .get(source)
            .ok_or_else(|| Error::Invalid(format!("unknown source word `{source}`")))?;
        for expr in exprs {
            let provenance: Vec<Provenance> = expr.sources.iter().copied().collect();
            if out.contains(&expr.text) {
                out.add(&expr.text, source_entry.labels, &provenance);
                out.add(&expr.text, EmotionSet::empty(), &[Provenance::Merged]);
            } else {
                out.add(&expr.text, source_entry.labels, &provenance);
            }
        }
    }
    Ok(out)
}

/// Drops entries with no labels.
pub fn filter_non_neutral(lex: &Lexicon) -> Lexicon {
    Lexicon {
        name: lex.name.clone(),
        entries: lex
            .entries
            .iter()
            .filter(|(_, e)| !e.labels.is_empty())
            .map(|(k, e)| (k.clone(), e.clone()))
            .collect(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DimensionProportion {
    pub dimension: EmotionDimension,
    pub count: usize,
    pub proportion: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CountShare {
    pub count: usize,
    pub percent: f64,
}

impl CountShare {
    fn of(count: usize, total: usize) -> Self {
        CountShare {
            count,
            percent: if total == 0 {
                0.0
            } else {
                100.0 * count as f64 / total as f64
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpansionStats {
    /// Non-neutral base words; the denominator for every share below.
    pub base_words: usize,
    pub gained_any: CountShare,
    pub gained_one: CountShare,
    pub gained_two: CountShare,
    pub gained_three_or_more: CountShare,
    /// Words for which each contributor class supplied at least one added expression.
    pub contributed_by: BTreeMap<String, CountShare>,
    /// Lexicon entries whose term is a base word.
    pub source_terms_in_lexicon: usize,
    /// Lexicon entries whose term is one of the mapped expressions.
    pub expression_terms_in_lexicon: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatsReport {
    pub lexicon: String,
    pub entries: usize,
    pub proportions: Vec<DimensionProportion>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub expansion: Option<ExpansionStats>,
}

pub fn lexicon_stats(
    lex: &Lexicon,
    base: Option<&Lexicon>,
    tmap: Option<&TranslationMap>,
) -> Result<StatsReport> {
    if lex.is_empty() {
        return Err(Error::Invalid("lexicon statistics need a non-empty lexicon".into()));
    }
    let total = lex.len();
    let proportions = EmotionDimension::ALL
        .iter()
        .map(|&dimension| {
            let count = lex.entries().filter(|e| e.labels.contains(dimension)).count();
            DimensionProportion {
                dimension,
                count,
                proportion: count as f64 / total as f64,
            }
        })
        .collect();

    let expansion = match (base, tmap) {
        (Some(base), Some(tmap)) => Some(expansion_stats(lex, base, tmap)),
        _ => None,
    };

    Ok(StatsReport {
        lexicon: lex.name.clone(),
        entries: total,
        proportions,
        expansion,
    })
}

fn expansion_stats(lex: &Lexicon, base: &Lexicon, tmap: &TranslationMap) -> ExpansionStats {
    let base_words: Vec<&LexiconEntry> = base.entries().filter(|e| !e.labels.is_empty()).collect();
    let n = base_words.len();
    let (mut one, mut two, mut more) = (0, 0, 0);
    let mut contributed: BTreeMap<String, usize> = BTreeMap::new();
    for entry in &base_words {
        let Some(exprs) = tmap.get(&entry.term) else {
            continue;
        };
        let added: Vec<&Expression> = TranslationMap::additional(exprs).collect();
        match added.len() {
            0 => {}
            1 => one += 1,
            2 => two += 1,
            _ => more += 1,
        }
        let classes: BTreeSet<Provenance> =
            added.iter().flat_map(|e| e.sources.iter().copied()).collect();
        for class in classes {
            *contributed.entry(class.name().to_string()).or_default() += 1;
        }
    }
    let expressions: BTreeSet<&str> = tmap
        .iter()
        .flat_map(|(_, exprs)| exprs.iter().map(|e| e.text.as_str()))
        .collect();
    ExpansionStats {
        base_words: n,
        gained_any: CountShare::of(one + two + more, n),
        gained_one: CountShare::of(one, n),
        gained_two: CountShare::of(two, n),
        gained_three_or_more: CountShare::of(more, n),
        contributed_by: contributed
            .into_iter()
            .map(|(k, c)| (k, CountShare::of(c, n)))
            .collect(),
        source_terms_in_lexicon: lex.entries().filter(|e| base.contains(&e.term)).count(),
        expression_terms_in_lexicon: lex
            .entries()
            .filter(|e| expressions.contains(e.term.as_str()))
            .count(),
    }
}

impl StatsReport {
    /// Aligned text table: polarity rows first, then the eight emotions.
    pub fn to_table(&self) -> String {
        let mut rows: Vec<&DimensionProportion> = self.proportions.iter().collect();
        rows.sort_by_key(|p| match p.dimension {
            EmotionDimension::Negative => 0,
            EmotionDimension::Positive => 1,
            d => 2 + d.index(),
        });
        let mut out = String::new();
        let _ = writeln!(out, "{} ({} entries)", self.lexicon, self.entries);
        let _ = writeln!(out, "{:<14}{:>10}", "Emotion label", "Proportion");
        for p in rows {
            let _ = writeln!(out, "{:<14}{:>10.3}", p.dimension.name(), p.proportion);
        }
        if let Some(x) = &self.expansion {
            let _ = writeln!(out);
            let _ = writeln!(out, "{:<32}{:>8}{:>9}", "Base words with emotions", x.base_words, "");
            let share = |label: &str, s: &CountShare, out: &mut String| {
                let _ = writeln!(out, "{:<32}{:>8}{:>8.1}%", label, s.count, s.percent);
            };
            share("additional expressions: 1", &x.gained_one, &mut out);
            share("additional expressions: 2", &x.gained_two, &mut out);
            share("additional expressions: >=3", &x.gained_three_or_more, &mut out);
            for (class, s) in &x.contributed_by {
                share(&format!("expressions from {class}"), s, &mut out);
            }
            let _ = writeln!(out, "{:<32}{:>8}", "source terms in lexicon", x.source_terms_in_lexicon);
            let _ = writeln!(
                out,
                "{:<32}{:>8}",
                "expression terms in lexicon", x.expression_terms_in_lexicon
            );
        }
        out
    }
}
