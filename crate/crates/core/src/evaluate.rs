//! Consistency-based lexicon evaluation.
//!
//! Every candidate lexicon is run on its language version of each parallel
//! dataset, and its per-document emotion presence is compared with a baseline
//! lexicon run on another version (normally English). The score is Cohen's
//! kappa over the pooled (document × dimension) binary indicators.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt::{self, Write as _};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::emotion::{EmotionDimension, EmotionSet};
use crate::error::{Error, Result};
use crate::extract::{Extractor, MatchMode};
use crate::io::read_to_string;
use crate::lexicon::{parse_lexicon, Lexicon};
use crate::reliability::{cohens_kappa, KappaReport};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Language {
    En,
    Zh,
    Yue,
}

impl Language {
    pub fn tag(self) -> &'static str {
        match self {
            Language::En => "en",
            Language::Zh => "zh",
            Language::Yue => "yue",
        }
    }

    /// Token matching for English, substring matching for Han-script versions.
    pub fn default_mode(self) -> MatchMode {
        match self {
            Language::En => MatchMode::Token,
            Language::Zh | Language::Yue => MatchMode::Substring,
        }
    }
}

impl fmt::Display for Language {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for Language {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "en" => Ok(Language::En),
            "zh" => Ok(Language::Zh),
            "yue" => Ok(Language::Yue),
            other => Err(Error::Invalid(format!("unknown language tag `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParallelDoc {
    pub id: String,
    pub versions: BTreeMap<Language, String>,
    /// Dataset-native labels; carried through, not used for scoring.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gold: Option<serde_json::Value>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParallelDataset {
    pub name: String,
    pub docs: Vec<ParallelDoc>,
    pub languages: BTreeSet<Language>,
}

impl ParallelDataset {
    /// Every document must carry every language that appears anywhere in the set.
    pub fn new(name: impl Into<String>, docs: Vec<ParallelDoc>) -> Result<Self> {
        let name = name.into();
        if docs.is_empty() {
            return Err(Error::Invalid(format!("dataset `{name}` has no documents")));
        }
        let mut ids = HashSet::new();
        for d in &docs {
            if !ids.insert(d.id.as_str()) {
                return Err(Error::DuplicateId(d.id.clone()));
            }
        }
        let languages: BTreeSet<Language> =
            docs.iter().flat_map(|d| d.versions.keys().copied()).collect();
        for d in &docs {
            if let Some(missing) = languages.iter().find(|l| !d.versions.contains_key(l)) {
                return Err(Error::Invalid(format!(
                    "document `{}` in `{name}` is missing its `{missing}` version",
                    d.id
                )));
            }
        }
        Ok(ParallelDataset {
            name,
            docs,
            languages,
        })
    }
}

/// Reads newline-delimited `{"id", "versions": {...}, "gold"}` records; the name is the file stem.
pub fn load_dataset(path: &Path) -> Result<ParallelDataset> {
    let text = read_to_string(path)?;
    let docs: Vec<ParallelDoc> = crate::io::parse_ndjson(path, &text)?;
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    ParallelDataset::new(name, docs).map_err(|e| match e {
        Error::DuplicateId(id) => Error::Invalid(format!("{}: duplicate document id `{id}`", path.display())),
        other => other,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtractionRun {
    pub dataset: String,
    pub lexicon: String,
    pub language: Language,
    pub mode: MatchMode,
    /// Emotion presence per document, dataset order.
    pub presence: Vec<(String, EmotionSet)>,
}

pub fn run_lexicon(
    ds: &ParallelDataset,
    lex: &Lexicon,
    lang: Language,
    mode: MatchMode,
) -> Result<ExtractionRun> {
    run_with(ds, &Extractor::new(lex), &lex.name, lang, mode)
}

fn run_with(
    ds: &ParallelDataset,
    extractor: &Extractor,
    lexicon: &str,
    lang: Language,
    mode: MatchMode,
) -> Result<ExtractionRun> {
    if !ds.languages.contains(&lang) {
        return Err(Error::Invalid(format!(
            "dataset `{}` has no `{lang}` version",
            ds.name
        )));
    }
    let presence = ds
        .docs
        .iter()
        .map(|d| (d.id.clone(), extractor.extract(&d.versions[&lang], mode).present()))
        .collect();
    Ok(ExtractionRun {
        dataset: ds.name.clone(),
        lexicon: lexicon.to_string(),
        language: lang,
        mode,
        presence,
    })
}

fn aligned<'a>(
    candidate: &'a ExtractionRun,
    baseline: &'a ExtractionRun,
) -> Result<Vec<(EmotionSet, EmotionSet)>> {
    if candidate.dataset != baseline.dataset {
        return Err(Error::Invalid(format!(
            "runs are on different datasets: `{}` vs `{}`",
            candidate.dataset, baseline.dataset
        )));
    }
    let base: BTreeMap<&str, EmotionSet> = baseline
        .presence
        .iter()
        .map(|(id, s)| (id.as_str(), *s))
        .collect();
    if base.len() != candidate.presence.len() {
        return Err(Error::Invalid("runs cover different document sets".into()));
    }
    candidate
        .presence
        .iter()
        .map(|(id, s)| {
            base.get(id.as_str())
                .map(|b| (*s, *b))
                .ok_or_else(|| Error::Invalid(format!("document `{id}` is missing from the baseline run")))
        })
        .collect()
}

/// Kappa over the pooled binary indicators, 10 per document.
pub fn agreement(candidate: &ExtractionRun, baseline: &ExtractionRun) -> Result<KappaReport> {
    let pairs = aligned(candidate, baseline)?;
    let mut a = Vec::with_capacity(pairs.len() * 10);
    let mut b = Vec::with_capacity(pairs.len() * 10);
    for (c, base) in pairs {
        for d in EmotionDimension::ALL {
            a.push(c.contains(d));
            b.push(base.contains(d));
        }
    }
    cohens_kappa(&a, &b)
}

/// Non-canonical diagnostic: kappa per dimension and their mean over defined values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerDimensionAgreement {
    pub per_dimension: BTreeMap<EmotionDimension, Option<f64>>,
    pub mean: Option<f64>,
}

pub fn agreement_per_dimension(
    candidate: &ExtractionRun,
    baseline: &ExtractionRun,
) -> Result<PerDimensionAgreement> {
    let pairs = aligned(candidate, baseline)?;
    let per_dimension: BTreeMap<EmotionDimension, Option<f64>> = EmotionDimension::ALL
        .iter()
        .map(|&d| {
            let a: Vec<bool> = pairs.iter().map(|(c, _)| c.contains(d)).collect();
            let b: Vec<bool> = pairs.iter().map(|(_, base)| base.contains(d)).collect();
            (d, cohens_kappa(&a, &b).ok().map(|r| r.kappa))
        })
        .collect();
    let defined: Vec<f64> = per_dimension.values().flatten().copied().collect();
    let mean = (!defined.is_empty()).then(|| defined.iter().sum::<f64>() / defined.len() as f64);
    Ok(PerDimensionAgreement {
        per_dimension,
        mean,
    })
}

/// One lexicon row of the evaluation grid.
#[derive(Debug, Clone)]
pub struct LexiconRun {
    pub label: String,
    pub lexicon: Lexicon,
    pub language: Language,
    pub mode: MatchMode,
}

impl LexiconRun {
    pub fn new(lexicon: Lexicon, language: Language) -> Self {
        LexiconRun {
            label: format!("{} ({})", lexicon.name, language),
            mode: language.default_mode(),
            lexicon,
            language,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetInfo {
    pub name: String,
    pub docs: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub label: String,
    pub lexicon: String,
    pub language: Language,
    pub mode: MatchMode,
    /// One kappa per dataset, in `datasets` order.
    pub kappa: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelativeChangeRow {
    pub label: String,
    /// `(κ − κ_ref) / κ_ref` per dataset; absent where `κ_ref = 0`.
    pub change: Vec<Option<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub baseline: String,
    pub dimensions: Vec<EmotionDimension>,
    pub datasets: Vec<DatasetInfo>,
    pub rows: Vec<ReportRow>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reference: Option<String>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub relative_change: Vec<RelativeChangeRow>,
}

impl EvaluationReport {
    pub fn kappa(&self, label: &str, dataset: &str) -> Option<f64> {
        let row = self.rows.iter().find(|r| r.label == label)?;
        let col = self.datasets.iter().position(|d| d.name == dataset)?;
        row.kappa.get(col).copied()
    }

    /// Fills the relative-change block against the row labelled `reference`.
    pub fn with_reference(mut self, reference: &str) -> Result<Self> {
        let ref_row = self
            .rows
            .iter()
            .find(|r| r.label == reference)
            .ok_or_else(|| Error::Invalid(format!("reference row `{reference}` is not in the report")))?
            .kappa
            .clone();
        self.relative_change = self
            .rows
            .iter()
            .map(|row| RelativeChangeRow {
                label: row.label.clone(),
                change: row
                    .kappa
                    .iter()
                    .zip(&ref_row)
                    .map(|(k, r)| (*r != 0.0).then(|| relative_change(*k, *r)))
                    .collect(),
            })
            .collect();
        self.reference = Some(reference.to_string());
        Ok(self)
    }

    /// Fixed-width table: lexicon rows by dataset columns, then relative changes.
    pub fn to_table(&self) -> String {
        let label_width = self
            .rows
            .iter()
            .map(|r| r.label.chars().count())
            .max()
            .unwrap_or(0)
            .max("Lexicon".len())
            + 2;
        let col_width = self
            .datasets
            .iter()
            .map(|d| d.name.chars().count())
            .max()
            .unwrap_or(0)
            .max(8)
            + 2;
        let pad = |s: &str, w: usize| format!("{s}{}", " ".repeat(w.saturating_sub(s.chars().count())));
        let rpad = |s: &str, w: usize| format!("{}{s}", " ".repeat(w.saturating_sub(s.chars().count())));

        let mut out = String::new();
        let _ = writeln!(out, "Cohen's kappa against {}", self.baseline);
        out.push_str(&pad("Lexicon", label_width));
        for d in &self.datasets {
            out.push_str(&rpad(&d.name, col_width));
        }
        out.push('\n');
        for row in &self.rows {
            out.push_str(&pad(&row.label, label_width));
            for k in &row.kappa {
                out.push_str(&rpad(&format!("{k:.3}"), col_width));
            }
            out.push('\n');
        }
        if let Some(reference) = &self.reference {
            let _ = writeln!(out, "\nRelative change against {reference}");
            for row in &self.relative_change {
                out.push_str(&pad(&row.label, label_width));
                for c in &row.change {
                    let cell = c.map_or("n/a".to_string(), |c| format!("{:+.1}%", 100.0 * c));
                    out.push_str(&rpad(&cell, col_width));
                }
                out.push('\n');
            }
        }
        out
    }
}

pub fn relative_change(candidate: f64, reference: f64) -> f64 {
    (candidate - reference) / reference
}

/// Runs every lexicon row and the baseline on every dataset and scores each cell.
pub fn evaluate_matrix(
    datasets: &[ParallelDataset],
    lexicons: &[LexiconRun],
    baseline: &LexiconRun,
) -> Result<EvaluationReport> {
    let base_extractor = Extractor::new(&baseline.lexicon);
    let baseline_runs: Vec<ExtractionRun> = datasets
        .par_iter()
        .map(|ds| {
            run_with(ds, &base_extractor, &baseline.label, baseline.language, baseline.mode)
                .map_err(|e| Error::Invalid(format!("baseline `{}` on `{}`: {e}", baseline.label, ds.name)))
        })
        .collect::<Result<_>>()?;

    let extractors: Vec<Extractor> = lexicons.iter().map(|l| Extractor::new(&l.lexicon)).collect();
    let cells: Vec<(usize, usize)> = (0..lexicons.len())
        .flat_map(|r| (0..datasets.len()).map(move |c| (r, c)))
        .collect();
    let kappas: Vec<f64> = cells
        .par_iter()
        .map(|&(r, c)| {
            let row = &lexicons[r];
            let ds = &datasets[c];
            run_with(ds, &extractors[r], &row.label, row.language, row.mode)
                .and_then(|run| agreement(&run, &baseline_runs[c]))
                .map(|k| k.kappa)
                .map_err(|e| Error::Invalid(format!("cell ({}, {}): {e}", row.label, ds.name)))
        })
        .collect::<Result<_>>()?;

    let n = datasets.len();
    Ok(EvaluationReport {
        baseline: baseline.label.clone(),
        dimensions: EmotionDimension::ALL.to_vec(),
        datasets: datasets
            .iter()
            .map(|d| DatasetInfo {
                name: d.name.clone(),
                docs: d.docs.len(),
            })
            .collect(),
        rows: lexicons
            .iter()
            .enumerate()
            .map(|(r, l)| ReportRow {
                label: l.label.clone(),
                lexicon: l.lexicon.name.clone(),
                language: l.language,
                mode: l.mode,
                kappa: kappas[r * n..(r + 1) * n].to_vec(),
            })
            .collect(),
        reference: None,
        relative_change: Vec::new(),
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CatalogEntry {
    pub name: String,
    pub file: PathBuf,
    pub language: Language,
    #[serde(default)]
    pub mode: Option<MatchMode>,
    #[serde(default)]
    pub label: Option<String>,
}

/// `lexicons.json` in a lexicon directory.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LexiconCatalog {
    pub lexicons: Vec<CatalogEntry>,
    #[serde(default)]
    pub reference: Option<String>,
}

impl LexiconCatalog {
    /// Reads `lexicons.json` from `dir`, or falls back to `<name>.<lang>.tsv` file names.
    pub fn load_dir(dir: &Path) -> Result<Self> {
        let manifest = dir.join("lexicons.json");
        if manifest.exists() {
            let text = read_to_string(&manifest)?;
            return serde_json::from_str(&text)
                .map_err(|e| Error::parse(&manifest, e.line(), e.to_string()));
        }
        let mut lexicons = Vec::new();
        let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)
            .map_err(|e| Error::io(dir, e))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "tsv"))
            .collect();
        paths.sort();
        for path in paths {
            let stem = path.file_stem().unwrap_or_default().to_string_lossy().into_owned();
            let Some((name, lang)) = stem.rsplit_once('.') else {
                return Err(Error::Invalid(format!(
                    "{}: expected `<name>.<lang>.tsv` without a lexicons.json manifest",
                    path.display()
                )));
            };
            lexicons.push(CatalogEntry {
                name: name.to_string(),
                file: path.file_name().unwrap_or_default().into(),
                language: lang.parse()?,
                mode: None,
                label: None,
            });
        }
        Ok(LexiconCatalog {
            lexicons,
            reference: None,
        })
    }

    /// Loads every entry; `baseline` (matched by name or label) is split off from the rows.
    pub fn resolve(&self, dir: &Path, baseline: &str) -> Result<(Vec<LexiconRun>, LexiconRun)> {
        let mut rows = Vec::new();
        let mut base = None;
        for entry in &self.lexicons {
            let mut lexicon = parse_lexicon(&dir.join(&entry.file))?;
            lexicon.name = entry.name.clone();
            let mut run = LexiconRun::new(lexicon, entry.language);
            if let Some(mode) = entry.mode {
                run.mode = mode;
            }
            if let Some(label) = &entry.label {
                run.label = label.clone();
            }
            if base.is_none() && (entry.name == baseline || run.label == baseline) {
                base = Some(run);
            } else {
                rows.push(run);
            }
        }
        let base = base.ok_or_else(|| {
            Error::Invalid(format!("baseline lexicon `{baseline}` not found in {}", dir.display()))
        })?;
        Ok((rows, base))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use EmotionDimension::*;

    fn doc(id: &str, en: &str, yue: &str) -> ParallelDoc {
        ParallelDoc {
            id: id.into(),
            versions: BTreeMap::from([(Language::En, en.into()), (Language::Yue, yue.into())]),
            gold: None,
        }
    }

    fn run(presence: &[(&str, &[EmotionDimension])]) -> ExtractionRun {
        ExtractionRun {
            dataset: "d".into(),
            lexicon: "l".into(),
            language: Language::Yue,
            mode: MatchMode::Substring,
            presence: presence
                .iter()
                .map(|(id, dims)| (id.to_string(), dims.iter().copied().collect()))
                .collect(),
        }
    }

    #[test]
    fn missing_version_names_document() {
        let mut bad = doc("b", "x", "y");
        bad.versions.remove(&Language::Yue);
        let err = ParallelDataset::new("d", vec![doc("a", "x", "y"), bad]).unwrap_err();
        assert!(err.to_string().contains("`b`"), "{err}");
        assert!(ParallelDataset::new("d", vec![]).is_err());
    }

    #[test]
    fn run_uses_requested_version() {
        let ds = ParallelDataset::new("d", vec![doc("a", "happy", "開心"), doc("b", "", "")]).unwrap();
        let mut lex = Lexicon::new("yue");
        lex.add("開心", EmotionSet::from([Joy]), &[]);
        let r = run_lexicon(&ds, &lex, Language::Yue, MatchMode::Substring).unwrap();
        assert_eq!(r.presence[0].1, EmotionSet::from([Joy]));
        assert!(r.presence[1].1.is_empty());
        assert_eq!(r, run_lexicon(&ds, &lex, Language::Yue, MatchMode::Substring).unwrap());
        assert!(run_lexicon(&ds, &lex, Language::Zh, MatchMode::Substring).is_err());
    }

    #[test]
    fn self_agreement_is_one_and_complement_is_negative() {
        let a = run(&[("1", &[Joy]), ("2", &[Fear, Anger]), ("3", &[])]);
        assert_eq!(agreement(&a, &a).unwrap().kappa, 1.0);
        let inverted = ExtractionRun {
            presence: a
                .presence
                .iter()
                .map(|(id, s)| (id.clone(), EmotionSet::from_bits(!s.bits())))
                .collect(),
            ..a.clone()
        };
        assert!(agreement(&inverted, &a).unwrap().kappa < 0.0);
    }

    #[test]
    fn doc_set_mismatch_errors() {
        let a = run(&[("1", &[Joy]), ("2", &[])]);
        let b = run(&[("1", &[Joy]), ("3", &[])]);
        assert!(agreement(&a, &b).is_err());
    }

    #[test]
    fn relative_change_matches_hand_arithmetic() {
        assert!((100.0 * relative_change(0.889, 0.779) - 14.1).abs() < 0.05);
        assert_eq!(relative_change(0.5, 0.5), 0.0);
    }
}
