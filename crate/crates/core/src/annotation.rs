//! Annotation tasks and records, portioning across annotator groups,
//! seeded sampling, majority-vote aggregation and demo-round trio selection.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::emotion::{EmotionDimension, EmotionSet};
use crate::error::{Error, Result};
use crate::lexicon::{Lexicon, Provenance, TranslationMap};
use crate::reliability::{build_reliability_matrix, krippendorff_alpha};

/// Rater id the LLM annotator records under.
pub const LLM_RATER_ID: &str = "llm";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TaskKind {
    TranslationValidation,
    EmotionAnnotation,
}

impl TaskKind {
    pub fn name(self) -> &'static str {
        match self {
            TaskKind::TranslationValidation => "translation-validation",
            TaskKind::EmotionAnnotation => "emotion-annotation",
        }
    }

    fn id_prefix(self) -> &'static str {
        match self {
            TaskKind::TranslationValidation => "translation",
            TaskKind::EmotionAnnotation => "emotion",
        }
    }

    /// Task id for a word. Humans and the LLM share ids so their records line up.
    pub fn task_id(self, word: &str) -> String {
        format!("{}:{}", self.id_prefix(), word)
    }
}

impl fmt::Display for TaskKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for TaskKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "translation-validation" | "translation" => Ok(TaskKind::TranslationValidation),
            "emotion-annotation" | "emotion" => Ok(TaskKind::EmotionAnnotation),
            other => Err(Error::Invalid(format!("unknown task kind `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "payload", rename_all = "kebab-case")]
pub enum TaskPayload {
    TranslationValidation {
        source_word: String,
        given_translation: String,
    },
    EmotionAnnotation {
        word: String,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Task {
    pub id: String,
    #[serde(flatten)]
    pub payload: TaskPayload,
}

impl Task {
    pub fn translation(source_word: &str, given_translation: &str) -> Result<Self> {
        if source_word.is_empty() || given_translation.is_empty() {
            return Err(Error::Invalid(format!(
                "translation task needs a source word and a translation, got `{source_word}`/`{given_translation}`"
            )));
        }
        Ok(Task {
            id: TaskKind::TranslationValidation.task_id(source_word),
            payload: TaskPayload::TranslationValidation {
                source_word: source_word.to_string(),
                given_translation: given_translation.to_string(),
            },
        })
    }

    pub fn emotion(word: &str) -> Result<Self> {
        if word.is_empty() {
            return Err(Error::Invalid("emotion task needs a word".into()));
        }
        Ok(Task {
            id: TaskKind::EmotionAnnotation.task_id(word),
            payload: TaskPayload::EmotionAnnotation {
                word: word.to_string(),
            },
        })
    }

    pub fn kind(&self) -> TaskKind {
        match self.payload {
            TaskPayload::TranslationValidation { .. } => TaskKind::TranslationValidation,
            TaskPayload::EmotionAnnotation { .. } => TaskKind::EmotionAnnotation,
        }
    }

    /// The word being annotated: the source word for translation tasks.
    pub fn word(&self) -> &str {
        match &self.payload {
            TaskPayload::TranslationValidation { source_word, .. } => source_word,
            TaskPayload::EmotionAnnotation { word } => word,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Response {
    TranslationValidation {
        #[serde(default)]
        alternate_expressions: Vec<String>,
    },
    EmotionAnnotation {
        labels: EmotionSet,
        #[serde(default)]
        wrong_word: bool,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        better_expression: Option<String>,
    },
}

impl Response {
    pub fn kind(&self) -> TaskKind {
        match self {
            Response::TranslationValidation { .. } => TaskKind::TranslationValidation,
            Response::EmotionAnnotation { .. } => TaskKind::EmotionAnnotation,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotationRecord {
    pub annotator_id: String,
    pub task_id: String,
    pub response: Response,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FieldError {
    pub field: String,
    pub message: String,
}

impl FieldError {
    fn new(field: &str, message: impl Into<String>) -> Self {
        FieldError {
            field: field.to_string(),
            message: message.into(),
        }
    }
}

/// Validates a submitted payload object against the schema of `kind`.
///
/// Every offending field is reported, not only the first.
pub fn validate_payload(kind: TaskKind, payload: &Value) -> Result<Response, Vec<FieldError>> {
    let Some(obj) = payload.as_object() else {
        return Err(vec![FieldError::new("payload", "must be a JSON object")]);
    };
    let mut errors = Vec::new();
    let allowed: &[&str] = match kind {
        TaskKind::TranslationValidation => &["alternate_expressions"],
        TaskKind::EmotionAnnotation => &["labels", "wrong_word", "better_expression"],
    };
    for key in obj.keys() {
        if !allowed.contains(&key.as_str()) {
            errors.push(FieldError::new(key, "unknown field"));
        }
    }
    let response = match kind {
        TaskKind::TranslationValidation => {
            let mut alternates = Vec::new();
            match obj.get("alternate_expressions") {
                None | Some(Value::Null) => {}
                Some(Value::Array(items)) => {
                    for (i, item) in items.iter().enumerate() {
                        match item.as_str().map(str::trim) {
                            Some(s) if !s.is_empty() => alternates.push(s.to_string()),
                            Some(_) => errors.push(FieldError::new(
                                &format!("alternate_expressions[{i}]"),
                                "must not be empty",
                            )),
                            None => errors.push(FieldError::new(
                                &format!("alternate_expressions[{i}]"),
                                "must be a string",
                            )),
                        }
                    }
                }
                Some(_) => errors.push(FieldError::new(
                    "alternate_expressions",
                    "must be an array of strings",
                )),
            }
            Response::TranslationValidation {
                alternate_expressions: alternates,
            }
        }
        TaskKind::EmotionAnnotation => {
            let mut labels = EmotionSet::empty();
            match obj.get("labels") {
                Some(Value::Array(items)) => {
                    for (i, item) in items.iter().enumerate() {
                        match item.as_str().map(EmotionDimension::from_str) {
                            Some(Ok(d)) => {
                                labels.insert(d);
                            }
                            Some(Err(e)) => {
                                errors.push(FieldError::new(&format!("labels[{i}]"), e.to_string()))
                            }
                            None => errors
                                .push(FieldError::new(&format!("labels[{i}]"), "must be a string")),
                        }
                    }
                }
                None => errors.push(FieldError::new("labels", "is required")),
                Some(_) => errors.push(FieldError::new("labels", "must be an array of emotion names")),
            }
            let wrong_word = match obj.get("wrong_word") {
                None | Some(Value::Null) => false,
                Some(Value::Bool(b)) => *b,
                Some(_) => {
                    errors.push(FieldError::new("wrong_word", "must be a boolean"));
                    false
                }
            };
            let better_expression = match obj.get("better_expression") {
                None | Some(Value::Null) => None,
                Some(Value::String(s)) if s.trim().is_empty() => None,
                Some(Value::String(s)) => Some(s.trim().to_string()),
                Some(_) => {
                    errors.push(FieldError::new("better_expression", "must be a string"));
                    None
                }
            };
            Response::EmotionAnnotation {
                labels,
                wrong_word,
                better_expression,
            }
        }
    };
    if errors.is_empty() {
        Ok(response)
    } else {
        Err(errors)
    }
}

/// Shuffles `items` with a seeded PRNG and splits them into `k` portions.
///
/// The first `n mod k` portions hold `⌈n/k⌉` items, the rest `⌊n/k⌋`.
pub fn make_portions<T: Clone>(items: &[T], k: usize, seed: u64) -> Result<Vec<Vec<T>>> {
    if k == 0 {
        return Err(Error::Invalid("number of portions must be positive".into()));
    }
    let n = items.len();
    if k > n {
        return Err(Error::Invalid(format!(
            "cannot split {n} items into {k} portions"
        )));
    }
    let mut shuffled = items.to_vec();
    shuffled.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let (base, extra) = (n / k, n % k);
    let mut portions = Vec::with_capacity(k);
    let mut rest = shuffled.into_iter();
    for i in 0..k {
        let size = base + usize::from(i < extra);
        portions.push(rest.by_ref().take(size).collect());
    }
    Ok(portions)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Assignment {
    pub portion_index: usize,
    /// group name → annotator id
    pub annotators: BTreeMap<String, String>,
}

/// Portion `i` goes to the `i`-th annotator of every group.
pub fn build_assignments(
    n_portions: usize,
    groups: &BTreeMap<String, Vec<String>>,
) -> Result<Vec<Assignment>> {
    if groups.is_empty() {
        return Err(Error::Invalid("at least one annotator group is required".into()));
    }
    let mut seen = HashSet::new();
    for (group, members) in groups {
        if members.len() != n_portions {
            return Err(Error::Invalid(format!(
                "group `{group}` has {} annotators for {n_portions} portions",
                members.len()
            )));
        }
        for m in members {
            if !seen.insert(m.as_str()) {
                return Err(Error::Invalid(format!(
                    "annotator `{m}` appears more than once"
                )));
            }
        }
    }
    Ok((0..n_portions)
        .map(|i| Assignment {
            portion_index: i,
            annotators: groups
                .iter()
                .map(|(g, members)| (g.clone(), members[i].clone()))
                .collect(),
        })
        .collect())
}

/// Default member ids for a group: `A01`, `A02`, ...
pub fn default_group_members(group: &str, n: usize) -> Vec<String> {
    let width = n.to_string().len().max(2);
    (1..=n).map(|i| format!("{group}{i:0width$}")).collect()
}

/// One line of the assignment manifest handed to the annotation service.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub portion_index: usize,
    pub group: String,
    pub annotator_id: String,
    pub task_ids: Vec<String>,
}

pub fn assignment_manifest(assignments: &[Assignment], portions: &[Vec<Task>]) -> Vec<ManifestEntry> {
    let mut out = Vec::new();
    for a in assignments {
        let task_ids: Vec<String> = portions[a.portion_index].iter().map(|t| t.id.clone()).collect();
        for (group, annotator) in &a.annotators {
            out.push(ManifestEntry {
                portion_index: a.portion_index,
                group: group.clone(),
                annotator_id: annotator.clone(),
                task_ids: task_ids.clone(),
            });
        }
    }
    out
}

/// Seeded sample of `⌊n/2⌋` items, kept in their input order.
pub fn sample_half<T: Clone>(items: &[T], seed: u64) -> Result<Vec<T>> {
    if items.is_empty() {
        return Err(Error::Invalid("cannot sample from an empty list".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut picked = rand::seq::index::sample(&mut rng, items.len(), items.len() / 2).into_vec();
    picked.sort_unstable();
    Ok(picked.into_iter().map(|i| items[i].clone()).collect())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MajorityOutcome {
    pub labels: EmotionSet,
    pub dropped: bool,
    /// Votes per dimension, canonical order.
    pub votes: [usize; 10],
    pub wrong_word_votes: usize,
}

/// Strict-majority vote over one word's emotion records from `k` raters.
///
/// A label survives when more than `k/2` raters picked it; the word is
/// dropped when more than `k/2` raters flagged it as a wrong word.
pub fn aggregate_majority(records: &[AnnotationRecord], k: usize) -> Result<MajorityOutcome> {
    let first = records
        .first()
        .ok_or_else(|| Error::Invalid("no records to aggregate".into()))?;
    if records.len() > k {
        return Err(Error::Invalid(format!(
            "{} records for task `{}` but only {k} raters",
            records.len(),
            first.task_id
        )));
    }
    let mut raters = HashSet::new();
    let mut votes = [0usize; 10];
    let mut wrong = 0;
    for rec in records {
        if rec.task_id != first.task_id {
            return Err(Error::Invalid(format!(
                "records mix tasks `{}` and `{}`",
                first.task_id, rec.task_id
            )));
        }
        if !raters.insert(rec.annotator_id.as_str()) {
            return Err(Error::Invalid(format!(
                "rater `{}` appears twice for task `{}`",
                rec.annotator_id, rec.task_id
            )));
        }
        let Response::EmotionAnnotation {
            labels, wrong_word, ..
        } = &rec.response
        else {
            return Err(Error::Invalid(format!(
                "record by `{}` for `{}` is not an emotion annotation",
                rec.annotator_id, rec.task_id
            )));
        };
        for d in labels.iter() {
            votes[d.index()] += 1;
        }
        wrong += usize::from(*wrong_word);
    }
    let majority = |v: usize| 2 * v > k;
    Ok(MajorityOutcome {
        labels: EmotionDimension::ALL
            .into_iter()
            .filter(|d| majority(votes[d.index()]))
            .collect(),
        dropped: majority(wrong),
        votes,
        wrong_word_votes: wrong,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WordOutcome {
    pub task_id: String,
    pub word: String,
    pub raters: usize,
    pub labels: EmotionSet,
    pub dropped: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmotionAggregation {
    /// Intermediate lexicon; neutral words are kept.
    pub lexicon: Lexicon,
    pub outcomes: Vec<WordOutcome>,
    pub dropped: Vec<String>,
    pub unannotated: Vec<String>,
}

/// Majority vote for every emotion task, in task order.
///
/// Later records from the same rater for the same task replace earlier ones.
pub fn aggregate_emotion_records(
    tasks: &[Task],
    records: &[AnnotationRecord],
    k: usize,
    llm_rater: &str,
) -> Result<EmotionAggregation> {
    let known: HashMap<&str, &Task> = tasks.iter().map(|t| (t.id.as_str(), t)).collect();
    let mut by_task: HashMap<&str, BTreeMap<&str, &AnnotationRecord>> = HashMap::new();
    for rec in records {
        if !matches!(rec.response, Response::EmotionAnnotation { .. }) {
            continue;
        }
        if !known.contains_key(rec.task_id.as_str()) {
            return Err(Error::Invalid(format!("record for unknown task `{}`", rec.task_id)));
        }
        by_task
            .entry(rec.task_id.as_str())
            .or_default()
            .insert(rec.annotator_id.as_str(), rec);
    }

    let mut lexicon = Lexicon::new("aggregated");
    let mut outcomes = Vec::new();
    let mut dropped = Vec::new();
    let mut unannotated = Vec::new();
    for task in tasks.iter().filter(|t| t.kind() == TaskKind::EmotionAnnotation) {
        let Some(recs) = by_task.get(task.id.as_str()) else {
            unannotated.push(task.word().to_string());
            continue;
        };
        let recs: Vec<AnnotationRecord> = recs.values().map(|r| (*r).clone()).collect();
        let outcome = aggregate_majority(&recs, k)?;
        outcomes.push(WordOutcome {
            task_id: task.id.clone(),
            word: task.word().to_string(),
            raters: recs.len(),
            labels: outcome.labels,
            dropped: outcome.dropped,
        });
        if outcome.dropped {
            dropped.push(task.word().to_string());
            continue;
        }
        let mut provenance = Vec::new();
        for rec in &recs {
            if let Response::EmotionAnnotation { labels, .. } = &rec.response {
                if labels.iter().any(|d| outcome.labels.contains(d)) {
                    provenance.push(if rec.annotator_id == llm_rater {
                        Provenance::Llm
                    } else {
                        Provenance::Human
                    });
                }
            }
        }
        lexicon.add(task.word(), outcome.labels, &provenance);
    }
    Ok(EmotionAggregation {
        lexicon,
        outcomes,
        dropped,
        unannotated,
    })
}

/// Collects the given translation plus every alternate expression per source word.
///
/// Alternates are appended per task in annotator-id order.
pub fn collect_translations(
    tasks: &[Task],
    records: &[AnnotationRecord],
    llm_rater: &str,
) -> Result<TranslationMap> {
    let known: HashSet<&str> = tasks.iter().map(|t| t.id.as_str()).collect();
    let mut by_task: HashMap<&str, BTreeMap<&str, &AnnotationRecord>> = HashMap::new();
    for rec in records {
        if !matches!(rec.response, Response::TranslationValidation { .. }) {
            continue;
        }
        if !known.contains(rec.task_id.as_str()) {
            return Err(Error::Invalid(format!("record for unknown task `{}`", rec.task_id)));
        }
        by_task
            .entry(rec.task_id.as_str())
            .or_default()
            .insert(rec.annotator_id.as_str(), rec);
    }
    let mut tmap = TranslationMap::new();
    for task in tasks {
        let TaskPayload::TranslationValidation {
            source_word,
            given_translation,
        } = &task.payload
        else {
            continue;
        };
        tmap.add(source_word, given_translation, Provenance::NrcTranslated)?;
        for rec in by_task.get(task.id.as_str()).into_iter().flat_map(|m| m.values()) {
            let Response::TranslationValidation {
                alternate_expressions,
            } = &rec.response
            else {
                continue;
            };
            let who = if rec.annotator_id == llm_rater {
                Provenance::Llm
            } else {
                Provenance::Human
            };
            for expr in alternate_expressions.iter().filter(|e| !e.trim().is_empty()) {
                tmap.add(source_word, expr, who)?;
            }
        }
    }
    Ok(tmap)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrioSelection {
    pub trio: [String; 3],
    pub alpha: f64,
    /// Candidates left out for not covering the whole demo list.
    pub excluded: Vec<String>,
    pub trios_evaluated: usize,
}

/// Picks the three demo candidates whose binarized annotations have the highest alpha.
///
/// Ties go to the lexicographically smallest id triple. Trios whose alpha is
/// undefined are skipped.
pub fn select_annotator_trio(demo_records: &[AnnotationRecord]) -> Result<TrioSelection> {
    let mut latest: BTreeMap<&str, BTreeMap<&str, &AnnotationRecord>> = BTreeMap::new();
    for rec in demo_records {
        latest
            .entry(rec.annotator_id.as_str())
            .or_default()
            .insert(rec.task_id.as_str(), rec);
    }
    let demo_words: BTreeSet<&str> = latest.values().flat_map(|m| m.keys().copied()).collect();
    let mut candidates = Vec::new();
    let mut excluded = Vec::new();
    for (id, answered) in &latest {
        if answered.len() == demo_words.len() {
            candidates.push(id.to_string());
        } else {
            tracing::warn!(
                annotator = id,
                answered = answered.len(),
                demo_words = demo_words.len(),
                "excluding candidate with incomplete demo coverage"
            );
            excluded.push(id.to_string());
        }
    }
    if candidates.len() < 3 {
        return Err(Error::Invalid(format!(
            "need at least 3 candidates with full demo coverage, have {}",
            candidates.len()
        )));
    }
    let deduped: Vec<AnnotationRecord> = latest
        .values()
        .flat_map(|m| m.values().map(|r| (*r).clone()))
        .collect();

    let mut best: Option<([String; 3], f64)> = None;
    let mut evaluated = 0;
    let c = candidates.len();
    for i in 0..c {
        for j in i + 1..c {
            for l in j + 1..c {
                let trio = [candidates[i].clone(), candidates[j].clone(), candidates[l].clone()];
                let matrix = build_reliability_matrix(&deduped, &trio);
                evaluated += 1;
                let alpha = match krippendorff_alpha(&matrix) {
                    Ok(r) => r.alpha,
                    Err(_) => continue,
                };
                if best.as_ref().is_none_or(|(_, a)| alpha > *a) {
                    best = Some((trio, alpha));
                }
            }
        }
    }
    let (trio, alpha) = best.ok_or_else(|| {
        Error::Degenerate("alpha is undefined for every candidate trio".into())
    })?;
    Ok(TrioSelection {
        trio,
        alpha,
        excluded,
        trios_evaluated: evaluated,
    })
}
