//! LLM annotation: fixed prompts, chat-completion transports, and validation
//! of the JSON the model returns.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::path::Path;
use std::sync::Mutex;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::annotation::{AnnotationRecord, Response, TaskKind, LLM_RATER_ID};
use crate::emotion::{EmotionDimension, EmotionSet};
use crate::error::{Error, Result};
use crate::io::{read_to_string, to_pretty_json, write_atomic};

pub const TRANSLATION_PROMPT: &str = include_str!("prompts/translation.txt");
pub const EMOTION_PROMPT: &str = include_str!("prompts/emotion.txt");

pub const DEFAULT_BATCH_CAP: usize = 50;
pub const DEFAULT_MODEL: &str = "gpt-3.5-turbo";
pub const DEFAULT_API_KEY_ENV: &str = "OPENAI_API_KEY";

pub fn prompt_text(kind: TaskKind) -> &'static str {
    match kind {
        TaskKind::TranslationValidation => TRANSLATION_PROMPT,
        TaskKind::EmotionAnnotation => EMOTION_PROMPT,
    }
}

/// The fixed instruction, a blank line, then one word per line.
pub fn build_prompt(kind: TaskKind, words: &[String], cap: usize) -> Result<String> {
    if words.is_empty() {
        return Err(Error::Invalid("prompt needs at least one word".into()));
    }
    if words.len() > cap {
        return Err(Error::Invalid(format!(
            "{} words exceed the batch cap of {cap}",
            words.len()
        )));
    }
    let mut prompt = String::from(prompt_text(kind));
    prompt.push_str("\n\n");
    prompt.push_str(&words.join("\n"));
    Ok(prompt)
}

/// Hex SHA-256 of the prompt bytes; the key of replay fixtures.
pub fn prompt_digest(prompt: &str) -> String {
    hex::encode(Sha256::digest(prompt.as_bytes()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationParams {
    pub model: String,
    pub temperature: f64,
}

impl Default for GenerationParams {
    fn default() -> Self {
        GenerationParams {
            model: DEFAULT_MODEL.to_string(),
            temperature: 0.0,
        }
    }
}

pub trait CompletionTransport: Send + Sync {
    fn send(&self, prompt: &str, params: &GenerationParams) -> Result<String>;
}

/// Serves recorded responses keyed by prompt digest.
///
/// A fixture value is either one response or a list served in order, the
/// last one repeating. The cursor is per digest, so the sequence is the same
/// whatever order batches run in.
#[derive(Debug)]
pub struct ReplayTransport {
    responses: HashMap<String, Vec<String>>,
    cursor: Mutex<HashMap<String, usize>>,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum FixtureValue {
    One(String),
    Many(Vec<String>),
}

impl ReplayTransport {
    pub fn new(responses: HashMap<String, Vec<String>>) -> Self {
        ReplayTransport {
            responses,
            cursor: Mutex::new(HashMap::new()),
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = read_to_string(path)?;
        let raw: BTreeMap<String, FixtureValue> =
            serde_json::from_str(&text).map_err(|e| Error::parse(path, e.line(), e.to_string()))?;
        let responses = raw
            .into_iter()
            .map(|(k, v)| {
                let list = match v {
                    FixtureValue::One(s) => vec![s],
                    FixtureValue::Many(l) => l,
                };
                (k, list)
            })
            .collect();
        Ok(Self::new(responses))
    }
}

impl CompletionTransport for ReplayTransport {
    fn send(&self, prompt: &str, _params: &GenerationParams) -> Result<String> {
        let digest = prompt_digest(prompt);
        let list = self
            .responses
            .get(&digest)
            .filter(|l| !l.is_empty())
            .ok_or_else(|| Error::Transport(format!("no recorded response for prompt {digest}")))?;
        let mut cursor = self.cursor.lock().expect("replay cursor poisoned");
        let i = cursor.entry(digest).or_insert(0);
        let response = list[(*i).min(list.len() - 1)].clone();
        *i += 1;
        Ok(response)
    }
}

#[derive(Debug, Clone)]
pub struct LiveConfig {
    /// e.g. `https://api.openai.com/v1`; `/chat/completions` is appended.
    pub base_url: String,
    pub api_key_env: String,
    pub timeout: Duration,
    pub max_requests_per_minute: u32,
}

impl Default for LiveConfig {
    fn default() -> Self {
        LiveConfig {
            base_url: "https://api.openai.com/v1".to_string(),
            api_key_env: DEFAULT_API_KEY_ENV.to_string(),
            timeout: Duration::from_secs(60),
            max_requests_per_minute: 60,
        }
    }
}

/// Chat-completion client over HTTP with a minimum spacing between requests.
pub struct LiveTransport {
    agent: ureq::Agent,
    url: String,
    api_key: Option<String>,
    min_interval: Duration,
    last_request: Mutex<Option<Instant>>,
}

impl LiveTransport {
    pub fn new(config: &LiveConfig) -> Self {
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(config.timeout))
            .http_status_as_error(false)
            .build()
            .into();
        let rpm = config.max_requests_per_minute.max(1);
        LiveTransport {
            agent,
            url: format!("{}/chat/completions", config.base_url.trim_end_matches('/')),
            api_key: std::env::var(&config.api_key_env).ok(),
            min_interval: Duration::from_secs_f64(60.0 / f64::from(rpm)),
            last_request: Mutex::new(None),
        }
    }

    fn wait_turn(&self) {
        let mut last = self.last_request.lock().expect("rate limiter poisoned");
        if let Some(prev) = *last {
            let elapsed = prev.elapsed();
            if elapsed < self.min_interval {
                std::thread::sleep(self.min_interval - elapsed);
            }
        }
        *last = Some(Instant::now());
    }
}

impl CompletionTransport for LiveTransport {
    fn send(&self, prompt: &str, params: &GenerationParams) -> Result<String> {
        self.wait_turn();
        let body = serde_json::json!({
            "model": params.model,
            "temperature": params.temperature,
            "messages": [{"role": "user", "content": prompt}],
        });
        let mut request = self.agent.post(&self.url);
        if let Some(key) = &self.api_key {
            request = request.header("Authorization", &format!("Bearer {key}"));
        }
        let mut response = request
            .send_json(&body)
            .map_err(|e| Error::Transport(e.to_string()))?;
        let status = response.status();
        let text = response
            .body_mut()
            .read_to_string()
            .map_err(|e| Error::Transport(e.to_string()))?;
        if !status.is_success() {
            return Err(Error::Transport(format!("HTTP {status}: {text}")));
        }
        let value: Value = serde_json::from_str(&text)
            .map_err(|e| Error::Transport(format!("unreadable completion body: {e}")))?;
        value["choices"][0]["message"]["content"]
            .as_str()
            .map(str::to_string)
            .ok_or_else(|| Error::Transport("completion body has no message content".into()))
    }
}

/// Wraps a transport and keeps every response so it can be saved as a replay fixture.
pub struct RecordingTransport<T> {
    inner: T,
    recorded: Mutex<BTreeMap<String, Vec<String>>>,
}

impl<T: CompletionTransport> RecordingTransport<T> {
    pub fn new(inner: T) -> Self {
        RecordingTransport {
            inner,
            recorded: Mutex::new(BTreeMap::new()),
        }
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let recorded = self.recorded.lock().expect("recorder poisoned");
        write_atomic(path, to_pretty_json(&*recorded)?.as_bytes())
    }
}

impl<T: CompletionTransport> CompletionTransport for RecordingTransport<T> {
    fn send(&self, prompt: &str, params: &GenerationParams) -> Result<String> {
        let response = self.inner.send(prompt, params)?;
        self.recorded
            .lock()
            .expect("recorder poisoned")
            .entry(prompt_digest(prompt))
            .or_default()
            .push(response.clone());
        Ok(response)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum LlmPayload {
    Emotion(EmotionSet),
    Translation(Vec<String>),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rejection {
    pub word: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ValidationOutcome {
    /// Accepted words in request order.
    pub accepted: Vec<(String, LlmPayload)>,
    pub rejected: Vec<Rejection>,
    pub unexpected_keys: Vec<String>,
    pub notes: Vec<String>,
    pub malformed: bool,
}

impl ValidationOutcome {
    pub fn accepted_word(&self, word: &str) -> Option<&LlmPayload> {
        self.accepted.iter().find(|(w, _)| w == word).map(|(_, p)| p)
    }
}

/// The largest JSON object embedded anywhere in `text`.
pub fn largest_json_object(text: &str) -> Option<serde_json::Map<String, Value>> {
    let mut best: Option<(usize, serde_json::Map<String, Value>)> = None;
    let mut covered = 0;
    for (i, _) in text.match_indices('{') {
        if i < covered {
            continue;
        }
        let mut stream = serde_json::Deserializer::from_str(&text[i..]).into_iter::<Value>();
        if let Some(Ok(Value::Object(obj))) = stream.next() {
            let len = stream.byte_offset();
            covered = i + len;
            if best.as_ref().is_none_or(|(l, _)| len > *l) {
                best = Some((len, obj));
            }
        }
    }
    best.map(|(_, obj)| obj)
}

fn string_list(value: &Value) -> Option<Vec<String>> {
    match value {
        Value::String(s) => Some(vec![s.clone()]),
        Value::Array(items) => items.iter().map(|v| v.as_str().map(str::to_string)).collect(),
        _ => None,
    }
}

/// Checks a model reply against the requested words. Never fails: problems
/// are recorded in the outcome.
pub fn validate_response(kind: TaskKind, requested: &[String], response: &str) -> ValidationOutcome {
    let mut outcome = ValidationOutcome::default();
    let Some(obj) = largest_json_object(response) else {
        outcome.malformed = true;
        return outcome;
    };
    let wanted: HashSet<&str> = requested.iter().map(String::as_str).collect();
    let mut by_word: HashMap<&str, &Value> = HashMap::new();
    for (key, value) in &obj {
        let key = key.trim();
        if wanted.contains(key) {
            by_word.insert(requested.iter().find(|w| *w == key).unwrap().as_str(), value);
        } else {
            outcome.unexpected_keys.push(key.to_string());
        }
    }

    for word in requested {
        let Some(value) = by_word.get(word.as_str()) else {
            continue;
        };
        let Some(items) = string_list(value) else {
            outcome.rejected.push(Rejection {
                word: word.clone(),
                reason: "value is neither a string nor a list of strings".into(),
            });
            continue;
        };
        match kind {
            TaskKind::EmotionAnnotation => {
                let mut labels = EmotionSet::empty();
                for item in items.iter().flat_map(|s| s.split(',')) {
                    let label = item.trim().to_lowercase();
                    if label.is_empty() {
                        continue;
                    }
                    match label.parse::<EmotionDimension>() {
                        Ok(d) => {
                            labels.insert(d);
                        }
                        Err(_) => outcome
                            .notes
                            .push(format!("dropped label `{label}` for `{word}`")),
                    }
                }
                // An empty list is a neutral verdict; a list of unknown labels is not.
                if labels.is_empty() && items.iter().any(|s| !s.trim().is_empty()) {
                    outcome.rejected.push(Rejection {
                        word: word.clone(),
                        reason: "no valid emotion labels".into(),
                    });
                } else {
                    outcome.accepted.push((word.clone(), LlmPayload::Emotion(labels)));
                }
            }
            TaskKind::TranslationValidation => {
                let mut exprs: Vec<String> = Vec::new();
                for s in items.iter().map(|s| s.trim()).filter(|s| !s.is_empty()) {
                    if !exprs.iter().any(|e| e == s) {
                        exprs.push(s.to_string());
                    }
                }
                if exprs.is_empty() {
                    outcome.rejected.push(Rejection {
                        word: word.clone(),
                        reason: "empty translation".into(),
                    });
                } else {
                    outcome.accepted.push((word.clone(), LlmPayload::Translation(exprs)));
                }
            }
        }
    }
    outcome
}

#[derive(Debug, Clone)]
pub struct AnnotateConfig {
    pub batch_cap: usize,
    pub retries: usize,
    pub params: GenerationParams,
    pub rater_id: String,
    /// Batches in flight at once.
    pub concurrency: usize,
}

impl Default for AnnotateConfig {
    fn default() -> Self {
        AnnotateConfig {
            batch_cap: DEFAULT_BATCH_CAP,
            retries: 2,
            params: GenerationParams::default(),
            rater_id: LLM_RATER_ID.to_string(),
            concurrency: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchLog {
    pub pass: usize,
    pub batch: usize,
    pub prompt_digest: String,
    pub words: Vec<String>,
    pub attempts: usize,
    pub notes: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub failure: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub outcome: Option<ValidationOutcome>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnotationRun {
    pub records: Vec<AnnotationRecord>,
    pub rejected: Vec<Rejection>,
    pub unannotated: Vec<String>,
    pub log: Vec<BatchLog>,
}

fn run_batch(
    transport: &dyn CompletionTransport,
    kind: TaskKind,
    words: &[String],
    config: &AnnotateConfig,
    pass: usize,
    batch: usize,
) -> Result<BatchLog> {
    let prompt = build_prompt(kind, words, config.batch_cap)?;
    let mut log = BatchLog {
        pass,
        batch,
        prompt_digest: prompt_digest(&prompt),
        words: words.to_vec(),
        attempts: 0,
        notes: Vec::new(),
        failure: None,
        outcome: None,
    };
    for attempt in 1..=config.retries + 1 {
        log.attempts = attempt;
        match transport.send(&prompt, &config.params) {
            Err(e) => log.notes.push(format!("attempt {attempt}: {e}")),
            Ok(text) => {
                let outcome = validate_response(kind, words, &text);
                if outcome.malformed {
                    log.notes
                        .push(format!("attempt {attempt}: no JSON object in response"));
                    continue;
                }
                log.outcome = Some(outcome);
                return Ok(log);
            }
        }
    }
    log.failure = Some(format!("gave up after {} attempts", log.attempts));
    Ok(log)
}

fn run_pass(
    transport: &dyn CompletionTransport,
    kind: TaskKind,
    words: &[String],
    config: &AnnotateConfig,
    pass: usize,
) -> Result<Vec<BatchLog>> {
    let batches: Vec<&[String]> = words.chunks(config.batch_cap).collect();
    let mut logs = Vec::with_capacity(batches.len());
    for group in batches.chunks(config.concurrency.max(1)).enumerate() {
        let (g, group) = group;
        let offset = g * config.concurrency.max(1);
        let results: Vec<Result<BatchLog>> = std::thread::scope(|s| {
            let handles: Vec<_> = group
                .iter()
                .enumerate()
                .map(|(i, batch)| {
                    s.spawn(move || run_batch(transport, kind, batch, config, pass, offset + i))
                })
                .collect();
            handles
                .into_iter()
                .map(|h| h.join().expect("annotation worker panicked"))
                .collect()
        });
        for r in results {
            logs.push(r?);
        }
    }
    Ok(logs)
}

/// Annotates `words` in capped batches, retrying malformed replies and
/// re-queuing words the model skipped once.
///
/// Records follow input word order. Words never returned end up in
/// `unannotated`; every requested word is accepted, rejected, or unannotated.
pub fn annotate_batch(
    transport: &dyn CompletionTransport,
    kind: TaskKind,
    words: &[String],
    config: &AnnotateConfig,
) -> Result<AnnotationRun> {
    if words.is_empty() {
        return Err(Error::Invalid("no words to annotate".into()));
    }
    if config.batch_cap == 0 {
        return Err(Error::Invalid("batch cap must be positive".into()));
    }
    let mut unique: Vec<String> = Vec::new();
    let mut seen = HashSet::new();
    for w in words.iter().map(|w| w.trim()).filter(|w| !w.is_empty()) {
        if seen.insert(w.to_string()) {
            unique.push(w.to_string());
        }
    }

    let mut log = run_pass(transport, kind, &unique, config, 1)?;
    if log.iter().all(|b| b.failure.is_some()) {
        return Err(Error::Transport(format!(
            "all {} batches failed: {}",
            log.len(),
            log.iter().flat_map(|b| b.notes.last()).cloned().collect::<Vec<_>>().join("; ")
        )));
    }

    let answered = |logs: &[BatchLog]| -> HashSet<String> {
        logs.iter()
            .flat_map(|b| b.outcome.iter())
            .flat_map(|o| {
                o.accepted
                    .iter()
                    .map(|(w, _)| w.clone())
                    .chain(o.rejected.iter().map(|r| r.word.clone()))
            })
            .collect()
    };
    let done = answered(&log);
    let missing: Vec<String> = unique.iter().filter(|w| !done.contains(*w)).cloned().collect();
    if !missing.is_empty() {
        log.extend(run_pass(transport, kind, &missing, config, 2)?);
    }

    let mut accepted: HashMap<&str, &LlmPayload> = HashMap::new();
    let mut rejected: HashMap<&str, &Rejection> = HashMap::new();
    for outcome in log.iter().flat_map(|b| b.outcome.iter()) {
        for (w, p) in &outcome.accepted {
            accepted.entry(w.as_str()).or_insert(p);
        }
        for r in &outcome.rejected {
            rejected.entry(r.word.as_str()).or_insert(r);
        }
    }

    let mut records = Vec::new();
    let mut rejected_out = Vec::new();
    let mut unannotated = Vec::new();
    for word in &unique {
        if let Some(payload) = accepted.get(word.as_str()) {
            let response = match payload {
                LlmPayload::Emotion(labels) => Response::EmotionAnnotation {
                    labels: *labels,
                    wrong_word: false,
                    better_expression: None,
                },
                LlmPayload::Translation(exprs) => Response::TranslationValidation {
                    alternate_expressions: exprs.clone(),
                },
            };
            records.push(AnnotationRecord {
                annotator_id: config.rater_id.clone(),
                task_id: kind.task_id(word),
                response,
            });
        } else if let Some(r) = rejected.get(word.as_str()) {
            rejected_out.push((*r).clone());
        } else {
            unannotated.push(word.clone());
        }
    }
    Ok(AnnotationRun {
        records,
        rejected: rejected_out,
        unannotated,
        log,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use EmotionDimension::*;

    fn words(ws: &[&str]) -> Vec<String> {
        ws.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn prompts_are_verbatim() {
        let p = build_prompt(TaskKind::TranslationValidation, &words(&["happy"]), 50).unwrap();
        assert!(p.starts_with(
            "As a native Cantonese speaker living in the United States, you are teaching the local people to speak Cantonese."
        ));
        assert!(p.ends_with("\n\nhappy"));
        let p = build_prompt(TaskKind::EmotionAnnotation, &words(&["開心"]), 50).unwrap();
        assert!(p.contains(
            "anger, anticipation, disgust, fear, joy, negative, positive, sadness, surprise, trust"
        ));
        assert!(build_prompt(TaskKind::EmotionAnnotation, &[], 50).is_err());
        assert!(build_prompt(TaskKind::EmotionAnnotation, &words(&["a", "b"]), 1).is_err());
    }

    #[test]
    fn unexpected_keys_are_reported() {
        let out = validate_response(
            TaskKind::EmotionAnnotation,
            &words(&["靚"]),
            r#"{"靚": ["joy","positive"], "巴黎": ["surprise"]}"#,
        );
        assert_eq!(out.accepted, vec![("靚".to_string(), LlmPayload::Emotion(EmotionSet::from([Joy, Positive])))]);
        assert_eq!(out.unexpected_keys, ["巴黎"]);
    }

    #[test]
    fn unknown_labels_are_dropped() {
        let out = validate_response(TaskKind::EmotionAnnotation, &words(&["靚"]), r#"{"靚": ["joy","happiness"]}"#);
        assert_eq!(out.accepted_word("靚"), Some(&LlmPayload::Emotion(EmotionSet::from([Joy]))));
        assert_eq!(out.notes.len(), 1);
        let out = validate_response(TaskKind::EmotionAnnotation, &words(&["靚"]), r#"{"靚": ["happiness"]}"#);
        assert!(out.accepted.is_empty());
        assert_eq!(out.rejected[0].word, "靚");
    }

    #[test]
    fn empty_label_list_is_neutral() {
        let out = validate_response(TaskKind::EmotionAnnotation, &words(&["枱"]), r#"{"枱": []}"#);
        assert_eq!(out.accepted_word("枱"), Some(&LlmPayload::Emotion(EmotionSet::empty())));
    }

    fn replay(pairs: &[(&[&str], &[&str])], kind: TaskKind) -> ReplayTransport {
        ReplayTransport::new(
            pairs
                .iter()
                .map(|(ws, replies)| {
                    let prompt = build_prompt(kind, &words(ws), 50).unwrap();
                    (prompt_digest(&prompt), words(replies))
                })
                .collect(),
        )
    }

    #[test]
    fn malformed_reply_is_retried_and_missing_words_requeued() {
        let kind = TaskKind::EmotionAnnotation;
        let t = replay(
            &[
                (&["嬲", "驚"], &["Sorry, I cannot help.", r#"{"嬲": ["anger"]}"#]),
                (&["驚"], &[r#"{"驚": "fear"}"#]),
            ],
            kind,
        );
        let config = AnnotateConfig { batch_cap: 2, ..AnnotateConfig::default() };
        let run = annotate_batch(&t, kind, &words(&["嬲", "驚", "嬲"]), &config).unwrap();
        let ids: Vec<&str> = run.records.iter().map(|r| r.task_id.as_str()).collect();
        assert_eq!(ids, ["emotion:嬲", "emotion:驚"]);
        assert!(run.records.iter().all(|r| r.annotator_id == LLM_RATER_ID));
        assert_eq!(run.log[0].attempts, 2);
        assert_eq!(run.log[1].pass, 2);
        assert!(run.unannotated.is_empty());
    }

    #[test]
    fn every_word_is_accounted_for() {
        let kind = TaskKind::EmotionAnnotation;
        let t = replay(&[(&["a", "b", "c"], &[r#"{"a": ["joy"], "b": ["bogus"]}"#])], kind);
        let run = annotate_batch(&t, kind, &words(&["a", "b", "c"]), &AnnotateConfig::default()).unwrap();
        assert_eq!(run.records.len(), 1);
        assert_eq!(run.rejected[0].word, "b");
        assert_eq!(run.unannotated, ["c"]);
    }

    #[test]
    fn total_transport_failure_is_an_error() {
        let t = ReplayTransport::new(HashMap::new());
        let err = annotate_batch(&t, TaskKind::EmotionAnnotation, &words(&["a"]), &AnnotateConfig::default());
        assert!(matches!(err, Err(Error::Transport(_))));
    }

    #[test]
    fn prose_without_json_is_malformed() {
        let out = validate_response(TaskKind::EmotionAnnotation, &words(&["靚"]), "Sure! Here are the emotions.");
        assert!(out.malformed);
    }

    #[test]
    fn json_wrapped_in_prose_is_found() {
        let text = "Here you go:\n```json\n{\"pretty\": \"靚\", \"good\": [\"好\", \"正\"]}\n```\nand {\"x\": 1}";
        let out = validate_response(TaskKind::TranslationValidation, &words(&["pretty", "good"]), text);
        assert!(!out.malformed);
        assert_eq!(out.accepted_word("good"), Some(&LlmPayload::Translation(words(&["好", "正"]))));
    }

    #[test]
    fn replay_serves_sequence_then_repeats() {
        let digest = prompt_digest("p");
        let t = ReplayTransport::new(HashMap::from([(digest, words(&["a", "b"]))]));
        let params = GenerationParams::default();
        assert_eq!(t.send("p", &params).unwrap(), "a");
        assert_eq!(t.send("p", &params).unwrap(), "b");
        assert_eq!(t.send("p", &params).unwrap(), "b");
        assert!(t.send("q", &params).is_err());
    }
}
