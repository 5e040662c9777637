//! Command-line front end. Every subcommand reads files, calls one library
//! stage, and writes its outputs atomically.

use std::collections::{BTreeMap, BTreeSet};
use std::ffi::OsString;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::time::Duration;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::Value;

use crate::annotation::{
    aggregate_emotion_records, assignment_manifest, build_assignments, collect_translations,
    default_group_members, make_portions, sample_half, select_annotator_trio, AnnotationRecord,
    ManifestEntry, Task, TaskKind, LLM_RATER_ID,
};
use crate::corpus::{format_term_scores, load_corpus, mine_terms, Aggregate, MineConfig, PosTag, SegmenterDictionary};
use crate::error::{Error, Result};
use crate::evaluate::{evaluate_matrix, load_dataset, LexiconCatalog};
use crate::extract::{DocumentProfile, Extractor, MatchMode, TextDocument};
use crate::io::{read_ndjson, read_to_string, to_ndjson, to_pretty_json, write_atomic};
use crate::lexicon::{filter_non_neutral, format_lexicon, lexicon_stats, merge_expressions, parse_lexicon, TranslationMap};
use crate::llm::{
    annotate_batch, AnnotateConfig, CompletionTransport, GenerationParams, LiveConfig, LiveTransport,
    RecordingTransport, ReplayTransport, DEFAULT_API_KEY_ENV, DEFAULT_BATCH_CAP, DEFAULT_MODEL,
};
use crate::reliability::{build_reliability_matrix, cohens_kappa, interpret, krippendorff_alpha, ReliabilityMatrix};
use crate::service::{serve, ServeConfig, SessionStore};

const DEFAULT_POS: &str = "a,ad,ag,an,b,g,h,i,j,l,q,v,vn,z";

#[derive(Debug, Parser)]
#[command(name = "cantolex", version, about = "Emotion lexicon construction and evaluation pipeline")]
#[command(args_override_self = true)]
pub struct Cli {
    /// JSON file of flag values for the chosen subcommand; explicit flags win.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Rank corpus terms by TF-IDF and keep the top ones with an allowed POS tag.
    MineTerms(MineTermsArgs),
    /// Label proportions of a lexicon, plus expansion shares given a base lexicon and translation map.
    LexiconStats(LexiconStatsArgs),
    /// Build annotation tasks and split them into seeded portions per annotator group.
    MakeTasks(MakeTasksArgs),
    /// Run the annotation HTTP service.
    Serve(ServeArgs),
    /// Annotate words with an LLM, live or from a replay fixture.
    LlmAnnotate(LlmAnnotateArgs),
    /// Combine annotation records into an emotion lexicon or a translation map.
    Aggregate(AggregateArgs),
    /// Krippendorff's alpha over a reliability matrix or annotation records.
    Alpha(AlphaArgs),
    /// Cohen's kappa between two label columns.
    Kappa(KappaArgs),
    /// Assemble the final lexicon from a base lexicon, translations, and annotated words.
    BuildLexicon(BuildLexiconArgs),
    /// Emotion profiles for documents with one lexicon.
    Extract(ExtractArgs),
    /// Agreement of every lexicon with a baseline across parallel datasets.
    Evaluate(EvaluateArgs),
}

#[derive(Debug, Args, Serialize)]
pub struct MineTermsArgs {
    /// Thread corpus, one JSON object per line.
    #[arg(long)]
    pub corpus: PathBuf,
    /// Segmentation dictionary, `term<TAB>pos` per line.
    #[arg(long)]
    pub dict: PathBuf,
    #[arg(long, default_value_t = crate::corpus::DEFAULT_TOP_K)]
    pub top_k: usize,
    /// Allowed POS tags, comma separated.
    #[arg(long, default_value = DEFAULT_POS, value_delimiter = ',')]
    pub pos: Vec<String>,
    /// How per-document scores combine into a corpus score: sum or max.
    #[arg(long, default_value = "sum")]
    pub aggregate: String,
    /// Output TSV; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct LexiconStatsArgs {
    #[arg(long)]
    pub lexicon: PathBuf,
    /// Source lexicon the translation map was built from.
    #[arg(long, requires = "tmap")]
    pub base: Option<PathBuf>,
    #[arg(long, requires = "base")]
    pub tmap: Option<PathBuf>,
    /// Write JSON instead of the text table.
    #[arg(long)]
    pub json: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct MakeTasksArgs {
    /// emotion or translation.
    #[arg(long)]
    pub kind: String,
    /// One word per line; translation tasks take `source<TAB>translation`. Extra TSV columns are ignored for emotion tasks.
    #[arg(long)]
    pub words: PathBuf,
    #[arg(long)]
    pub portions: usize,
    /// Annotator group names, comma separated; members are `<group>01`, `<group>02`, ...
    #[arg(long, default_value = "A,B,C", value_delimiter = ',')]
    pub groups: Vec<String>,
    /// Seed for shuffling and sampling.
    #[arg(long)]
    pub seed: u64,
    /// Keep a seeded half of the words before portioning.
    #[arg(long)]
    pub sample_half: bool,
    /// Receives tasks.jsonl and manifest.json.
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct ServeArgs {
    #[arg(long)]
    pub tasks: PathBuf,
    #[arg(long)]
    pub manifest: PathBuf,
    /// Submission journal; created when missing.
    #[arg(long)]
    pub journal: PathBuf,
    #[arg(long, default_value = "127.0.0.1:8080")]
    pub bind: SocketAddr,
    /// Static files for the annotation UI.
    #[arg(long)]
    pub ui_dir: Option<PathBuf>,
    /// File holding the token that unlocks /api/export; export is disabled without it.
    #[arg(long)]
    pub admin_token_file: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct LlmAnnotateArgs {
    /// emotion or translation.
    #[arg(long)]
    pub kind: String,
    /// One word per line (first TSV column).
    #[arg(long)]
    pub words: PathBuf,
    /// Recorded responses keyed by prompt digest.
    #[arg(long, conflicts_with = "live", required_unless_present = "live")]
    pub replay: Option<PathBuf>,
    /// Call the chat-completion endpoint; the key is read from the environment.
    #[arg(long)]
    pub live: bool,
    /// With --live, save every response as a replay fixture.
    #[arg(long, requires = "live")]
    pub record: Option<PathBuf>,
    #[arg(long, default_value = "https://api.openai.com/v1")]
    pub base_url: String,
    #[arg(long, default_value = DEFAULT_MODEL)]
    pub model: String,
    #[arg(long, default_value = DEFAULT_API_KEY_ENV)]
    pub api_key_env: String,
    #[arg(long, default_value_t = 60)]
    pub requests_per_minute: u32,
    #[arg(long, default_value_t = 60)]
    pub timeout_secs: u64,
    #[arg(long, default_value_t = DEFAULT_BATCH_CAP)]
    pub batch_cap: usize,
    #[arg(long, default_value_t = 2)]
    pub retries: usize,
    #[arg(long, default_value_t = 1)]
    pub concurrency: usize,
    #[arg(long, default_value = LLM_RATER_ID)]
    pub rater_id: String,
    /// Annotation records, one JSON object per line.
    #[arg(long)]
    pub out: PathBuf,
    /// Per-batch log with rejections and retries.
    #[arg(long)]
    pub log: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct AggregateArgs {
    /// emotion or translation.
    #[arg(long)]
    pub kind: String,
    #[arg(long)]
    pub tasks: PathBuf,
    /// Record files; may be repeated.
    #[arg(long, required = true)]
    pub records: Vec<PathBuf>,
    /// Raters per word; a label needs more than half of them.
    #[arg(long, default_value_t = 3)]
    pub raters: usize,
    #[arg(long, default_value = LLM_RATER_ID)]
    pub llm_rater: String,
    /// Emotion: lexicon TSV. Translation: translation map JSON.
    #[arg(long)]
    pub out: PathBuf,
    /// Emotion only: words dropped as wrong words, one per line.
    #[arg(long)]
    pub dropped: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct AlphaArgs {
    /// Reliability matrix TSV.
    #[arg(long, conflicts_with = "records", required_unless_present = "records")]
    pub matrix: Option<PathBuf>,
    /// Emotion record files; binarized into task#dimension units.
    #[arg(long)]
    pub records: Vec<PathBuf>,
    /// Raters to include, comma separated; all raters in the records when omitted.
    #[arg(long, value_delimiter = ',')]
    pub raters: Vec<String>,
    /// Pick the demo trio with the highest alpha instead.
    #[arg(long, requires = "records")]
    pub select_trio: bool,
    #[arg(long)]
    pub json: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct KappaArgs {
    /// Two tab-separated label columns per line.
    #[arg(long)]
    pub pairs: PathBuf,
    #[arg(long)]
    pub json: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct BuildLexiconArgs {
    /// Lexicon whose words the translation map starts from.
    #[arg(long)]
    pub base: PathBuf,
    #[arg(long)]
    pub tmap: Option<PathBuf>,
    /// Aggregated annotation lexicons to add; may be repeated.
    #[arg(long)]
    pub annotated: Vec<PathBuf>,
    /// Remove the base lexicon's own words from the result.
    #[arg(long)]
    pub drop_source_terms: bool,
    /// Keep entries with no labels.
    #[arg(long)]
    pub keep_neutral: bool,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct ExtractArgs {
    #[arg(long)]
    pub lexicon: PathBuf,
    /// token or substring.
    #[arg(long, default_value = "substring")]
    pub mode: String,
    /// Documents as `{"id", "text"}` lines.
    #[arg(long, conflicts_with = "text", required_unless_present = "text")]
    pub input: Option<PathBuf>,
    /// A single text instead of --input.
    #[arg(long)]
    pub text: Option<String>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct EvaluateArgs {
    /// Directory of parallel datasets (`*.jsonl`).
    #[arg(long)]
    pub datasets: PathBuf,
    /// Directory of lexicons with `lexicons.json` or `<name>.<lang>.tsv` files.
    #[arg(long)]
    pub lexicons: PathBuf,
    /// Lexicon whose extractions serve as pseudo ground truth.
    #[arg(long)]
    pub baseline: String,
    /// Row label the relative-change table divides by.
    #[arg(long)]
    pub reference: Option<String>,
    /// Text report; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub json: Option<PathBuf>,
}

/// Parses `argv`, runs the subcommand, and returns the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString>,
{
    let argv: Vec<OsString> = argv.into_iter().map(Into::into).collect();
    let argv = match with_config(argv) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: config: {e}");
            return 2;
        }
    };
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    init_logging();
    let stage = stage_name(&cli.command);
    match dispatch(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {stage}: {e}");
            1
        }
    }
}

fn init_logging() {
    let filter = tracing_subscriber::EnvFilter::try_from_env("CANTOLEX_LOG")
        .unwrap_or_else(|_| tracing_subscriber::EnvFilter::new("info"));
    let _ = tracing_subscriber::fmt()
        .with_env_filter(filter)
        .with_writer(std::io::stderr)
        .with_target(false)
        .try_init();
}

fn stage_name(cmd: &Command) -> &'static str {
    match cmd {
        Command::MineTerms(_) => "mine-terms",
        Command::LexiconStats(_) => "lexicon-stats",
        Command::MakeTasks(_) => "make-tasks",
        Command::Serve(_) => "serve",
        Command::LlmAnnotate(_) => "llm-annotate",
        Command::Aggregate(_) => "aggregate",
        Command::Alpha(_) => "alpha",
        Command::Kappa(_) => "kappa",
        Command::BuildLexicon(_) => "build-lexicon",
        Command::Extract(_) => "extract",
        Command::Evaluate(_) => "evaluate",
    }
}

/// Splices flags from `--config FILE` in right after the subcommand name, so
/// that flags given on the command line come later and override them.
fn with_config(argv: Vec<OsString>) -> Result<Vec<OsString>> {
    let Some(pos) = argv.iter().position(|a| a == "--config") else {
        return Ok(argv);
    };
    let Some(path) = argv.get(pos + 1).map(PathBuf::from) else {
        return Ok(argv);
    };
    let mut rest = argv;
    rest.drain(pos..pos + 2);
    let Some(sub_at) = rest.iter().skip(1).position(|a| !a.to_string_lossy().starts_with('-')) else {
        return Ok(rest);
    };
    let sub_at = sub_at + 1;
    let sub = rest[sub_at].to_string_lossy().into_owned();
    let text = read_to_string(&path)?;
    let value: Value = serde_json::from_str(&text).map_err(|e| Error::parse(&path, e.line(), e.to_string()))?;
    let Value::Object(root) = value else {
        return Err(Error::Invalid(format!("{}: expected a JSON object", path.display())));
    };
    // Either `{"<subcommand>": {...}}` or a flat object for the subcommand at hand.
    let flags = match root.get(&sub) {
        Some(Value::Object(section)) => section.clone(),
        Some(_) => return Err(Error::Invalid(format!("{}: `{sub}` must be an object", path.display()))),
        None if root.values().all(Value::is_object) && !root.is_empty() => serde_json::Map::new(),
        None => root,
    };
    let mut injected = Vec::new();
    for (key, value) in flags {
        let flag = format!("--{}", key.replace('_', "-"));
        match value {
            Value::Bool(true) => injected.push(OsString::from(flag)),
            Value::Bool(false) | Value::Null => {}
            Value::Array(items) => {
                for item in items {
                    injected.push(OsString::from(&flag));
                    injected.push(OsString::from(scalar(&item)?));
                }
            }
            other => {
                injected.push(OsString::from(flag));
                injected.push(OsString::from(scalar(&other)?));
            }
        }
    }
    let tail = rest.split_off(sub_at + 1);
    rest.extend(injected);
    rest.extend(tail);
    Ok(rest)
}

fn scalar(v: &Value) -> Result<String> {
    match v {
        Value::String(s) => Ok(s.clone()),
        Value::Number(n) => Ok(n.to_string()),
        Value::Bool(b) => Ok(b.to_string()),
        other => Err(Error::Invalid(format!("unsupported config value {other}"))),
    }
}

fn require_inputs<'a>(paths: impl IntoIterator<Item = &'a Path>) -> Result<()> {
    for p in paths {
        if !p.exists() {
            return Err(Error::Invalid(format!("input `{}` does not exist", p.display())));
        }
    }
    Ok(())
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(path) => write_atomic(path, text.as_bytes()),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn log_config<T: Serialize>(stage: &str, args: &T) {
    let config = serde_json::to_string(args).unwrap_or_default();
    tracing::info!(stage, %config, "running");
}

fn dispatch(cmd: Command) -> Result<()> {
    match cmd {
        Command::MineTerms(a) => cmd_mine_terms(&a),
        Command::LexiconStats(a) => cmd_lexicon_stats(&a),
        Command::MakeTasks(a) => cmd_make_tasks(&a),
        Command::Serve(a) => cmd_serve(&a),
        Command::LlmAnnotate(a) => cmd_llm_annotate(&a),
        Command::Aggregate(a) => cmd_aggregate(&a),
        Command::Alpha(a) => cmd_alpha(&a),
        Command::Kappa(a) => cmd_kappa(&a),
        Command::BuildLexicon(a) => cmd_build_lexicon(&a),
        Command::Extract(a) => cmd_extract(&a),
        Command::Evaluate(a) => cmd_evaluate(&a),
    }
}

fn cmd_mine_terms(a: &MineTermsArgs) -> Result<()> {
    require_inputs([a.corpus.as_path(), a.dict.as_path()])?;
    let allowed_pos = a
        .pos
        .iter()
        .map(|p| p.trim().parse::<PosTag>())
        .collect::<Result<BTreeSet<_>>>()?;
    let config = MineConfig {
        allowed_pos,
        top_k: a.top_k,
        aggregate: a.aggregate.parse::<Aggregate>()?,
    };
    log_config("mine-terms", a);
    let corpus = load_corpus(&a.corpus)?;
    let dict = SegmenterDictionary::load(&a.dict)?;
    let scores = mine_terms(&corpus, &dict, &config)?;
    tracing::info!(documents = corpus.len(), terms = scores.len(), "ranked terms");
    emit(a.out.as_deref(), &format_term_scores(&scores))
}

fn cmd_lexicon_stats(a: &LexiconStatsArgs) -> Result<()> {
    require_inputs([Some(a.lexicon.as_path()), a.base.as_deref(), a.tmap.as_deref()].into_iter().flatten())?;
    log_config("lexicon-stats", a);
    let lex = parse_lexicon(&a.lexicon)?;
    let base = a.base.as_deref().map(parse_lexicon).transpose()?;
    let tmap = a.tmap.as_deref().map(TranslationMap::load).transpose()?;
    let report = lexicon_stats(&lex, base.as_ref(), tmap.as_ref())?;
    let text = if a.json {
        to_pretty_json(&report)?
    } else {
        report.to_table()
    };
    emit(a.out.as_deref(), &text)
}

/// Non-empty, non-comment lines split on tabs.
fn read_word_rows(path: &Path) -> Result<Vec<Vec<String>>> {
    let text = read_to_string(path)?;
    Ok(text
        .lines()
        .map(str::trim_end)
        .filter(|l| !l.trim().is_empty() && !l.starts_with('#'))
        .map(|l| l.split('\t').map(|c| c.trim().to_string()).collect())
        .collect())
}

fn read_words(path: &Path) -> Result<Vec<String>> {
    Ok(read_word_rows(path)?.into_iter().map(|mut r| r.swap_remove(0)).collect())
}

fn cmd_make_tasks(a: &MakeTasksArgs) -> Result<()> {
    require_inputs([a.words.as_path()])?;
    let kind: TaskKind = a.kind.parse()?;
    log_config("make-tasks", a);
    let rows = read_word_rows(&a.words)?;
    let mut tasks = Vec::with_capacity(rows.len());
    let mut seen = BTreeSet::new();
    for (i, row) in rows.iter().enumerate() {
        let task = match kind {
            TaskKind::EmotionAnnotation => Task::emotion(&row[0])?,
            TaskKind::TranslationValidation => {
                let translation = row.get(1).ok_or_else(|| {
                    Error::parse(&a.words, i + 1, "translation tasks need `source<TAB>translation`")
                })?;
                Task::translation(&row[0], translation)?
            }
        };
        if seen.insert(task.id.clone()) {
            tasks.push(task);
        }
    }
    if a.sample_half {
        tasks = sample_half(&tasks, a.seed)?;
    }
    let portions = make_portions(&tasks, a.portions, a.seed)?;
    let groups: BTreeMap<String, Vec<String>> = a
        .groups
        .iter()
        .map(|g| (g.clone(), default_group_members(g, a.portions)))
        .collect();
    let assignments = build_assignments(a.portions, &groups)?;
    let manifest: Vec<ManifestEntry> = assignment_manifest(&assignments, &portions);
    let ordered: Vec<Task> = portions.iter().flatten().cloned().collect();

    std::fs::create_dir_all(&a.out_dir).map_err(|e| Error::io(&a.out_dir, e))?;
    write_atomic(&a.out_dir.join("tasks.jsonl"), to_ndjson(&ordered)?.as_bytes())?;
    write_atomic(&a.out_dir.join("manifest.json"), to_pretty_json(&manifest)?.as_bytes())?;
    let sizes: Vec<usize> = portions.iter().map(Vec::len).collect();
    tracing::info!(tasks = ordered.len(), ?sizes, "portioned tasks");
    Ok(())
}

fn cmd_serve(a: &ServeArgs) -> Result<()> {
    require_inputs([Some(a.tasks.as_path()), Some(a.manifest.as_path()), a.ui_dir.as_deref(), a.admin_token_file.as_deref()].into_iter().flatten())?;
    log_config("serve", a);
    let tasks: Vec<Task> = read_ndjson(&a.tasks)?;
    let manifest_text = read_to_string(&a.manifest)?;
    let manifest: Vec<ManifestEntry> = serde_json::from_str(&manifest_text)
        .map_err(|e| Error::parse(&a.manifest, e.line(), e.to_string()))?;
    let admin_token = match &a.admin_token_file {
        Some(p) => Some(read_to_string(p)?.trim().to_string()).filter(|t| !t.is_empty()),
        None => None,
    };
    let store = SessionStore::open(tasks, &manifest, &a.journal)?;
    let runtime = tokio::runtime::Runtime::new().map_err(|e| Error::Invalid(e.to_string()))?;
    runtime.block_on(serve(
        store,
        ServeConfig {
            bind: a.bind,
            ui_dir: a.ui_dir.clone(),
            admin_token,
        },
    ))
}

fn cmd_llm_annotate(a: &LlmAnnotateArgs) -> Result<()> {
    require_inputs([Some(a.words.as_path()), a.replay.as_deref()].into_iter().flatten())?;
    let kind: TaskKind = a.kind.parse()?;
    log_config("llm-annotate", a);
    let words = read_words(&a.words)?;
    let config = AnnotateConfig {
        batch_cap: a.batch_cap,
        retries: a.retries,
        params: GenerationParams {
            model: a.model.clone(),
            ..GenerationParams::default()
        },
        rater_id: a.rater_id.clone(),
        concurrency: a.concurrency,
    };
    let run = if let Some(fixture) = &a.replay {
        annotate_batch(&ReplayTransport::load(fixture)?, kind, &words, &config)?
    } else {
        let live = LiveTransport::new(&LiveConfig {
            base_url: a.base_url.clone(),
            api_key_env: a.api_key_env.clone(),
            timeout: Duration::from_secs(a.timeout_secs),
            max_requests_per_minute: a.requests_per_minute,
        });
        match &a.record {
            Some(path) => {
                let recorder = RecordingTransport::new(live);
                let run = annotate_batch(&recorder as &dyn CompletionTransport, kind, &words, &config);
                recorder.save(path)?;
                run?
            }
            None => annotate_batch(&live, kind, &words, &config)?,
        }
    };
    tracing::info!(
        records = run.records.len(),
        rejected = run.rejected.len(),
        unannotated = run.unannotated.len(),
        "annotated"
    );
    write_atomic(&a.out, to_ndjson(&run.records)?.as_bytes())?;
    if let Some(log) = &a.log {
        write_atomic(log, to_pretty_json(&run)?.as_bytes())?;
    }
    Ok(())
}

fn read_records(paths: &[PathBuf]) -> Result<Vec<AnnotationRecord>> {
    let mut out = Vec::new();
    for p in paths {
        out.extend(read_ndjson::<AnnotationRecord>(p)?);
    }
    Ok(out)
}

fn cmd_aggregate(a: &AggregateArgs) -> Result<()> {
    require_inputs(std::iter::once(a.tasks.as_path()).chain(a.records.iter().map(PathBuf::as_path)))?;
    let kind: TaskKind = a.kind.parse()?;
    log_config("aggregate", a);
    let tasks: Vec<Task> = read_ndjson(&a.tasks)?;
    let records = read_records(&a.records)?;
    match kind {
        TaskKind::EmotionAnnotation => {
            let agg = aggregate_emotion_records(&tasks, &records, a.raters, &a.llm_rater)?;
            let mut lexicon = agg.lexicon;
            lexicon.name = a.out.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
            write_atomic(&a.out, format_lexicon(&lexicon).as_bytes())?;
            if let Some(path) = &a.dropped {
                let mut text = agg.dropped.join("\n");
                if !text.is_empty() {
                    text.push('\n');
                }
                write_atomic(path, text.as_bytes())?;
            }
            tracing::info!(
                words = lexicon.len(),
                dropped = agg.dropped.len(),
                unannotated = agg.unannotated.len(),
                "aggregated emotion records"
            );
        }
        TaskKind::TranslationValidation => {
            if a.dropped.is_some() {
                return Err(Error::Invalid("--dropped applies to emotion records only".into()));
            }
            let tmap = collect_translations(&tasks, &records, &a.llm_rater)?;
            write_atomic(&a.out, to_pretty_json(&tmap)?.as_bytes())?;
            tracing::info!(sources = tmap.len(), "collected translations");
        }
    }
    Ok(())
}

fn cmd_alpha(a: &AlphaArgs) -> Result<()> {
    require_inputs(a.matrix.iter().chain(a.records.iter()).map(PathBuf::as_path))?;
    log_config("alpha", a);
    if a.select_trio {
        let records = read_records(&a.records)?;
        let sel = select_annotator_trio(&records)?;
        let text = if a.json {
            to_pretty_json(&sel)?
        } else {
            let mut t = format!("trio\t{}\nalpha\t{:.6}\t({})\ntrios\t{}\n", sel.trio.join(","), sel.alpha, interpret(sel.alpha), sel.trios_evaluated);
            if !sel.excluded.is_empty() {
                t.push_str(&format!("excluded\t{}\n", sel.excluded.join(",")));
            }
            t
        };
        return emit(a.out.as_deref(), &text);
    }
    let matrix = match &a.matrix {
        Some(path) => ReliabilityMatrix::load_tsv(path)?,
        None => {
            let records = read_records(&a.records)?;
            let raters: Vec<String> = if a.raters.is_empty() {
                records.iter().map(|r| r.annotator_id.clone()).collect::<BTreeSet<_>>().into_iter().collect()
            } else {
                a.raters.clone()
            };
            build_reliability_matrix(&records, &raters)
        }
    };
    let report = krippendorff_alpha(&matrix)?;
    let text = if a.json {
        to_pretty_json(&report)?
    } else {
        report.to_text()
    };
    emit(a.out.as_deref(), &text)
}

fn cmd_kappa(a: &KappaArgs) -> Result<()> {
    require_inputs([a.pairs.as_path()])?;
    log_config("kappa", a);
    let rows = read_word_rows(&a.pairs)?;
    let mut left = Vec::with_capacity(rows.len());
    let mut right = Vec::with_capacity(rows.len());
    for (i, row) in rows.into_iter().enumerate() {
        let [x, y]: [String; 2] = row
            .try_into()
            .map_err(|_| Error::parse(&a.pairs, i + 1, "expected two tab-separated labels"))?;
        left.push(x);
        right.push(y);
    }
    let report = cohens_kappa(&left, &right)?;
    let text = if a.json {
        to_pretty_json(&report)?
    } else {
        format!(
            "kappa\t{:.6}\t({})\np_o\t{:.6}\np_e\t{:.6}\nitems\t{}\n",
            report.kappa,
            interpret(report.kappa),
            report.observed_agreement,
            report.expected_agreement,
            report.n_items
        )
    };
    emit(a.out.as_deref(), &text)
}

fn cmd_build_lexicon(a: &BuildLexiconArgs) -> Result<()> {
    require_inputs(
        std::iter::once(a.base.as_path())
            .chain(a.tmap.as_deref())
            .chain(a.annotated.iter().map(PathBuf::as_path)),
    )?;
    log_config("build-lexicon", a);
    let base = parse_lexicon(&a.base)?;
    let mut lex = match &a.tmap {
        Some(p) => merge_expressions(&base, &TranslationMap::load(p)?)?,
        None => base.clone(),
    };
    if a.drop_source_terms {
        for entry in base.entries() {
            lex.remove(&entry.term);
        }
    }
    for path in &a.annotated {
        for entry in parse_lexicon(path)?.entries() {
            lex.add(&entry.term, entry.labels, &[]);
        }
    }
    if !a.keep_neutral {
        lex = filter_non_neutral(&lex);
    }
    lex.name = a.out.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    tracing::info!(entries = lex.len(), "built lexicon");
    write_atomic(&a.out, format_lexicon(&lex).as_bytes())
}

fn cmd_extract(a: &ExtractArgs) -> Result<()> {
    require_inputs([Some(a.lexicon.as_path()), a.input.as_deref()].into_iter().flatten())?;
    let mode: MatchMode = a.mode.parse()?;
    log_config("extract", a);
    let lex = parse_lexicon(&a.lexicon)?;
    let docs: Vec<TextDocument> = match (&a.input, &a.text) {
        (Some(path), _) => read_ndjson(path)?,
        (None, Some(text)) => vec![TextDocument {
            id: "text".into(),
            text: text.clone(),
        }],
        (None, None) => unreachable!("clap requires --input or --text"),
    };
    let extractor = Extractor::new(&lex);
    let profiles: Vec<DocumentProfile> = docs
        .into_iter()
        .map(|d| DocumentProfile {
            profile: extractor.extract(&d.text, mode),
            id: d.id,
        })
        .collect();
    emit(a.out.as_deref(), &to_ndjson(&profiles)?)
}

fn cmd_evaluate(a: &EvaluateArgs) -> Result<()> {
    require_inputs([a.datasets.as_path(), a.lexicons.as_path()])?;
    log_config("evaluate", a);
    let mut paths: Vec<PathBuf> = std::fs::read_dir(&a.datasets)
        .map_err(|e| Error::io(&a.datasets, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "jsonl"))
        .collect();
    paths.sort();
    if paths.is_empty() {
        return Err(Error::Invalid(format!("no *.jsonl datasets in {}", a.datasets.display())));
    }
    let datasets = paths.iter().map(|p| load_dataset(p)).collect::<Result<Vec<_>>>()?;
    let catalog = LexiconCatalog::load_dir(&a.lexicons)?;
    let (rows, baseline) = catalog.resolve(&a.lexicons, &a.baseline)?;
    let mut report = evaluate_matrix(&datasets, &rows, &baseline)?;
    if let Some(reference) = a.reference.as_deref().or(catalog.reference.as_deref()) {
        report = report.with_reference(reference)?;
    }
    emit(a.out.as_deref(), &report.to_table())?;
    if let Some(path) = &a.json {
        write_atomic(path, to_pretty_json(&report)?.as_bytes())?;
    }
    Ok(())
}
