//! HTTP annotation service backed by an append-only submission journal.
//!
//! State is never stored anywhere but the journal: on startup every line is
//! folded into memory, and each accepted submission is appended and synced
//! before it is acknowledged.

use std::collections::{BTreeMap, HashMap};
use std::fs::{File, OpenOptions};
use std::io::{Seek, SeekFrom, Write};
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};
use std::time::{SystemTime, UNIX_EPOCH};

use axum::extract::{Query, State};
use axum::http::{HeaderMap, StatusCode};
use axum::response::{IntoResponse, Response as HttpResponse};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::annotation::{validate_payload, AnnotationRecord, FieldError, ManifestEntry, Response, Task};
use crate::error::{Error, Result};
use crate::io::{to_ndjson, write_atomic};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct JournalEntry {
    pub seq: u64,
    pub ts_ms: u64,
    pub annotator_id: String,
    pub task_id: String,
    pub response: Response,
}

#[derive(Debug, thiserror::Error)]
pub enum ServiceError {
    #[error("not found: {0}")]
    NotFound(String),
    #[error("forbidden: {0}")]
    Forbidden(String),
    #[error("conflict: {0}")]
    Conflict(String),
    #[error("invalid payload")]
    Unprocessable(Vec<FieldError>),
    #[error(transparent)]
    Storage(#[from] Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Counts {
    pub submitted: usize,
    pub pending: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Progress {
    pub annotators: BTreeMap<String, Counts>,
    pub global: Counts,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Ack {
    pub status: String,
    pub seq: u64,
    pub task_id: String,
    pub resubmission: bool,
}

pub struct SessionStore {
    tasks: HashMap<String, Task>,
    portions: BTreeMap<String, Vec<String>>,
    latest: HashMap<(String, String), (u64, Response)>,
    journal: File,
    journal_path: PathBuf,
    next_seq: u64,
}

impl SessionStore {
    /// Opens (or creates) the journal and folds it into memory.
    ///
    /// A torn final line left by a crash is cut off; any other unreadable line is an error.
    pub fn open(tasks: Vec<Task>, manifest: &[ManifestEntry], journal_path: &Path) -> Result<Self> {
        let tasks: HashMap<String, Task> = tasks.into_iter().map(|t| (t.id.clone(), t)).collect();
        let mut portions = BTreeMap::new();
        for entry in manifest {
            if let Some(missing) = entry.task_ids.iter().find(|id| !tasks.contains_key(*id)) {
                return Err(Error::Invalid(format!(
                    "manifest assigns unknown task `{missing}` to `{}`",
                    entry.annotator_id
                )));
            }
            if portions
                .insert(entry.annotator_id.clone(), entry.task_ids.clone())
                .is_some()
            {
                return Err(Error::Invalid(format!(
                    "annotator `{}` is assigned more than once",
                    entry.annotator_id
                )));
            }
        }

        let mut journal = OpenOptions::new()
            .create(true)
            .read(true)
            .append(true)
            .open(journal_path)
            .map_err(|e| Error::io(journal_path, e))?;
        let text = std::fs::read(journal_path).map_err(|e| Error::io(journal_path, e))?;
        let complete = text.iter().rposition(|b| *b == b'\n').map_or(0, |i| i + 1);
        if complete < text.len() {
            tracing::warn!(
                bytes = text.len() - complete,
                "discarding torn final journal line"
            );
            journal
                .set_len(complete as u64)
                .map_err(|e| Error::io(journal_path, e))?;
            journal
                .seek(SeekFrom::End(0))
                .map_err(|e| Error::io(journal_path, e))?;
        }
        let text = std::str::from_utf8(&text[..complete])
            .map_err(|e| Error::parse(journal_path, 0, e.to_string()))?;

        let mut store = SessionStore {
            tasks,
            portions,
            latest: HashMap::new(),
            journal,
            journal_path: journal_path.to_path_buf(),
            next_seq: 1,
        };
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let entry: JournalEntry = serde_json::from_str(line)
                .map_err(|e| Error::parse(journal_path, i + 1, e.to_string()))?;
            if !store.is_assigned(&entry.annotator_id, &entry.task_id) {
                return Err(Error::parse(
                    journal_path,
                    i + 1,
                    format!(
                        "journal entry for `{}`/`{}` is outside the assignments",
                        entry.annotator_id, entry.task_id
                    ),
                ));
            }
            store.apply(entry);
        }
        Ok(store)
    }

    fn apply(&mut self, entry: JournalEntry) {
        self.next_seq = self.next_seq.max(entry.seq + 1);
        self.latest
            .insert((entry.annotator_id, entry.task_id), (entry.seq, entry.response));
    }

    fn is_assigned(&self, annotator: &str, task_id: &str) -> bool {
        self.portions
            .get(annotator)
            .is_some_and(|p| p.iter().any(|t| t == task_id))
    }

    fn is_submitted(&self, annotator: &str, task_id: &str) -> bool {
        self.latest
            .contains_key(&(annotator.to_string(), task_id.to_string()))
    }

    pub fn journal_path(&self) -> &Path {
        &self.journal_path
    }

    /// Lowest-indexed pending task in the annotator's portion.
    pub fn next_task(&self, annotator: &str) -> Result<Option<&Task>, ServiceError> {
        let portion = self
            .portions
            .get(annotator)
            .ok_or_else(|| ServiceError::NotFound(format!("unknown annotator `{annotator}`")))?;
        Ok(portion
            .iter()
            .find(|t| !self.is_submitted(annotator, t))
            .map(|t| &self.tasks[t]))
    }

    pub fn submit(
        &mut self,
        annotator: &str,
        task_id: &str,
        payload: &Value,
    ) -> Result<Ack, ServiceError> {
        if !self.portions.contains_key(annotator) {
            return Err(ServiceError::NotFound(format!("unknown annotator `{annotator}`")));
        }
        if !self.is_assigned(annotator, task_id) {
            return Err(ServiceError::Forbidden(format!(
                "task `{task_id}` is not assigned to `{annotator}`"
            )));
        }
        let resubmission = self.is_submitted(annotator, task_id);
        if !resubmission {
            let next = self.next_task(annotator)?.map(|t| t.id.clone());
            if next.as_deref() != Some(task_id) {
                return Err(ServiceError::Conflict(format!(
                    "tasks are answered in order; next for `{annotator}` is `{}`",
                    next.unwrap_or_default()
                )));
            }
        }
        let kind = self.tasks[task_id].kind();
        let response = validate_payload(kind, payload).map_err(ServiceError::Unprocessable)?;
        let entry = JournalEntry {
            seq: self.next_seq,
            ts_ms: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map_or(0, |d| d.as_millis() as u64),
            annotator_id: annotator.to_string(),
            task_id: task_id.to_string(),
            response,
        };
        let mut line = serde_json::to_string(&entry).map_err(Error::from)?;
        line.push('\n');
        self.journal
            .write_all(line.as_bytes())
            .and_then(|()| self.journal.sync_data())
            .map_err(|e| Error::io(&self.journal_path, e))?;
        let seq = entry.seq;
        self.apply(entry);
        Ok(Ack {
            status: "stored".into(),
            seq,
            task_id: task_id.to_string(),
            resubmission,
        })
    }

    pub fn progress(&self, annotator: Option<&str>) -> Progress {
        let mut annotators = BTreeMap::new();
        for (id, portion) in &self.portions {
            if annotator.is_some_and(|a| a != id) {
                continue;
            }
            let submitted = portion.iter().filter(|t| self.is_submitted(id, t)).count();
            annotators.insert(
                id.clone(),
                Counts {
                    submitted,
                    pending: portion.len() - submitted,
                },
            );
        }
        let global = annotators.values().fold(Counts::default(), |acc, c| Counts {
            submitted: acc.submitted + c.submitted,
            pending: acc.pending + c.pending,
        });
        Progress { annotators, global }
    }

    /// Latest submission per (annotator, task), annotators by id, tasks in portion order.
    pub fn export(&self) -> Vec<AnnotationRecord> {
        let mut out = Vec::new();
        for (annotator, portion) in &self.portions {
            for task_id in portion {
                if let Some((_, response)) = self.latest.get(&(annotator.clone(), task_id.clone())) {
                    out.push(AnnotationRecord {
                        annotator_id: annotator.clone(),
                        task_id: task_id.clone(),
                        response: response.clone(),
                    });
                }
            }
        }
        out
    }

    pub fn export_records(&self, path: &Path) -> Result<()> {
        write_atomic(path, to_ndjson(&self.export())?.as_bytes())
    }
}

#[derive(Clone)]
pub struct AppState {
    store: Arc<Mutex<SessionStore>>,
    admin_token: Option<String>,
}

impl AppState {
    pub fn new(store: SessionStore, admin_token: Option<String>) -> Self {
        AppState {
            store: Arc::new(Mutex::new(store)),
            admin_token,
        }
    }
}

impl IntoResponse for ServiceError {
    fn into_response(self) -> HttpResponse {
        let (status, body) = match &self {
            ServiceError::NotFound(m) => (StatusCode::NOT_FOUND, json!({"error": m})),
            ServiceError::Forbidden(m) => (StatusCode::FORBIDDEN, json!({"error": m})),
            ServiceError::Conflict(m) => (StatusCode::CONFLICT, json!({"error": m})),
            ServiceError::Unprocessable(errors) => (
                StatusCode::UNPROCESSABLE_ENTITY,
                json!({"error": "invalid payload", "fields": errors}),
            ),
            ServiceError::Storage(e) => {
                tracing::error!(error = %e, "storage failure");
                (StatusCode::INTERNAL_SERVER_ERROR, json!({"error": e.to_string()}))
            }
        };
        (status, Json(body)).into_response()
    }
}

#[derive(Deserialize)]
struct AnnotatorQuery {
    annotator_id: Option<String>,
}

#[derive(Deserialize)]
struct NextQuery {
    annotator_id: String,
}

#[derive(Deserialize)]
struct SubmitRequest {
    annotator_id: String,
    task_id: String,
    payload: Value,
}

async fn next_task(
    State(state): State<AppState>,
    Query(q): Query<NextQuery>,
) -> Result<HttpResponse, ServiceError> {
    let store = state.store.lock().expect("store poisoned");
    Ok(match store.next_task(&q.annotator_id)? {
        Some(task) => Json(task.clone()).into_response(),
        None => StatusCode::NO_CONTENT.into_response(),
    })
}

async fn submit(
    State(state): State<AppState>,
    Json(req): Json<SubmitRequest>,
) -> Result<Json<Ack>, ServiceError> {
    let mut store = state.store.lock().expect("store poisoned");
    store.submit(&req.annotator_id, &req.task_id, &req.payload).map(Json)
}

async fn progress(State(state): State<AppState>, Query(q): Query<AnnotatorQuery>) -> Json<Progress> {
    let store = state.store.lock().expect("store poisoned");
    Json(store.progress(q.annotator_id.as_deref()))
}

async fn export(State(state): State<AppState>, headers: HeaderMap) -> HttpResponse {
    let Some(expected) = state.admin_token.as_deref() else {
        return (
            StatusCode::FORBIDDEN,
            Json(json!({"error": "export is disabled; start the service with an admin token"})),
        )
            .into_response();
    };
    let given = headers
        .get("x-admin-token")
        .and_then(|v| v.to_str().ok())
        .or_else(|| {
            headers
                .get("authorization")
                .and_then(|v| v.to_str().ok())
                .and_then(|v| v.strip_prefix("Bearer "))
        });
    if given != Some(expected) {
        return (StatusCode::UNAUTHORIZED, Json(json!({"error": "admin token required"}))).into_response();
    }
    let store = state.store.lock().expect("store poisoned");
    match to_ndjson(&store.export()) {
        Ok(body) => ([("content-type", "application/x-ndjson")], body).into_response(),
        Err(e) => ServiceError::Storage(e).into_response(),
    }
}

pub fn router(state: AppState, ui_dir: Option<&Path>) -> Router {
    let api = Router::new()
        .route("/api/tasks/next", get(next_task))
        .route("/api/annotations", post(submit))
        .route("/api/progress", get(progress))
        .route("/api/export", get(export))
        .with_state(state);
    match ui_dir {
        Some(dir) => api.fallback_service(tower_http::services::ServeDir::new(dir)),
        None => api,
    }
}

pub struct ServeConfig {
    pub bind: SocketAddr,
    pub ui_dir: Option<PathBuf>,
    pub admin_token: Option<String>,
}

/// Binds, prints `listening on <addr>` to stdout, and serves until Ctrl-C.
pub async fn serve(store: SessionStore, config: ServeConfig) -> Result<()> {
    let listener = tokio::net::TcpListener::bind(config.bind)
        .await
        .map_err(|e| Error::Invalid(format!("cannot bind {}: {e}", config.bind)))?;
    let addr = listener
        .local_addr()
        .map_err(|e| Error::Invalid(e.to_string()))?;
    println!("listening on {addr}");
    let _ = std::io::stdout().flush();
    let app = router(AppState::new(store, config.admin_token), config.ui_dir.as_deref());
    axum::serve(listener, app)
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
        .map_err(|e| Error::Invalid(format!("server error: {e}")))
}
