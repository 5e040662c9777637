//! Run the annotation service in-process and walk one annotator through a queue.
//!
//! With `--serve` it binds 127.0.0.1:8080 instead and waits for Ctrl-C, so the
//! web UI (or curl) can talk to it.

use axum::body::{to_bytes, Body};
use axum::http::Request;
use cantolex::annotation::{ManifestEntry, Task};
use cantolex::service::{router, serve, AppState, ServeConfig, SessionStore};
use serde_json::json;
use tower::ServiceExt;

#[tokio::main]
async fn main() -> cantolex::Result<()> {
    let dir = tempfile::tempdir().map_err(|e| cantolex::Error::Invalid(e.to_string()))?;
    let tasks = vec![
        Task::emotion("開心")?,
        Task::emotion("嬲")?,
        Task::translation("afraid", "害怕")?,
    ];
    let manifest = vec![ManifestEntry {
        portion_index: 0,
        group: "A".into(),
        annotator_id: "A01".into(),
        task_ids: tasks.iter().map(|t| t.id.clone()).collect(),
    }];
    let journal = dir.path().join("journal.jsonl");
    let store = SessionStore::open(tasks, &manifest, &journal)?;

    if std::env::args().any(|a| a == "--serve") {
        let config = ServeConfig {
            bind: "127.0.0.1:8080".parse().unwrap(),
            ui_dir: None,
            admin_token: Some("demo".into()),
        };
        return serve(store, config).await;
    }

    let app = router(AppState::new(store, Some("demo".into())), None);
    let answers = [
        json!({"labels": ["joy", "positive"]}),
        json!({"labels": ["anger", "negative"]}),
        json!({"alternate_expressions": ["驚", "怕"]}),
    ];
    for payload in answers {
        let req = Request::get("/api/tasks/next?annotator_id=A01").body(Body::empty()).unwrap();
        let resp = app.clone().oneshot(req).await.unwrap();
        let task: serde_json::Value = serde_json::from_slice(&to_bytes(resp.into_body(), 1 << 16).await.unwrap()).unwrap();
        println!("next: {} {}", task["id"], task["payload"]);

        let body = json!({"annotator_id": "A01", "task_id": task["id"], "payload": payload});
        let req = Request::post("/api/annotations")
            .header("content-type", "application/json")
            .body(Body::from(body.to_string()))
            .unwrap();
        let resp = app.clone().oneshot(req).await.unwrap();
        let status = resp.status();
        println!("  {status} {}", String::from_utf8_lossy(&to_bytes(resp.into_body(), 1 << 16).await.unwrap()));
    }

    let req = Request::get("/api/progress").body(Body::empty()).unwrap();
    let resp = app.clone().oneshot(req).await.unwrap();
    println!("progress: {}", String::from_utf8_lossy(&to_bytes(resp.into_body(), 1 << 16).await.unwrap()));
    println!("journal:\n{}", std::fs::read_to_string(&journal).unwrap_or_default());
    Ok(())
}
