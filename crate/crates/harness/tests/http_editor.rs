mod common;

use std::sync::atomic::{AtomicU32, Ordering};
use std::sync::Arc;
use std::time::Duration;

use axum::http::StatusCode;
use axum::routing::post;
use axum::{Json, Router};
use base64::engine::general_purpose::STANDARD as B64;
use base64::Engine as _;
use planbench_core::eval::read_records;
use planbench_harness::editor::HttpEditor;
use planbench_harness::{run_eval, EditError, EditMode, EditRequest, ImageEditor, ManualClock, RetryPolicy, RunConfig, SampleRunner};
use serde_json::{json, Value};

/// Echoes the request image back, failing the first `failures` calls with 503.
fn echo_server(failures: u32) -> (String, Arc<AtomicU32>) {
    let calls = Arc::new(AtomicU32::new(0));
    let counter = calls.clone();
    let router = Router::new()
        .route(
            "/edit",
            post(move |Json(body): Json<Value>| {
                let counter = counter.clone();
                async move {
                    let n = counter.fetch_add(1, Ordering::SeqCst);
                    if n < failures {
                        return (StatusCode::SERVICE_UNAVAILABLE, Json(json!({"error": "busy"})));
                    }
                    if body["mode"] == "text" {
                        return (StatusCode::OK, Json(json!({"text": "<think>go right</think>"})));
                    }
                    (StatusCode::OK, Json(json!({"image": body["image"]})))
                }
            }),
        )
        .route("/reject", post(|| async { (StatusCode::BAD_REQUEST, "no") }))
        .route("/garbage", post(|| async { (StatusCode::OK, Json(json!({"image": "%%%"}))) }));
    let addr = common::spawn_server(router);
    (format!("http://{addr}"), calls)
}

fn request<'a>(png: &'a [u8], mode: EditMode) -> EditRequest<'a> {
    EditRequest { task_id: "t", sample_index: 1, prompt: "solve", image_png: png, mode }
}

#[test]
fn http_editor_round_trips_and_classifies_errors() {
    let (base, _) = echo_server(0);
    let editor = HttpEditor::new("echo", &format!("{base}/edit"), Duration::from_secs(10));
    let resp = editor.edit(&request(b"png", EditMode::Image)).unwrap();
    assert_eq!(resp.image_png.as_deref(), Some(&b"png"[..]));
    let text = editor.edit(&request(b"png", EditMode::Text)).unwrap();
    assert_eq!(text.text.as_deref(), Some("<think>go right</think>"));
    assert_eq!(B64.encode(b"png"), "cG5n");

    let reject = HttpEditor::new("r", &format!("{base}/reject"), Duration::from_secs(10));
    assert!(matches!(reject.edit(&request(b"x", EditMode::Image)), Err(EditError::Rejected { status: 400, .. })));
    let garbage = HttpEditor::new("g", &format!("{base}/garbage"), Duration::from_secs(10));
    assert!(matches!(garbage.edit(&request(b"x", EditMode::Image)), Err(EditError::Malformed(_))));
    let closed = HttpEditor::new("c", "http://127.0.0.1:1/edit", Duration::from_secs(10));
    let err = closed.edit(&request(b"x", EditMode::Image)).unwrap_err();
    assert!(err.retryable(), "{err}");
}

#[test]
fn http_editor_drives_a_run_through_server_errors() {
    let dir = tempfile::tempdir().unwrap();
    let ds = common::small_dataset(&dir.path().join("bench"));
    let (base, calls) = echo_server(2);
    let editor = HttpEditor::new("echo", &format!("{base}/edit"), Duration::from_secs(10));
    let clock = ManualClock::new();
    let mut runner = SampleRunner::new(&ds, &editor, &clock).unwrap();
    runner.retry = RetryPolicy { max_retries: 3, base_delay: 1.0, max_delay: 8.0 };
    let records = dir.path().join("records.jsonl");
    run_eval(&runner, &RunConfig { k: 1, parallelism: 1, ..Default::default() }, &records).unwrap();
    let recs = read_records(&records).unwrap();
    assert_eq!(recs.len(), ds.tasks.len());
    assert_eq!(recs[0].retries, 2);
    assert!(recs.iter().all(|r| r.error.is_none() && r.candidate_digest.is_some()));
    assert_eq!(calls.load(Ordering::SeqCst) as usize, ds.tasks.len() + 2);
}
