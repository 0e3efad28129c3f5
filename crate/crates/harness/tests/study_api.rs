mod common;

use std::sync::Arc;

use planbench_core::render::path_polyline;
use planbench_core::Task;
use planbench_harness::serve::{router, NextResponse, ScoreReceipt, SessionExport, StudyConfig, StudyState};
use serde_json::{json, Value};

struct Client {
    base: String,
    agent: ureq::Agent,
}

impl Client {
    fn new(base: String) -> Self {
        let agent = ureq::Agent::config_builder().http_status_as_error(false).build().into();
        Client { base, agent }
    }

    fn get(&self, path: &str) -> (u16, Value) {
        let mut r = self.agent.get(&format!("{}{path}", self.base)).call().unwrap();
        (r.status().as_u16(), r.body_mut().read_json().unwrap())
    }

    fn post(&self, path: &str, body: &Value) -> (u16, Value) {
        let mut r = self.agent.post(&format!("{}{path}", self.base)).send_json(body).unwrap();
        (r.status().as_u16(), r.body_mut().read_json().unwrap())
    }
}

fn times() -> Value {
    json!({"shown": 1000.0, "draw_started": 4000.0, "submitted": 6500.0})
}

/// The drawing a perfect participant would submit.
fn perfect_drawing(task: &Task) -> Value {
    match task {
        Task::Maze(m) => {
            let board = task.board().unwrap();
            let points: Vec<[f64; 2]> =
                path_polyline(&board, m.goal_path.cells()).unwrap().iter().map(|p| [p.x, p.y]).collect();
            json!({"kind": "stroke", "points": points})
        }
        Task::Queen(_) => json!({"kind": "cells", "cells": task.goal().cells()}),
    }
}

#[test]
fn study_session_runs_end_to_end() {
    let dir = tempfile::tempdir().unwrap();
    let ds = common::small_dataset(&dir.path().join("bench"));
    let tasks = ds.tasks.clone();
    let cfg = StudyConfig { out_dir: dir.path().join("study"), seed: 3, per_group: 1 };
    let state = Arc::new(StudyState::new(ds, cfg.clone()).unwrap());
    let client = Client::new(format!("http://{}", common::spawn_server(router(state))));

    assert_eq!(client.get("/session/no%20way/next").0, 400);
    assert_eq!(client.get("/session/ghost/export").0, 404);

    let mut seen = Vec::new();
    let mut imperfect = None;
    loop {
        let (status, body) = client.get("/session/p01/next");
        assert_eq!(status, 200);
        let next: NextResponse = serde_json::from_value(body).unwrap();
        if next.done {
            assert_eq!(next.total, seen.len());
            break;
        }
        let view = next.task.unwrap();
        assert!(!view.image.is_empty());
        let task = tasks.iter().find(|t| t.id() == view.task_id).unwrap();
        let submit = |drawing: Value, timestamps: Value| {
            client.post("/session/p01/submit", &json!({"task_id": view.task_id, "drawing": drawing, "timestamps": timestamps}))
        };

        let wrong_kind = match task {
            Task::Maze(_) => json!({"kind": "cells", "cells": [0]}),
            Task::Queen(_) => json!({"kind": "stroke", "points": [[0.5, 0.5]]}),
        };
        assert_eq!(submit(wrong_kind, times()).0, 400);
        let backwards = json!({"shown": 5.0, "draw_started": 4.0, "submitted": 6.0});
        assert_eq!(submit(perfect_drawing(task), backwards).0, 400);

        // leave the first maze unfinished to exercise partial credit
        let drawing = match task {
            Task::Maze(m) if imperfect.is_none() => {
                imperfect = Some(view.task_id.clone());
                let board = task.board().unwrap();
                let half = &m.goal_path.cells()[..m.goal_path.len().div_ceil(2)];
                let points: Vec<[f64; 2]> = path_polyline(&board, half).unwrap().iter().map(|p| [p.x, p.y]).collect();
                json!({"kind": "stroke", "points": points})
            }
            _ => perfect_drawing(task),
        };
        let (status, body) = submit(drawing, times());
        assert_eq!(status, 200, "{body}");
        let receipt: ScoreReceipt = serde_json::from_value(body).unwrap();
        assert_eq!((receipt.think_secs, receipt.draw_secs), (3.0, 2.5));
        if imperfect.as_deref() == Some(view.task_id.as_str()) && matches!(task, Task::Maze(_)) {
            assert!(!receipt.validity.success);
            assert!(receipt.validity.coverage > 0.4 && receipt.validity.coverage < 1.0);
        } else {
            assert!(receipt.validity.success, "{}: {:?}", view.task_id, receipt.validity);
        }
        assert!(cfg.out_dir.join(&receipt.submission_path).exists());

        assert_eq!(submit(perfect_drawing(task), times()).0, 409);
        seen.push(view.task_id);
    }
    // one task per group
    let groups: std::collections::BTreeSet<String> = tasks.iter().map(|t| t.group()).collect();
    assert_eq!(seen.len(), groups.len());

    let (status, body) = client.get("/session/p01/export");
    assert_eq!(status, 200);
    let export: SessionExport = serde_json::from_value(body).unwrap();
    assert_eq!(export.assigned, seen);
    assert_eq!(export.receipts.len(), seen.len());

    // receipts survive a restart, so finished tasks are not handed out again
    let ds = planbench_core::dataset::Dataset::open(&dir.path().join("bench")).unwrap();
    let state = Arc::new(StudyState::new(ds, cfg.clone()).unwrap());
    let client = Client::new(format!("http://{}", common::spawn_server(router(state))));
    let (_, body) = client.get("/session/p01/next");
    assert_eq!(body["done"], true);
    let records = planbench_core::eval::read_records(&cfg.out_dir.join("records.jsonl")).unwrap();
    assert_eq!(records.len(), seen.len());
}

#[test]
fn assignment_is_deterministic_per_session() {
    let dir = tempfile::tempdir().unwrap();
    let ds = common::small_dataset(&dir.path().join("bench"));
    let cfg = StudyConfig { out_dir: dir.path().join("study"), seed: 3, per_group: 2 };
    let state = Arc::new(StudyState::new(ds, cfg).unwrap());
    let client = Client::new(format!("http://{}", common::spawn_server(router(state))));
    let first = |session: &str| -> Vec<String> {
        client.get(&format!("/session/{session}/next"));
        let (_, body) = client.get(&format!("/session/{session}/export"));
        serde_json::from_value::<SessionExport>(body).unwrap().assigned
    };
    let a = first("alpha");
    assert_eq!(a, first("alpha"));
    assert_eq!(a.len(), 10);
    let mut sorted = a.clone();
    sorted.sort();
    sorted.dedup();
    assert_eq!(sorted.len(), a.len());
}
