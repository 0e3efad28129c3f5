//! HTTP API for the human study.
//!
//! `GET /session/{id}/next` hands out the next unsolved task with its image,
//! `POST /session/{id}/submit` rasterizes a drawing onto the task with the
//! renderer's own stroke style and scores it, and `GET /session/{id}/export`
//! returns every receipt. Submissions are final: a second one for the same
//! task is answered with 409.

use std::collections::{BTreeMap, HashMap};
use std::fs::OpenOptions;
use std::io::Write;
use std::path::PathBuf;
use std::sync::{Arc, Mutex};

use axum::extract::{Path, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use base64::engine::general_purpose::STANDARD as B64;
use base64::Engine as _;
use planbench_core::dataset::Dataset;
use planbench_core::digest::sha256_hex;
use planbench_core::eval::{Evaluator, FidelityScores, SampleRecord, ValidityScores};
use planbench_core::maze::SolutionCells;
use planbench_core::render::{render_maze_with_stroke, render_queens_with};
use planbench_core::seed::{derive_seed, task_rng};
use planbench_core::task::TaskKind;
use planbench_core::{CellId, GeometryKind, ImageBuffer, Point, Task};
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

/// Receipts with more off-goal error than this are flagged for manual review.
pub const REVIEW_MSE_OUT: f64 = 0.5;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StudyConfig {
    pub out_dir: PathBuf,
    pub seed: u64,
    /// Tasks assigned per report group (kind and scale).
    pub per_group: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum Drawing {
    /// One uninterrupted pointer stroke in canvas units (`[0, 1]²`, y down).
    Stroke { points: Vec<[f64; 2]> },
    /// Clicked cells, in click order.
    Cells { cells: Vec<u32> },
}

/// Client-side phase timestamps in milliseconds.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhaseTimes {
    pub shown: f64,
    pub draw_started: f64,
    pub submitted: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Submission {
    pub task_id: String,
    pub drawing: Drawing,
    pub timestamps: PhaseTimes,
    #[serde(default)]
    pub device: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScoreReceipt {
    pub session: String,
    pub task_id: String,
    pub group: String,
    pub detected: SolutionCells,
    pub validity: ValidityScores,
    pub fidelity: FidelityScores,
    pub think_secs: f64,
    pub draw_secs: f64,
    /// sha256 of the stored rasterized submission.
    pub submission_digest: String,
    pub submission_path: String,
    pub review: bool,
    #[serde(default)]
    pub device: Option<String>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TaskView {
    pub task_id: String,
    pub kind: TaskKind,
    pub geometry: GeometryKind,
    pub scale: u32,
    pub resolution: u32,
    pub path_color: [u8; 3],
    pub queen_color: [u8; 3],
    /// Base64 PNG of the unsolved task.
    pub image: String,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct NextResponse {
    pub session: String,
    pub done: bool,
    pub position: usize,
    pub total: usize,
    pub task: Option<TaskView>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SessionExport {
    pub session: String,
    pub assigned: Vec<String>,
    pub receipts: Vec<ScoreReceipt>,
}

struct Session {
    assigned: Vec<usize>,
    receipts: BTreeMap<String, ScoreReceipt>,
}

pub struct StudyState {
    dataset: Dataset,
    evaluator: Evaluator,
    cfg: StudyConfig,
    sessions: Mutex<HashMap<String, Session>>,
    sink: Mutex<()>,
}

#[derive(Debug)]
pub struct ApiError(StatusCode, String);

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.0, Json(serde_json::json!({ "error": self.1 }))).into_response()
    }
}

fn bad_request(msg: impl Into<String>) -> ApiError {
    ApiError(StatusCode::BAD_REQUEST, msg.into())
}

fn internal(msg: impl std::fmt::Display) -> ApiError {
    ApiError(StatusCode::INTERNAL_SERVER_ERROR, msg.to_string())
}

fn valid_session_id(id: &str) -> bool {
    !id.is_empty() && id.len() <= 64 && id.chars().all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_')
}

impl StudyState {
    /// Restores sessions from receipts already written under `out_dir`.
    pub fn new(dataset: Dataset, cfg: StudyConfig) -> Result<Self, String> {
        if cfg.per_group == 0 {
            return Err("per_group must be at least 1".into());
        }
        std::fs::create_dir_all(&cfg.out_dir).map_err(|e| e.to_string())?;
        let evaluator = dataset.evaluator().map_err(|e| e.to_string())?;
        let state = StudyState { dataset, evaluator, cfg, sessions: Mutex::new(HashMap::new()), sink: Mutex::new(()) };
        if let Ok(text) = std::fs::read_to_string(state.receipts_path()) {
            let mut sessions = state.sessions.lock().expect("sessions poisoned");
            for line in text.lines().filter(|l| !l.trim().is_empty()) {
                let r: ScoreReceipt = serde_json::from_str(line).map_err(|e| format!("receipts: {e}"))?;
                let s = sessions.entry(r.session.clone()).or_insert_with(|| state.new_session(&r.session));
                s.receipts.insert(r.task_id.clone(), r);
            }
        }
        Ok(state)
    }

    fn receipts_path(&self) -> PathBuf {
        self.cfg.out_dir.join("receipts.jsonl")
    }

    fn records_path(&self) -> PathBuf {
        self.cfg.out_dir.join("records.jsonl")
    }

    /// Deterministic assignment: `per_group` tasks from every group, groups in order.
    fn new_session(&self, id: &str) -> Session {
        let mut groups: BTreeMap<String, Vec<usize>> = BTreeMap::new();
        for (i, t) in self.dataset.tasks.iter().enumerate() {
            groups.entry(t.group()).or_default().push(i);
        }
        let mut assigned = Vec::new();
        for (group, mut members) in groups {
            members.shuffle(&mut task_rng(derive_seed(self.cfg.seed, &["study", id, &group])));
            assigned.extend(members.into_iter().take(self.cfg.per_group));
        }
        Session { assigned, receipts: BTreeMap::new() }
    }

    fn next(&self, id: &str) -> Result<NextResponse, ApiError> {
        if !valid_session_id(id) {
            return Err(bad_request("session ids are 1-64 characters of [A-Za-z0-9_-]"));
        }
        let mut sessions = self.sessions.lock().expect("sessions poisoned");
        let session = sessions.entry(id.to_string()).or_insert_with(|| self.new_session(id));
        let total = session.assigned.len();
        let pending = session
            .assigned
            .iter()
            .enumerate()
            .find(|(_, &t)| !session.receipts.contains_key(self.dataset.tasks[t].id()));
        let Some((position, &t)) = pending else {
            return Ok(NextResponse { session: id.to_string(), done: true, position: total, total, task: None });
        };
        let task = &self.dataset.tasks[t];
        let png = std::fs::read(self.dataset.task_image_path(t)).map_err(internal)?;
        let style = self.dataset.style();
        Ok(NextResponse {
            session: id.to_string(),
            done: false,
            position,
            total,
            task: Some(TaskView {
                task_id: task.id().to_string(),
                kind: task.kind(),
                geometry: task.geometry(),
                scale: task.scale(),
                resolution: style.resolution,
                path_color: style.path_color,
                queen_color: style.queen_color,
                image: B64.encode(png),
            }),
        })
    }

    fn rasterize(&self, task: &Task, drawing: &Drawing) -> Result<ImageBuffer, ApiError> {
        let style = self.dataset.style();
        match (task, drawing) {
            (Task::Maze(t), Drawing::Stroke { points }) => {
                if points.iter().flatten().any(|v| !v.is_finite()) {
                    return Err(bad_request("stroke points must be finite"));
                }
                let points: Vec<Point> = points.iter().map(|&[x, y]| Point::new(x, y)).collect();
                render_maze_with_stroke(t, &points, style).map_err(internal)
            }
            (Task::Queen(t), Drawing::Cells { cells }) => {
                let n = (t.n * t.n) as u32;
                if let Some(c) = cells.iter().find(|&&c| c >= n) {
                    return Err(bad_request(format!("cell {c} is off the board")));
                }
                let mut placed: Vec<CellId> = Vec::new();
                for &c in cells {
                    if !placed.contains(&CellId(c)) {
                        placed.push(CellId(c));
                    }
                }
                render_queens_with(t, &placed, style).map_err(internal)
            }
            _ => Err(bad_request("drawing kind does not match the task kind")),
        }
    }

    fn submit(&self, id: &str, sub: Submission) -> Result<ScoreReceipt, ApiError> {
        let PhaseTimes { shown, draw_started, submitted } = sub.timestamps;
        if ![shown, draw_started, submitted].iter().all(|t| t.is_finite()) || draw_started < shown || submitted < draw_started {
            return Err(bad_request("timestamps must satisfy shown ≤ draw_started ≤ submitted"));
        }
        let t = {
            let sessions = self.sessions.lock().expect("sessions poisoned");
            let session = sessions.get(id).ok_or_else(|| ApiError(StatusCode::NOT_FOUND, format!("no session {id}")))?;
            let t = self
                .dataset
                .position(&sub.task_id)
                .filter(|t| session.assigned.contains(t))
                .ok_or_else(|| ApiError(StatusCode::NOT_FOUND, format!("{} is not assigned to {id}", sub.task_id)))?;
            if session.receipts.contains_key(&sub.task_id) {
                return Err(ApiError(StatusCode::CONFLICT, format!("{} already submitted", sub.task_id)));
            }
            t
        };
        let task = &self.dataset.tasks[t];
        let img = self.rasterize(task, &sub.drawing)?;
        let gt = ImageBuffer::load_png(&self.dataset.ground_truth_path(t)).map_err(internal)?;
        let scored = self.evaluator.score(&img, &gt, task).map_err(internal)?;
        let png = img.to_png().map_err(internal)?;
        let rel = format!("sessions/{id}/{}.png", sub.task_id);
        let receipt = ScoreReceipt {
            session: id.to_string(),
            task_id: sub.task_id.clone(),
            group: task.group(),
            detected: scored.detected.clone(),
            validity: scored.validity,
            fidelity: scored.fidelity,
            think_secs: (draw_started - shown) / 1000.0,
            draw_secs: (submitted - draw_started) / 1000.0,
            submission_digest: sha256_hex(&png),
            submission_path: rel.clone(),
            review: scored.fidelity.mse_out > REVIEW_MSE_OUT,
            device: sub.device,
        };

        let _sink = self.sink.lock().expect("sink poisoned");
        {
            // re-check under the sink lock so concurrent duplicates cannot both land
            let sessions = self.sessions.lock().expect("sessions poisoned");
            if sessions.get(id).is_some_and(|s| s.receipts.contains_key(&sub.task_id)) {
                return Err(ApiError(StatusCode::CONFLICT, format!("{} already submitted", sub.task_id)));
            }
        }
        let path = self.cfg.out_dir.join(&rel);
        std::fs::create_dir_all(path.parent().expect("has parent")).map_err(internal)?;
        std::fs::write(&path, &png).map_err(internal)?;
        let record = SampleRecord {
            task_id: sub.task_id.clone(),
            sample_index: 1,
            group: format!("{}:{}", id, task.group()),
            detected: scored.detected,
            validity: scored.validity,
            fidelity: Some(scored.fidelity),
            latency: receipt.think_secs + receipt.draw_secs,
            candidate_digest: Some(receipt.submission_digest.clone()),
            retries: 0,
            error: None,
        };
        append_line(&self.records_path(), &record).map_err(internal)?;
        append_line(&self.receipts_path(), &receipt).map_err(internal)?;
        self.sessions
            .lock()
            .expect("sessions poisoned")
            .get_mut(id)
            .expect("session exists")
            .receipts
            .insert(sub.task_id, receipt.clone());
        Ok(receipt)
    }

    fn export(&self, id: &str) -> Result<SessionExport, ApiError> {
        let sessions = self.sessions.lock().expect("sessions poisoned");
        let session = sessions.get(id).ok_or_else(|| ApiError(StatusCode::NOT_FOUND, format!("no session {id}")))?;
        Ok(SessionExport {
            session: id.to_string(),
            assigned: session.assigned.iter().map(|&t| self.dataset.tasks[t].id().to_string()).collect(),
            receipts: session
                .assigned
                .iter()
                .filter_map(|&t| session.receipts.get(self.dataset.tasks[t].id()).cloned())
                .collect(),
        })
    }
}

fn append_line<T: Serialize>(path: &std::path::Path, value: &T) -> std::io::Result<()> {
    let mut f = OpenOptions::new().create(true).append(true).open(path)?;
    let mut line = serde_json::to_vec(value).expect("serializes");
    line.push(b'\n');
    f.write_all(&line)
}

async fn next_handler(State(state): State<Arc<StudyState>>, Path(id): Path<String>) -> Result<Json<NextResponse>, ApiError> {
    tokio::task::spawn_blocking(move || state.next(&id)).await.map_err(internal)?.map(Json)
}

async fn submit_handler(
    State(state): State<Arc<StudyState>>,
    Path(id): Path<String>,
    Json(sub): Json<Submission>,
) -> Result<Json<ScoreReceipt>, ApiError> {
    tokio::task::spawn_blocking(move || state.submit(&id, sub)).await.map_err(internal)?.map(Json)
}

async fn export_handler(State(state): State<Arc<StudyState>>, Path(id): Path<String>) -> Result<Json<SessionExport>, ApiError> {
    state.export(&id).map(Json)
}

pub fn router(state: Arc<StudyState>) -> Router {
    Router::new()
        .route("/session/{id}/next", get(next_handler))
        .route("/session/{id}/submit", post(submit_handler))
        .route("/session/{id}/export", get(export_handler))
        .with_state(state)
}

pub async fn serve(listener: tokio::net::TcpListener, state: Arc<StudyState>) -> std::io::Result<()> {
    axum::serve(listener, router(state)).await
}

/// Binds `addr` and serves until the process exits.
pub fn serve_blocking(addr: &str, state: Arc<StudyState>) -> std::io::Result<()> {
    let rt = tokio::runtime::Builder::new_multi_thread().enable_all().build()?;
    rt.block_on(async {
        let listener = tokio::net::TcpListener::bind(addr).await?;
        log::info!("study API listening on http://{}", listener.local_addr()?);
        serve(listener, state).await
    })
}
