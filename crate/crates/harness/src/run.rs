//! Sample collection: k-sample evaluation runs and time-budgeted runs.

use std::collections::{BTreeMap, HashSet};
use std::fs::OpenOptions;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::mpsc;

use log::{info, warn};
use planbench_core::dataset::{Dataset, DatasetError};
use planbench_core::digest::sha256_hex;
use planbench_core::eval::{align_candidate, EvalError, Evaluator, SampleRecord};
use planbench_core::ImageBuffer;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::clock::Clock;
use crate::editor::{EditError, EditMode, EditRequest, ImageEditor};
use crate::prompt::{image_stage_prompt, prompt, PromptVariant};
use crate::retry::{with_retry, RateLimiter, RetryPolicy};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid run config: {0}")]
    Config(String),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("records file {path} line {line} is corrupt")]
    CorruptRecords { path: PathBuf, line: usize },
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> HarnessError + '_ {
    move |source| HarnessError::Io { path: path.to_path_buf(), source }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Samples per task; sample 1 is the first-round generation.
    pub k: u32,
    /// Maximum in-flight edit requests.
    pub parallelism: usize,
    pub variant: PromptVariant,
    pub retry: RetryPolicy,
    pub rate_limit_per_minute: Option<f64>,
    /// Stop cleanly after this many new records (simulates an interruption).
    #[serde(default)]
    pub stop_after: Option<usize>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            k: 5,
            parallelism: 4,
            variant: PromptVariant::Plain,
            retry: RetryPolicy::default(),
            rate_limit_per_minute: None,
            stop_after: None,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.k == 0 {
            return Err(HarnessError::Config("k must be at least 1".into()));
        }
        if self.parallelism == 0 {
            return Err(HarnessError::Config("parallelism must be at least 1".into()));
        }
        if self.rate_limit_per_minute.is_some_and(|r| !(r > 0.0)) {
            return Err(HarnessError::Config("rate limit must be positive".into()));
        }
        Ok(())
    }
}

/// Everything needed to collect and score one sample.
pub struct SampleRunner<'a> {
    pub dataset: &'a Dataset,
    pub evaluator: Evaluator,
    pub editor: &'a dyn ImageEditor,
    pub clock: &'a dyn Clock,
    pub retry: RetryPolicy,
    pub limiter: Option<RateLimiter>,
    pub variant: PromptVariant,
    /// Where received payloads are stored verbatim as `{task_id}.{sample}.png`.
    pub candidates_dir: Option<PathBuf>,
}

impl<'a> SampleRunner<'a> {
    pub fn new(dataset: &'a Dataset, editor: &'a dyn ImageEditor, clock: &'a dyn Clock) -> Result<Self, HarnessError> {
        Ok(SampleRunner {
            dataset,
            evaluator: dataset.evaluator()?,
            editor,
            clock,
            retry: RetryPolicy::default(),
            limiter: None,
            variant: PromptVariant::Plain,
            candidates_dir: None,
        })
    }

    fn call(&self, request: &EditRequest<'_>, retries: &mut u32) -> Result<crate::editor::EditResponse, EditError> {
        let label = format!("{} sample {}", request.task_id, request.sample_index);
        let (out, spent) = with_retry(&self.retry, self.clock, self.limiter.as_ref(), &label, || self.editor.edit(request));
        *retries += spent;
        out
    }

    /// Requests, stores and scores one sample. Failures become non-success records.
    pub fn run(&self, task_index: usize, sample_index: u32) -> SampleRecord {
        let task = &self.dataset.tasks[task_index];
        let (id, group) = (task.id(), task.group());
        let task_png = match std::fs::read(self.dataset.task_image_path(task_index)) {
            Ok(b) => b,
            Err(e) => return SampleRecord::failed(id, sample_index, &group, 0.0, format!("task-image: {e}")),
        };
        let started = self.clock.now();
        let mut retries = 0;
        let mut request =
            EditRequest { task_id: id, sample_index, prompt: "", image_png: &task_png, mode: EditMode::Image };
        let text_prompt = prompt(task.kind(), self.variant);
        let image_prompt = if self.variant == PromptVariant::TwoStage {
            request.prompt = &text_prompt;
            request.mode = EditMode::Text;
            match self.call(&request, &mut retries) {
                Ok(resp) => image_stage_prompt(task.kind(), resp.text.as_deref().unwrap_or("")),
                Err(e) => return self.failure(id, sample_index, &group, started, retries, e.tag(), None),
            }
        } else {
            text_prompt.clone()
        };
        request.prompt = &image_prompt;
        request.mode = EditMode::Image;
        let payload = match self.call(&request, &mut retries) {
            Ok(resp) => match resp.image_png {
                Some(p) => p,
                None => return self.failure(id, sample_index, &group, started, retries, "malformed", None),
            },
            Err(e) => return self.failure(id, sample_index, &group, started, retries, e.tag(), None),
        };
        let digest = sha256_hex(&payload);
        if let Some(dir) = &self.candidates_dir {
            let path = dir.join(format!("{id}.{sample_index}.png"));
            if let Err(e) = std::fs::create_dir_all(dir).and_then(|_| std::fs::write(&path, &payload)) {
                warn!("could not store candidate {}: {e}", path.display());
            }
        }
        let candidate = match ImageBuffer::from_png(&payload) {
            Ok(img) => img,
            Err(_) => return self.failure(id, sample_index, &group, started, retries, "undecodable", Some(digest)),
        };
        let latency = self.clock.now() - started;
        let scored = align_candidate(&candidate, self.evaluator.style().resolution).and_then(|aligned| {
            let gt = ImageBuffer::load_png(&self.dataset.ground_truth_path(task_index))?;
            self.evaluator.score(&aligned, &gt, task)
        });
        match scored {
            Ok(s) => SampleRecord {
                task_id: id.to_string(),
                sample_index,
                group,
                detected: s.detected,
                validity: s.validity,
                fidelity: Some(s.fidelity),
                latency,
                candidate_digest: Some(digest),
                retries,
                error: None,
            },
            Err(e) => {
                warn!("{id} sample {sample_index}: scoring failed: {e}");
                self.failure(id, sample_index, &group, started, retries, "scoring", Some(digest))
            }
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn failure(
        &self,
        id: &str,
        sample_index: u32,
        group: &str,
        started: f64,
        retries: u32,
        tag: &str,
        digest: Option<String>,
    ) -> SampleRecord {
        let mut r = SampleRecord::failed(id, sample_index, group, self.clock.now() - started, tag.to_string());
        r.retries = retries;
        r.candidate_digest = digest;
        r
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RunOutcome {
    pub written: usize,
    /// Samples already present in the records file.
    pub skipped: usize,
    pub failed: usize,
    pub interrupted: bool,
}

/// Reads records written so far, truncating a torn final line.
fn load_existing(path: &Path) -> Result<Vec<SampleRecord>, HarnessError> {
    let Ok(file) = std::fs::File::open(path) else {
        return Ok(Vec::new());
    };
    let mut records = Vec::new();
    let mut good_len = 0u64;
    let lines: Vec<String> = BufReader::new(file).lines().collect::<Result<_, _>>().map_err(io_err(path))?;
    let total = lines.len();
    for (i, line) in lines.iter().enumerate() {
        if line.trim().is_empty() {
            good_len += line.len() as u64 + 1;
            continue;
        }
        match serde_json::from_str::<SampleRecord>(line) {
            Ok(r) => {
                records.push(r);
                good_len += line.len() as u64 + 1;
            }
            Err(_) if i + 1 == total => {
                warn!("dropping torn final record in {}", path.display());
                let f = OpenOptions::new().write(true).open(path).map_err(io_err(path))?;
                f.set_len(good_len).map_err(io_err(path))?;
            }
            Err(_) => return Err(HarnessError::CorruptRecords { path: path.to_path_buf(), line: i + 1 }),
        }
    }
    Ok(records)
}

/// Collects `k` samples per task and appends one record per line to `records_path`.
///
/// Records are written in (task, sample) order regardless of completion
/// order, and samples already in the file are skipped, so an interrupted run
/// resumed later produces the same file as an uninterrupted one.
pub fn run_eval(runner: &SampleRunner<'_>, cfg: &RunConfig, records_path: &Path) -> Result<RunOutcome, HarnessError> {
    cfg.validate()?;
    let existing = load_existing(records_path)?;
    let done: HashSet<(String, u32)> = existing.iter().map(|r| (r.task_id.clone(), r.sample_index)).collect();
    let items: Vec<(usize, u32)> = (0..runner.dataset.tasks.len())
        .flat_map(|t| (1..=cfg.k).map(move |s| (t, s)))
        .filter(|&(t, s)| !done.contains(&(runner.dataset.tasks[t].id().to_string(), s)))
        .collect();
    let mut outcome = RunOutcome { skipped: done.len(), ..Default::default() };
    info!("{} samples to collect, {} already recorded", items.len(), done.len());
    if items.is_empty() {
        return Ok(outcome);
    }

    let mut out = std::io::BufWriter::new(
        OpenOptions::new().create(true).append(true).open(records_path).map_err(io_err(records_path))?,
    );
    let next = AtomicUsize::new(0);
    let stop = AtomicBool::new(false);
    let (tx, rx) = mpsc::channel::<(usize, SampleRecord)>();
    let limit = cfg.stop_after.unwrap_or(usize::MAX);

    std::thread::scope(|scope| -> Result<(), HarnessError> {
        for _ in 0..cfg.parallelism.min(items.len()) {
            let tx = tx.clone();
            let (next, stop, items) = (&next, &stop, &items);
            scope.spawn(move || loop {
                if stop.load(Ordering::SeqCst) {
                    break;
                }
                let i = next.fetch_add(1, Ordering::SeqCst);
                let Some(&(task, sample)) = items.get(i) else {
                    break;
                };
                if tx.send((i, runner.run(task, sample))).is_err() {
                    break;
                }
            });
        }
        drop(tx);

        let mut pending: BTreeMap<usize, SampleRecord> = BTreeMap::new();
        let mut cursor = 0;
        for (i, record) in rx {
            pending.insert(i, record);
            while let Some(record) = pending.remove(&cursor) {
                if outcome.written >= limit {
                    break;
                }
                serde_json::to_writer(&mut out, &record).expect("records serialize");
                out.write_all(b"\n").map_err(io_err(records_path))?;
                out.flush().map_err(io_err(records_path))?;
                outcome.written += 1;
                outcome.failed += record.error.is_some() as usize;
                cursor += 1;
            }
            if outcome.written >= limit {
                stop.store(true, Ordering::SeqCst);
            }
        }
        Ok(())
    })?;
    outcome.interrupted = outcome.written < items.len();
    Ok(outcome)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BudgetConfig {
    pub budget_secs: f64,
    /// Expected seconds per sample; raised to the measured mean once samples arrive.
    pub cost_estimate: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BudgetTaskOutcome {
    pub task_id: String,
    pub group: String,
    pub samples: u32,
    pub success: bool,
    pub elapsed: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BudgetRow {
    pub group: String,
    pub budget_secs: f64,
    pub tasks: usize,
    pub successes: usize,
    pub success_rate: f64,
    pub mean_samples: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BudgetReport {
    pub budget_secs: f64,
    pub tasks: Vec<BudgetTaskOutcome>,
    pub rows: Vec<BudgetRow>,
    pub records: Vec<SampleRecord>,
}

/// Per task, keeps sampling while the elapsed time plus the expected cost of
/// one more sample fits in the budget; stops at the first success.
pub fn budget_run(runner: &SampleRunner<'_>, cfg: &BudgetConfig) -> Result<BudgetReport, HarnessError> {
    if !(cfg.budget_secs > 0.0) || !(cfg.cost_estimate > 0.0) {
        return Err(HarnessError::Config("budget and cost estimate must be positive".into()));
    }
    let mut tasks = Vec::new();
    let mut records = Vec::new();
    for (i, task) in runner.dataset.tasks.iter().enumerate() {
        let start = runner.clock.now();
        let (mut samples, mut success, mut spent) = (0u32, false, 0.0);
        loop {
            let elapsed = runner.clock.now() - start;
            let estimate = if samples == 0 { cfg.cost_estimate } else { cfg.cost_estimate.max(spent / samples as f64) };
            if elapsed + estimate > cfg.budget_secs {
                break;
            }
            samples += 1;
            let before = runner.clock.now();
            let record = runner.run(i, samples);
            spent += runner.clock.now() - before;
            success = record.validity.success;
            records.push(record);
            if success {
                break;
            }
        }
        if samples == 0 {
            warn!("{}: budget {}s is below one sample ({}s)", task.id(), cfg.budget_secs, cfg.cost_estimate);
        }
        tasks.push(BudgetTaskOutcome {
            task_id: task.id().to_string(),
            group: task.group(),
            samples,
            success,
            elapsed: runner.clock.now() - start,
        });
    }
    let mut groups: BTreeMap<&str, Vec<&BudgetTaskOutcome>> = BTreeMap::new();
    for t in &tasks {
        groups.entry(t.group.as_str()).or_default().push(t);
    }
    let rows = groups
        .into_iter()
        .map(|(group, ts)| {
            let successes = ts.iter().filter(|t| t.success).count();
            BudgetRow {
                group: group.to_string(),
                budget_secs: cfg.budget_secs,
                tasks: ts.len(),
                successes,
                success_rate: successes as f64 / ts.len() as f64,
                mean_samples: ts.iter().map(|t| t.samples as f64).sum::<f64>() / ts.len() as f64,
            }
        })
        .collect();
    Ok(BudgetReport { budget_secs: cfg.budget_secs, tasks, rows, records })
}
