//! Rule-based scoring of candidate solution images.
//!
//! Logical validity compares detected solution cells against the goal:
//! `coverage = |D ∩ G| / |G|`, `violation = |D \ G| / |D|` (zero for an
//! empty detection) and `pass = max(0, coverage − violation)`. Pixel
//! fidelity is a normalized-channel MSE (×100) split between the goal cells
//! and everything else.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt::Write as _;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use std::sync::{Arc, Mutex};

use image::imageops::{self, FilterType};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{CellGraph, GeometryError, GeometryKind};
use crate::image::{channel_distance, ImageBuffer, ImageError};
use crate::maze::SolutionCells;
use crate::pixmap::CellPixelMap;
use crate::render::{maze_markers, RenderError, RenderStyle};
use crate::task::Task;

/// Reported MSE values are normalized-channel MSE multiplied by this factor.
pub const MSE_SCALE: f64 = 100.0;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("goal solution is empty: task {0} is corrupt")]
    EmptyGoal(String),
    #[error("image is {got}x{got_h} but the task renders at {want}x{want}")]
    ResolutionMismatch { got: u32, got_h: u32, want: u32 },
    #[error("invalid detection config: {0}")]
    Config(String),
    #[error("task {task_id} has {have} of the {need} required samples")]
    MissingSamples { task_id: String, have: usize, need: usize },
    #[error("no records to aggregate")]
    NoRecords,
    #[error(transparent)]
    Image(#[from] ImageError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Render(#[from] RenderError),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("record line {line}: {source}")]
    Record { line: usize, source: serde_json::Error },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectionConfig {
    /// Max per-channel distance (0–255) for a pixel to count as the target color.
    pub color_tolerance: u8,
    /// Fraction of a maze cell's eroded interior that must be path-colored.
    pub path_threshold: f64,
    /// Threshold for the start and end cells, measured without erosion and
    /// with marker pixels masked; the markers hide most of the path there.
    pub endpoint_threshold: f64,
    /// Fraction of a board cell's central window that must be queen-colored.
    pub queen_threshold: f64,
    /// Side of the central window relative to the cell side.
    pub queen_window: f64,
    /// Pixels shaved off each cell; `None` uses the style's wall stroke.
    pub erosion: Option<f64>,
}

impl Default for DetectionConfig {
    fn default() -> Self {
        DetectionConfig {
            color_tolerance: 60,
            path_threshold: 0.05,
            endpoint_threshold: 0.0125,
            queen_threshold: 0.15,
            queen_window: 0.5,
            erosion: None,
        }
    }
}

impl DetectionConfig {
    pub fn validate(&self) -> Result<(), EvalError> {
        let unit = |v: f64| v > 0.0 && v < 1.0;
        if !unit(self.path_threshold) || !unit(self.endpoint_threshold) || !unit(self.queen_threshold) {
            return Err(EvalError::Config("cell thresholds must lie in (0, 1)".into()));
        }
        if self.color_tolerance == 0 || self.color_tolerance >= 128 {
            return Err(EvalError::Config("color tolerance must lie in (0, 128)".into()));
        }
        if !(self.queen_window > 0.0 && self.queen_window <= 1.0) {
            return Err(EvalError::Config("queen window must lie in (0, 1]".into()));
        }
        if self.erosion.is_some_and(|e| !(e >= 0.0)) {
            return Err(EvalError::Config("erosion must be non-negative".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ValidityScores {
    pub coverage: f64,
    pub violation: f64,
    pub pass: f64,
    pub success: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FidelityScores {
    pub mse_in: f64,
    pub mse_out: f64,
}

/// When a sample counts as solved.
#[derive(Clone, Copy, Debug, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SuccessRule {
    /// Detected and goal cell sets are identical.
    #[default]
    Exact,
    /// `pass` reaches at least this value.
    PassAtLeast(f64),
}

pub fn logical_validity(detected: &SolutionCells, goal: &SolutionCells) -> Result<ValidityScores, EvalError> {
    logical_validity_with(detected, goal, SuccessRule::Exact)
}

pub fn logical_validity_with(
    detected: &SolutionCells,
    goal: &SolutionCells,
    rule: SuccessRule,
) -> Result<ValidityScores, EvalError> {
    let goal = goal.as_set();
    if goal.is_empty() {
        return Err(EvalError::EmptyGoal(String::new()));
    }
    let detected = detected.as_set();
    let hits = detected.intersection(&goal).count();
    let coverage = hits as f64 / goal.len() as f64;
    let violation = if detected.is_empty() {
        0.0
    } else {
        (detected.len() - hits) as f64 / detected.len() as f64
    };
    let pass = (coverage - violation).max(0.0);
    let success = match rule {
        SuccessRule::Exact => detected == goal,
        SuccessRule::PassAtLeast(t) => pass >= t,
    };
    Ok(ValidityScores { coverage, violation, pass, success })
}

/// Resizes a candidate to the reference square resolution (bilinear); no-op when it already matches.
pub fn align_candidate(candidate: &ImageBuffer, resolution: u32) -> Result<ImageBuffer, EvalError> {
    if candidate.width() == 0 || candidate.height() == 0 || resolution == 0 {
        return Err(ImageError::Empty(candidate.width(), candidate.height()).into());
    }
    if candidate.width() == resolution && candidate.height() == resolution {
        return Ok(candidate.clone());
    }
    let resized = imageops::resize(&candidate.to_rgb_image(), resolution, resolution, FilterType::Triangle);
    Ok(ImageBuffer::from_rgb_image(resized))
}

/// Detection and fidelity scoring with cached per-geometry pixel maps.
pub struct Evaluator {
    style: RenderStyle,
    detection: DetectionConfig,
    success: SuccessRule,
    maps: Mutex<HashMap<(GeometryKind, u32), Arc<CellPixelMap>>>,
}

/// Full score of one candidate.
#[derive(Clone, Debug, PartialEq)]
pub struct Scored {
    pub detected: SolutionCells,
    pub validity: ValidityScores,
    pub fidelity: FidelityScores,
}

impl Evaluator {
    pub fn new(style: RenderStyle, detection: DetectionConfig) -> Result<Self, EvalError> {
        detection.validate()?;
        style.validate()?;
        Ok(Evaluator { style, detection, success: SuccessRule::Exact, maps: Mutex::new(HashMap::new()) })
    }

    pub fn with_success_rule(mut self, rule: SuccessRule) -> Self {
        self.success = rule;
        self
    }

    pub fn style(&self) -> &RenderStyle {
        &self.style
    }

    pub fn detection(&self) -> &DetectionConfig {
        &self.detection
    }

    pub fn pixel_map(&self, graph: &CellGraph) -> Arc<CellPixelMap> {
        let key = (graph.geometry(), graph.scale());
        if let Some(map) = self.maps.lock().expect("pixel map cache poisoned").get(&key) {
            return map.clone();
        }
        let map = Arc::new(CellPixelMap::new(graph, self.style.resolution));
        self.maps.lock().expect("pixel map cache poisoned").entry(key).or_insert(map).clone()
    }

    fn check_size(&self, img: &ImageBuffer) -> Result<(), EvalError> {
        let want = self.style.resolution;
        if img.width() != want || img.height() != want {
            return Err(EvalError::ResolutionMismatch { got: img.width(), got_h: img.height(), want });
        }
        Ok(())
    }

    /// Cells the candidate marks as solution, ascending.
    pub fn detect(&self, candidate: &ImageBuffer, task: &Task) -> Result<SolutionCells, EvalError> {
        self.check_size(candidate)?;
        let graph = task.board()?;
        let map = self.pixel_map(&graph);
        let tol = self.detection.color_tolerance;
        let mut detected = Vec::new();
        match task {
            Task::Maze(maze_task) => {
                let erosion = self.detection.erosion.unwrap_or(self.style.wall_stroke);
                let (start, end) = maze_markers(maze_task, &self.style)?;
                let res = self.style.resolution;
                let mut masked: HashSet<usize> = HashSet::new();
                for p in start.iter().chain(end.iter()) {
                    p.for_each_pixel(res, res, |i| {
                        masked.insert(i);
                    });
                }
                for c in graph.cells() {
                    let marker_cell = c == maze_task.start || c == maze_task.end;
                    let (erosion, threshold) = if marker_cell {
                        (0.0, self.detection.endpoint_threshold)
                    } else {
                        (erosion, self.detection.path_threshold)
                    };
                    let (mut total, mut hits) = (0usize, 0usize);
                    for i in map.interior_pixels(c, erosion) {
                        if marker_cell && masked.contains(&i) {
                            continue;
                        }
                        total += 1;
                        if channel_distance(candidate.at(i), self.style.path_color) <= tol {
                            hits += 1;
                        }
                    }
                    if total > 0 && hits as f64 >= threshold * total as f64 {
                        detected.push(c);
                    }
                }
            }
            Task::Queen(_) => {
                let res = self.style.resolution as f64;
                let side = (1.0 - 2.0 * graph.margin()) / graph.scale() as f64 * res;
                let half_window = 0.5 * self.detection.queen_window * side;
                for c in graph.cells() {
                    let center = graph.cell_center(c)? * res;
                    let (mut total, mut hits) = (0usize, 0usize);
                    for &i in map.cell_pixels(c) {
                        let i = i as usize;
                        let x = (i % self.style.resolution as usize) as f64 + 0.5;
                        let y = (i / self.style.resolution as usize) as f64 + 0.5;
                        if (x - center.x).abs() > half_window || (y - center.y).abs() > half_window {
                            continue;
                        }
                        total += 1;
                        if channel_distance(candidate.at(i), self.style.queen_color) <= tol {
                            hits += 1;
                        }
                    }
                    if total > 0 && hits as f64 >= self.detection.queen_threshold * total as f64 {
                        detected.push(c);
                    }
                }
            }
        }
        Ok(SolutionCells(detected))
    }

    pub fn fidelity(&self, candidate: &ImageBuffer, ground_truth: &ImageBuffer, task: &Task) -> Result<FidelityScores, EvalError> {
        self.check_size(candidate)?;
        self.check_size(ground_truth)?;
        let graph = task.board()?;
        let map = self.pixel_map(&graph);
        let mut inside = vec![false; candidate.pixel_count()];
        for c in task.goal().cells() {
            for &i in map.cell_pixels(*c) {
                inside[i as usize] = true;
            }
        }
        let (mut sum_in, mut n_in, mut sum_out, mut n_out) = (0.0, 0usize, 0.0, 0usize);
        for (i, &is_in) in inside.iter().enumerate() {
            let err = pixel_sq_error(candidate.at(i), ground_truth.at(i));
            if is_in {
                sum_in += err;
                n_in += 1;
            } else {
                sum_out += err;
                n_out += 1;
            }
        }
        let mean = |s: f64, n: usize| if n == 0 { 0.0 } else { MSE_SCALE * s / n as f64 };
        Ok(FidelityScores { mse_in: mean(sum_in, n_in), mse_out: mean(sum_out, n_out) })
    }

    pub fn validity(&self, detected: &SolutionCells, task: &Task) -> Result<ValidityScores, EvalError> {
        logical_validity_with(detected, &task.goal(), self.success).map_err(|e| match e {
            EvalError::EmptyGoal(_) => EvalError::EmptyGoal(task.id().to_string()),
            other => other,
        })
    }

    pub fn score(&self, candidate: &ImageBuffer, ground_truth: &ImageBuffer, task: &Task) -> Result<Scored, EvalError> {
        let detected = self.detect(candidate, task)?;
        let validity = self.validity(&detected, task)?;
        let fidelity = self.fidelity(candidate, ground_truth, task)?;
        Ok(Scored { detected, validity, fidelity })
    }
}

/// Mean over the three channels of the squared normalized difference.
fn pixel_sq_error(a: [u8; 3], b: [u8; 3]) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(&x, &y)| {
            let d = (x as f64 - y as f64) / 255.0;
            d * d
        })
        .sum::<f64>()
        / 3.0
}

pub fn detect_solution(
    candidate: &ImageBuffer,
    task: &Task,
    cfg: &DetectionConfig,
    style: &RenderStyle,
) -> Result<SolutionCells, EvalError> {
    Evaluator::new(style.clone(), cfg.clone())?.detect(candidate, task)
}

pub fn pixel_fidelity(
    candidate: &ImageBuffer,
    ground_truth: &ImageBuffer,
    task: &Task,
    style: &RenderStyle,
) -> Result<FidelityScores, EvalError> {
    Evaluator::new(style.clone(), DetectionConfig::default())?.fidelity(candidate, ground_truth, task)
}

/// One evaluated candidate image.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SampleRecord {
    pub task_id: String,
    /// 1-based; sample 1 is the first-round generation.
    pub sample_index: u32,
    pub group: String,
    pub detected: SolutionCells,
    pub validity: ValidityScores,
    pub fidelity: Option<FidelityScores>,
    /// Seconds from request sent to image decoded.
    pub latency: f64,
    pub candidate_digest: Option<String>,
    /// Transport retries spent on this sample.
    #[serde(default)]
    pub retries: u32,
    /// Failure tag when no candidate could be scored.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl SampleRecord {
    /// A failed sample: scored as an empty detection.
    pub fn failed(task_id: &str, sample_index: u32, group: &str, latency: f64, error: String) -> Self {
        SampleRecord {
            task_id: task_id.to_string(),
            sample_index,
            group: group.to_string(),
            detected: SolutionCells::default(),
            validity: ValidityScores { coverage: 0.0, violation: 0.0, pass: 0.0, success: false },
            fidelity: None,
            latency,
            candidate_digest: None,
            retries: 0,
            error: Some(error),
        }
    }
}

pub fn write_records(path: &Path, records: &[SampleRecord]) -> Result<(), EvalError> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    for r in records {
        serde_json::to_writer(&mut out, r).map_err(|source| EvalError::Record { line: 0, source })?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}

/// Reads line-delimited records, skipping blank lines.
pub fn read_records(path: &Path) -> Result<Vec<SampleRecord>, EvalError> {
    let reader = BufReader::new(std::fs::File::open(path)?);
    let mut out = Vec::new();
    for (n, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|source| EvalError::Record { line: n + 1, source })?);
    }
    Ok(out)
}

/// Aggregated metrics for a set of tasks; rates are fractions in `[0, 1]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub label: String,
    pub tasks: usize,
    pub samples: usize,
    pub coverage: f64,
    pub violation: f64,
    pub mse_in: f64,
    pub mse_out: f64,
    pub pass_at_1: f64,
    /// Success averaged over tasks and their first k samples.
    pub pass_at_k_mean: f64,
    /// Fraction of tasks with any success among their first k samples.
    pub pass_at_k_any: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkReport {
    pub k: usize,
    pub overall: ReportRow,
    pub groups: Vec<ReportRow>,
}

fn summarize(label: &str, tasks: &[&[&SampleRecord]], k: usize) -> ReportRow {
    let mut row = ReportRow {
        label: label.to_string(),
        tasks: tasks.len(),
        samples: 0,
        coverage: 0.0,
        violation: 0.0,
        mse_in: 0.0,
        mse_out: 0.0,
        pass_at_1: 0.0,
        pass_at_k_mean: 0.0,
        pass_at_k_any: 0.0,
    };
    let mut with_fidelity = 0usize;
    for samples in tasks {
        let first_k = &samples[..k];
        row.pass_at_1 += first_k[0].validity.success as u8 as f64;
        row.pass_at_k_mean += first_k.iter().filter(|r| r.validity.success).count() as f64 / k as f64;
        row.pass_at_k_any += first_k.iter().any(|r| r.validity.success) as u8 as f64;
        for r in first_k {
            row.samples += 1;
            row.coverage += r.validity.coverage;
            row.violation += r.validity.violation;
            if let Some(f) = r.fidelity {
                with_fidelity += 1;
                row.mse_in += f.mse_in;
                row.mse_out += f.mse_out;
            }
        }
    }
    let t = tasks.len().max(1) as f64;
    row.pass_at_1 /= t;
    row.pass_at_k_mean /= t;
    row.pass_at_k_any /= t;
    let s = row.samples.max(1) as f64;
    row.coverage /= s;
    row.violation /= s;
    let f = with_fidelity.max(1) as f64;
    row.mse_in /= f;
    row.mse_out /= f;
    row
}

/// Aggregates per-sample records into Pass@1, both Pass@k readings and mean metrics.
pub fn aggregate(records: &[SampleRecord], k: usize) -> Result<BenchmarkReport, EvalError> {
    if records.is_empty() {
        return Err(EvalError::NoRecords);
    }
    if k == 0 {
        return Err(EvalError::Config("k must be at least 1".into()));
    }
    let mut by_task: BTreeMap<&str, Vec<&SampleRecord>> = BTreeMap::new();
    for r in records {
        by_task.entry(r.task_id.as_str()).or_default().push(r);
    }
    let mut by_group: BTreeMap<&str, Vec<&[&SampleRecord]>> = BTreeMap::new();
    for samples in by_task.values_mut() {
        samples.sort_by_key(|r| r.sample_index);
        samples.dedup_by_key(|r| r.sample_index);
        let contiguous = samples.iter().take(k).enumerate().all(|(i, r)| r.sample_index == i as u32 + 1);
        if samples.len() < k || !contiguous {
            return Err(EvalError::MissingSamples {
                task_id: samples[0].task_id.clone(),
                have: samples.iter().take_while(|r| r.sample_index as usize <= k).count(),
                need: k,
            });
        }
    }
    let all: Vec<&[&SampleRecord]> = by_task.values().map(Vec::as_slice).collect();
    for samples in &all {
        by_group.entry(samples[0].group.as_str()).or_default().push(samples);
    }
    Ok(BenchmarkReport {
        k,
        overall: summarize("all", &all, k),
        groups: by_group.iter().map(|(label, tasks)| summarize(label, tasks, k)).collect(),
    })
}

impl BenchmarkReport {
    fn header(&self) -> [String; 10] {
        let k = self.k;
        [
            "group".into(),
            "tasks".into(),
            "violation".into(),
            "coverage".into(),
            "mse_in".into(),
            "mse_out".into(),
            "pass@1".into(),
            format!("pass@{k}"),
            format!("pass@{k}_any"),
            "samples".into(),
        ]
    }

    fn rows(&self) -> impl Iterator<Item = &ReportRow> {
        self.groups.iter().chain(std::iter::once(&self.overall))
    }

    /// Plain-text table: Violation, Coverage, MSE In, MSE Out, Pass@1, Pass@k.
    pub fn to_table(&self) -> String {
        let k = self.k;
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:<22} {:>6} {:>10} {:>10} {:>8} {:>8} {:>8} {:>8} {:>10}",
            "Group", "Tasks", "Violation", "Coverage", "MSE In", "MSE Out", "Pass@1", format!("Pass@{k}"), format!("Pass@{k}any")
        );
        for r in self.rows() {
            let _ = writeln!(
                out,
                "{:<22} {:>6} {:>10.2} {:>10.2} {:>8.3} {:>8.3} {:>8.2} {:>8.2} {:>10.2}",
                r.label,
                r.tasks,
                100.0 * r.violation,
                100.0 * r.coverage,
                r.mse_in,
                r.mse_out,
                100.0 * r.pass_at_1,
                100.0 * r.pass_at_k_mean,
                100.0 * r.pass_at_k_any
            );
        }
        out
    }

    /// CSV with percentages for rates and raw values for MSE.
    pub fn to_csv(&self) -> String {
        let mut out = self.header().join(",");
        out.push('\n');
        for r in self.rows() {
            let _ = writeln!(
                out,
                "{},{},{:.4},{:.4},{:.6},{:.6},{:.4},{:.4},{:.4},{}",
                r.label,
                r.tasks,
                100.0 * r.violation,
                100.0 * r.coverage,
                r.mse_in,
                r.mse_out,
                100.0 * r.pass_at_1,
                100.0 * r.pass_at_k_mean,
                100.0 * r.pass_at_k_any,
                r.samples
            );
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::CellId;

    fn cells(ids: &[u32]) -> SolutionCells {
        ids.iter().map(|&i| CellId(i)).collect()
    }

    #[test]
    fn partial_detection() {
        let v = logical_validity(&cells(&[0, 1, 2]), &cells(&[0, 1, 2, 3, 4])).unwrap();
        assert_eq!((v.coverage, v.violation, v.pass, v.success), (0.6, 0.0, 0.6, false));
    }

    #[test]
    fn exact_detection() {
        let v = logical_validity(&cells(&[3, 1, 2]), &cells(&[1, 2, 3])).unwrap();
        assert_eq!((v.coverage, v.violation, v.pass, v.success), (1.0, 0.0, 1.0, true));
    }

    #[test]
    fn clamped_pass() {
        let v = logical_validity(&cells(&[0, 1, 8, 9]), &cells(&[0, 1, 2, 3])).unwrap();
        assert_eq!((v.coverage, v.violation, v.pass, v.success), (0.5, 0.5, 0.0, false));
    }

    #[test]
    fn empty_detection_and_goal() {
        let v = logical_validity(&cells(&[]), &cells(&[1])).unwrap();
        assert_eq!((v.coverage, v.violation, v.pass), (0.0, 0.0, 0.0));
        assert!(matches!(logical_validity(&cells(&[1]), &cells(&[])), Err(EvalError::EmptyGoal(_))));
    }

    #[test]
    fn tolerant_success_rule() {
        let goal: SolutionCells = (0..100).map(CellId).collect();
        let detected: SolutionCells = (0..99).map(CellId).collect();
        assert!(!logical_validity(&detected, &goal).unwrap().success);
        assert!(logical_validity_with(&detected, &goal, SuccessRule::PassAtLeast(0.99)).unwrap().success);
    }

    fn record(task: &str, idx: u32, success: bool) -> SampleRecord {
        SampleRecord {
            task_id: task.into(),
            sample_index: idx,
            group: "g".into(),
            detected: SolutionCells::default(),
            validity: ValidityScores { coverage: success as u8 as f64, violation: 0.0, pass: success as u8 as f64, success },
            fidelity: Some(FidelityScores { mse_in: 0.0, mse_out: 0.0 }),
            latency: 0.0,
            candidate_digest: None,
            retries: 0,
            error: None,
        }
    }

    fn matrix(rows: &[&[bool]]) -> Vec<SampleRecord> {
        rows.iter()
            .enumerate()
            .flat_map(|(t, row)| row.iter().enumerate().map(move |(i, &s)| record(&format!("t{t}"), i as u32 + 1, s)))
            .collect()
    }

    #[test]
    fn pass_at_k_counting() {
        let recs = matrix(&[&[true, false, false, false, false], &[false; 5]]);
        let r = aggregate(&recs, 5).unwrap().overall;
        assert_eq!(r.pass_at_1, 0.5);
        assert!((r.pass_at_k_mean - 0.1).abs() < 1e-12);
        assert_eq!(r.pass_at_k_any, 0.5);

        let all = aggregate(&matrix(&[&[true; 5], &[true; 5]]), 5).unwrap().overall;
        assert_eq!((all.pass_at_1, all.pass_at_k_mean, all.pass_at_k_any), (1.0, 1.0, 1.0));
    }

    #[test]
    fn missing_samples_rejected() {
        let recs = matrix(&[&[true, false, true]]);
        assert!(matches!(aggregate(&recs, 5), Err(EvalError::MissingSamples { have: 3, need: 5, .. })));
        assert!(matches!(aggregate(&[], 1), Err(EvalError::NoRecords)));
    }

    #[test]
    fn align_is_identity_at_target_size() {
        let img = ImageBuffer::filled(512, 512, [1, 2, 3]);
        assert_eq!(align_candidate(&img, 512).unwrap(), img);
        let big = ImageBuffer::filled(1024, 1024, [40, 80, 120]);
        assert_eq!(align_candidate(&big, 512).unwrap(), ImageBuffer::filled(512, 512, [40, 80, 120]));
        let wide = ImageBuffer::filled(300, 200, [9, 9, 9]);
        assert_eq!(align_candidate(&wide, 256).unwrap().width(), 256);
    }

    #[test]
    fn config_validation() {
        DetectionConfig::default().validate().unwrap();
        let bad = DetectionConfig { path_threshold: 1.0, ..DetectionConfig::default() };
        assert!(bad.validate().is_err());
        let bad = DetectionConfig { color_tolerance: 200, ..DetectionConfig::default() };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn records_round_trip_through_jsonl() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.jsonl");
        let recs = matrix(&[&[true, false]]);
        write_records(&path, &recs).unwrap();
        assert_eq!(read_records(&path).unwrap(), recs);
    }
}
