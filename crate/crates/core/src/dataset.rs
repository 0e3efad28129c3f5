//! Benchmark generation, manifests and verification.
//!
//! A dataset directory holds `manifest.json` plus one task image and one
//! ground-truth image per task under `maze/{geometry}/{scale}/` or
//! `queen/{n}/`. The manifest stores every goal solution and maze structure
//! explicitly, so scoring never re-runs generation.

use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::digest::sha256_hex;
use crate::eval::{DetectionConfig, EvalError, Evaluator, SuccessRule, MSE_SCALE};
use crate::geometry::{build_cell_graph, CellGraph, CellId, GeometryError, GeometryKind, DEFAULT_MARGIN};
use crate::image::{ImageBuffer, ImageError};
use crate::maze::{build_maze_task_on, maze_task_id, GrowthKind, Maze, MazeError, MazeTask, SolutionCells};
use crate::queen::{build_queen_task, queen_task_id, solve_queens_up_to, QueenError, QueenPlacement, QueenTask, RegionMap};
use crate::render::{RenderError, RenderStyle};
use crate::seed::derive_seed;
use crate::task::Task;

pub const SCHEMA_VERSION: u32 = 1;
pub const TOOLKIT_VERSION: &str = env!("CARGO_PKG_VERSION");
pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("invalid config: {0}")]
    Config(String),
    #[error("unknown preset {0:?} (expected eval, train-basic, train-8x8 or study)")]
    UnknownPreset(String),
    #[error("unsupported manifest schema version {0}")]
    Schema(u32),
    #[error("task {task_id}: {reason}")]
    Corrupt { task_id: String, reason: String },
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("manifest json: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Maze(#[from] MazeError),
    #[error(transparent)]
    Queen(#[from] QueenError),
    #[error(transparent)]
    Render(#[from] RenderError),
    #[error(transparent)]
    Image(#[from] ImageError),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> DatasetError + '_ {
    move |source| DatasetError::Io { path: path.to_path_buf(), source }
}

/// Maze tasks for one geometry; `per_scale` tasks are dealt round-robin over `growth`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MazeSpec {
    pub geometry: GeometryKind,
    pub scales: Vec<u32>,
    pub per_scale: usize,
    pub growth: Vec<GrowthKind>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QueenSpec {
    pub sizes: Vec<usize>,
    pub per_size: usize,
    pub require_unique: bool,
    pub max_attempts: u32,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchmarkConfig {
    pub name: String,
    pub seed: u64,
    pub mazes: Vec<MazeSpec>,
    pub queens: Vec<QueenSpec>,
    pub style: RenderStyle,
}

pub const PRESETS: [&str; 4] = ["eval", "train-basic", "train-8x8", "study"];
const BOTH_GROWTHS: [GrowthKind; 2] = [GrowthKind::DfsBacktracker, GrowthKind::BfsGrowth];

impl BenchmarkConfig {
    pub fn preset(name: &str) -> Result<Self, DatasetError> {
        let mazes = |geometries: &[GeometryKind], scales: Vec<u32>, per_scale| -> Vec<MazeSpec> {
            geometries
                .iter()
                .map(|&geometry| MazeSpec { geometry, scales: scales.clone(), per_scale, growth: BOTH_GROWTHS.to_vec() })
                .collect()
        };
        let queens = |sizes: Vec<usize>, per_size| {
            vec![QueenSpec { sizes, per_size, require_unique: true, max_attempts: 10_000 }]
        };
        let (mazes, queens) = match name {
            "eval" => (mazes(&GeometryKind::ALL, (3..=16).collect(), 50), queens((4..=10).collect(), 50)),
            "train-basic" => (mazes(&GeometryKind::ALL, vec![3], 800), queens(vec![4], 800)),
            "train-8x8" => (mazes(&[GeometryKind::Hexagon], vec![8], 800), queens(vec![7], 800)),
            "study" => (mazes(&[GeometryKind::Hexagon], vec![8, 16, 24], 5), queens(vec![4, 7, 10], 5)),
            other => return Err(DatasetError::UnknownPreset(other.to_string())),
        };
        Ok(BenchmarkConfig { name: name.to_string(), seed: 0, mazes, queens, style: RenderStyle::default() })
    }

    pub fn from_json(text: &str) -> Result<Self, DatasetError> {
        let cfg: BenchmarkConfig = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), DatasetError> {
        self.style.validate()?;
        for m in &self.mazes {
            if m.per_scale == 0 || m.scales.is_empty() || m.growth.is_empty() {
                return Err(DatasetError::Config(format!("{} maze spec needs scales, growth kinds and per_scale ≥ 1", m.geometry)));
            }
            for &scale in &m.scales {
                build_cell_graph(m.geometry, scale)?.check_resolution(self.style.resolution)?;
            }
        }
        for q in &self.queens {
            if q.per_size == 0 || q.sizes.is_empty() || q.max_attempts == 0 {
                return Err(DatasetError::Config("queen spec needs sizes, per_size ≥ 1 and max_attempts ≥ 1".into()));
            }
            if let Some(n) = q.sizes.iter().find(|&&n| !(crate::queen::MIN_QUEENS..=crate::queen::MAX_QUEENS).contains(&n)) {
                return Err(DatasetError::Config(format!("queen size {n} out of range")));
            }
        }
        Ok(())
    }

    /// Every task to generate, in manifest order.
    pub fn jobs(&self) -> Vec<Job> {
        let mut jobs = Vec::new();
        for m in &self.mazes {
            for &scale in &m.scales {
                for i in 0..m.per_scale {
                    let growth = m.growth[i % m.growth.len()];
                    let seed = derive_seed(self.seed, &["maze", m.geometry.as_str(), &scale.to_string(), &i.to_string()]);
                    jobs.push(Job::Maze { geometry: m.geometry, scale, growth, seed });
                }
            }
        }
        for q in &self.queens {
            for &n in &q.sizes {
                for i in 0..q.per_size {
                    let seed = derive_seed(self.seed, &["queen", &n.to_string(), &i.to_string()]);
                    jobs.push(Job::Queen { n, seed, require_unique: q.require_unique, max_attempts: q.max_attempts });
                }
            }
        }
        jobs
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Job {
    Maze { geometry: GeometryKind, scale: u32, growth: GrowthKind, seed: u64 },
    Queen { n: usize, seed: u64, require_unique: bool, max_attempts: u32 },
}

/// Shared, immutable graphs keyed by (geometry, scale).
#[derive(Default)]
pub struct GraphCache {
    graphs: HashMap<(GeometryKind, u32), Arc<CellGraph>>,
}

impl GraphCache {
    pub fn get(&mut self, geometry: GeometryKind, scale: u32) -> Result<Arc<CellGraph>, GeometryError> {
        if let Some(g) = self.graphs.get(&(geometry, scale)) {
            return Ok(g.clone());
        }
        let g = Arc::new(build_cell_graph(geometry, scale)?);
        self.graphs.insert((geometry, scale), g.clone());
        Ok(g)
    }

    fn lookup(&self, geometry: GeometryKind, scale: u32) -> Arc<CellGraph> {
        self.graphs[&(geometry, scale)].clone()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaskFiles {
    /// Paths relative to the manifest directory.
    pub task_image: String,
    pub task_digest: String,
    pub ground_truth: String,
    pub ground_truth_digest: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum TaskDescriptor {
    Maze {
        task_id: String,
        geometry: GeometryKind,
        scale: u32,
        growth: GrowthKind,
        seed: u64,
        start: CellId,
        end: CellId,
        goal: SolutionCells,
        open_edges: Vec<u32>,
        files: TaskFiles,
    },
    Queen {
        task_id: String,
        n: usize,
        seed: u64,
        require_unique: bool,
        /// Region index of every cell, row-major.
        regions: Vec<usize>,
        /// Queen column per row.
        placement: Vec<usize>,
        goal: SolutionCells,
        solution_count: usize,
        attempts: u32,
        files: TaskFiles,
    },
}

impl TaskDescriptor {
    pub fn task_id(&self) -> &str {
        match self {
            TaskDescriptor::Maze { task_id, .. } | TaskDescriptor::Queen { task_id, .. } => task_id,
        }
    }

    pub fn files(&self) -> &TaskFiles {
        match self {
            TaskDescriptor::Maze { files, .. } | TaskDescriptor::Queen { files, .. } => files,
        }
    }

    pub fn goal(&self) -> &SolutionCells {
        match self {
            TaskDescriptor::Maze { goal, .. } | TaskDescriptor::Queen { goal, .. } => goal,
        }
    }

    fn describe(task: &Task, files: TaskFiles, require_unique: bool) -> Self {
        match task {
            Task::Maze(t) => TaskDescriptor::Maze {
                task_id: t.task_id.clone(),
                geometry: t.maze.graph().geometry(),
                scale: t.maze.graph().scale(),
                growth: t.maze.growth(),
                seed: t.maze.seed(),
                start: t.start,
                end: t.end,
                goal: t.goal_path.clone(),
                open_edges: t.maze.open_edges(),
                files,
            },
            Task::Queen(t) => TaskDescriptor::Queen {
                task_id: t.task_id.clone(),
                n: t.n,
                seed: t.seed,
                require_unique,
                regions: t.regions.region_of.clone(),
                placement: t.goal.0.clone(),
                goal: t.goal_cells(),
                solution_count: t.solution_count,
                attempts: t.attempts,
                files,
            },
        }
    }

    /// Rebuilds the task from stored structure and re-checks every invariant.
    pub fn to_task(&self, graphs: &mut GraphCache) -> Result<Task, DatasetError> {
        let corrupt = |reason: String| DatasetError::Corrupt { task_id: self.task_id().to_string(), reason };
        match self {
            TaskDescriptor::Maze { task_id, geometry, scale, growth, seed, start, end, goal, open_edges, .. } => {
                if *task_id != maze_task_id(*geometry, *scale, *growth, *seed) {
                    return Err(corrupt("task id does not match its parameters".into()));
                }
                let graph = graphs.get(*geometry, *scale)?;
                let maze = Maze::from_open_edges(graph, *growth, *seed, open_edges).map_err(|e| corrupt(e.to_string()))?;
                let task = MazeTask { maze, start: *start, end: *end, goal_path: goal.clone(), task_id: task_id.clone() };
                task.validate().map_err(|e| corrupt(e.to_string()))?;
                Ok(Task::Maze(task))
            }
            TaskDescriptor::Queen { task_id, n, seed, require_unique, regions, placement, goal, solution_count, attempts, .. } => {
                if *task_id != queen_task_id(*n, *seed, *require_unique) {
                    return Err(corrupt("task id does not match its parameters".into()));
                }
                let regions = RegionMap { n: *n, region_of: regions.clone() };
                let task = QueenTask {
                    n: *n,
                    regions,
                    goal: QueenPlacement(placement.clone()),
                    seed: *seed,
                    unique: *solution_count == 1,
                    solution_count: *solution_count,
                    attempts: *attempts,
                    task_id: task_id.clone(),
                };
                task.validate().map_err(|e| corrupt(e.to_string()))?;
                if task.goal_cells() != *goal {
                    return Err(corrupt("goal cells disagree with the placement".into()));
                }
                if *require_unique && solve_queens_up_to(&task.regions, 2).len() != 1 {
                    return Err(corrupt("regions do not have a unique solution".into()));
                }
                Ok(Task::Queen(task))
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Conventions {
    pub canvas: String,
    pub margin: f64,
    pub mse_scale: f64,
    pub detection: DetectionConfig,
    pub success_rule: SuccessRule,
}

impl Default for Conventions {
    fn default() -> Self {
        Conventions {
            canvas: "unit square, origin top-left, y down".into(),
            margin: DEFAULT_MARGIN,
            mse_scale: MSE_SCALE,
            detection: DetectionConfig::default(),
            success_rule: SuccessRule::Exact,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub schema_version: u32,
    pub toolkit_version: String,
    pub config: BenchmarkConfig,
    pub conventions: Conventions,
    pub tasks: Vec<TaskDescriptor>,
    /// sha256 of the serialized task list.
    pub global_digest: String,
}

pub fn tasks_digest(tasks: &[TaskDescriptor]) -> String {
    sha256_hex(&serde_json::to_vec(tasks).expect("descriptors serialize"))
}

impl Manifest {
    pub fn from_json(text: &str) -> Result<Self, DatasetError> {
        #[derive(Deserialize)]
        struct Version {
            schema_version: u32,
        }
        let version: Version = serde_json::from_str(text)?;
        if version.schema_version != SCHEMA_VERSION {
            return Err(DatasetError::Schema(version.schema_version));
        }
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("manifest serializes")
    }
}

/// A manifest together with its materialized, re-validated tasks.
pub struct Dataset {
    pub root: PathBuf,
    pub manifest: Manifest,
    pub tasks: Vec<Task>,
    index: HashMap<String, usize>,
}

impl Dataset {
    /// Opens a dataset from its directory or its manifest path.
    pub fn open(path: &Path) -> Result<Self, DatasetError> {
        let manifest_path = if path.is_dir() { path.join(MANIFEST_FILE) } else { path.to_path_buf() };
        let text = std::fs::read_to_string(&manifest_path).map_err(io_err(&manifest_path))?;
        let manifest = Manifest::from_json(&text)?;
        let root = manifest_path.parent().map(Path::to_path_buf).unwrap_or_default();
        let mut graphs = GraphCache::default();
        let tasks = manifest.tasks.iter().map(|d| d.to_task(&mut graphs)).collect::<Result<Vec<_>, _>>()?;
        let index = tasks.iter().enumerate().map(|(i, t)| (t.id().to_string(), i)).collect();
        Ok(Dataset { root, manifest, tasks, index })
    }

    pub fn position(&self, task_id: &str) -> Option<usize> {
        self.index.get(task_id).copied()
    }

    pub fn style(&self) -> &RenderStyle {
        &self.manifest.config.style
    }

    pub fn task_image_path(&self, i: usize) -> PathBuf {
        self.root.join(&self.manifest.tasks[i].files().task_image)
    }

    pub fn ground_truth_path(&self, i: usize) -> PathBuf {
        self.root.join(&self.manifest.tasks[i].files().ground_truth)
    }

    pub fn evaluator(&self) -> Result<Evaluator, EvalError> {
        let c = &self.manifest.conventions;
        Ok(Evaluator::new(self.style().clone(), c.detection.clone())?.with_success_rule(c.success_rule))
    }
}

fn task_dir(task: &Task) -> PathBuf {
    match task {
        Task::Maze(t) => PathBuf::from("maze").join(t.maze.graph().geometry().as_str()).join(format!("{:02}", t.maze.graph().scale())),
        Task::Queen(t) => PathBuf::from("queen").join(format!("{:02}", t.n)),
    }
}

pub fn generate_task(job: &Job, graphs: &GraphCache) -> Result<Task, DatasetError> {
    Ok(match *job {
        Job::Maze { geometry, scale, growth, seed } => Task::Maze(build_maze_task_on(graphs.lookup(geometry, scale), growth, seed)?),
        Job::Queen { n, seed, require_unique, max_attempts } => Task::Queen(build_queen_task(n, seed, require_unique, max_attempts)?),
    })
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), DatasetError> {
    std::fs::write(path, bytes).map_err(io_err(path))
}

/// Generates every task, writes both images per task and the manifest.
pub fn build_benchmark(config: &BenchmarkConfig, out: &Path) -> Result<Manifest, DatasetError> {
    config.validate()?;
    let jobs = config.jobs();
    let mut graphs = GraphCache::default();
    for job in &jobs {
        if let Job::Maze { geometry, scale, .. } = *job {
            graphs.get(geometry, scale)?;
        }
    }
    let style = &config.style;
    let tasks = jobs
        .par_iter()
        .map(|job| -> Result<TaskDescriptor, DatasetError> {
            let task = generate_task(job, &graphs)?;
            let dir = task_dir(&task);
            std::fs::create_dir_all(out.join(&dir)).map_err(io_err(&out.join(&dir)))?;
            let task_png = task.render(false, style)?.to_png()?;
            let gt_png = task.render(true, style)?.to_png()?;
            let rel = |suffix: &str| dir.join(format!("{}.{suffix}.png", task.id()));
            let files = TaskFiles {
                task_image: path_string(&rel("task")),
                task_digest: sha256_hex(&task_png),
                ground_truth: path_string(&rel("gt")),
                ground_truth_digest: sha256_hex(&gt_png),
            };
            write_file(&out.join(rel("task")), &task_png)?;
            write_file(&out.join(rel("gt")), &gt_png)?;
            let require_unique = matches!(job, Job::Queen { require_unique: true, .. });
            Ok(TaskDescriptor::describe(&task, files, require_unique))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let mut seen = std::collections::HashSet::new();
    if let Some(dup) = tasks.iter().find(|t| !seen.insert(t.task_id())) {
        return Err(DatasetError::Config(format!("duplicate task id {}", dup.task_id())));
    }
    let manifest = Manifest {
        schema_version: SCHEMA_VERSION,
        toolkit_version: TOOLKIT_VERSION.to_string(),
        config: config.clone(),
        conventions: Conventions::default(),
        global_digest: tasks_digest(&tasks),
        tasks,
    };
    let path = out.join(MANIFEST_FILE);
    write_file(&path, manifest.to_json().as_bytes())?;
    Ok(manifest)
}

fn path_string(p: &Path) -> String {
    p.components().map(|c| c.as_os_str().to_string_lossy()).collect::<Vec<_>>().join("/")
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckKind {
    MissingFile,
    DigestMismatch,
    Structure,
    Closure,
    GlobalDigest,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckFailure {
    pub task_id: Option<String>,
    pub check: CheckKind,
    pub detail: String,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub tasks: usize,
    pub files_checked: usize,
    pub closure_checked: usize,
    pub failures: Vec<CheckFailure>,
}

impl VerificationReport {
    pub fn ok(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Whether task `i` of `n` falls in an evenly spread sample of `fraction`.
fn sampled(i: usize, fraction: f64) -> bool {
    fraction >= 1.0 || (i as f64 * fraction).floor() != ((i + 1) as f64 * fraction).floor()
}

/// Re-hashes every file, re-validates every task and checks evaluator closure
/// on an evenly spread `closure_fraction` of tasks. Failures are collected, not fatal.
pub fn verify_manifest(path: &Path, closure_fraction: f64) -> Result<VerificationReport, DatasetError> {
    let manifest_path = if path.is_dir() { path.join(MANIFEST_FILE) } else { path.to_path_buf() };
    let text = std::fs::read_to_string(&manifest_path).map_err(io_err(&manifest_path))?;
    let manifest = Manifest::from_json(&text)?;
    let root = manifest_path.parent().map(Path::to_path_buf).unwrap_or_default();
    let style = &manifest.config.style;
    let evaluator = Evaluator::new(style.clone(), manifest.conventions.detection.clone())?
        .with_success_rule(manifest.conventions.success_rule);

    let mut report = VerificationReport { tasks: manifest.tasks.len(), ..Default::default() };
    if tasks_digest(&manifest.tasks) != manifest.global_digest {
        report.failures.push(CheckFailure {
            task_id: None,
            check: CheckKind::GlobalDigest,
            detail: "global digest does not match the task list".into(),
        });
    }
    let mut graphs = GraphCache::default();
    let tasks: Vec<Result<Task, DatasetError>> = manifest.tasks.iter().map(|d| d.to_task(&mut graphs)).collect();

    let per_task: Vec<(usize, bool, Vec<CheckFailure>)> = manifest
        .tasks
        .par_iter()
        .zip(tasks.par_iter())
        .enumerate()
        .map(|(i, (desc, task))| {
            let id = desc.task_id().to_string();
            let fail = |check, detail: String| CheckFailure { task_id: Some(id.clone()), check, detail };
            let mut failures = Vec::new();
            let mut checked = 0;
            let files = desc.files();
            let mut gt_bytes = None;
            for (rel, digest, is_gt) in [(&files.task_image, &files.task_digest, false), (&files.ground_truth, &files.ground_truth_digest, true)] {
                match std::fs::read(root.join(rel)) {
                    Ok(bytes) => {
                        checked += 1;
                        if sha256_hex(&bytes) != *digest {
                            failures.push(fail(CheckKind::DigestMismatch, rel.clone()));
                        } else if is_gt {
                            gt_bytes = Some(bytes);
                        }
                    }
                    Err(_) => failures.push(fail(CheckKind::MissingFile, rel.clone())),
                }
            }
            let task = match task {
                Ok(t) => t,
                Err(e) => {
                    failures.push(fail(CheckKind::Structure, e.to_string()));
                    return (checked, false, failures);
                }
            };
            let closure = sampled(i, closure_fraction);
            if closure {
                if let Err(detail) = check_closure(task, gt_bytes.as_deref(), style, &evaluator) {
                    failures.push(fail(CheckKind::Closure, detail));
                }
            }
            (checked, closure, failures)
        })
        .collect();
    for (checked, closure, failures) in per_task {
        report.files_checked += checked;
        report.closure_checked += closure as usize;
        report.failures.extend(failures);
    }
    Ok(report)
}

fn check_closure(task: &Task, gt_bytes: Option<&[u8]>, style: &RenderStyle, evaluator: &Evaluator) -> Result<(), String> {
    let rendered = task.render(true, style).map_err(|e| e.to_string())?;
    if let Some(bytes) = gt_bytes {
        let stored = ImageBuffer::from_png(bytes).map_err(|e| e.to_string())?;
        if stored != rendered {
            return Err("stored ground truth differs from a fresh render".into());
        }
    }
    let scored = evaluator.score(&rendered, &rendered, task).map_err(|e| e.to_string())?;
    if !scored.validity.success || scored.fidelity.mse_in != 0.0 || scored.fidelity.mse_out != 0.0 {
        return Err(format!("ground truth scores {:?}", scored.validity));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> BenchmarkConfig {
        BenchmarkConfig {
            name: "tiny".into(),
            seed: 9,
            mazes: vec![MazeSpec { geometry: GeometryKind::Circle, scales: vec![3, 4], per_scale: 2, growth: BOTH_GROWTHS.to_vec() }],
            queens: vec![QueenSpec { sizes: vec![5], per_size: 2, require_unique: true, max_attempts: 1000 }],
            style: RenderStyle::default(),
        }
    }

    #[test]
    fn preset_counts() {
        let eval = BenchmarkConfig::preset("eval").unwrap();
        let jobs = eval.jobs();
        assert_eq!(jobs.iter().filter(|j| matches!(j, Job::Maze { .. })).count(), 2800);
        assert_eq!(jobs.iter().filter(|j| matches!(j, Job::Queen { .. })).count(), 350);
        for geometry in GeometryKind::ALL {
            let n = jobs.iter().filter(|j| matches!(j, Job::Maze { geometry: g, .. } if *g == geometry)).count();
            assert_eq!(n, 700);
        }
        let basic = BenchmarkConfig::preset("train-basic").unwrap().jobs();
        assert_eq!(basic.len(), 4 * 800 + 800);
        assert!(BenchmarkConfig::preset("nope").is_err());
    }

    #[test]
    fn growth_split_is_even() {
        let jobs = BenchmarkConfig::preset("eval").unwrap().jobs();
        let dfs = jobs.iter().filter(|j| matches!(j, Job::Maze { growth: GrowthKind::DfsBacktracker, .. })).count();
        assert_eq!(dfs, 1400);
    }

    #[test]
    fn config_round_trips_and_rejects_unknown_fields() {
        let cfg = BenchmarkConfig::preset("study").unwrap();
        let text = serde_json::to_string(&cfg).unwrap();
        assert_eq!(BenchmarkConfig::from_json(&text).unwrap(), cfg);
        let extra = text.replacen('{', "{\"bogus\":1,", 1);
        assert!(BenchmarkConfig::from_json(&extra).is_err());
    }

    #[test]
    fn build_load_and_verify() {
        let dir = tempfile::tempdir().unwrap();
        let manifest = build_benchmark(&tiny(), dir.path()).unwrap();
        assert_eq!(manifest.tasks.len(), 6);
        let ds = Dataset::open(dir.path()).unwrap();
        assert_eq!(ds.tasks.len(), 6);
        assert!(ds.task_image_path(0).exists());
        let report = verify_manifest(dir.path(), 1.0).unwrap();
        assert!(report.ok(), "{:?}", report.failures);
        assert_eq!((report.files_checked, report.closure_checked), (12, 6));

        let again = tempfile::tempdir().unwrap();
        assert_eq!(build_benchmark(&tiny(), again.path()).unwrap().global_digest, manifest.global_digest);
    }

    #[test]
    fn sample_fraction_is_spread() {
        assert_eq!((0..100).filter(|&i| sampled(i, 0.1)).count(), 10);
        assert_eq!((0..7).filter(|&i| sampled(i, 1.0)).count(), 7);
        assert_eq!((0..7).filter(|&i| sampled(i, 0.0)).count(), 0);
    }

    #[test]
    fn schema_version_is_enforced() {
        let dir = tempfile::tempdir().unwrap();
        let manifest = build_benchmark(&tiny(), dir.path()).unwrap();
        let text = manifest.to_json().replacen("\"schema_version\": 1", "\"schema_version\": 2", 1);
        assert!(matches!(Manifest::from_json(&text), Err(DatasetError::Schema(2))));
    }
}
