//! `planbench`: build, verify, render and score visual planning benchmarks.
//!
//! Exit codes: 0 success, 1 usage or input error, 2 verification failure,
//! 3 external-service failure.

use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;
use std::time::Instant;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use planbench_core::dataset::{build_benchmark, verify_manifest, BenchmarkConfig, Dataset};
use planbench_core::eval::{aggregate, read_records, SampleRecord};
use planbench_core::maze::{build_maze_task, solve_maze};
use planbench_core::queen::{build_queen_task, solve_queens};
use planbench_core::{GeometryKind, GrowthKind, RenderStyle, Task};
use planbench_harness::editor::CandidateDirEditor;
use planbench_harness::fixtures::{self, FIXTURE_NAMES};
use planbench_harness::serve::{serve_blocking, StudyConfig, StudyState};
use planbench_harness::{
    budget_run, run_eval, BudgetConfig, EndpointConfig, ImageEditor, PromptVariant, RateLimiter, RetryPolicy, RunConfig,
    SampleRunner, SystemClock,
};
use serde_json::json;

#[derive(Parser)]
#[command(name = "planbench", version, about = "Visual planning benchmark toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a benchmark: task images, ground truths and a manifest.
    Gen(GenArgs),
    /// Re-hash files and re-check tasks and evaluator closure.
    Verify(VerifyArgs),
    /// Print oracle solutions.
    Solve(SolveArgs),
    /// Render a single task to PNG.
    Render(RenderArgs),
    /// Score a directory of candidate images against a benchmark.
    Eval(EvalArgs),
    /// Aggregate sample records into the results table.
    Report(ReportArgs),
    /// Collect and score samples from a model or fixture.
    Run(RunArgs),
    /// Serve the human-study API.
    Serve(ServeArgs),
}

#[derive(Args)]
struct GenArgs {
    /// Named preset: eval, train-basic, train-8x8 or study.
    #[arg(long, conflicts_with = "config")]
    preset: Option<String>,
    /// Benchmark config as JSON.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    resolution: Option<u32>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct VerifyArgs {
    /// Benchmark directory or manifest file.
    manifest: PathBuf,
    /// Fraction of tasks re-rendered and re-scored.
    #[arg(long, default_value_t = 0.1)]
    closure_fraction: f64,
}

/// A single task described on the command line.
#[derive(Args)]
struct TaskSpecArgs {
    #[arg(long, conflicts_with = "queens")]
    geometry: Option<GeometryKind>,
    #[arg(long, requires = "geometry")]
    scale: Option<u32>,
    #[arg(long, default_value = "dfs_backtracker")]
    growth: GrowthKind,
    /// Board size of a Queen puzzle.
    #[arg(long)]
    queens: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl TaskSpecArgs {
    fn build(&self) -> anyhow::Result<Option<Task>> {
        match (self.geometry, self.queens) {
            (Some(g), None) => {
                let scale = self.scale.context("--geometry needs --scale")?;
                Ok(Some(build_maze_task(g, scale, self.growth, self.seed)?.into()))
            }
            (None, Some(n)) => Ok(Some(build_queen_task(n, self.seed, true, 10_000)?.into())),
            _ => Ok(None),
        }
    }
}

#[derive(Args)]
struct SolveArgs {
    /// Benchmark directory; omit to solve a task given by flags.
    dataset: Option<PathBuf>,
    /// Only this task.
    #[arg(long)]
    task: Option<String>,
    #[command(flatten)]
    spec: TaskSpecArgs,
}

#[derive(Args)]
struct RenderArgs {
    /// Benchmark directory to take `--task` from.
    #[arg(long, requires = "task")]
    dataset: Option<PathBuf>,
    #[arg(long)]
    task: Option<String>,
    #[command(flatten)]
    spec: TaskSpecArgs,
    /// Draw the solution.
    #[arg(long)]
    solution: bool,
    #[arg(long)]
    resolution: Option<u32>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct EvalArgs {
    dataset: PathBuf,
    /// Directory of `{task_id}.png` or `{task_id}.{n}.png` candidates.
    #[arg(long)]
    candidates: PathBuf,
    #[arg(long, default_value_t = 1)]
    k: u32,
    /// Where records.jsonl and report.txt are written.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ReportArgs {
    records: Vec<PathBuf>,
    #[arg(long, default_value_t = 5)]
    k: usize,
    #[arg(long)]
    csv: bool,
}

#[derive(Args)]
struct RunArgs {
    dataset: PathBuf,
    /// Built-in fixture editor.
    #[arg(long, conflicts_with = "endpoint")]
    fixture: Option<String>,
    /// Endpoint config as JSON.
    #[arg(long)]
    endpoint: Option<PathBuf>,
    #[arg(long, default_value_t = 5)]
    k: u32,
    #[arg(long, default_value_t = 4)]
    parallelism: usize,
    #[arg(long, default_value = "plain")]
    variant: PromptVariant,
    #[arg(long)]
    rate_limit: Option<f64>,
    #[arg(long, default_value_t = 3)]
    max_retries: u32,
    /// Time budget per task in seconds; switches to a budget-matched run.
    #[arg(long)]
    budget: Option<f64>,
    /// Expected seconds per sample for budget runs.
    #[arg(long, default_value_t = 30.0)]
    cost_estimate: f64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ServeArgs {
    dataset: PathBuf,
    #[arg(long, default_value = "127.0.0.1:8080")]
    addr: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1)]
    per_group: usize,
    #[arg(long)]
    out: PathBuf,
}

enum Failure {
    Input(anyhow::Error),
    Verification(String),
    Service(String),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Input(e)
    }
}

type CmdResult = Result<(), Failure>;

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let result = match cli.command {
        Command::Gen(a) => gen(a),
        Command::Verify(a) => verify(a),
        Command::Solve(a) => solve(a),
        Command::Render(a) => render(a),
        Command::Eval(a) => eval(a),
        Command::Report(a) => report(a),
        Command::Run(a) => run(a),
        Command::Serve(a) => serve(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Input(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
        Err(Failure::Verification(msg)) => {
            eprintln!("verification failed: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Service(msg)) => {
            eprintln!("external service failure: {msg}");
            ExitCode::from(3)
        }
    }
}

fn gen(a: GenArgs) -> CmdResult {
    let mut config = match (&a.preset, &a.config) {
        (_, Some(path)) => {
            let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            BenchmarkConfig::from_json(&text).context("invalid config")?
        }
        (Some(name), None) => BenchmarkConfig::preset(name).context("unknown preset")?,
        (None, None) => return Err(anyhow::anyhow!("pass --preset or --config").into()),
    };
    if let Some(seed) = a.seed {
        config.seed = seed;
    }
    if let Some(r) = a.resolution {
        config.style = config.style.with_resolution(r);
    }
    config.validate().context("invalid config")?;
    let started = Instant::now();
    let manifest = build_benchmark(&config, &a.out).context("building benchmark")?;
    println!(
        "{} tasks written to {} in {:.1}s, global digest {}",
        manifest.tasks.len(),
        a.out.display(),
        started.elapsed().as_secs_f64(),
        manifest.global_digest
    );
    Ok(())
}

fn verify(a: VerifyArgs) -> CmdResult {
    if !(0.0..=1.0).contains(&a.closure_fraction) {
        return Err(anyhow::anyhow!("--closure-fraction must be in [0, 1]").into());
    }
    let report = verify_manifest(&a.manifest, a.closure_fraction).context("reading manifest")?;
    for f in &report.failures {
        println!("FAIL {:?} {}: {}", f.check, f.task_id.as_deref().unwrap_or("-"), f.detail);
    }
    println!(
        "{} tasks, {} files checked, {} closure checks, {} failures",
        report.tasks,
        report.files_checked,
        report.closure_checked,
        report.failures.len()
    );
    if report.ok() {
        Ok(())
    } else {
        Err(Failure::Verification(format!("{} checks failed", report.failures.len())))
    }
}

/// Re-derives the solution of `task` from its structure alone.
fn oracle(task: &Task) -> anyhow::Result<(Vec<u32>, usize)> {
    Ok(match task {
        Task::Maze(m) => (solve_maze(&m.maze, m.start, m.end)?.cells().iter().map(|c| c.0).collect(), 1),
        Task::Queen(q) => {
            let all = solve_queens(&q.regions);
            let first = all.first().context("puzzle has no solution")?;
            (first.cells().cells().iter().map(|c| c.0).collect(), all.len())
        }
    })
}

fn solve(a: SolveArgs) -> CmdResult {
    let tasks: Vec<Task> = match (&a.dataset, a.spec.build()?) {
        (Some(dir), None) => {
            let ds = Dataset::open(dir).context("opening dataset")?;
            match &a.task {
                Some(id) => vec![ds.tasks[ds.position(id).with_context(|| format!("no task {id}"))?].clone()],
                None => ds.tasks,
            }
        }
        (None, Some(task)) => vec![task],
        _ => return Err(anyhow::anyhow!("pass a dataset or a task spec (--geometry/--scale or --queens)").into()),
    };
    let mut mismatches = 0;
    let mut out = std::io::stdout().lock();
    for task in &tasks {
        let (solution, solutions) = oracle(task)?;
        let goal: Vec<u32> = task.goal().cells().iter().map(|c| c.0).collect();
        let matches = match task {
            Task::Maze(_) => solution == goal,
            Task::Queen(_) => {
                let (mut s, mut g) = (solution.clone(), goal.clone());
                s.sort_unstable();
                g.sort_unstable();
                s == g
            }
        };
        mismatches += !matches as usize;
        let line = json!({"task_id": task.id(), "kind": task.kind(), "solution": solution, "solutions": solutions, "matches_goal": matches});
        if writeln!(out, "{line}").is_err() {
            // reader went away, e.g. `| head`
            return Ok(());
        }
    }
    if mismatches > 0 {
        return Err(Failure::Verification(format!("{mismatches} oracle solutions differ from the stored goals")));
    }
    Ok(())
}

fn render(a: RenderArgs) -> CmdResult {
    let (task, mut style) = match (&a.dataset, &a.task, a.spec.build()?) {
        (Some(dir), Some(id), None) => {
            let ds = Dataset::open(dir).context("opening dataset")?;
            let i = ds.position(id).with_context(|| format!("no task {id}"))?;
            let style = ds.style().clone();
            (ds.tasks[i].clone(), style)
        }
        (None, None, Some(task)) => (task, RenderStyle::default()),
        _ => return Err(anyhow::anyhow!("pass --dataset with --task, or a task spec").into()),
    };
    if let Some(r) = a.resolution {
        style = style.with_resolution(r);
        style.validate().context("invalid resolution")?;
    }
    let img = task.render(a.solution, &style).context("rendering")?;
    img.save_png(&a.out).with_context(|| format!("writing {}", a.out.display()))?;
    println!("{} -> {}", task.id(), a.out.display());
    Ok(())
}

fn print_report(records: &[SampleRecord], k: usize, out: Option<&Path>) -> anyhow::Result<()> {
    let report = aggregate(records, k)?;
    let table = report.to_table();
    print!("{table}");
    if let Some(dir) = out {
        std::fs::write(dir.join("report.txt"), &table)?;
        std::fs::write(dir.join("report.csv"), report.to_csv())?;
    }
    Ok(())
}

fn eval(a: EvalArgs) -> CmdResult {
    let ds = Dataset::open(&a.dataset).context("opening dataset")?;
    if !a.candidates.is_dir() {
        return Err(anyhow::anyhow!("{} is not a directory", a.candidates.display()).into());
    }
    std::fs::create_dir_all(&a.out).with_context(|| format!("creating {}", a.out.display()))?;
    let editor = CandidateDirEditor::new(&a.candidates);
    let clock = SystemClock::new();
    let mut runner = SampleRunner::new(&ds, &editor, &clock).context("building evaluator")?;
    runner.retry = RetryPolicy { max_retries: 0, ..Default::default() };
    let records_path = a.out.join("records.jsonl");
    let cfg = RunConfig { k: a.k, parallelism: 1, ..Default::default() };
    let outcome = run_eval(&runner, &cfg, &records_path).context("scoring candidates")?;
    if outcome.failed > 0 {
        log::warn!("{} samples had no usable candidate", outcome.failed);
    }
    print_report(&read_records(&records_path).context("reading records")?, a.k as usize, Some(&a.out))?;
    Ok(())
}

fn report(a: ReportArgs) -> CmdResult {
    if a.records.is_empty() {
        return Err(anyhow::anyhow!("pass at least one records file").into());
    }
    let mut records = Vec::new();
    for path in &a.records {
        records.extend(read_records(path).with_context(|| format!("reading {}", path.display()))?);
    }
    let report = aggregate(&records, a.k).context("aggregating")?;
    if a.csv {
        print!("{}", report.to_csv());
    } else {
        print!("{}", report.to_table());
    }
    Ok(())
}

fn is_service_error(tag: &str) -> bool {
    matches!(tag, "timeout" | "transport" | "server" | "rejected" | "command" | "malformed")
}

fn run(a: RunArgs) -> CmdResult {
    let ds = Dataset::open(&a.dataset).context("opening dataset")?;
    std::fs::create_dir_all(&a.out).with_context(|| format!("creating {}", a.out.display()))?;
    let editor: Box<dyn ImageEditor> = match (&a.fixture, &a.endpoint) {
        (Some(name), None) => fixtures::by_name(name, &ds)
            .with_context(|| format!("unknown fixture {name}; expected one of {}", FIXTURE_NAMES.join(", ")))?,
        (None, Some(path)) => {
            let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            let cfg: EndpointConfig = serde_json::from_str(&text).context("invalid endpoint config")?;
            cfg.build(&a.out.join("scratch")).map_err(anyhow::Error::msg)?
        }
        _ => return Err(anyhow::anyhow!("pass --fixture or --endpoint").into()),
    };
    let clock = SystemClock::new();
    let mut runner = SampleRunner::new(&ds, editor.as_ref(), &clock).context("building evaluator")?;
    runner.variant = a.variant;
    runner.retry = RetryPolicy { max_retries: a.max_retries, ..Default::default() };
    runner.candidates_dir = Some(a.out.join("candidates"));
    if let Some(rate) = a.rate_limit {
        if !(rate > 0.0) {
            return Err(anyhow::anyhow!("--rate-limit must be positive").into());
        }
        runner.limiter = Some(RateLimiter::new(rate, a.parallelism as u32));
    }

    let records = match a.budget {
        Some(budget) => {
            let report = budget_run(&runner, &BudgetConfig { budget_secs: budget, cost_estimate: a.cost_estimate })
                .context("budget run")?;
            std::fs::write(a.out.join("budget.json"), serde_json::to_string_pretty(&report).expect("serializes"))
                .context("writing budget report")?;
            for row in &report.rows {
                println!(
                    "{:<24} budget {:>6.1}s  success {:>6.2}%  mean samples {:.2}",
                    row.group,
                    row.budget_secs,
                    100.0 * row.success_rate,
                    row.mean_samples
                );
            }
            report.records
        }
        None => {
            let cfg = RunConfig {
                k: a.k,
                parallelism: a.parallelism,
                variant: a.variant,
                retry: runner.retry.clone(),
                rate_limit_per_minute: a.rate_limit,
                stop_after: None,
            };
            let path = a.out.join("records.jsonl");
            let outcome = run_eval(&runner, &cfg, &path).context("collecting samples")?;
            log::info!("{} new samples, {} already recorded", outcome.written, outcome.skipped);
            let records = read_records(&path).context("reading records")?;
            print_report(&records, a.k as usize, Some(&a.out))?;
            records
        }
    };
    let service_failures = records.iter().filter(|r| r.error.as_deref().is_some_and(is_service_error)).count();
    if service_failures > 0 {
        return Err(Failure::Service(format!("{service_failures} samples failed at the model endpoint")));
    }
    Ok(())
}

fn serve(a: ServeArgs) -> CmdResult {
    let ds = Dataset::open(&a.dataset).context("opening dataset")?;
    let cfg = StudyConfig { out_dir: a.out, seed: a.seed, per_group: a.per_group };
    let state = StudyState::new(ds, cfg).map_err(anyhow::Error::msg)?;
    serve_blocking(&a.addr, Arc::new(state)).with_context(|| format!("serving on {}", a.addr))?;
    Ok(())
}
