mod common;

use std::sync::Arc;

use planbench_core::digest::sha256_hex;
use planbench_core::eval::{aggregate, read_records};
use planbench_harness::fixtures::{BlankEditor, EchoEditor, FlakyEditor, GroundTruthEditor, ScriptedEditor, TimedEditor};
use planbench_harness::{budget_run, run_eval, BudgetConfig, ManualClock, RetryPolicy, RunConfig, SampleRunner};

fn quick_retry() -> RetryPolicy {
    RetryPolicy { max_retries: 3, base_delay: 0.5, max_delay: 4.0 }
}

#[test]
fn echo_fixture_stores_the_task_image_verbatim() {
    let dir = tempfile::tempdir().unwrap();
    let ds = common::small_dataset(&dir.path().join("bench"));
    let clock = ManualClock::new();
    let mut runner = SampleRunner::new(&ds, &EchoEditor, &clock).unwrap();
    runner.candidates_dir = Some(dir.path().join("cands"));
    let records = dir.path().join("records.jsonl");
    let out = run_eval(&runner, &RunConfig { k: 1, ..Default::default() }, &records).unwrap();
    assert_eq!(out.written, ds.tasks.len());
    for (i, r) in read_records(&records).unwrap().iter().enumerate() {
        let task_png = std::fs::read(ds.task_image_path(i)).unwrap();
        assert_eq!(r.candidate_digest.as_deref(), Some(sha256_hex(&task_png).as_str()));
        let stored = std::fs::read(dir.path().join("cands").join(format!("{}.1.png", r.task_id))).unwrap();
        assert_eq!(stored, task_png);
        // an unsolved task shows no path and no queens
        assert!(r.detected.is_empty(), "{}", r.task_id);
        assert!(!r.validity.success);
    }
}

#[test]
fn flaky_fixture_is_retried_and_recorded() {
    let dir = tempfile::tempdir().unwrap();
    let ds = common::small_dataset(&dir.path().join("bench"));
    let clock = ManualClock::new();
    let flaky = FlakyEditor::new(GroundTruthEditor::new(&ds), 2);
    let mut runner = SampleRunner::new(&ds, &flaky, &clock).unwrap();
    runner.retry = quick_retry();
    let records = dir.path().join("records.jsonl");
    run_eval(&runner, &RunConfig { k: 1, parallelism: 1, ..Default::default() }, &records).unwrap();
    let recs = read_records(&records).unwrap();
    assert_eq!(recs.len(), ds.tasks.len());
    for r in &recs {
        assert_eq!(r.retries, 2);
        assert!(r.error.is_none());
        assert!(r.validity.success, "{}", r.task_id);
        // backoff 0.5 + 1.0 seconds on the virtual clock
        assert!((r.latency - 1.5).abs() < 1e-9);
    }
    assert_eq!(flaky.calls() as usize, 3 * ds.tasks.len());
}

#[test]
fn exhausted_retries_become_failed_samples() {
    let dir = tempfile::tempdir().unwrap();
    let ds = common::small_dataset(&dir.path().join("bench"));
    let clock = ManualClock::new();
    let flaky = FlakyEditor::new(EchoEditor, 10);
    let mut runner = SampleRunner::new(&ds, &flaky, &clock).unwrap();
    runner.retry = quick_retry();
    let records = dir.path().join("records.jsonl");
    let out = run_eval(&runner, &RunConfig { k: 1, ..Default::default() }, &records).unwrap();
    assert_eq!(out.failed, ds.tasks.len());
    let recs = read_records(&records).unwrap();
    assert!(recs.iter().all(|r| r.error.as_deref() == Some("timeout") && !r.validity.success && r.retries == 3));
}

#[test]
fn ground_truth_fixture_scores_perfectly() {
    let dir = tempfile::tempdir().unwrap();
    let ds = common::small_dataset(&dir.path().join("bench"));
    let clock = ManualClock::new();
    let editor = GroundTruthEditor::new(&ds);
    let runner = SampleRunner::new(&ds, &editor, &clock).unwrap();
    let records = dir.path().join("records.jsonl");
    run_eval(&runner, &RunConfig { k: 2, ..Default::default() }, &records).unwrap();
    let report = aggregate(&read_records(&records).unwrap(), 2).unwrap();
    let o = &report.overall;
    assert_eq!((o.pass_at_1, o.pass_at_k_mean, o.pass_at_k_any), (1.0, 1.0, 1.0));
    assert_eq!((o.coverage, o.violation, o.mse_in, o.mse_out), (1.0, 0.0, 0.0, 0.0));
}

#[test]
fn blank_fixture_scores_zero() {
    let dir = tempfile::tempdir().unwrap();
    let ds = common::small_dataset(&dir.path().join("bench"));
    let clock = ManualClock::new();
    let style = ds.style();
    let editor = BlankEditor::new(style.resolution, style.background);
    let runner = SampleRunner::new(&ds, &editor, &clock).unwrap();
    let records = dir.path().join("records.jsonl");
    run_eval(&runner, &RunConfig { k: 1, ..Default::default() }, &records).unwrap();
    let report = aggregate(&read_records(&records).unwrap(), 1).unwrap();
    let o = &report.overall;
    assert_eq!((o.pass_at_1, o.pass_at_k_any, o.coverage, o.violation), (0.0, 0.0, 0.0, 0.0));
    assert!(o.mse_in > 0.0);
}

#[test]
fn interrupted_and_resumed_run_matches_a_clean_run() {
    let dir = tempfile::tempdir().unwrap();
    let ds = common::small_dataset(&dir.path().join("bench"));
    let clock = ManualClock::new();
    let editor = GroundTruthEditor::new(&ds);
    let runner = SampleRunner::new(&ds, &editor, &clock).unwrap();
    let cfg = RunConfig { k: 3, parallelism: 3, ..Default::default() };

    let clean = dir.path().join("clean.jsonl");
    run_eval(&runner, &cfg, &clean).unwrap();

    let resumed = dir.path().join("resumed.jsonl");
    let first = run_eval(&runner, &RunConfig { stop_after: Some(7), ..cfg.clone() }, &resumed).unwrap();
    assert!(first.interrupted);
    assert_eq!(first.written, 7);
    // a torn line from a crash mid-write is dropped and re-collected
    let mut text = std::fs::read_to_string(&resumed).unwrap();
    text.push_str("{\"task_id\":\"maze-sq");
    std::fs::write(&resumed, text).unwrap();
    let second = run_eval(&runner, &cfg, &resumed).unwrap();
    assert_eq!((second.skipped, second.written), (7, 3 * ds.tasks.len() - 7));
    assert!(!second.interrupted);

    assert_eq!(std::fs::read(&clean).unwrap(), std::fs::read(&resumed).unwrap());
    let third = run_eval(&runner, &cfg, &resumed).unwrap();
    assert_eq!(third.written, 0);
}

#[test]
fn budget_run_spends_exactly_the_budget() {
    let dir = tempfile::tempdir().unwrap();
    let ds = common::small_dataset(&dir.path().join("bench"));
    let clock = Arc::new(ManualClock::new());
    let style = ds.style();
    let editor = TimedEditor::new(BlankEditor::new(style.resolution, style.background), 7.5, clock.clone());
    let runner = SampleRunner::new(&ds, &editor, clock.as_ref()).unwrap();

    let report = budget_run(&runner, &BudgetConfig { budget_secs: 225.0, cost_estimate: 7.5 }).unwrap();
    for t in &report.tasks {
        assert_eq!(t.samples, 30, "{}", t.task_id);
        assert!(!t.success);
        assert!((t.elapsed - 225.0).abs() < 1e-9);
    }
    assert_eq!(report.records.len(), 30 * ds.tasks.len());

    let none = budget_run(&runner, &BudgetConfig { budget_secs: 5.0, cost_estimate: 7.5 }).unwrap();
    assert!(none.tasks.iter().all(|t| t.samples == 0 && !t.success));
    assert!(none.rows.iter().all(|r| r.success_rate == 0.0));
}

#[test]
fn budget_run_stops_at_the_first_success() {
    let dir = tempfile::tempdir().unwrap();
    let ds = common::small_dataset(&dir.path().join("bench"));
    let clock = Arc::new(ManualClock::new());
    let editor = TimedEditor::new(ScriptedEditor::new(&ds, 3), 7.5, clock.clone());
    let runner = SampleRunner::new(&ds, &editor, clock.as_ref()).unwrap();
    let report = budget_run(&runner, &BudgetConfig { budget_secs: 225.0, cost_estimate: 7.5 }).unwrap();
    for t in &report.tasks {
        assert_eq!((t.samples, t.success), (3, true), "{}", t.task_id);
        assert!((t.elapsed - 22.5).abs() < 1e-9);
    }
    assert!(report.rows.iter().all(|r| r.success_rate == 1.0 && r.mean_samples == 3.0));

    // a budget that fits only two samples never reaches the success
    let editor = TimedEditor::new(ScriptedEditor::new(&ds, 3), 7.5, clock.clone());
    let runner = SampleRunner::new(&ds, &editor, clock.as_ref()).unwrap();
    let short = budget_run(&runner, &BudgetConfig { budget_secs: 20.0, cost_estimate: 7.5 }).unwrap();
    assert!(short.tasks.iter().all(|t| t.samples == 2 && !t.success));
}
