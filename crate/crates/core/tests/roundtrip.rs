use planbench_core::eval::{align_candidate, logical_validity, DetectionConfig, Evaluator};
use planbench_core::maze::build_maze_task;
use planbench_core::queen::build_queen_task;
use planbench_core::{GeometryKind, GrowthKind, RenderStyle, Task};

fn evaluator() -> Evaluator {
    Evaluator::new(RenderStyle::default(), DetectionConfig::default()).unwrap()
}

#[test]
fn rendered_mazes_round_trip_through_detection() {
    let ev = evaluator();
    let style = RenderStyle::default();
    for geometry in GeometryKind::ALL {
        for scale in 3..=16 {
            for (i, growth) in [GrowthKind::DfsBacktracker, GrowthKind::BfsGrowth].into_iter().enumerate() {
                let task = Task::from(build_maze_task(geometry, scale, growth, 1000 + scale as u64 * 7 + i as u64).unwrap());
                let gt = task.render(true, &style).unwrap();
                let blank = task.render(false, &style).unwrap();
                let detected = ev.detect(&gt, &task).unwrap();
                assert_eq!(detected.as_set(), task.goal().as_set(), "{geometry} scale {scale} {growth:?}");
                assert!(ev.detect(&blank, &task).unwrap().is_empty(), "{geometry} scale {scale}");
                let f = ev.fidelity(&gt, &gt, &task).unwrap();
                assert_eq!((f.mse_in, f.mse_out), (0.0, 0.0));
            }
        }
    }
}

#[test]
fn rendered_queens_round_trip_through_detection() {
    let ev = evaluator();
    let style = RenderStyle::default();
    for n in 4..=10 {
        let task = Task::from(build_queen_task(n, 40 + n as u64, true, 10_000).unwrap());
        let gt = task.render(true, &style).unwrap();
        assert_eq!(ev.detect(&gt, &task).unwrap().as_set(), task.goal().as_set(), "n={n}");
        assert!(ev.detect(&task.render(false, &style).unwrap(), &task).unwrap().is_empty());
    }
}

#[test]
fn downscaled_ground_truth_still_detects() {
    let ev = evaluator();
    let hi = RenderStyle::default().with_resolution(1024);
    for geometry in GeometryKind::ALL {
        for scale in [3, 5, 8] {
            let task = Task::from(build_maze_task(geometry, scale, GrowthKind::DfsBacktracker, 77).unwrap());
            let aligned = align_candidate(&task.render(true, &hi).unwrap(), 512).unwrap();
            let v = logical_validity(&ev.detect(&aligned, &task).unwrap(), &task.goal()).unwrap();
            assert!(v.success, "{geometry} scale {scale}: {v:?}");
        }
    }
}
