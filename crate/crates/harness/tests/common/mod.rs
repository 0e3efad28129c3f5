#![allow(dead_code)]

use std::path::Path;

use planbench_core::dataset::{build_benchmark, BenchmarkConfig, Dataset, MazeSpec, QueenSpec};
use planbench_core::{GeometryKind, GrowthKind, RenderStyle};

/// Six mazes and four queen puzzles, small enough to build in a second.
pub fn small_config() -> BenchmarkConfig {
    BenchmarkConfig {
        name: "small".into(),
        seed: 7,
        mazes: vec![
            MazeSpec {
                geometry: GeometryKind::Square,
                scales: vec![3, 5],
                per_scale: 2,
                growth: vec![GrowthKind::DfsBacktracker, GrowthKind::BfsGrowth],
            },
            MazeSpec { geometry: GeometryKind::Hexagon, scales: vec![4], per_scale: 2, growth: vec![GrowthKind::BfsGrowth] },
        ],
        queens: vec![QueenSpec { sizes: vec![4, 5], per_size: 2, require_unique: true, max_attempts: 10_000 }],
        style: RenderStyle::default(),
    }
}

pub fn small_dataset(dir: &Path) -> Dataset {
    build_benchmark(&small_config(), dir).expect("small benchmark builds");
    Dataset::open(dir).expect("small benchmark opens")
}

/// Serves `router` on an ephemeral port from a background runtime.
pub fn spawn_server(router: axum::Router) -> std::net::SocketAddr {
    let (tx, rx) = std::sync::mpsc::channel();
    std::thread::spawn(move || {
        let rt = tokio::runtime::Builder::new_multi_thread().worker_threads(2).enable_all().build().unwrap();
        rt.block_on(async move {
            let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
            tx.send(listener.local_addr().unwrap()).unwrap();
            axum::serve(listener, router).await.unwrap();
        });
    });
    rx.recv().unwrap()
}
