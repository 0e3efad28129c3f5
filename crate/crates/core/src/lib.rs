//! Procedural Maze and Queen puzzles for visual planning as image editing.
//!
//! The crate generates puzzle instances with ground-truth solutions,
//! rasterizes them, and scores candidate solution images with rule-based
//! logical-validity and pixel-fidelity metrics.

pub mod dataset;
pub mod digest;
pub mod eval;
pub mod geometry;
pub mod image;
pub mod maze;
pub mod pixmap;
pub mod queen;
pub mod raster;
pub mod render;
pub mod seed;
pub mod task;

pub use geometry::{build_cell_graph, CellGraph, CellId, GeometryKind, Point};
pub use image::ImageBuffer;
pub use maze::{GrowthKind, Maze, MazeTask, SolutionCells};
pub use queen::{QueenPlacement, QueenTask, RegionMap};
pub use render::RenderStyle;
pub use task::Task;
