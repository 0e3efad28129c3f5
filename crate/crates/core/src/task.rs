use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::geometry::{CellGraph, GeometryError, GeometryKind};
use crate::image::ImageBuffer;
use crate::maze::{MazeTask, SolutionCells};
use crate::queen::QueenTask;
use crate::render::{queen_board, render_maze, render_queens, RenderError, RenderStyle};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TaskKind {
    Maze,
    Queen,
}

impl fmt::Display for TaskKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TaskKind::Maze => "maze",
            TaskKind::Queen => "queen",
        })
    }
}

/// Either puzzle kind, as consumed by rendering and evaluation.
#[derive(Clone, Debug)]
pub enum Task {
    Maze(MazeTask),
    Queen(QueenTask),
}

impl Task {
    pub fn id(&self) -> &str {
        match self {
            Task::Maze(t) => &t.task_id,
            Task::Queen(t) => &t.task_id,
        }
    }

    pub fn kind(&self) -> TaskKind {
        match self {
            Task::Maze(_) => TaskKind::Maze,
            Task::Queen(_) => TaskKind::Queen,
        }
    }

    pub fn scale(&self) -> u32 {
        match self {
            Task::Maze(t) => t.maze.graph().scale(),
            Task::Queen(t) => t.n as u32,
        }
    }

    /// The tessellation the solution cells index into; Queen boards are square grids.
    pub fn geometry(&self) -> GeometryKind {
        match self {
            Task::Maze(t) => t.maze.graph().geometry(),
            Task::Queen(_) => GeometryKind::Square,
        }
    }

    /// Report grouping label, e.g. `maze/hexagon/08` or `queen/07`.
    pub fn group(&self) -> String {
        match self {
            Task::Maze(t) => format!("maze/{}/{:02}", t.maze.graph().geometry(), t.maze.graph().scale()),
            Task::Queen(t) => format!("queen/{:02}", t.n),
        }
    }

    pub fn goal(&self) -> SolutionCells {
        match self {
            Task::Maze(t) => t.goal_path.clone(),
            Task::Queen(t) => t.goal_cells(),
        }
    }

    pub fn board(&self) -> Result<Arc<CellGraph>, GeometryError> {
        match self {
            Task::Maze(t) => Ok(t.maze.shared_graph().clone()),
            Task::Queen(t) => queen_board(t.n).map(Arc::new),
        }
    }

    pub fn render(&self, with_solution: bool, style: &RenderStyle) -> Result<ImageBuffer, RenderError> {
        match self {
            Task::Maze(t) => render_maze(t, with_solution, style),
            Task::Queen(t) => render_queens(t, with_solution, style),
        }
    }
}

impl From<MazeTask> for Task {
    fn from(t: MazeTask) -> Self {
        Task::Maze(t)
    }
}

impl From<QueenTask> for Task {
    fn from(t: QueenTask) -> Self {
        Task::Queen(t)
    }
}
