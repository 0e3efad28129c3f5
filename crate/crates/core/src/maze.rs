//! Perfect-maze generation over any [`CellGraph`], endpoint selection and
//! the unique solution path.

use std::collections::{BTreeSet, VecDeque};
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::digest::short_digest;
use crate::geometry::{build_cell_graph, CellGraph, CellId, GeometryError, GeometryKind};
use crate::seed::{task_rng, TaskRng};

const ENDPOINT_ATTEMPTS: usize = 64;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MazeError {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("cell {0} is not in the maze")]
    UnknownCell(u32),
    #[error("open edges do not form a spanning tree: {0}")]
    NotSpanningTree(String),
    #[error("no boundary pair at tree distance >= {0}")]
    NoEndpoints(u32),
    #[error("invalid solution path: {0}")]
    InvalidPath(String),
    #[error("unknown growth kind `{0}`")]
    UnknownGrowth(String),
}

/// How the spanning tree is grown.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GrowthKind {
    /// Randomized depth-first backtracker: long winding corridors.
    DfsBacktracker,
    /// Randomized frontier growth (Prim-like): short branchy dead ends.
    BfsGrowth,
}

impl GrowthKind {
    pub const ALL: [GrowthKind; 2] = [GrowthKind::DfsBacktracker, GrowthKind::BfsGrowth];

    pub fn as_str(self) -> &'static str {
        match self {
            GrowthKind::DfsBacktracker => "dfs_backtracker",
            GrowthKind::BfsGrowth => "bfs_growth",
        }
    }
}

impl fmt::Display for GrowthKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for GrowthKind {
    type Err = MazeError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "dfs_backtracker" | "dfs" => Ok(GrowthKind::DfsBacktracker),
            "bfs_growth" | "bfs" => Ok(GrowthKind::BfsGrowth),
            _ => Err(MazeError::UnknownGrowth(s.to_string())),
        }
    }
}

/// Cell-level solution: an ordered path for mazes, a set of queen cells for Queen.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SolutionCells(pub Vec<CellId>);

impl SolutionCells {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn cells(&self) -> &[CellId] {
        &self.0
    }

    pub fn as_set(&self) -> BTreeSet<CellId> {
        self.0.iter().copied().collect()
    }
}

impl FromIterator<CellId> for SolutionCells {
    fn from_iter<I: IntoIterator<Item = CellId>>(iter: I) -> Self {
        SolutionCells(iter.into_iter().collect())
    }
}

#[derive(Clone, Debug)]
pub struct Maze {
    graph: Arc<CellGraph>,
    open: Vec<bool>,
    seed: u64,
    growth: GrowthKind,
}

impl Maze {
    /// Rebuilds a maze from stored open edges, checking the spanning-tree invariant.
    pub fn from_open_edges(
        graph: Arc<CellGraph>,
        growth: GrowthKind,
        seed: u64,
        open_edges: &[u32],
    ) -> Result<Self, MazeError> {
        let mut open = vec![false; graph.edges().len()];
        for &e in open_edges {
            let slot = open
                .get_mut(e as usize)
                .ok_or_else(|| MazeError::NotSpanningTree(format!("edge {e} out of range")))?;
            if *slot {
                return Err(MazeError::NotSpanningTree(format!("edge {e} listed twice")));
            }
            *slot = true;
        }
        let maze = Maze { graph, open, seed, growth };
        maze.check_spanning_tree()?;
        Ok(maze)
    }

    pub fn graph(&self) -> &CellGraph {
        &self.graph
    }

    pub fn shared_graph(&self) -> &Arc<CellGraph> {
        &self.graph
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn growth(&self) -> GrowthKind {
        self.growth
    }

    pub fn is_open(&self, edge: usize) -> bool {
        self.open.get(edge).copied().unwrap_or(false)
    }

    /// Open (wall-free) edge indices, ascending.
    pub fn open_edges(&self) -> Vec<u32> {
        self.open
            .iter()
            .enumerate()
            .filter_map(|(i, &o)| o.then_some(i as u32))
            .collect()
    }

    pub fn open_neighbors(&self, c: CellId) -> impl Iterator<Item = CellId> + '_ {
        self.graph
            .neighbors(c)
            .filter(move |&(_, e)| self.open[e])
            .map(|(n, _)| n)
    }

    pub fn are_connected(&self, a: CellId, b: CellId) -> bool {
        self.graph.edge_between(a, b).is_some_and(|e| self.open[e])
    }

    pub fn check_spanning_tree(&self) -> Result<(), MazeError> {
        let n = self.graph.cell_count();
        let count = self.open.iter().filter(|&&o| o).count();
        if count + 1 != n {
            return Err(MazeError::NotSpanningTree(format!("{count} open edges for {n} cells")));
        }
        let reached = self.tree_distances(CellId(0)).iter().filter(|d| d.is_some()).count();
        if reached != n {
            return Err(MazeError::NotSpanningTree(format!("{reached} of {n} cells reachable")));
        }
        Ok(())
    }

    /// Number of open-edge steps from `from` to every cell, `None` if unreachable.
    pub fn tree_distances(&self, from: CellId) -> Vec<Option<u32>> {
        let mut dist = vec![None; self.graph.cell_count()];
        if !self.graph.contains_cell(from) {
            return dist;
        }
        dist[from.index()] = Some(0);
        let mut queue = VecDeque::from([from]);
        while let Some(c) = queue.pop_front() {
            let d = dist[c.index()].unwrap_or(0);
            for n in self.open_neighbors(c) {
                if dist[n.index()].is_none() {
                    dist[n.index()] = Some(d + 1);
                    queue.push_back(n);
                }
            }
        }
        dist
    }
}

/// Grows a perfect maze over `graph`; a pure function of its arguments.
pub fn generate_maze(graph: Arc<CellGraph>, growth: GrowthKind, seed: u64) -> Maze {
    generate_maze_with(graph, growth, seed, &mut task_rng(seed))
}

fn generate_maze_with(graph: Arc<CellGraph>, growth: GrowthKind, seed: u64, rng: &mut TaskRng) -> Maze {
    let n = graph.cell_count();
    let mut open = vec![false; graph.edges().len()];
    let mut visited = vec![false; n];
    let root = CellId(rng.random_range(0..n as u32));
    visited[root.index()] = true;

    match growth {
        GrowthKind::DfsBacktracker => {
            let mut stack = vec![root];
            let mut choices = Vec::with_capacity(8);
            while let Some(&c) = stack.last() {
                choices.clear();
                choices.extend(graph.neighbors(c).filter(|(nb, _)| !visited[nb.index()]));
                if choices.is_empty() {
                    stack.pop();
                    continue;
                }
                let (nb, e) = choices[rng.random_range(0..choices.len())];
                open[e] = true;
                visited[nb.index()] = true;
                stack.push(nb);
            }
        }
        GrowthKind::BfsGrowth => {
            let mut frontier: Vec<(CellId, usize)> = graph.neighbors(root).collect();
            while !frontier.is_empty() {
                let (nb, e) = frontier.swap_remove(rng.random_range(0..frontier.len()));
                if visited[nb.index()] {
                    continue;
                }
                open[e] = true;
                visited[nb.index()] = true;
                frontier.extend(graph.neighbors(nb).filter(|(x, _)| !visited[x.index()]));
            }
        }
    }
    Maze { graph, open, seed, growth }
}

/// Picks distinct boundary endpoints at tree distance at least the maze scale.
///
/// Circular mazes always start at the center disc and end on the outer ring.
pub fn select_endpoints(maze: &Maze, seed: u64) -> Result<(CellId, CellId), MazeError> {
    select_endpoints_with(maze, &mut task_rng(seed))
}

fn select_endpoints_with(maze: &Maze, rng: &mut TaskRng) -> Result<(CellId, CellId), MazeError> {
    let graph = maze.graph();
    let min_dist = graph.scale();
    let boundary = graph.boundary();
    let far_enough = |dist: &[Option<u32>], c: CellId| dist[c.index()].is_some_and(|d| d >= min_dist);

    if graph.geometry() == GeometryKind::Circle {
        let start = CellId(0);
        let dist = maze.tree_distances(start);
        let candidates: Vec<CellId> = boundary.iter().copied().filter(|&c| far_enough(&dist, c)).collect();
        if candidates.is_empty() {
            return Err(MazeError::NoEndpoints(min_dist));
        }
        return Ok((start, candidates[rng.random_range(0..candidates.len())]));
    }

    if boundary.len() < 2 {
        return Err(MazeError::NoEndpoints(min_dist));
    }
    for _ in 0..ENDPOINT_ATTEMPTS {
        let start = boundary[rng.random_range(0..boundary.len())];
        let end = boundary[rng.random_range(0..boundary.len())];
        if start != end && far_enough(&maze.tree_distances(start), end) {
            return Ok((start, end));
        }
    }
    // exhaustive fallback keeps the choice seeded when rejection keeps missing
    let mut pairs = Vec::new();
    for &start in boundary {
        let dist = maze.tree_distances(start);
        pairs.extend(boundary.iter().filter(|&&end| end != start && far_enough(&dist, end)).map(|&end| (start, end)));
    }
    if pairs.is_empty() {
        return Err(MazeError::NoEndpoints(min_dist));
    }
    Ok(pairs[rng.random_range(0..pairs.len())])
}

/// Traversal order used by [`solve_maze_with`]. Both yield the same path on a perfect maze.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SearchOrder {
    DepthFirst,
    BreadthFirst,
}

pub fn solve_maze(maze: &Maze, start: CellId, end: CellId) -> Result<SolutionCells, MazeError> {
    solve_maze_with(maze, start, end, SearchOrder::BreadthFirst)
}

/// The unique simple open path from `start` to `end`, inclusive.
pub fn solve_maze_with(
    maze: &Maze,
    start: CellId,
    end: CellId,
    order: SearchOrder,
) -> Result<SolutionCells, MazeError> {
    let graph = maze.graph();
    for c in [start, end] {
        if !graph.contains_cell(c) {
            return Err(MazeError::UnknownCell(c.0));
        }
    }
    maze.check_spanning_tree()?;

    let mut parent: Vec<Option<CellId>> = vec![None; graph.cell_count()];
    let mut seen = vec![false; graph.cell_count()];
    seen[start.index()] = true;
    let mut work = VecDeque::from([start]);
    while let Some(c) = match order {
        SearchOrder::DepthFirst => work.pop_back(),
        SearchOrder::BreadthFirst => work.pop_front(),
    } {
        if c == end {
            break;
        }
        for n in maze.open_neighbors(c) {
            if !seen[n.index()] {
                seen[n.index()] = true;
                parent[n.index()] = Some(c);
                work.push_back(n);
            }
        }
    }
    if !seen[end.index()] {
        return Err(MazeError::NotSpanningTree(format!("cell {end} unreachable from {start}")));
    }
    let mut path = vec![end];
    let mut cur = end;
    while let Some(p) = parent[cur.index()] {
        path.push(p);
        cur = p;
    }
    path.reverse();
    Ok(SolutionCells(path))
}

/// A maze puzzle with its endpoints and ground-truth path.
#[derive(Clone, Debug)]
pub struct MazeTask {
    pub maze: Maze,
    pub start: CellId,
    pub end: CellId,
    pub goal_path: SolutionCells,
    pub task_id: String,
}

pub fn maze_task_id(geometry: GeometryKind, scale: u32, growth: GrowthKind, seed: u64) -> String {
    let key = format!("maze/{geometry}/{scale}/{growth}/{seed}");
    format!("maze-{geometry}-{scale:02}-{}", short_digest(&key, 12))
}

pub fn build_maze_task(
    geometry: GeometryKind,
    scale: u32,
    growth: GrowthKind,
    seed: u64,
) -> Result<MazeTask, MazeError> {
    let graph = Arc::new(build_cell_graph(geometry, scale)?);
    build_maze_task_on(graph, growth, seed)
}

/// Like [`build_maze_task`] but reuses an already built graph.
pub fn build_maze_task_on(graph: Arc<CellGraph>, growth: GrowthKind, seed: u64) -> Result<MazeTask, MazeError> {
    let task_id = maze_task_id(graph.geometry(), graph.scale(), growth, seed);
    let mut rng = task_rng(seed);
    let maze = generate_maze_with(graph, growth, seed, &mut rng);
    let (start, end) = select_endpoints_with(&maze, &mut rng)?;
    let goal_path = solve_maze(&maze, start, end)?;
    let task = MazeTask { maze, start, end, goal_path, task_id };
    task.validate()?;
    Ok(task)
}

impl MazeTask {
    /// Checks the endpoint and goal-path invariants against the maze structure.
    pub fn validate(&self) -> Result<(), MazeError> {
        let graph = self.maze.graph();
        self.maze.check_spanning_tree()?;
        let path = self.goal_path.cells();
        if self.start == self.end {
            return Err(MazeError::InvalidPath("start equals end".into()));
        }
        if path.first() != Some(&self.start) || path.last() != Some(&self.end) {
            return Err(MazeError::InvalidPath("path does not join start to end".into()));
        }
        if let Some(c) = path.iter().find(|c| !graph.contains_cell(**c)) {
            return Err(MazeError::UnknownCell(c.0));
        }
        if path.len() != self.goal_path.as_set().len() {
            return Err(MazeError::InvalidPath("repeated cell".into()));
        }
        if let Some(w) = path.windows(2).find(|w| !self.maze.are_connected(w[0], w[1])) {
            return Err(MazeError::InvalidPath(format!("cells {} and {} are not open neighbours", w[0], w[1])));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn graph(g: GeometryKind, s: u32) -> Arc<CellGraph> {
        Arc::new(build_cell_graph(g, s).unwrap())
    }

    #[test]
    fn square_four_has_fifteen_open_edges() {
        for seed in 0..10 {
            for growth in GrowthKind::ALL {
                let m = generate_maze(graph(GeometryKind::Square, 4), growth, seed);
                assert_eq!(m.open_edges().len(), 15);
            }
        }
    }

    #[test]
    fn generation_is_seed_deterministic() {
        let g = graph(GeometryKind::Hexagon, 6);
        for growth in GrowthKind::ALL {
            let a = serde_json::to_vec(&generate_maze(g.clone(), growth, 42).open_edges()).unwrap();
            let b = serde_json::to_vec(&generate_maze(g.clone(), growth, 42).open_edges()).unwrap();
            assert_eq!(a, b);
        }
        assert_ne!(
            generate_maze(g.clone(), GrowthKind::DfsBacktracker, 1).open_edges(),
            generate_maze(g, GrowthKind::DfsBacktracker, 2).open_edges()
        );
    }

    #[test]
    fn hundred_seeds_spanning_trees() {
        for geometry in GeometryKind::ALL {
            let g = graph(geometry, 5);
            for seed in 0..100 {
                let growth = GrowthKind::ALL[seed as usize % 2];
                generate_maze(g.clone(), growth, seed).check_spanning_tree().unwrap();
            }
        }
    }

    #[test]
    fn circle_endpoints_center_to_rim() {
        let g = graph(GeometryKind::Circle, 3);
        let m = generate_maze(g.clone(), GrowthKind::DfsBacktracker, 5);
        let (s, e) = select_endpoints(&m, 9).unwrap();
        assert_eq!(s, CellId(0));
        assert!(g.boundary().contains(&e));
        assert_eq!(e.0 >= 1 + 6 + 12, true);
    }

    #[test]
    fn square_endpoints_far_apart_and_distinct() {
        let g = graph(GeometryKind::Square, 3);
        let m = generate_maze(g.clone(), GrowthKind::BfsGrowth, 11);
        let (s, e) = select_endpoints(&m, 11).unwrap();
        assert_eq!((s, e), select_endpoints(&m, 11).unwrap());
        // independent BFS over the open subgraph
        let mut dist = vec![usize::MAX; g.cell_count()];
        dist[s.index()] = 0;
        let mut q = VecDeque::from([s]);
        while let Some(c) = q.pop_front() {
            for (n, edge) in g.neighbors(c) {
                if m.is_open(edge) && dist[n.index()] == usize::MAX {
                    dist[n.index()] = dist[c.index()] + 1;
                    q.push_back(n);
                }
            }
        }
        assert!(dist[e.index()] >= 3);
        assert!(g.is_boundary(s) && g.is_boundary(e));

        for seed in 0..1000 {
            let (s, e) = select_endpoints(&m, seed).unwrap();
            assert_ne!(s, e);
        }
    }

    #[test]
    fn adjacent_endpoints_give_two_cell_path() {
        let m = generate_maze(graph(GeometryKind::Square, 3), GrowthKind::DfsBacktracker, 3);
        let e = m.open_edges()[0] as usize;
        let adj = &m.graph().edges()[e];
        let path = solve_maze(&m, adj.a, adj.b).unwrap();
        assert_eq!(path.cells(), &[adj.a, adj.b]);
    }

    #[test]
    fn dfs_and_bfs_agree() {
        for seed in 0..100u64 {
            let geometry = GeometryKind::ALL[seed as usize % 4];
            let m = generate_maze(graph(geometry, 6), GrowthKind::ALL[seed as usize % 2], seed);
            let n = m.graph().cell_count() as u32;
            let (a, b) = (CellId(seed as u32 % n), CellId((seed as u32 * 7 + 3) % n));
            assert_eq!(
                solve_maze_with(&m, a, b, SearchOrder::DepthFirst).unwrap(),
                solve_maze_with(&m, a, b, SearchOrder::BreadthFirst).unwrap()
            );
        }
    }

    #[test]
    fn solver_errors() {
        let m = generate_maze(graph(GeometryKind::Square, 3), GrowthKind::DfsBacktracker, 3);
        assert_eq!(solve_maze(&m, CellId(0), CellId(99)), Err(MazeError::UnknownCell(99)));
        let broken = Maze { open: vec![false; m.open.len()], ..m };
        assert!(matches!(solve_maze(&broken, CellId(0), CellId(1)), Err(MazeError::NotSpanningTree(_))));
    }

    #[test]
    fn square_three_seed_seven_is_shortest() {
        let task = build_maze_task(GeometryKind::Square, 3, GrowthKind::DfsBacktracker, 7).unwrap();
        // all-pairs BFS over open edges: the shortest distance equals the path length - 1
        let m = &task.maze;
        let n = m.graph().cell_count();
        let mut all = vec![vec![usize::MAX; n]; n];
        for s in 0..n {
            all[s][s] = 0;
            let mut q = VecDeque::from([CellId(s as u32)]);
            while let Some(c) = q.pop_front() {
                for nb in m.open_neighbors(c) {
                    if all[s][nb.index()] == usize::MAX {
                        all[s][nb.index()] = all[s][c.index()] + 1;
                        q.push_back(nb);
                    }
                }
            }
        }
        assert_eq!(task.goal_path.len() - 1, all[task.start.index()][task.end.index()]);
    }

    #[test]
    fn task_ids_are_stable() {
        let a = build_maze_task(GeometryKind::Square, 3, GrowthKind::DfsBacktracker, 0).unwrap();
        let b = build_maze_task(GeometryKind::Square, 3, GrowthKind::DfsBacktracker, 0).unwrap();
        assert_eq!(a.task_id, b.task_id);
        assert_eq!(a.goal_path, b.goal_path);
        a.validate().unwrap();
        assert!(a.task_id.starts_with("maze-square-03-"));
        let c = build_maze_task(GeometryKind::Square, 3, GrowthKind::BfsGrowth, 0).unwrap();
        assert_ne!(a.task_id, c.task_id);
    }

    #[test]
    fn from_open_edges_rejects_cycles_and_gaps() {
        let m = generate_maze(graph(GeometryKind::Square, 3), GrowthKind::DfsBacktracker, 1);
        let edges = m.open_edges();
        let g = m.shared_graph().clone();
        assert!(Maze::from_open_edges(g.clone(), m.growth(), 1, &edges).is_ok());
        assert!(Maze::from_open_edges(g.clone(), m.growth(), 1, &edges[1..]).is_err());
        let mut dup = edges.clone();
        dup[0] = dup[1];
        assert!(Maze::from_open_edges(g, m.growth(), 1, &dup).is_err());
    }
}
