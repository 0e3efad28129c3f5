//! Colored-region Queen puzzles.
//!
//! One queen per row, column and colored region; no two queens may touch,
//! diagonally included. Long-range diagonal attacks are allowed.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::digest::short_digest;
use crate::geometry::CellId;
use crate::maze::SolutionCells;
use crate::seed::{task_rng, TaskRng};

pub const MIN_QUEENS: usize = 4;
pub const MAX_QUEENS: usize = 16;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QueenError {
    #[error("board size {0} outside [{MIN_QUEENS}, {MAX_QUEENS}]")]
    InvalidSize(usize),
    #[error("no unique {n}x{n} puzzle after {attempts} attempts")]
    AttemptsExhausted { n: usize, attempts: u32 },
    #[error("invalid region map: {0}")]
    InvalidRegions(String),
    #[error("invalid placement: {0}")]
    InvalidPlacement(String),
}

/// Column of the queen in each row.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct QueenPlacement(pub Vec<usize>);

impl QueenPlacement {
    pub fn n(&self) -> usize {
        self.0.len()
    }

    /// Queen cells as row-major ids on the `n × n` board.
    pub fn cells(&self) -> SolutionCells {
        let n = self.n();
        self.0
            .iter()
            .enumerate()
            .map(|(r, &c)| CellId((r * n + c) as u32))
            .collect()
    }

    /// Permutation and non-touching constraints (regions not considered).
    pub fn check(&self) -> Result<(), QueenError> {
        let n = self.n();
        let mut used = vec![false; n];
        for (r, &c) in self.0.iter().enumerate() {
            if c >= n || used[c] {
                return Err(QueenError::InvalidPlacement(format!("column {c} in row {r}")));
            }
            used[c] = true;
            if r > 0 && self.0[r - 1].abs_diff(c) < 2 {
                return Err(QueenError::InvalidPlacement(format!("rows {} and {r} touch", r - 1)));
            }
        }
        Ok(())
    }
}

/// Partition of the board into `n` colored regions.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RegionMap {
    pub n: usize,
    /// Region index of each cell, row-major.
    pub region_of: Vec<usize>,
}

impl RegionMap {
    pub fn region(&self, row: usize, col: usize) -> usize {
        self.region_of[row * self.n + col]
    }

    /// Exactly `n` nonempty, 4-connected regions covering the board.
    pub fn validate(&self) -> Result<(), QueenError> {
        let n = self.n;
        if self.region_of.len() != n * n {
            return Err(QueenError::InvalidRegions(format!("{} cells for n = {n}", self.region_of.len())));
        }
        if let Some(&r) = self.region_of.iter().find(|&&r| r >= n) {
            return Err(QueenError::InvalidRegions(format!("region index {r}")));
        }
        for region in 0..n {
            let cells: Vec<usize> = (0..n * n).filter(|&i| self.region_of[i] == region).collect();
            let Some(&first) = cells.first() else {
                return Err(QueenError::InvalidRegions(format!("region {region} is empty")));
            };
            let mut seen = vec![false; n * n];
            seen[first] = true;
            let mut stack = vec![first];
            let mut reached = 1;
            while let Some(i) = stack.pop() {
                for j in orthogonal(n, i) {
                    if !seen[j] && self.region_of[j] == region {
                        seen[j] = true;
                        reached += 1;
                        stack.push(j);
                    }
                }
            }
            if reached != cells.len() {
                return Err(QueenError::InvalidRegions(format!("region {region} is not connected")));
            }
        }
        Ok(())
    }

    /// Full constraint check of `p` against this map: rows, columns, regions, non-touching.
    pub fn accepts(&self, p: &QueenPlacement) -> bool {
        if p.n() != self.n || p.check().is_err() {
            return false;
        }
        let mut used = vec![false; self.n];
        p.0.iter().enumerate().all(|(r, &c)| {
            let region = self.region(r, c);
            !std::mem::replace(&mut used[region], true)
        })
    }
}

fn orthogonal(n: usize, i: usize) -> impl Iterator<Item = usize> {
    let (r, c) = (i / n, i % n);
    [
        (r > 0).then(|| i - n),
        (r + 1 < n).then(|| i + n),
        (c > 0).then(|| i - 1),
        (c + 1 < n).then(|| i + 1),
    ]
    .into_iter()
    .flatten()
}

fn check_size(n: usize) -> Result<(), QueenError> {
    if (MIN_QUEENS..=MAX_QUEENS).contains(&n) {
        Ok(())
    } else {
        Err(QueenError::InvalidSize(n))
    }
}

/// A seeded valid placement found by randomized row-by-row backtracking.
pub fn sample_placement(n: usize, seed: u64) -> Result<QueenPlacement, QueenError> {
    check_size(n)?;
    Ok(sample_placement_with(n, &mut task_rng(seed)))
}

fn sample_placement_with(n: usize, rng: &mut TaskRng) -> QueenPlacement {
    fn place(row: usize, cols: &mut Vec<usize>, used: &mut [bool], n: usize, rng: &mut TaskRng) -> bool {
        if row == n {
            return true;
        }
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(rng);
        for c in order {
            if used[c] || cols.last().is_some_and(|&p| p.abs_diff(c) < 2) {
                continue;
            }
            used[c] = true;
            cols.push(c);
            if place(row + 1, cols, used, n, rng) {
                return true;
            }
            cols.pop();
            used[c] = false;
        }
        false
    }
    let mut cols = Vec::with_capacity(n);
    let found = place(0, &mut cols, &mut vec![false; n], n, rng);
    debug_assert!(found, "valid placements exist for every n >= 4");
    QueenPlacement(cols)
}

/// Grows one region from each queen by randomized multi-source flood fill.
pub fn grow_regions(placement: &QueenPlacement, seed: u64) -> Result<RegionMap, QueenError> {
    check_size(placement.n())?;
    placement.check()?;
    Ok(grow_regions_with(placement, &mut task_rng(seed)))
}

fn grow_regions_with(placement: &QueenPlacement, rng: &mut TaskRng) -> RegionMap {
    let n = placement.n();
    let mut region_of = vec![usize::MAX; n * n];
    let mut frontier: Vec<(usize, usize)> = Vec::new();
    for (row, &col) in placement.0.iter().enumerate() {
        let cell = row * n + col;
        region_of[cell] = row;
        frontier.extend(orthogonal(n, cell).map(|j| (j, row)));
    }
    while !frontier.is_empty() {
        let (cell, region) = frontier.swap_remove(rng.random_range(0..frontier.len()));
        if region_of[cell] != usize::MAX {
            continue;
        }
        region_of[cell] = region;
        frontier.extend(orthogonal(n, cell).filter(|&j| region_of[j] == usize::MAX).map(|j| (j, region)));
    }
    RegionMap { n, region_of }
}

/// Moves non-queen border cells between regions until `goal` is the only
/// solution or no move can rule out the current rival.
fn tighten_regions(goal: &QueenPlacement, regions: &mut RegionMap, rng: &mut TaskRng) -> bool {
    let n = goal.n();
    let goal_cells: Vec<usize> = goal.0.iter().enumerate().map(|(r, &c)| r * n + c).collect();
    for _ in 0..4 * n * n {
        let solutions = solve_queens_up_to(regions, 2);
        let Some(rival) = solutions.iter().find(|s| *s != goal) else {
            return true;
        };
        let mut cells: Vec<usize> =
            rival.0.iter().enumerate().map(|(r, &c)| r * n + c).filter(|i| !goal_cells.contains(i)).collect();
        cells.shuffle(rng);
        let moved = cells.into_iter().any(|cell| {
            let from = regions.region_of[cell];
            let mut targets: Vec<usize> =
                orthogonal(n, cell).map(|j| regions.region_of[j]).filter(|&r| r != from).collect();
            targets.sort_unstable();
            targets.dedup();
            if targets.is_empty() || !connected_without(regions, from, cell) {
                return false;
            }
            regions.region_of[cell] = targets[rng.random_range(0..targets.len())];
            true
        });
        if !moved {
            return false;
        }
    }
    false
}

/// Whether region `region` stays 4-connected once `cell` leaves it.
fn connected_without(regions: &RegionMap, region: usize, cell: usize) -> bool {
    let n = regions.n;
    let members: Vec<usize> = (0..n * n).filter(|&i| i != cell && regions.region_of[i] == region).collect();
    let Some(&first) = members.first() else {
        return false;
    };
    let mut seen = vec![false; n * n];
    seen[first] = true;
    let mut stack = vec![first];
    let mut reached = 1;
    while let Some(i) = stack.pop() {
        for j in orthogonal(n, i) {
            if j != cell && !seen[j] && regions.region_of[j] == region {
                seen[j] = true;
                reached += 1;
                stack.push(j);
            }
        }
    }
    reached == members.len()
}

/// Every placement satisfying all constraints, in lexicographic order.
pub fn solve_queens(regions: &RegionMap) -> Vec<QueenPlacement> {
    solve_queens_up_to(regions, usize::MAX)
}

/// Stops after `limit` solutions; still lexicographic.
pub fn solve_queens_up_to(regions: &RegionMap, limit: usize) -> Vec<QueenPlacement> {
    struct Search<'a> {
        regions: &'a RegionMap,
        cols: Vec<usize>,
        out: Vec<QueenPlacement>,
        limit: usize,
    }

    impl Search<'_> {
        fn row(&mut self, r: usize, used_cols: u32, used_regions: u32) {
            let n = self.regions.n;
            if r == n {
                self.out.push(QueenPlacement(self.cols.clone()));
                return;
            }
            for c in 0..n {
                if self.out.len() >= self.limit {
                    return;
                }
                let region = self.regions.region(r, c);
                if used_cols & (1 << c) != 0
                    || used_regions & (1 << region) != 0
                    || self.cols.last().is_some_and(|&p| p.abs_diff(c) < 2)
                {
                    continue;
                }
                self.cols.push(c);
                self.row(r + 1, used_cols | 1 << c, used_regions | 1 << region);
                self.cols.pop();
            }
        }
    }

    if regions.validate().is_err() {
        return Vec::new();
    }
    let mut search = Search { regions, cols: Vec::with_capacity(regions.n), out: Vec::new(), limit };
    search.row(0, 0, 0);
    search.out
}

/// A Queen puzzle with its generating solution.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QueenTask {
    pub n: usize,
    pub regions: RegionMap,
    pub goal: QueenPlacement,
    pub seed: u64,
    pub unique: bool,
    pub solution_count: usize,
    pub attempts: u32,
    pub task_id: String,
}

pub fn queen_task_id(n: usize, seed: u64, require_unique: bool) -> String {
    let key = format!("queen/{n}/{seed}/{require_unique}");
    format!("queen-{n:02}-{}", short_digest(&key, 12))
}

/// Samples a placement and regions; with `require_unique`, resamples until the
/// regions admit exactly one solution.
pub fn build_queen_task(n: usize, seed: u64, require_unique: bool, max_attempts: u32) -> Result<QueenTask, QueenError> {
    check_size(n)?;
    let mut rng = task_rng(seed);
    for attempt in 1..=max_attempts.max(1) {
        let goal = sample_placement_with(n, &mut rng);
        let mut regions = grow_regions_with(&goal, &mut rng);
        let limit = if require_unique { 2 } else { usize::MAX };
        if require_unique {
            tighten_regions(&goal, &mut regions, &mut rng);
        }
        let solutions = solve_queens_up_to(&regions, limit);
        if require_unique && solutions.len() != 1 {
            continue;
        }
        let task = QueenTask {
            n,
            solution_count: solutions.len(),
            unique: solutions.len() == 1,
            regions,
            goal,
            seed,
            attempts: attempt,
            task_id: queen_task_id(n, seed, require_unique),
        };
        task.validate()?;
        return Ok(task);
    }
    Err(QueenError::AttemptsExhausted { n, attempts: max_attempts.max(1) })
}

impl QueenTask {
    pub fn goal_cells(&self) -> SolutionCells {
        self.goal.cells()
    }

    pub fn validate(&self) -> Result<(), QueenError> {
        if self.regions.n != self.n || self.goal.n() != self.n {
            return Err(QueenError::InvalidPlacement("size mismatch".into()));
        }
        self.regions.validate()?;
        if !self.regions.accepts(&self.goal) {
            return Err(QueenError::InvalidPlacement("goal violates the board constraints".into()));
        }
        Ok(())
    }
}
