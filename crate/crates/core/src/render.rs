//! Deterministic rasterization of puzzles and their solutions.
//!
//! Layers are painted in a fixed order: background (or region fill),
//! solution path, walls, then start/end markers and queens. With
//! anti-aliasing off, toggling the solution changes only pixels inside the
//! goal cells.

use std::f64::consts::FRAC_PI_4;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{CellGraph, CellId, GeometryError, GeometryKind, Point, DEFAULT_MARGIN};
use crate::image::{channel_distance, ImageBuffer, Rgb};
use crate::maze::MazeTask;
use crate::queen::{QueenError, QueenTask};
use crate::raster::Primitive;
use crate::seed::task_rng;

pub const MIN_RESOLUTION: u32 = 128;
pub const MIN_STROKE_PX: f64 = 2.0;
/// Marker colors must differ from background and walls by this much in some channel.
pub const MARKER_CONTRAST: u8 = 96;
pub const MAX_PALETTE: usize = 16;
/// Floor on the max-channel distance between any two palette colors.
pub const PALETTE_MIN_DISTANCE: u8 = 16;

/// Path stroke as a fraction of the smallest cell in-radius.
pub const PATH_STROKE_RATIO: f64 = 0.4;
/// Start disc radius as a fraction of the start cell's in-radius.
pub const START_DISC_RATIO: f64 = 0.4;
/// Distance from the cell center to each tip of the end X, as a fraction of in-radius.
pub const END_MARK_RATIO: f64 = 0.3;
/// Queen disc diameter as a fraction of the cell side.
pub const QUEEN_DISC_RATIO: f64 = 0.55;

const PALETTE_SATURATION: f64 = 1.0;
const PALETTE_LIGHTNESS: f64 = 0.78;

#[derive(Debug, Error)]
pub enum RenderError {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Queen(#[from] QueenError),
    #[error("invalid style: {0}")]
    Style(String),
    #[error("palette of {0} colors exceeds the maximum of {MAX_PALETTE}")]
    PaletteTooLarge(usize),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RenderStyle {
    /// Pixels per side of the square canvas.
    pub resolution: u32,
    pub background: Rgb,
    pub wall_color: Rgb,
    pub path_color: Rgb,
    pub start_color: Rgb,
    pub end_color: Rgb,
    pub queen_color: Rgb,
    /// Maze wall width in pixels.
    pub wall_stroke: f64,
    /// Solution path width in pixels; `None` uses 40% of the smallest cell in-radius.
    pub path_stroke: Option<f64>,
    /// Queen board lines inside a region.
    pub grid_stroke: f64,
    /// Queen board lines between regions and around the board.
    pub region_stroke: f64,
    pub region_palette_seed: u64,
    pub antialias: bool,
}

impl Default for RenderStyle {
    fn default() -> Self {
        RenderStyle {
            resolution: crate::geometry::DEFAULT_RESOLUTION,
            background: [255, 255, 255],
            wall_color: [0, 0, 0],
            path_color: [0, 0, 255],
            start_color: [255, 0, 0],
            end_color: [255, 0, 0],
            queen_color: [0, 0, 0],
            wall_stroke: crate::geometry::DEFAULT_WALL_STROKE_PX,
            path_stroke: None,
            grid_stroke: 2.0,
            region_stroke: 5.0,
            region_palette_seed: 0,
            antialias: false,
        }
    }
}

impl RenderStyle {
    pub fn with_resolution(mut self, resolution: u32) -> Self {
        self.resolution = resolution;
        self
    }

    pub fn validate(&self) -> Result<(), RenderError> {
        if self.resolution < MIN_RESOLUTION {
            return Err(RenderError::Style(format!("resolution {} below {MIN_RESOLUTION}", self.resolution)));
        }
        let strokes = [self.wall_stroke, self.grid_stroke, self.region_stroke, self.path_stroke.unwrap_or(MIN_STROKE_PX)];
        if strokes.iter().any(|&s| !(s >= MIN_STROKE_PX)) {
            return Err(RenderError::Style(format!("strokes must be at least {MIN_STROKE_PX} px")));
        }
        let markers = [("path", self.path_color), ("start", self.start_color), ("end", self.end_color)];
        for (name, color) in markers {
            for (other, reference) in [("background", self.background), ("wall", self.wall_color)] {
                if channel_distance(color, reference) < MARKER_CONTRAST {
                    return Err(RenderError::Style(format!("{name} color too close to {other}")));
                }
            }
        }
        if channel_distance(self.queen_color, self.background) < MARKER_CONTRAST {
            return Err(RenderError::Style("queen color too close to background".into()));
        }
        Ok(())
    }

    /// Path width in pixels for `graph` at this resolution.
    pub fn path_width(&self, graph: &CellGraph) -> f64 {
        self.path_stroke
            .unwrap_or(PATH_STROKE_RATIO * graph.min_inradius() * self.resolution as f64)
            .max(MIN_STROKE_PX)
    }

    fn px(&self, p: Point) -> Point {
        p * self.resolution as f64
    }
}

/// The board layout shared by Queen rendering and evaluation.
pub fn queen_board(n: usize) -> Result<CellGraph, GeometryError> {
    CellGraph::build(GeometryKind::Square, n as u32, DEFAULT_MARGIN)
}

/// Polyline through the centers of `cells`, bending at the midpoint of each
/// shared wall so every segment stays inside the two cells it joins.
pub fn path_polyline(graph: &CellGraph, cells: &[CellId]) -> Result<Vec<Point>, GeometryError> {
    let mut points = Vec::with_capacity(cells.len() * 2);
    for (i, &c) in cells.iter().enumerate() {
        if i > 0 {
            if let Some(portal) = graph.portal(cells[i - 1], c) {
                points.push(portal);
            }
        }
        points.push(graph.cell_center(c)?);
    }
    Ok(points)
}

/// Paints a canvas-space polyline as a round-jointed stroke.
pub fn paint_polyline(img: &mut ImageBuffer, points: &[Point], width: f64, color: Rgb, style: &RenderStyle) {
    let half_width = width / 2.0;
    match points {
        [] => {}
        [p] => Primitive::Disc { center: style.px(*p), radius: half_width }.paint(img, color, style.antialias),
        _ => {
            for w in points.windows(2) {
                Primitive::Capsule { a: style.px(w[0]), b: style.px(w[1]), half_width }.paint(img, color, style.antialias);
            }
        }
    }
}

/// Paints a path through `cells` in the style's path color.
pub fn paint_path(img: &mut ImageBuffer, graph: &CellGraph, cells: &[CellId], style: &RenderStyle) -> Result<(), GeometryError> {
    let points = path_polyline(graph, cells)?;
    paint_polyline(img, &points, style.path_width(graph), style.path_color, style);
    Ok(())
}

/// Start disc and end X for a maze task, in pixel space.
pub fn maze_markers(task: &MazeTask, style: &RenderStyle) -> Result<(Vec<Primitive>, Vec<Primitive>), GeometryError> {
    let graph = task.maze.graph();
    let res = style.resolution as f64;
    let start = Primitive::Disc {
        center: style.px(graph.cell_center(task.start)?),
        radius: START_DISC_RATIO * graph.inradius(task.start)? * res,
    };
    let center = style.px(graph.cell_center(task.end)?);
    let inradius = graph.inradius(task.end)? * res;
    let arm = END_MARK_RATIO * inradius;
    let half_width = (0.5 * style.path_width(graph)).max(1.0);
    let end = [FRAC_PI_4, 3.0 * FRAC_PI_4]
        .into_iter()
        .map(|theta| {
            let d = Point::new(theta.cos(), theta.sin()) * arm;
            Primitive::Capsule { a: center - d, b: center + d, half_width }
        })
        .collect();
    Ok((vec![start], end))
}

fn check_fits(graph: &CellGraph, style: &RenderStyle) -> Result<(), RenderError> {
    style.validate()?;
    graph.check_resolution(style.resolution)?;
    Ok(())
}

pub fn render_maze(task: &MazeTask, with_solution: bool, style: &RenderStyle) -> Result<ImageBuffer, RenderError> {
    let path: &[CellId] = if with_solution { task.goal_path.cells() } else { &[] };
    render_maze_with_path(task, path, style)
}

/// Renders the maze with an arbitrary path drawn in place of the goal path.
pub fn render_maze_with_path(task: &MazeTask, path: &[CellId], style: &RenderStyle) -> Result<ImageBuffer, RenderError> {
    let points = path_polyline(task.maze.graph(), path)?;
    render_maze_with_stroke(task, &points, style)
}

/// Renders the maze with a free canvas-space stroke in the path layer, e.g. a hand-drawn trace.
pub fn render_maze_with_stroke(task: &MazeTask, points: &[Point], style: &RenderStyle) -> Result<ImageBuffer, RenderError> {
    let graph = task.maze.graph();
    check_fits(graph, style)?;
    let mut img = ImageBuffer::filled(style.resolution, style.resolution, style.background);
    paint_polyline(&mut img, points, style.path_width(graph), style.path_color, style);

    let half_wall = style.wall_stroke / 2.0;
    let closed = graph
        .edges()
        .iter()
        .enumerate()
        .filter(|(i, _)| !task.maze.is_open(*i))
        .map(|(_, e)| &e.wall);
    for wall in closed.chain(graph.boundary_walls()) {
        let wall = scale_wall(wall, style.resolution as f64);
        Primitive::stroke(&wall, half_wall).paint(&mut img, style.wall_color, style.antialias);
    }

    let (start, end) = maze_markers(task, style)?;
    for p in &start {
        p.paint(&mut img, style.start_color, style.antialias);
    }
    for p in &end {
        p.paint(&mut img, style.end_color, style.antialias);
    }
    Ok(img)
}

fn scale_wall(wall: &crate::geometry::WallSegment, k: f64) -> crate::geometry::WallSegment {
    use crate::geometry::WallSegment;
    match *wall {
        WallSegment::Line { a, b } => WallSegment::Line { a: a * k, b: b * k },
        WallSegment::Arc { center, radius, start, end } => {
            WallSegment::Arc { center: center * k, radius: radius * k, start, end }
        }
    }
}

pub fn render_queens(task: &QueenTask, with_solution: bool, style: &RenderStyle) -> Result<ImageBuffer, RenderError> {
    let queens: Vec<CellId> = if with_solution { task.goal_cells().0 } else { Vec::new() };
    render_queens_with(task, &queens, style)
}

/// Renders the board with queens on arbitrary `cells`.
pub fn render_queens_with(task: &QueenTask, cells: &[CellId], style: &RenderStyle) -> Result<ImageBuffer, RenderError> {
    task.regions.validate()?;
    let graph = queen_board(task.n)?;
    check_fits(&graph, style)?;
    let palette = region_palette(task.n, style.region_palette_seed)?;
    let mut img = ImageBuffer::filled(style.resolution, style.resolution, style.background);

    for c in graph.cells() {
        if let crate::geometry::CellShape::Polygon { vertices } = graph.shape(c)? {
            let vertices = vertices.iter().map(|&v| style.px(v)).collect();
            Primitive::Polygon { vertices }.paint(&mut img, palette[task.regions.region_of[c.index()]], false);
        }
    }
    let res = style.resolution as f64;
    for e in graph.edges() {
        let same = task.regions.region_of[e.a.index()] == task.regions.region_of[e.b.index()];
        let width = if same { style.grid_stroke } else { style.region_stroke };
        Primitive::stroke(&scale_wall(&e.wall, res), width / 2.0).paint(&mut img, style.wall_color, style.antialias);
    }
    for wall in graph.boundary_walls() {
        Primitive::stroke(&scale_wall(wall, res), style.region_stroke / 2.0).paint(&mut img, style.wall_color, style.antialias);
    }
    paint_queens(&mut img, &graph, cells, style)?;
    Ok(img)
}

/// Paints a queen disc at the center of each cell.
pub fn paint_queens(img: &mut ImageBuffer, board: &CellGraph, cells: &[CellId], style: &RenderStyle) -> Result<(), GeometryError> {
    let side = (1.0 - 2.0 * board.margin()) / board.scale() as f64 * style.resolution as f64;
    for &c in cells {
        let disc = Primitive::Disc { center: style.px(board.cell_center(c)?), radius: QUEEN_DISC_RATIO * side / 2.0 };
        disc.paint(img, style.queen_color, style.antialias);
    }
    Ok(())
}

/// `n` pastel colors evenly spaced in hue, rotated by a seeded offset.
pub fn region_palette(n: usize, seed: u64) -> Result<Vec<Rgb>, RenderError> {
    if n > MAX_PALETTE {
        return Err(RenderError::PaletteTooLarge(n));
    }
    let offset: f64 = task_rng(seed).random_range(0.0..360.0);
    Ok((0..n)
        .map(|k| hsl_to_rgb(offset + 360.0 * k as f64 / n as f64, PALETTE_SATURATION, PALETTE_LIGHTNESS))
        .collect())
}

fn hsl_to_rgb(hue: f64, s: f64, l: f64) -> Rgb {
    let h = hue.rem_euclid(360.0) / 60.0;
    let chroma = (1.0 - (2.0 * l - 1.0).abs()) * s;
    let x = chroma * (1.0 - (h % 2.0 - 1.0).abs());
    let (r, g, b) = match h as u32 {
        0 => (chroma, x, 0.0),
        1 => (x, chroma, 0.0),
        2 => (0.0, chroma, x),
        3 => (0.0, x, chroma),
        4 => (x, 0.0, chroma),
        _ => (chroma, 0.0, x),
    };
    let m = l - chroma / 2.0;
    let to_u8 = |v: f64| ((v + m) * 255.0).round().clamp(0.0, 255.0) as u8;
    [to_u8(r), to_u8(g), to_u8(b)]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::maze::{build_maze_task, GrowthKind};
    use crate::pixmap::CellPixelMap;
    use crate::queen::build_queen_task;

    #[test]
    fn default_style_is_valid() {
        RenderStyle::default().validate().unwrap();
        let mut bad = RenderStyle::default();
        bad.path_color = [20, 20, 20];
        assert!(bad.validate().is_err());
        assert!(RenderStyle::default().with_resolution(64).validate().is_err());
    }

    #[test]
    fn palette_properties() {
        let one = region_palette(1, 3).unwrap();
        assert_eq!(one.len(), 1);
        assert!(one[0].iter().all(|&c| c >= 140));
        for n in 1..=MAX_PALETTE {
            let p = region_palette(n, 17).unwrap();
            assert_eq!(p, region_palette(n, 17).unwrap());
            for (i, a) in p.iter().enumerate() {
                for b in &p[i + 1..] {
                    assert!(channel_distance(*a, *b) >= PALETTE_MIN_DISTANCE, "n={n}");
                    if n <= 10 {
                        assert!(channel_distance(*a, *b) >= 32, "n={n}");
                    }
                }
                let style = RenderStyle::default();
                for reserved in [style.path_color, style.start_color, style.queen_color] {
                    assert!(channel_distance(*a, reserved) >= MARKER_CONTRAST);
                }
            }
        }
        assert!(matches!(region_palette(17, 0), Err(RenderError::PaletteTooLarge(17))));
    }

    #[test]
    fn maze_render_is_deterministic_and_layered() {
        let style = RenderStyle::default();
        for geometry in GeometryKind::ALL {
            let task = build_maze_task(geometry, 5, GrowthKind::DfsBacktracker, 4).unwrap();
            let plain = render_maze(&task, false, &style).unwrap();
            let solved = render_maze(&task, true, &style).unwrap();
            assert_eq!(solved, render_maze(&task, true, &style).unwrap());
            let map = CellPixelMap::new(task.maze.graph(), style.resolution);
            let goal = task.goal_path.as_set();
            let mut changed = 0;
            for i in 0..plain.pixel_count() {
                if plain.at(i) != solved.at(i) {
                    changed += 1;
                    let cell = map.label(i).unwrap_or_else(|| panic!("{geometry}: pixel {i} outside cells"));
                    assert!(goal.contains(&cell), "{geometry}: pixel {i} in non-goal cell {cell}");
                }
            }
            assert!(changed > 0);
        }
    }

    #[test]
    fn queen_render_layers() {
        let style = RenderStyle::default();
        let task = build_queen_task(6, 2, true, 10_000).unwrap();
        let plain = render_queens(&task, false, &style).unwrap();
        let solved = render_queens(&task, true, &style).unwrap();
        let board = queen_board(6).unwrap();
        let map = CellPixelMap::new(&board, style.resolution);
        let goal = task.goal_cells().as_set();
        for i in 0..plain.pixel_count() {
            if plain.at(i) != solved.at(i) {
                assert!(goal.contains(&map.label(i).unwrap()));
            }
        }
        // same-region neighbours share their fill at the cell center
        let palette = region_palette(6, style.region_palette_seed).unwrap();
        for c in board.cells() {
            let p = board.cell_center(c).unwrap() * style.resolution as f64;
            if !goal.contains(&c) {
                assert_eq!(solved.get(p.x as u32, p.y as u32), palette[task.regions.region_of[c.index()]]);
            }
        }
    }

    #[test]
    fn region_borders_are_thicker() {
        let style = RenderStyle::default();
        let task = build_queen_task(5, 9, true, 10_000).unwrap();
        let img = render_queens(&task, false, &style).unwrap();
        let board = queen_board(5).unwrap();
        let dark = |p: Point| {
            let p = p * style.resolution as f64;
            // count wall pixels along a short probe across the wall
            (-6..=6)
                .filter(|d| {
                    let c = img.get((p.x + *d as f64) as u32, p.y as u32);
                    c == style.wall_color
                })
                .count()
        };
        for e in board.edges() {
            let mid = e.wall.midpoint();
            let vertical = matches!(e.wall, crate::geometry::WallSegment::Line { a, b } if (a.x - b.x).abs() < 1e-12);
            if !vertical {
                continue;
            }
            let same = task.regions.region_of[e.a.index()] == task.regions.region_of[e.b.index()];
            let expected = if same { style.grid_stroke } else { style.region_stroke };
            assert!((dark(mid) as f64 - expected).abs() <= 1.0, "edge {:?}", (e.a, e.b));
        }
    }
}
