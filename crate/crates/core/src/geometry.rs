//! Cell complexes for the four maze tessellations.
//!
//! All geometry lives in the unit canvas `[0, 1]²` with `y` growing
//! downward, inset by a margin reserved for stroke bleed. A [`CellGraph`]
//! owns the cell shapes, their centers and the wall shared by every pair
//! of neighbours; generation, rendering and evaluation all read from it.

use std::f64::consts::TAU;
use std::fmt;
use std::ops::{Add, Mul, Sub};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Fraction of the canvas left empty on every side.
pub const DEFAULT_MARGIN: f64 = 0.04;
/// Side length, in pixels, of the default square render target.
pub const DEFAULT_RESOLUTION: u32 = 512;
/// Wall stroke width, in pixels, at the default resolution.
pub const DEFAULT_WALL_STROKE_PX: f64 = 3.0;
/// Shortest wall that still renders legibly.
pub const MIN_WALL_PX: f64 = 2.0;

const SHARED_VERTEX_EPS: f64 = 1e-9;
const CONTAINS_EPS: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("scale {0} is below the minimum of 2")]
    ScaleTooSmall(u32),
    #[error(
        "{geometry} scale {scale}: shortest wall is {wall_px:.2} px at {resolution} px, \
         below the {MIN_WALL_PX} px floor"
    )]
    ResolutionTooLow {
        geometry: GeometryKind,
        scale: u32,
        resolution: u32,
        wall_px: f64,
    },
    #[error("unknown cell {0}")]
    UnknownCell(u32),
    #[error("cells {0} and {1} share no wall")]
    NoSharedWall(u32, u32),
    #[error("unknown geometry `{0}`")]
    UnknownGeometry(String),
    #[error("margin {0} outside [0, 0.25)")]
    InvalidMargin(f64),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GeometryKind {
    Square,
    Triangle,
    Hexagon,
    Circle,
}

impl GeometryKind {
    pub const ALL: [GeometryKind; 4] = [
        GeometryKind::Square,
        GeometryKind::Triangle,
        GeometryKind::Hexagon,
        GeometryKind::Circle,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            GeometryKind::Square => "square",
            GeometryKind::Triangle => "triangle",
            GeometryKind::Hexagon => "hexagon",
            GeometryKind::Circle => "circle",
        }
    }
}

impl fmt::Display for GeometryKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for GeometryKind {
    type Err = GeometryError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "square" => Ok(GeometryKind::Square),
            "triangle" => Ok(GeometryKind::Triangle),
            "hexagon" => Ok(GeometryKind::Hexagon),
            "circle" => Ok(GeometryKind::Circle),
            _ => Err(GeometryError::UnknownGeometry(s.to_string())),
        }
    }
}

/// Dense cell index in `[0, cell_count)`.
#[derive(
    Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize,
)]
#[serde(transparent)]
pub struct CellId(pub u32);

impl CellId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for CellId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Default, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn dot(self, o: Point) -> f64 {
        self.x * o.x + self.y * o.y
    }

    pub fn cross(self, o: Point) -> f64 {
        self.x * o.y - self.y * o.x
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn distance(self, o: Point) -> f64 {
        (self - o).norm()
    }

    pub fn polar(center: Point, radius: f64, angle: f64) -> Point {
        Point::new(center.x + radius * angle.cos(), center.y + radius * angle.sin())
    }

    fn approx_eq(self, o: Point) -> bool {
        self.distance(o) <= SHARED_VERTEX_EPS
    }
}

impl Add for Point {
    type Output = Point;
    fn add(self, o: Point) -> Point {
        Point::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for Point {
    type Output = Point;
    fn sub(self, o: Point) -> Point {
        Point::new(self.x - o.x, self.y - o.y)
    }
}

impl Mul<f64> for Point {
    type Output = Point;
    fn mul(self, k: f64) -> Point {
        Point::new(self.x * k, self.y * k)
    }
}

/// Distance from `p` to the closed segment `ab`.
pub fn segment_distance(p: Point, a: Point, b: Point) -> f64 {
    let ab = b - a;
    let len2 = ab.dot(ab);
    if len2 == 0.0 {
        return p.distance(a);
    }
    let t = ((p - a).dot(ab) / len2).clamp(0.0, 1.0);
    p.distance(a + ab * t)
}

/// Angle of `p` around `center`, in `[0, 2π)`.
pub fn angle_around(center: Point, p: Point) -> f64 {
    (p.y - center.y).atan2(p.x - center.x).rem_euclid(TAU)
}

fn angle_in_span(theta: f64, start: f64, end: f64) -> bool {
    if end - start >= TAU - CONTAINS_EPS {
        return true;
    }
    let rel = (theta - start).rem_euclid(TAU);
    rel <= end - start + CONTAINS_EPS || rel >= TAU - CONTAINS_EPS
}

/// A wall between two cells, or between a cell and the outside.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum WallSegment {
    Line { a: Point, b: Point },
    /// Circular arc swept clockwise on screen from `start` to `end` radians.
    Arc { center: Point, radius: f64, start: f64, end: f64 },
}

impl WallSegment {
    pub fn length(&self) -> f64 {
        match *self {
            WallSegment::Line { a, b } => a.distance(b),
            WallSegment::Arc { radius, start, end, .. } => radius * (end - start),
        }
    }

    pub fn endpoints(&self) -> (Point, Point) {
        match *self {
            WallSegment::Line { a, b } => (a, b),
            WallSegment::Arc { center, radius, start, end } => {
                (Point::polar(center, radius, start), Point::polar(center, radius, end))
            }
        }
    }

    pub fn midpoint(&self) -> Point {
        match *self {
            WallSegment::Line { a, b } => (a + b) * 0.5,
            WallSegment::Arc { center, radius, start, end } => {
                Point::polar(center, radius, 0.5 * (start + end))
            }
        }
    }

    pub fn distance(&self, p: Point) -> f64 {
        match *self {
            WallSegment::Line { a, b } => segment_distance(p, a, b),
            WallSegment::Arc { center, radius, start, end } => {
                if angle_in_span(angle_around(center, p), start, end) {
                    (p.distance(center) - radius).abs()
                } else {
                    let (a, b) = self.endpoints();
                    p.distance(a).min(p.distance(b))
                }
            }
        }
    }
}

/// Region covered by one cell.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum CellShape {
    /// Convex polygon, vertices in order.
    Polygon { vertices: Vec<Point> },
    /// Annular sector; a full disc when `r_inner == 0` and the span is `2π`.
    Sector {
        center: Point,
        r_inner: f64,
        r_outer: f64,
        start: f64,
        end: f64,
    },
}

impl CellShape {
    fn is_full_turn(start: f64, end: f64) -> bool {
        end - start >= TAU - CONTAINS_EPS
    }

    /// Closed containment test with a tiny tolerance so shared edges leave no gaps.
    pub fn contains(&self, p: Point) -> bool {
        match self {
            CellShape::Polygon { vertices } => {
                let orient = polygon_signed_area(vertices).signum();
                vertices.iter().zip(vertices.iter().cycle().skip(1)).all(|(&a, &b)| {
                    let edge = b - a;
                    orient * edge.cross(p - a) >= -CONTAINS_EPS * edge.norm().max(1.0)
                })
            }
            &CellShape::Sector { center, r_inner, r_outer, start, end } => {
                let r = p.distance(center);
                if r < r_inner - CONTAINS_EPS || r > r_outer + CONTAINS_EPS {
                    return false;
                }
                Self::is_full_turn(start, end) || angle_in_span(angle_around(center, p), start, end)
            }
        }
    }

    /// Distance from an interior point to the nearest point of the cell boundary.
    pub fn boundary_distance(&self, p: Point) -> f64 {
        match self {
            CellShape::Polygon { vertices } => vertices
                .iter()
                .zip(vertices.iter().cycle().skip(1))
                .map(|(&a, &b)| segment_distance(p, a, b))
                .fold(f64::INFINITY, f64::min),
            &CellShape::Sector { center, r_inner, r_outer, start, end } => {
                let r = p.distance(center);
                let mut d = (r_outer - r).abs();
                if r_inner > 0.0 {
                    d = d.min((r - r_inner).abs());
                }
                if !Self::is_full_turn(start, end) {
                    for theta in [start, end] {
                        let a = Point::polar(center, r_inner, theta);
                        let b = Point::polar(center, r_outer, theta);
                        d = d.min(segment_distance(p, a, b));
                    }
                }
                d
            }
        }
    }

    /// Axis-aligned bounding box as `(min, max)`.
    pub fn bbox(&self) -> (Point, Point) {
        let mut pts: Vec<Point> = Vec::new();
        match self {
            CellShape::Polygon { vertices } => pts.extend(vertices.iter().copied()),
            &CellShape::Sector { center, r_inner, r_outer, start, end } => {
                for r in [r_inner, r_outer] {
                    pts.push(Point::polar(center, r, start));
                    pts.push(Point::polar(center, r, end));
                }
                for k in 0..8 {
                    let theta = k as f64 * TAU / 4.0;
                    if Self::is_full_turn(start, end) || angle_in_span(theta, start, end) {
                        pts.push(Point::polar(center, r_outer, theta));
                    }
                }
            }
        }
        let mut lo = Point::new(f64::INFINITY, f64::INFINITY);
        let mut hi = Point::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
        for p in pts {
            lo = Point::new(lo.x.min(p.x), lo.y.min(p.y));
            hi = Point::new(hi.x.max(p.x), hi.y.max(p.y));
        }
        (lo, hi)
    }

    pub fn area(&self) -> f64 {
        match self {
            CellShape::Polygon { vertices } => polygon_signed_area(vertices).abs(),
            &CellShape::Sector { r_inner, r_outer, start, end, .. } => {
                0.5 * (end - start) * (r_outer * r_outer - r_inner * r_inner)
            }
        }
    }

    /// Whether `wall` lies on this cell's boundary (both endpoints and midpoint).
    pub fn touches(&self, wall: &WallSegment) -> bool {
        let (a, b) = wall.endpoints();
        [a, b, wall.midpoint()]
            .into_iter()
            .all(|p| self.boundary_distance(p) <= SHARED_VERTEX_EPS)
    }
}

fn polygon_signed_area(vertices: &[Point]) -> f64 {
    0.5 * vertices
        .iter()
        .zip(vertices.iter().cycle().skip(1))
        .map(|(&a, &b)| a.cross(b))
        .sum::<f64>()
}

/// An undirected adjacency between two cells and the wall separating them.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Adjacency {
    pub a: CellId,
    pub b: CellId,
    pub wall: WallSegment,
}

impl Adjacency {
    pub fn other(&self, c: CellId) -> CellId {
        if self.a == c {
            self.b
        } else {
            self.a
        }
    }
}

#[derive(Clone, Debug)]
struct SpatialIndex {
    grid: usize,
    buckets: Vec<Vec<CellId>>,
}

impl SpatialIndex {
    fn new(shapes: &[CellShape]) -> Self {
        let grid = ((shapes.len() as f64).sqrt().ceil() as usize * 2).clamp(1, 128);
        let mut buckets = vec![Vec::new(); grid * grid];
        let to_bucket = |v: f64| ((v * grid as f64).floor().max(0.0) as usize).min(grid - 1);
        for (i, shape) in shapes.iter().enumerate() {
            let (lo, hi) = shape.bbox();
            let (x0, x1) = (to_bucket(lo.x - 1e-9), to_bucket(hi.x + 1e-9));
            let (y0, y1) = (to_bucket(lo.y - 1e-9), to_bucket(hi.y + 1e-9));
            for by in y0..=y1 {
                for bx in x0..=x1 {
                    buckets[by * grid + bx].push(CellId(i as u32));
                }
            }
        }
        SpatialIndex { grid, buckets }
    }

    fn candidates(&self, p: Point) -> &[CellId] {
        let g = self.grid as f64;
        let bx = ((p.x * g).floor().max(0.0) as usize).min(self.grid - 1);
        let by = ((p.y * g).floor().max(0.0) as usize).min(self.grid - 1);
        &self.buckets[by * self.grid + bx]
    }
}

/// Geometry-agnostic planar cell complex.
#[derive(Clone, Debug)]
pub struct CellGraph {
    geometry: GeometryKind,
    scale: u32,
    margin: f64,
    shapes: Vec<CellShape>,
    centers: Vec<Point>,
    edges: Vec<Adjacency>,
    incident: Vec<Vec<usize>>,
    boundary: Vec<CellId>,
    boundary_walls: Vec<WallSegment>,
    wall_band: f64,
    index: SpatialIndex,
}

/// Builds the cell graph for `geometry` at `scale` with the default margin.
pub fn build_cell_graph(geometry: GeometryKind, scale: u32) -> Result<CellGraph, GeometryError> {
    CellGraph::build(geometry, scale, DEFAULT_MARGIN)
}

impl CellGraph {
    pub fn build(geometry: GeometryKind, scale: u32, margin: f64) -> Result<Self, GeometryError> {
        if scale < 2 {
            return Err(GeometryError::ScaleTooSmall(scale));
        }
        if !(0.0..0.25).contains(&margin) {
            return Err(GeometryError::InvalidMargin(margin));
        }
        let graph = match geometry {
            GeometryKind::Square => Self::from_polygons(geometry, scale, margin, square_layout(scale, margin))?,
            GeometryKind::Triangle => {
                Self::from_polygons(geometry, scale, margin, triangle_layout(scale, margin))?
            }
            GeometryKind::Hexagon => Self::from_polygons(geometry, scale, margin, hexagon_layout(scale, margin))?,
            GeometryKind::Circle => circle_graph(scale, margin),
        };
        graph.check_resolution(DEFAULT_RESOLUTION)?;
        Ok(graph)
    }

    fn from_polygons(
        geometry: GeometryKind,
        scale: u32,
        margin: f64,
        (polygons, mut pairs): (Vec<Vec<Point>>, Vec<(u32, u32)>),
    ) -> Result<Self, GeometryError> {
        pairs.iter_mut().for_each(|p| *p = (p.0.min(p.1), p.0.max(p.1)));
        pairs.sort_unstable();
        pairs.dedup();

        let mut edges = Vec::with_capacity(pairs.len());
        for (a, b) in pairs {
            let wall = shared_edge(&polygons[a as usize], &polygons[b as usize])
                .ok_or(GeometryError::NoSharedWall(a, b))?;
            edges.push(Adjacency { a: CellId(a), b: CellId(b), wall });
        }

        let mut incident = vec![Vec::new(); polygons.len()];
        for e in &edges {
            incident[e.a.index()].push(e.wall.endpoints());
            incident[e.b.index()].push(e.wall.endpoints());
        }
        let mut boundary = Vec::new();
        let mut boundary_walls = Vec::new();
        for (i, poly) in polygons.iter().enumerate() {
            let id = CellId(i as u32);
            let mut on_boundary = false;
            for (&p, &q) in poly.iter().zip(poly.iter().cycle().skip(1)) {
                let shared = incident[i]
                    .iter()
                    .any(|&(a, b)| (a.approx_eq(p) && b.approx_eq(q)) || (a.approx_eq(q) && b.approx_eq(p)));
                if !shared {
                    on_boundary = true;
                    boundary_walls.push(WallSegment::Line { a: p, b: q });
                }
            }
            if on_boundary {
                boundary.push(id);
            }
        }

        let centers = polygons
            .iter()
            .map(|v| v.iter().fold(Point::default(), |acc, &p| acc + p) * (1.0 / v.len() as f64))
            .collect();
        let shapes: Vec<CellShape> = polygons
            .into_iter()
            .map(|vertices| CellShape::Polygon { vertices })
            .collect();
        Ok(Self::assemble(geometry, scale, margin, shapes, centers, edges, boundary, boundary_walls))
    }

    #[allow(clippy::too_many_arguments)]
    fn assemble(
        geometry: GeometryKind,
        scale: u32,
        margin: f64,
        shapes: Vec<CellShape>,
        centers: Vec<Point>,
        edges: Vec<Adjacency>,
        boundary: Vec<CellId>,
        boundary_walls: Vec<WallSegment>,
    ) -> Self {
        let mut incident = vec![Vec::new(); shapes.len()];
        for (i, e) in edges.iter().enumerate() {
            incident[e.a.index()].push(i);
            incident[e.b.index()].push(i);
        }
        let index = SpatialIndex::new(&shapes);
        CellGraph {
            geometry,
            scale,
            margin,
            shapes,
            centers,
            edges,
            incident,
            boundary,
            boundary_walls,
            wall_band: 0.5 * DEFAULT_WALL_STROKE_PX / DEFAULT_RESOLUTION as f64,
            index,
        }
    }

    /// Replaces the half-width of the wall band excluded by [`CellGraph::point_to_cell`].
    pub fn with_wall_band(mut self, band: f64) -> Self {
        self.wall_band = band.max(0.0);
        self
    }

    pub fn geometry(&self) -> GeometryKind {
        self.geometry
    }

    pub fn scale(&self) -> u32 {
        self.scale
    }

    pub fn margin(&self) -> f64 {
        self.margin
    }

    pub fn wall_band(&self) -> f64 {
        self.wall_band
    }

    pub fn cell_count(&self) -> usize {
        self.shapes.len()
    }

    pub fn cells(&self) -> impl Iterator<Item = CellId> + '_ {
        (0..self.shapes.len() as u32).map(CellId)
    }

    pub fn contains_cell(&self, c: CellId) -> bool {
        c.index() < self.shapes.len()
    }

    pub fn shape(&self, c: CellId) -> Result<&CellShape, GeometryError> {
        self.shapes.get(c.index()).ok_or(GeometryError::UnknownCell(c.0))
    }

    pub fn edges(&self) -> &[Adjacency] {
        &self.edges
    }

    /// Indices into [`CellGraph::edges`] touching `c`, in ascending order.
    pub fn incident_edges(&self, c: CellId) -> &[usize] {
        &self.incident[c.index()]
    }

    pub fn neighbors(&self, c: CellId) -> impl Iterator<Item = (CellId, usize)> + '_ {
        self.incident[c.index()].iter().map(move |&e| (self.edges[e].other(c), e))
    }

    pub fn edge_between(&self, a: CellId, b: CellId) -> Option<usize> {
        if !self.contains_cell(a) || !self.contains_cell(b) {
            return None;
        }
        self.incident[a.index()]
            .iter()
            .copied()
            .find(|&e| self.edges[e].other(a) == b)
    }

    /// Cells touching the outer boundary, ascending.
    pub fn boundary(&self) -> &[CellId] {
        &self.boundary
    }

    pub fn is_boundary(&self, c: CellId) -> bool {
        self.boundary.binary_search(&c).is_ok()
    }

    /// Walls along the outer boundary of the tessellation.
    pub fn boundary_walls(&self) -> &[WallSegment] {
        &self.boundary_walls
    }

    pub fn cell_center(&self, c: CellId) -> Result<Point, GeometryError> {
        self.centers.get(c.index()).copied().ok_or(GeometryError::UnknownCell(c.0))
    }

    /// Distance from the cell center to its nearest boundary, in canvas units.
    pub fn inradius(&self, c: CellId) -> Result<f64, GeometryError> {
        let center = self.cell_center(c)?;
        Ok(self.shapes[c.index()].boundary_distance(center))
    }

    pub fn min_inradius(&self) -> f64 {
        self.cells()
            .map(|c| self.shapes[c.index()].boundary_distance(self.centers[c.index()]))
            .fold(f64::INFINITY, f64::min)
    }

    /// Cell whose closed region contains `p`; ties on shared edges go to the lowest id.
    pub fn locate(&self, p: Point) -> Option<CellId> {
        if !(0.0..=1.0).contains(&p.x) || !(0.0..=1.0).contains(&p.y) {
            return None;
        }
        self.index
            .candidates(p)
            .iter()
            .copied()
            .find(|c| self.shapes[c.index()].contains(p))
    }

    /// The unique cell containing `p`, or `None` on a wall band or outside every cell.
    pub fn point_to_cell(&self, p: Point) -> Option<CellId> {
        let c = self.locate(p)?;
        (self.shapes[c.index()].boundary_distance(p) > self.wall_band).then_some(c)
    }

    pub fn shortest_wall(&self) -> f64 {
        self.edges
            .iter()
            .map(|e| &e.wall)
            .chain(self.boundary_walls.iter())
            .map(WallSegment::length)
            .fold(f64::INFINITY, f64::min)
    }

    /// Rejects resolutions at which some wall would span fewer than [`MIN_WALL_PX`] pixels.
    pub fn check_resolution(&self, resolution: u32) -> Result<(), GeometryError> {
        let wall_px = self.shortest_wall() * resolution as f64;
        if wall_px < MIN_WALL_PX {
            return Err(GeometryError::ResolutionTooLow {
                geometry: self.geometry,
                scale: self.scale,
                resolution,
                wall_px,
            });
        }
        Ok(())
    }

    /// Portal point on the wall between two adjacent cells.
    pub fn portal(&self, a: CellId, b: CellId) -> Option<Point> {
        self.edge_between(a, b).map(|e| self.edges[e].wall.midpoint())
    }
}

fn shared_edge(p: &[Point], q: &[Point]) -> Option<WallSegment> {
    let common: Vec<Point> = p
        .iter()
        .copied()
        .filter(|&v| q.iter().any(|&w| v.approx_eq(w)))
        .collect();
    match common.as_slice() {
        [a, b] => Some(WallSegment::Line { a: *a, b: *b }),
        _ => None,
    }
}

type PolygonLayout = (Vec<Vec<Point>>, Vec<(u32, u32)>);

fn square_layout(n: u32, margin: f64) -> PolygonLayout {
    let s = (1.0 - 2.0 * margin) / n as f64;
    let mut polys = Vec::with_capacity((n * n) as usize);
    let mut pairs = Vec::new();
    for r in 0..n {
        for c in 0..n {
            let (x0, y0) = (margin + c as f64 * s, margin + r as f64 * s);
            polys.push(vec![
                Point::new(x0, y0),
                Point::new(x0 + s, y0),
                Point::new(x0 + s, y0 + s),
                Point::new(x0, y0 + s),
            ]);
            let id = r * n + c;
            if c + 1 < n {
                pairs.push((id, id + 1));
            }
            if r + 1 < n {
                pairs.push((id, id + n));
            }
        }
    }
    (polys, pairs)
}

/// Row `i` holds `2i + 1` alternating up/down triangles inside an
/// apex-up equilateral outline.
fn triangle_layout(n: u32, margin: f64) -> PolygonLayout {
    let side = 1.0 - 2.0 * margin;
    let a = side / n as f64;
    let h = a * 3f64.sqrt() / 2.0;
    let y0 = margin + (side - n as f64 * h) / 2.0;
    let mut polys = Vec::with_capacity((n * n) as usize);
    let mut pairs = Vec::new();
    for i in 0..n {
        let ytop = y0 + i as f64 * h;
        let ybot = ytop + h;
        let xb = 0.5 - (i + 1) as f64 * a / 2.0;
        let row_start = i * i;
        for j in 0..(2 * i + 1) {
            let k = (j / 2) as f64;
            let poly = if j % 2 == 0 {
                vec![
                    Point::new(xb + k * a, ybot),
                    Point::new(xb + (k + 1.0) * a, ybot),
                    Point::new(xb + (k + 0.5) * a, ytop),
                ]
            } else {
                vec![
                    Point::new(xb + (k + 0.5) * a, ytop),
                    Point::new(xb + (k + 1.5) * a, ytop),
                    Point::new(xb + (k + 1.0) * a, ybot),
                ]
            };
            polys.push(poly);
            let id = row_start + j;
            if j + 1 < 2 * i + 1 {
                pairs.push((id, id + 1));
            }
            if j % 2 == 1 {
                // down triangle's top edge is the base of the up triangle above
                pairs.push((id, (i - 1) * (i - 1) + (j - 1)));
            }
        }
    }
    (polys, pairs)
}

/// `n × n` pointy-top hexagons, odd rows shifted right by half a cell.
fn hexagon_layout(n: u32, margin: f64) -> PolygonLayout {
    let side = 1.0 - 2.0 * margin;
    let sqrt3 = 3f64.sqrt();
    let nf = n as f64;
    let rho = (side / (sqrt3 * (nf + 0.5))).min(side / (2.0 + 1.5 * (nf - 1.0)));
    let w = sqrt3 * rho;
    let total_w = w * (nf + 0.5);
    let total_h = 2.0 * rho + 1.5 * rho * (nf - 1.0);
    let x_left = 0.5 - total_w / 2.0;
    let y_top = 0.5 - total_h / 2.0;

    let mut polys = Vec::with_capacity((n * n) as usize);
    let mut pairs = Vec::new();
    for r in 0..n {
        for c in 0..n {
            let shift = if r % 2 == 1 { w / 2.0 } else { 0.0 };
            let center = Point::new(x_left + w / 2.0 + c as f64 * w + shift, y_top + rho + 1.5 * rho * r as f64);
            polys.push(
                (0..6)
                    .map(|k| Point::polar(center, rho, (-90.0 + 60.0 * k as f64).to_radians()))
                    .collect(),
            );
            let id = r * n + c;
            if c + 1 < n {
                pairs.push((id, id + 1));
            }
            if r + 1 < n {
                let below = (r + 1) * n;
                if r % 2 == 0 {
                    if c > 0 {
                        pairs.push((id, below + c - 1));
                    }
                    pairs.push((id, below + c));
                } else {
                    pairs.push((id, below + c));
                    if c + 1 < n {
                        pairs.push((id, below + c + 1));
                    }
                }
            }
        }
    }
    (polys, pairs)
}

/// Cells in ring `r` of a circular maze: one center disc, then
/// `6·2^⌊log2 r⌋` sectors so the arc width stays roughly constant.
pub fn ring_cell_count(r: u32) -> u32 {
    if r == 0 {
        1
    } else {
        6 << (31 - r.leading_zeros())
    }
}

fn circle_graph(n: u32, margin: f64) -> CellGraph {
    let center = Point::new(0.5, 0.5);
    let width = (0.5 - margin) / (n + 1) as f64;

    let mut offsets = Vec::with_capacity(n as usize + 1);
    let mut shapes = Vec::new();
    let mut centers = Vec::new();
    for r in 0..=n {
        offsets.push(shapes.len() as u32);
        let count = ring_cell_count(r);
        if r == 0 {
            shapes.push(CellShape::Sector { center, r_inner: 0.0, r_outer: width, start: 0.0, end: TAU });
            centers.push(center);
            continue;
        }
        let (r_in, r_out) = (r as f64 * width, (r + 1) as f64 * width);
        let span = TAU / count as f64;
        for j in 0..count {
            let (start, end) = (j as f64 * span, (j + 1) as f64 * span);
            shapes.push(CellShape::Sector { center, r_inner: r_in, r_outer: r_out, start, end });
            centers.push(Point::polar(center, 0.5 * (r_in + r_out), 0.5 * (start + end)));
        }
    }

    let mut pairs: Vec<(u32, u32, WallSegment)> = Vec::new();
    for r in 1..=n {
        let count = ring_cell_count(r);
        let span = TAU / count as f64;
        let (r_in, r_out) = (r as f64 * width, (r + 1) as f64 * width);
        for j in 0..count {
            let id = offsets[r as usize] + j;
            let next = offsets[r as usize] + (j + 1) % count;
            let theta = (j + 1) as f64 * span;
            pairs.push((
                id,
                next,
                WallSegment::Line { a: Point::polar(center, r_in, theta), b: Point::polar(center, r_out, theta) },
            ));
            let inner = if r == 1 {
                0
            } else if count == 2 * ring_cell_count(r - 1) {
                offsets[r as usize - 1] + j / 2
            } else {
                offsets[r as usize - 1] + j
            };
            pairs.push((
                inner,
                id,
                WallSegment::Arc { center, radius: r_in, start: j as f64 * span, end: (j + 1) as f64 * span },
            ));
        }
    }
    let mut edges: Vec<Adjacency> = pairs
        .into_iter()
        .map(|(a, b, wall)| Adjacency { a: CellId(a.min(b)), b: CellId(a.max(b)), wall })
        .collect();
    edges.sort_by_key(|e| (e.a, e.b));

    let outer = offsets[n as usize];
    let outer_count = ring_cell_count(n);
    let boundary: Vec<CellId> = (outer..outer + outer_count).map(CellId).collect();
    let r_max = (n + 1) as f64 * width;
    let span = TAU / outer_count as f64;
    let boundary_walls = (0..outer_count)
        .map(|j| WallSegment::Arc { center, radius: r_max, start: j as f64 * span, end: (j + 1) as f64 * span })
        .collect();

    CellGraph::assemble(GeometryKind::Circle, n, margin, shapes, centers, edges, boundary, boundary_walls)
}
