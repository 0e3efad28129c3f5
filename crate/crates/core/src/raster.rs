//! Hard-edged scan conversion of discs, capsules, arc bands and polygons.
//!
//! Coordinates are in pixels with pixel `(i, j)` sampled at its center
//! `(i + 0.5, j + 0.5)`. Every primitive is an exact point-membership test
//! evaluated over its bounding box, so output is bit-for-bit reproducible.

use std::f64::consts::FRAC_PI_2;

use crate::geometry::{angle_around, segment_distance, Point, WallSegment};
use crate::image::{ImageBuffer, Rgb};

const SUPERSAMPLE: u32 = 4;

#[derive(Clone, Debug, PartialEq)]
pub enum Primitive {
    Disc { center: Point, radius: f64 },
    /// Thick segment with round caps.
    Capsule { a: Point, b: Point, half_width: f64 },
    /// Thick circular arc with round caps.
    ArcBand { center: Point, radius: f64, start: f64, end: f64, half_width: f64 },
    /// Convex polygon.
    Polygon { vertices: Vec<Point> },
}

impl Primitive {
    /// Stroke of a wall segment already expressed in pixel units.
    pub fn stroke(wall: &WallSegment, half_width: f64) -> Primitive {
        match *wall {
            WallSegment::Line { a, b } => Primitive::Capsule { a, b, half_width },
            WallSegment::Arc { center, radius, start, end } => {
                Primitive::ArcBand { center, radius, start, end, half_width }
            }
        }
    }

    pub fn contains(&self, p: Point) -> bool {
        match self {
            Primitive::Disc { center, radius } => p.distance(*center) <= *radius,
            Primitive::Capsule { a, b, half_width } => segment_distance(p, *a, *b) <= *half_width,
            &Primitive::ArcBand { center, radius, start, end, half_width } => {
                let wall = WallSegment::Arc { center, radius, start, end };
                // angle test first keeps the common case cheap
                let rel = (angle_around(center, p) - start).rem_euclid(std::f64::consts::TAU);
                if rel <= end - start {
                    (p.distance(center) - radius).abs() <= half_width
                } else {
                    wall.distance(p) <= half_width
                }
            }
            Primitive::Polygon { vertices } => {
                let area: f64 = vertices
                    .iter()
                    .zip(vertices.iter().cycle().skip(1))
                    .map(|(a, b)| a.cross(*b))
                    .sum();
                let orient = area.signum();
                vertices
                    .iter()
                    .zip(vertices.iter().cycle().skip(1))
                    .all(|(&a, &b)| orient * (b - a).cross(p - a) >= 0.0)
            }
        }
    }

    fn bbox(&self) -> (Point, Point) {
        match self {
            Primitive::Disc { center, radius } => {
                (*center - Point::new(*radius, *radius), *center + Point::new(*radius, *radius))
            }
            Primitive::Capsule { a, b, half_width } => (
                Point::new(a.x.min(b.x) - half_width, a.y.min(b.y) - half_width),
                Point::new(a.x.max(b.x) + half_width, a.y.max(b.y) + half_width),
            ),
            &Primitive::ArcBand { center, radius, start, end, half_width } => {
                // endpoints plus any axis extreme the span sweeps past
                let at = |a: f64| center + Point::new(radius * a.cos(), radius * a.sin());
                let first = (start / FRAC_PI_2).ceil() as i64;
                let last = (end / FRAC_PI_2).floor() as i64;
                let extremes = (first..=last).map(|k| at(k as f64 * FRAC_PI_2));
                let (mut lo, mut hi) = (at(start), at(start));
                for p in std::iter::once(at(end)).chain(extremes) {
                    lo = Point::new(lo.x.min(p.x), lo.y.min(p.y));
                    hi = Point::new(hi.x.max(p.x), hi.y.max(p.y));
                }
                (lo - Point::new(half_width, half_width), hi + Point::new(half_width, half_width))
            }
            Primitive::Polygon { vertices } => {
                let mut lo = Point::new(f64::INFINITY, f64::INFINITY);
                let mut hi = Point::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
                for v in vertices {
                    lo = Point::new(lo.x.min(v.x), lo.y.min(v.y));
                    hi = Point::new(hi.x.max(v.x), hi.y.max(v.y));
                }
                (lo, hi)
            }
        }
    }

    /// Pixel rectangle `[x0, x1) × [y0, y1)` that may contain covered pixel centers.
    fn pixel_span(&self, width: u32, height: u32) -> (u32, u32, u32, u32) {
        let (lo, hi) = self.bbox();
        let clamp = |v: f64, max: u32| v.clamp(0.0, max as f64) as u32;
        (
            clamp((lo.x - 0.5).floor(), width),
            clamp((hi.x + 0.5).ceil() + 1.0, width),
            clamp((lo.y - 0.5).floor(), height),
            clamp((hi.y + 0.5).ceil() + 1.0, height),
        )
    }

    /// Calls `f` with the row-major index of every pixel whose center is covered.
    pub fn for_each_pixel(&self, width: u32, height: u32, mut f: impl FnMut(usize)) {
        let (x0, x1, y0, y1) = self.pixel_span(width, height);
        for y in y0..y1 {
            for x in x0..x1 {
                if self.contains(Point::new(x as f64 + 0.5, y as f64 + 0.5)) {
                    f(y as usize * width as usize + x as usize);
                }
            }
        }
    }

    /// Paints the primitive; with `antialias`, edge pixels blend by 4×4 supersampled coverage.
    pub fn paint(&self, img: &mut ImageBuffer, color: Rgb, antialias: bool) {
        let (w, h) = (img.width(), img.height());
        if !antialias {
            self.for_each_pixel(w, h, |i| img.put_index(i, color));
            return;
        }
        let (x0, x1, y0, y1) = self.pixel_span(w, h);
        let n = SUPERSAMPLE * SUPERSAMPLE;
        for y in y0..y1 {
            for x in x0..x1 {
                let covered = (0..n)
                    .filter(|k| {
                        let sx = x as f64 + ((k % SUPERSAMPLE) as f64 + 0.5) / SUPERSAMPLE as f64;
                        let sy = y as f64 + ((k / SUPERSAMPLE) as f64 + 0.5) / SUPERSAMPLE as f64;
                        self.contains(Point::new(sx, sy))
                    })
                    .count() as u32;
                if covered == 0 {
                    continue;
                }
                let old = img.get(x, y);
                let mut mixed = [0u8; 3];
                for ch in 0..3 {
                    let v = (color[ch] as u32 * covered + old[ch] as u32 * (n - covered) + n / 2) / n;
                    mixed[ch] = v as u8;
                }
                img.put(x, y, mixed);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn count(p: &Primitive, size: u32) -> usize {
        let mut n = 0;
        p.for_each_pixel(size, size, |_| n += 1);
        n
    }

    #[test]
    fn disc_area_close_to_analytic() {
        let d = Primitive::Disc { center: Point::new(50.0, 50.0), radius: 20.0 };
        let n = count(&d, 100) as f64;
        let exact = std::f64::consts::PI * 400.0;
        assert!((n - exact).abs() / exact < 0.02, "{n} vs {exact}");
    }

    #[test]
    fn capsule_is_clipped_to_canvas() {
        let c = Primitive::Capsule { a: Point::new(-10.0, 5.5), b: Point::new(200.0, 5.5), half_width: 1.5 };
        assert_eq!(count(&c, 20), 20 * 3);
    }

    #[test]
    fn polygon_square_pixel_count() {
        let sq = Primitive::Polygon {
            vertices: vec![Point::new(2.0, 2.0), Point::new(12.0, 2.0), Point::new(12.0, 12.0), Point::new(2.0, 12.0)],
        };
        assert_eq!(count(&sq, 20), 100);
    }

    #[test]
    fn arc_band_respects_span() {
        let arc = Primitive::ArcBand {
            center: Point::new(50.0, 50.0),
            radius: 30.0,
            start: 0.0,
            end: std::f64::consts::FRAC_PI_2,
            half_width: 1.0,
        };
        assert!(arc.contains(Point::new(80.0, 50.5)));
        assert!(arc.contains(Point::new(50.4, 80.0)));
        assert!(!arc.contains(Point::new(20.0, 50.0)));
    }

    #[test]
    fn arc_band_pixels_match_brute_force() {
        for (start, end) in [(0.3, 1.2), (2.0, 4.5), (5.5, 7.0), (-0.4, 0.4)] {
            let arc = Primitive::ArcBand { center: Point::new(40.0, 40.0), radius: 25.0, start, end, half_width: 1.5 };
            let mut fast = Vec::new();
            arc.for_each_pixel(80, 80, |i| fast.push(i));
            let slow: Vec<usize> = (0..80 * 80)
                .filter(|i| arc.contains(Point::new((i % 80) as f64 + 0.5, (i / 80) as f64 + 0.5)))
                .collect();
            assert_eq!(fast, slow, "span {start}..{end}");
        }
    }

    #[test]
    fn antialias_only_touches_edges() {
        let d = Primitive::Disc { center: Point::new(10.0, 10.0), radius: 5.0 };
        let mut hard = ImageBuffer::filled(20, 20, [255; 3]);
        let mut soft = hard.clone();
        d.paint(&mut hard, [0, 0, 0], false);
        d.paint(&mut soft, [0, 0, 0], true);
        assert_eq!(hard.get(10, 10), soft.get(10, 10));
        assert_ne!(hard, soft);
    }
}
