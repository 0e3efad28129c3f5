//! Per-pixel cell labels for a graph at a given resolution.

use crate::geometry::{CellGraph, CellId, Point};

const NO_CELL: u32 = u32::MAX;

/// Which cell every pixel center falls in, and how deep inside it.
#[derive(Clone, Debug)]
pub struct CellPixelMap {
    resolution: u32,
    labels: Vec<u32>,
    /// Distance in pixels from the pixel center to its cell's boundary.
    depth: Vec<f32>,
    cell_pixels: Vec<Vec<u32>>,
}

impl CellPixelMap {
    pub fn new(graph: &CellGraph, resolution: u32) -> Self {
        let res = resolution as usize;
        let scale = resolution as f64;
        let mut labels = vec![NO_CELL; res * res];
        let mut depth = vec![0f32; res * res];
        let mut cell_pixels = vec![Vec::new(); graph.cell_count()];
        for y in 0..res {
            for x in 0..res {
                let p = Point::new((x as f64 + 0.5) / scale, (y as f64 + 0.5) / scale);
                if let Some(c) = graph.locate(p) {
                    let i = y * res + x;
                    labels[i] = c.0;
                    let shape = graph.shape(c).expect("located cell exists");
                    depth[i] = (shape.boundary_distance(p) * scale) as f32;
                    cell_pixels[c.index()].push(i as u32);
                }
            }
        }
        CellPixelMap { resolution, labels, depth, cell_pixels }
    }

    pub fn resolution(&self) -> u32 {
        self.resolution
    }

    pub fn label(&self, i: usize) -> Option<CellId> {
        let l = self.labels[i];
        (l != NO_CELL).then_some(CellId(l))
    }

    pub fn depth(&self, i: usize) -> f32 {
        self.depth[i]
    }

    /// Row-major indices of every pixel whose center lies in `c`.
    pub fn cell_pixels(&self, c: CellId) -> &[u32] {
        self.cell_pixels.get(c.index()).map_or(&[], Vec::as_slice)
    }

    /// Pixels of `c` at least `erosion` pixels away from its boundary.
    pub fn interior_pixels(&self, c: CellId, erosion: f64) -> impl Iterator<Item = usize> + '_ {
        self.cell_pixels(c)
            .iter()
            .map(|&i| i as usize)
            .filter(move |&i| self.depth[i] as f64 >= erosion)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_cell_graph, GeometryKind};

    #[test]
    fn labels_partition_cells() {
        let g = build_cell_graph(GeometryKind::Hexagon, 4).unwrap();
        let map = CellPixelMap::new(&g, 128);
        let labelled: usize = g.cells().map(|c| map.cell_pixels(c).len()).sum();
        assert_eq!(labelled, (0..128 * 128).filter(|&i| map.label(i).is_some()).count());
        assert!(g.cells().all(|c| !map.cell_pixels(c).is_empty()));
    }
}
