//! Depth-buffered triangle rasterization at pixel centres.
//!
//! Coverage uses the top-left fill rule, so pixels on a shared edge belong to exactly one
//! of the two triangles. Depth is perspective-correct (1/z interpolated in screen space);
//! at equal depth the lower triangle index wins.

use super::affine::{is_degenerate, Pixel};
use crate::par;

const NONE: u32 = u32::MAX;

/// A projected triangle, reordered so its screen-space orientation is positive.
#[derive(Debug, Clone, Copy)]
pub struct ScreenTriangle {
    pub v: [Pixel; 3],
    pub inv_z: [f64; 3],
    area2: f64,
}

fn lex_less(a: &Pixel, b: &Pixel) -> bool {
    (a.x, a.y) < (b.x, b.y)
}

/// Edge function of the directed edge `a → b` at `p`; the value is computed from the
/// lexicographically smaller endpoint so that `edge(b, a, p) == -edge(a, b, p)` exactly.
fn edge(a: &Pixel, b: &Pixel, p: &Pixel) -> f64 {
    let (lo, hi, sign) = if lex_less(a, b) { (a, b, 1.0) } else { (b, a, -1.0) };
    sign * ((hi.x - lo.x) * (p.y - lo.y) - (hi.y - lo.y) * (p.x - lo.x))
}

fn is_top_left(a: &Pixel, b: &Pixel) -> bool {
    let d = b - a;
    d.y < 0.0 || (d.y == 0.0 && d.x > 0.0)
}

impl ScreenTriangle {
    /// `None` for degenerate or non-finite input; `depth` is camera-space z (> 0).
    pub fn new(p: [Pixel; 3], depth: [f64; 3]) -> Option<Self> {
        if is_degenerate(&p) || p.iter().any(|q| !q.x.is_finite() || !q.y.is_finite()) {
            return None;
        }
        let (mut v, mut z) = (p, depth);
        let mut area2 = edge(&v[0], &v[1], &v[2]);
        if area2 < 0.0 {
            v.swap(1, 2);
            z.swap(1, 2);
            area2 = -area2;
        }
        Some(ScreenTriangle {
            v,
            inv_z: z.map(f64::recip),
            area2,
        })
    }

    /// Inclusive pixel ranges `(x0, x1, y0, y1)` whose centres may be covered.
    pub fn bounds(&self, width: usize, height: usize) -> Option<(usize, usize, usize, usize)> {
        let span = |lo: f64, hi: f64, n: usize| -> Option<(usize, usize)> {
            let first = (lo - 0.5).ceil().max(0.0);
            let last = (hi - 0.5).floor().min(n as f64 - 1.0);
            (first <= last).then_some((first as usize, last as usize))
        };
        let xs = self.v.iter().map(|p| p.x);
        let ys = self.v.iter().map(|p| p.y);
        let (x0, x1) = span(xs.clone().fold(f64::MAX, f64::min), xs.fold(f64::MIN, f64::max), width)?;
        let (y0, y1) = span(ys.clone().fold(f64::MAX, f64::min), ys.fold(f64::MIN, f64::max), height)?;
        Some((x0, x1, y0, y1))
    }

    /// Screen-space barycentrics of `p` when it is covered under the fill rule.
    pub fn barycentric(&self, p: &Pixel) -> Option<[f64; 3]> {
        let v = &self.v;
        let mut lambda = [0.0; 3];
        for k in 0..3 {
            let (a, b) = (&v[(k + 1) % 3], &v[(k + 2) % 3]);
            let e = edge(a, b, p);
            if e < 0.0 || (e == 0.0 && !is_top_left(a, b)) {
                return None;
            }
            lambda[k] = e / self.area2;
        }
        Some(lambda)
    }

    /// Interpolated 1/z at the centre of pixel `(x, y)`, if covered.
    pub fn coverage(&self, x: usize, y: usize) -> Option<f64> {
        let p = Pixel::new(x as f64 + 0.5, y as f64 + 0.5);
        self.barycentric(&p)
            .map(|l| l[0] * self.inv_z[0] + l[1] * self.inv_z[1] + l[2] * self.inv_z[2])
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Cell {
    triangle: u32,
    inv_depth: f64,
}

/// Front-most triangle per pixel.
#[derive(Debug, Clone)]
pub struct DepthBuffer {
    pub width: usize,
    pub height: usize,
    cells: Vec<Cell>,
}

impl DepthBuffer {
    pub fn winner(&self, x: usize, y: usize) -> Option<usize> {
        let c = self.cells[y * self.width + x];
        (c.triangle != NONE).then_some(c.triangle as usize)
    }

    /// Camera-space depth of the winner.
    pub fn depth(&self, x: usize, y: usize) -> Option<f64> {
        let c = self.cells[y * self.width + x];
        (c.triangle != NONE).then(|| c.inv_depth.recip())
    }

    /// Number of pixels won by each triangle.
    pub fn pixel_counts(&self, triangles: usize) -> Vec<u32> {
        let mut counts = vec![0u32; triangles];
        for c in &self.cells {
            if c.triangle != NONE {
                counts[c.triangle as usize] += 1;
            }
        }
        counts
    }
}

/// Rasterizes `triangles` (index = triangle id; `None` entries are skipped).
pub fn rasterize(triangles: &[Option<ScreenTriangle>], width: usize, height: usize) -> DepthBuffer {
    assert!(triangles.len() < NONE as usize);
    let mut rows: Vec<Vec<(u32, usize, usize)>> = vec![Vec::new(); height];
    for (i, t) in triangles.iter().enumerate() {
        if let Some((x0, x1, y0, y1)) = t.as_ref().and_then(|t| t.bounds(width, height)) {
            for row in &mut rows[y0..=y1] {
                row.push((i as u32, x0, x1));
            }
        }
    }
    let mut cells = vec![Cell { triangle: NONE, inv_depth: 0.0 }; width * height];
    par::for_each_chunk_mut(&mut cells, width.max(1), |y, row| {
        for &(i, x0, x1) in &rows[y] {
            let t = triangles[i as usize].as_ref().unwrap();
            for (x, cell) in row.iter_mut().enumerate().take(x1 + 1).skip(x0) {
                if let Some(d) = t.coverage(x, y) {
                    // Strictly nearer only: ties keep the earlier (lower) index.
                    if cell.triangle == NONE || d > cell.inv_depth {
                        *cell = Cell { triangle: i, inv_depth: d };
                    }
                }
            }
        }
    });
    DepthBuffer { width, height, cells }
}
