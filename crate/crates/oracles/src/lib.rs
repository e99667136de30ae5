//! Independent, deliberately naive reference computations for tests.
//!
//! Nothing here shares code with `forge-core`: inputs are raw vertex and face arrays and
//! all geometry is recomputed from scratch with dense linear algebra.

use nalgebra::{DMatrix, DVector, Matrix3, Vector3};

pub type V3 = Vector3<f64>;

/// Values of `w_sec − w` and its remainder bound at `L = 1`, `γ = 0.125`, `γ_f = 0.25`,
/// evaluated with 50-digit arithmetic (mpmath) and rounded to double.
pub const SPOT_GAP: f64 = 0.008864255277044425;
pub const SPOT_BOUND: f64 = 0.010_031_448_567_872_98;

fn corner_angle(p: V3, a: V3, b: V3) -> f64 {
    let (u, v) = (a - p, b - p);
    (u.dot(&v) / (u.norm() * v.norm())).clamp(-1.0, 1.0).acos()
}

/// Dense positive-semidefinite cotangent stiffness from interior angles via `acos`.
pub fn dense_stiffness(v: &[V3], f: &[[usize; 3]]) -> DMatrix<f64> {
    let n = v.len();
    let mut w = DMatrix::zeros(n, n);
    for t in f {
        for k in 0..3 {
            let (o, i, j) = (t[k], t[(k + 1) % 3], t[(k + 2) % 3]);
            let c = 0.5 / corner_angle(v[o], v[i], v[j]).tan();
            w[(i, j)] -= c;
            w[(j, i)] -= c;
            w[(i, i)] += c;
            w[(j, j)] += c;
        }
    }
    w
}

pub fn triangle_area(a: V3, b: V3, c: V3) -> f64 {
    0.5 * (b - a).cross(&(c - a)).norm()
}

/// Gradient of the linear interpolant of `u` on triangle `p`, from the 3×3 system
/// `[e1; e2; n] g = [u1 − u0, u2 − u0, 0]`.
pub fn face_gradient(p: [V3; 3], u: [f64; 3]) -> V3 {
    let (e1, e2) = (p[1] - p[0], p[2] - p[0]);
    let n = e1.cross(&e2);
    let m = Matrix3::from_rows(&[e1.transpose(), e2.transpose(), n.transpose()]);
    m.lu()
        .solve(&V3::new(u[1] - u[0], u[2] - u[0], 0.0))
        .expect("non-degenerate triangle")
}

/// `Σ_f area_f ⟨∇u, ∇v⟩_f`.
pub fn dirichlet_inner(v: &[V3], f: &[[usize; 3]], a: &[f64], b: &[f64]) -> f64 {
    f.iter()
        .map(|t| {
            let p = t.map(|i| v[i]);
            let ga = face_gradient(p, t.map(|i| a[i]));
            let gb = face_gradient(p, t.map(|i| b[i]));
            triangle_area(p[0], p[1], p[2]) * ga.dot(&gb)
        })
        .sum()
}

/// Weak divergence of `w_f ∇x` per vertex and coordinate, assembled face by face with
/// hat-function gradients obtained from `face_gradient` of unit corner data.
pub fn weighted_rhs(v: &[V3], f: &[[usize; 3]], w: &[f64]) -> Vec<V3> {
    let mut rhs = vec![V3::zeros(); v.len()];
    for t in f {
        let p = t.map(|i| v[i]);
        let area = triangle_area(p[0], p[1], p[2]);
        let wf = (w[t[0]] + w[t[1]] + w[t[2]]) / 3.0;
        let grad_x: Vec<V3> = (0..3).map(|c| face_gradient(p, t.map(|i| v[i][c]))).collect();
        for k in 0..3 {
            let mut hat = [0.0; 3];
            hat[k] = 1.0;
            let gphi = face_gradient(p, hat);
            for c in 0..3 {
                rhs[t[k]][c] += area * wf * gphi.dot(&grad_x[c]);
            }
        }
    }
    rhs
}

/// Textbook dense Cholesky `M = L Lᵀ` followed by two triangular solves.
pub fn cholesky_solve(m: &DMatrix<f64>, b: &DVector<f64>) -> Option<DVector<f64>> {
    let n = m.nrows();
    let mut l = DMatrix::<f64>::zeros(n, n);
    for j in 0..n {
        let mut d = m[(j, j)];
        for k in 0..j {
            d -= l[(j, k)] * l[(j, k)];
        }
        if d <= 0.0 {
            return None;
        }
        l[(j, j)] = d.sqrt();
        for i in j + 1..n {
            let mut s = m[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = s / l[(j, j)];
        }
    }
    let mut y = DVector::zeros(n);
    for i in 0..n {
        let mut s = b[i];
        for k in 0..i {
            s -= l[(i, k)] * y[k];
        }
        y[i] = s / l[(i, i)];
    }
    let mut x = DVector::zeros(n);
    for i in (0..n).rev() {
        let mut s = y[i];
        for k in i + 1..n {
            s -= l[(k, i)] * x[k];
        }
        x[i] = s / l[(i, i)];
    }
    Some(x)
}

/// Dense constrained Poisson solve: `W_FF x_F = rhs_F − W_FC x_C` per coordinate.
pub fn constrained_solve(
    v: &[V3],
    f: &[[usize; 3]],
    w: &[f64],
    pinned: &[usize],
    targets: &[V3],
) -> Option<Vec<V3>> {
    let n = v.len();
    let stiff = dense_stiffness(v, f);
    let rhs = weighted_rhs(v, f, w);
    let mut fixed = vec![None; n];
    for (&i, t) in pinned.iter().zip(targets) {
        fixed[i] = Some(*t);
    }
    let free: Vec<usize> = (0..n).filter(|i| fixed[*i].is_none()).collect();
    let m = DMatrix::from_fn(free.len(), free.len(), |a, b| stiff[(free[a], free[b])]);
    let mut out: Vec<V3> = (0..n).map(|i| fixed[i].unwrap_or_else(V3::zeros)).collect();
    for c in 0..3 {
        let b = DVector::from_fn(free.len(), |a, _| {
            let i = free[a];
            let coupling: f64 = (0..n)
                .filter_map(|j| fixed[j].map(|t| stiff[(i, j)] * t[c]))
                .sum();
            rhs[i][c] - coupling
        });
        let x = cholesky_solve(&m, &b)?;
        for (a, &i) in free.iter().enumerate() {
            out[i][c] = x[a];
        }
    }
    Some(out)
}

/// Sum of angle deficits (`2π − Σθ` interior, `π − Σθ` on the boundary).
pub fn total_angle_deficit(v: &[V3], f: &[[usize; 3]], boundary: &[bool]) -> f64 {
    let mut sum = vec![0.0; v.len()];
    for t in f {
        for k in 0..3 {
            sum[t[k]] += corner_angle(v[t[k]], v[t[(k + 1) % 3]], v[t[(k + 2) % 3]]);
        }
    }
    sum.iter()
        .zip(boundary)
        .map(|(s, &b)| if b { std::f64::consts::PI - s } else { 2.0 * std::f64::consts::PI - s })
        .sum()
}

/// One projected triangle for the depth oracle: pixel-space corners and camera depths.
#[derive(Debug, Clone, Copy)]
pub struct OracleTriangle {
    pub p: [(f64, f64); 3],
    pub z: [f64; 3],
}

/// Pixel-centre coverage by barycentric coordinates from Cramer's rule.
/// Returns `(1/z, min barycentric)` if all barycentrics are `≥ -slack`.
pub fn oracle_cover(t: &OracleTriangle, x: usize, y: usize, slack: f64) -> Option<(f64, f64)> {
    let (px, py) = (x as f64 + 0.5, y as f64 + 0.5);
    let [(x0, y0), (x1, y1), (x2, y2)] = t.p;
    let det = (x1 - x0) * (y2 - y0) - (x2 - x0) * (y1 - y0);
    if det.abs() < 1e-12 {
        return None;
    }
    let l1 = ((px - x0) * (y2 - y0) - (x2 - x0) * (py - y0)) / det;
    let l2 = ((x1 - x0) * (py - y0) - (px - x0) * (y1 - y0)) / det;
    let l0 = 1.0 - l1 - l2;
    let lo = l0.min(l1).min(l2);
    (lo >= -slack).then(|| (l0 / t.z[0] + l1 / t.z[1] + l2 / t.z[2], lo))
}

/// Exhaustive per-pixel winner: every triangle tested at every pixel.
/// `ambiguous` is set where an edge or a depth tie makes the answer rule-dependent.
pub fn exhaustive_depth(tris: &[Option<OracleTriangle>], width: usize, height: usize) -> Vec<(Option<usize>, bool)> {
    const EDGE: f64 = 1e-9;
    let mut out = Vec::with_capacity(width * height);
    for y in 0..height {
        for x in 0..width {
            let mut best: Option<(usize, f64)> = None;
            let mut ambiguous = false;
            let mut hits = Vec::new();
            for (i, t) in tris.iter().enumerate() {
                let Some(t) = t else { continue };
                if let Some((d, lo)) = oracle_cover(t, x, y, EDGE) {
                    if lo.abs() <= EDGE {
                        ambiguous = true;
                    }
                    hits.push((i, d));
                    if best.is_none_or(|(_, bd)| d > bd) {
                        best = Some((i, d));
                    }
                }
            }
            if let Some((_, bd)) = best {
                let close = hits.iter().filter(|(_, d)| (d - bd).abs() <= 1e-12 * bd.abs()).count();
                ambiguous |= close > 1;
            }
            out.push((best.map(|b| b.0), ambiguous));
        }
    }
    out
}

/// Integer shift of an RGBA raster: `out(x, y) = img(x − dx, y − dy)`, `None` outside.
pub fn shift_pixel(img: &[u8], width: usize, height: usize, x: usize, y: usize, dx: i64, dy: i64) -> Option<[u8; 4]> {
    let (sx, sy) = (x as i64 - dx, y as i64 - dy);
    if sx < 0 || sy < 0 || sx >= width as i64 || sy >= height as i64 {
        return None;
    }
    let o = (sy as usize * width + sx as usize) * 4;
    Some([img[o], img[o + 1], img[o + 2], img[o + 3]])
}

/// Closed-form secant gap and remainder bound, evaluated naively.
pub fn naive_gap_and_bound(log_k: f64, gamma: f64, gamma_f: f64) -> (f64, f64) {
    let w = (gamma * log_k).exp();
    let w_sec = 1.0 + gamma / gamma_f * ((gamma_f * log_k).exp() - 1.0);
    let bound = gamma * (gamma_f - gamma) / 2.0 * log_k * log_k * (gamma_f * log_k).exp().max(1.0);
    (w_sec - w, bound)
}
