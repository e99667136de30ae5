//! Discrete differential operators on a fixed triangle connectivity.
//!
//! Sign convention: the stored stiffness `W` is positive semidefinite,
//! `W_ij = -½(cot α_ij + cot β_ij)` for `i ≠ j` and `W_ii = -Σ_j W_ij`, so that
//! `uᵀ W v = Σ_f area_f ⟨∇u, ∇v⟩_f`. The Laplace–Beltrami operator is `-A⁻¹W`.
//! [`DiscreteOperators::edge_weight`] returns the positive cotangent weight.

use nalgebra::Vector3;

use crate::mesh::{bbox_diagonal, Mesh};
use crate::{par, Error, Result};

/// Cotangents are clamped to this magnitude to survive near-degenerate corners.
pub const COT_CLAMP: f64 = 1e4;
/// Faces with area below `AREA_FLOOR · diag²` are rejected.
pub const AREA_FLOOR: f64 = 1e-12;

/// Compressed sparse row matrix with sorted column indices per row.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    pub n: usize,
    pub row_ptr: Vec<usize>,
    pub col_idx: Vec<usize>,
    pub values: Vec<f64>,
}

impl CsrMatrix {
    /// Sums duplicate entries. Rows are filled in the order triplets are sorted, so the
    /// result does not depend on the triplet order beyond floating-point summation order
    /// of duplicates, which follows the input order (stable sort).
    pub fn from_triplets(n: usize, mut triplets: Vec<(usize, usize, f64)>) -> Self {
        triplets.sort_by_key(|&(r, c, _)| (r, c));
        let mut row_ptr = vec![0usize; n + 1];
        let mut col_idx: Vec<usize> = Vec::with_capacity(triplets.len());
        let mut values: Vec<f64> = Vec::with_capacity(triplets.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in triplets {
            if last == Some((r, c)) {
                *values.last_mut().unwrap() += v;
            } else {
                col_idx.push(c);
                values.push(v);
                row_ptr[r + 1] += 1;
                last = Some((r, c));
            }
        }
        for i in 0..n {
            row_ptr[i + 1] += row_ptr[i];
        }
        CsrMatrix {
            n,
            row_ptr,
            col_idx,
            values,
        }
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.col_idx[r.clone()]
            .iter()
            .copied()
            .zip(self.values[r].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        match self.col_idx[r.clone()].binary_search(&j) {
            Ok(k) => self.values[r.start + k],
            Err(_) => 0.0,
        }
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.n);
        par::map_range(self.n, |i| self.row(i).map(|(j, v)| v * x[j]).sum())
    }

    /// Largest absolute entry; used as a scale for relative tolerances.
    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn is_symmetric(&self) -> bool {
        (0..self.n).all(|i| self.row(i).all(|(j, v)| self.get(j, i) == v))
    }
}

/// Per-face geometric data shared by the gradient and divergence assemblies.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FaceFrame {
    pub area: f64,
    /// Gradients of the three corner hat functions (constant over the face).
    pub hat_gradients: [Vector3<f64>; 3],
    /// Clamped cotangent of the angle at each corner.
    pub cotangents: [f64; 3],
    /// Interior angle at each corner.
    pub angles: [f64; 3],
}

#[derive(Debug, Clone)]
pub struct DiscreteOperators {
    pub faces: Vec<[usize; 3]>,
    pub frames: Vec<FaceFrame>,
    /// Positive semidefinite cotangent stiffness.
    pub stiffness: CsrMatrix,
    /// Lumped mixed-Voronoi areas (diagonal of `A`).
    pub mass: Vec<f64>,
}

fn face_frame(p: [Vector3<f64>; 3]) -> FaceFrame {
    let n = (p[1] - p[0]).cross(&(p[2] - p[0]));
    let double_area = n.norm();
    let area = 0.5 * double_area;
    let unit_n = if double_area > 0.0 { n / double_area } else { n };
    let mut hat_gradients = [Vector3::zeros(); 3];
    let mut cotangents = [0.0; 3];
    let mut angles = [0.0; 3];
    for k in 0..3 {
        let (i, j) = ((k + 1) % 3, (k + 2) % 3);
        let opposite = p[j] - p[i];
        hat_gradients[k] = if double_area > 0.0 {
            unit_n.cross(&opposite) / double_area
        } else {
            Vector3::zeros()
        };
        let (e1, e2) = (p[i] - p[k], p[j] - p[k]);
        let cross = e1.cross(&e2).norm();
        let dot = e1.dot(&e2);
        cotangents[k] = if cross > 0.0 {
            (dot / cross).clamp(-COT_CLAMP, COT_CLAMP)
        } else if dot >= 0.0 {
            COT_CLAMP
        } else {
            -COT_CLAMP
        };
        angles[k] = cross.atan2(dot);
    }
    FaceFrame {
        area,
        hat_gradients,
        cotangents,
        angles,
    }
}

/// Mixed Voronoi share of each corner: the circumcentric region for non-obtuse faces,
/// otherwise half the area to the obtuse corner and a quarter to the others. The three
/// shares sum to the face area.
pub fn corner_areas(fr: &FaceFrame, p: [Vector3<f64>; 3]) -> [f64; 3] {
    if let Some(o) = fr.angles.iter().position(|&a| a > std::f64::consts::FRAC_PI_2) {
        let mut out = [0.25 * fr.area; 3];
        out[o] = 0.5 * fr.area;
        return out;
    }
    let mut out = [0.0; 3];
    for (c, slot) in out.iter_mut().enumerate() {
        let (i, j) = ((c + 1) % 3, (c + 2) % 3);
        let to_i = (p[i] - p[c]).norm_squared();
        let to_j = (p[j] - p[c]).norm_squared();
        *slot = (to_i * fr.cotangents[j] + to_j * fr.cotangents[i]) / 8.0;
    }
    out
}

/// Assembles the cotangent stiffness, lumped mass and per-face gradient frames.
pub fn build_operators(mesh: &Mesh) -> Result<DiscreteOperators> {
    let n = mesh.vertex_count();
    if n == 0 {
        return Err(Error::EmptyMesh);
    }
    let diag = bbox_diagonal(mesh)?;
    let floor = AREA_FLOOR * diag * diag;
    let frames: Vec<FaceFrame> = par::map_slice(&mesh.faces, |f| {
        face_frame([mesh.vertices[f[0]], mesh.vertices[f[1]], mesh.vertices[f[2]]])
    });
    let degenerate: Vec<usize> = frames
        .iter()
        .enumerate()
        .filter_map(|(i, fr)| (!(fr.area >= floor) || fr.area == 0.0).then_some(i))
        .collect();
    if !degenerate.is_empty() {
        return Err(Error::DegenerateFaces { faces: degenerate });
    }

    let mut triplets = Vec::with_capacity(mesh.faces.len() * 9);
    let mut mass = vec![0.0; n];
    for (f, fr) in mesh.faces.iter().zip(&frames) {
        for k in 0..3 {
            let (i, j) = (f[(k + 1) % 3], f[(k + 2) % 3]);
            let w = 0.5 * fr.cotangents[k];
            triplets.push((i, j, -w));
            triplets.push((j, i, -w));
            triplets.push((i, i, w));
            triplets.push((j, j, w));
        }
        let p = [mesh.vertices[f[0]], mesh.vertices[f[1]], mesh.vertices[f[2]]];
        for (k, a) in corner_areas(fr, p).into_iter().enumerate() {
            mass[f[k]] += a;
        }
    }
    let stiffness = CsrMatrix::from_triplets(n, triplets);
    Ok(DiscreteOperators {
        faces: mesh.faces.clone(),
        frames,
        stiffness,
        mass,
    })
}

impl DiscreteOperators {
    pub fn vertex_count(&self) -> usize {
        self.mass.len()
    }

    pub fn total_area(&self) -> f64 {
        self.mass.iter().sum()
    }

    /// Cotangent weight ½(cot α + cot β) of edge (i, j); 0 for non-edges.
    pub fn edge_weight(&self, i: usize, j: usize) -> f64 {
        if i == j {
            return 0.0;
        }
        -self.stiffness.get(i, j)
    }

    /// Per-face gradient of a piecewise-linear scalar field.
    pub fn gradient(&self, u: &[f64]) -> Vec<Vector3<f64>> {
        assert_eq!(u.len(), self.vertex_count());
        par::map_range(self.faces.len(), |fi| {
            let (f, fr) = (self.faces[fi], &self.frames[fi]);
            (0..3).fold(Vector3::zeros(), |acc, k| acc + fr.hat_gradients[k] * u[f[k]])
        })
    }

    /// Integrated (weak) divergence of a per-face vector field:
    /// `div(g)_i = -Σ_f area_f ⟨∇φ_i, g_f⟩`. It is the negative adjoint of
    /// [`gradient`](Self::gradient) and `-div(grad u) = W u`.
    pub fn divergence(&self, g: &[Vector3<f64>]) -> Vec<f64> {
        assert_eq!(g.len(), self.faces.len());
        let mut out = vec![0.0; self.vertex_count()];
        for ((f, fr), gf) in self.faces.iter().zip(&self.frames).zip(g) {
            for k in 0..3 {
                out[f[k]] -= fr.area * fr.hat_gradients[k].dot(gf);
            }
        }
        out
    }

    /// Area-weighted inner product of two per-face vector fields.
    pub fn face_inner(&self, a: &[Vector3<f64>], b: &[Vector3<f64>]) -> f64 {
        self.frames
            .iter()
            .zip(a.iter().zip(b))
            .map(|(fr, (x, y))| fr.area * x.dot(y))
            .sum()
    }

    /// `sqrt(Σ_f area_f Σ_c |∇x_c|²)` over the three coordinate channels of `mesh`.
    pub fn gradient_energy(&self, mesh: &Mesh) -> f64 {
        (0..3)
            .map(|c| {
                let u: Vec<f64> = mesh.vertices.iter().map(|v| v[c]).collect();
                let g = self.gradient(&u);
                self.face_inner(&g, &g)
            })
            .sum::<f64>()
            .sqrt()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{synth, Point};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn unit_square() -> Mesh {
        Mesh::new(
            vec![
                Point::new(0., 0., 0.),
                Point::new(1., 0., 0.),
                Point::new(1., 1., 0.),
                Point::new(0., 1., 0.),
            ],
            vec![[0, 1, 2], [0, 2, 3]],
        )
        .unwrap()
    }

    #[test]
    fn square_weights() {
        let ops = build_operators(&unit_square()).unwrap();
        // The diagonal (0,2) faces right angles at 1 and 3.
        assert!(ops.edge_weight(0, 2).abs() < 1e-12);
        // Each side faces one 45° angle: ½ cot 45° = ½.
        for (i, j) in [(0, 1), (1, 2), (2, 3), (3, 0)] {
            assert!((ops.edge_weight(i, j) - 0.5).abs() < 1e-12);
        }
        // Right angles split the square evenly.
        assert!(ops.mass.iter().all(|a| (a - 0.25).abs() < 1e-15));
        assert!((ops.total_area() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn shared_leg_sees_two_45_degree_angles() {
        let m = Mesh::new(
            vec![
                Point::new(0., 0., 0.),
                Point::new(1., 0., 0.),
                Point::new(1., 1., 0.),
                Point::new(2., 1., 0.),
            ],
            vec![[0, 1, 2], [1, 3, 2]],
        )
        .unwrap();
        let ops = build_operators(&m).unwrap();
        assert!((ops.edge_weight(1, 2) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn corner_areas_partition_face() {
        let tris = [
            [Point::new(0., 0., 0.), Point::new(1., 0., 0.), Point::new(0.3, 0.8, 0.)],
            [Point::new(0., 0., 0.), Point::new(3., 0., 0.), Point::new(0.2, 0.1, 0.4)],
            [Point::new(0., 0., 0.), Point::new(1., 0., 0.), Point::new(0., 1., 0.)],
        ];
        for p in tris {
            let fr = face_frame(p);
            let a = corner_areas(&fr, p);
            assert!((a.iter().sum::<f64>() - fr.area).abs() < 1e-14 * fr.area.max(1.0));
            assert!(a.iter().all(|x| *x > 0.0));
        }
    }

    #[test]
    fn constants_in_null_space_and_symmetric() {
        let m = synth::icosphere(3);
        let ops = build_operators(&m).unwrap();
        let c = vec![3.7; m.vertex_count()];
        let wc = ops.stiffness.mul_vec(&c);
        let scale = ops.stiffness.max_abs() * 3.7;
        assert!(wc.iter().all(|v| v.abs() < 1e-12 * scale));
        assert!(ops.stiffness.is_symmetric());
        assert!(ops.mass.iter().all(|&a| a > 0.0));
    }

    #[test]
    fn sphere_area_converges() {
        let ops = build_operators(&synth::icosphere(4)).unwrap();
        let rel = (ops.total_area() - 4.0 * std::f64::consts::PI).abs() / (4.0 * std::f64::consts::PI);
        assert!(rel < 0.02, "relative area error {rel}");
        // Refinement shrinks the error.
        let coarse = build_operators(&synth::icosphere(2)).unwrap().total_area();
        assert!((coarse - 4.0 * std::f64::consts::PI).abs() > rel * 4.0 * std::f64::consts::PI);
    }

    #[test]
    fn stiffness_matches_gradient_inner_product() {
        let m = synth::bumpy_sphere(2);
        let ops = build_operators(&m).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let n = m.vertex_count();
        for _ in 0..10 {
            let u: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let v: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let lhs = ops.face_inner(&ops.gradient(&u), &ops.gradient(&v));
            let wv = ops.stiffness.mul_vec(&v);
            let rhs: f64 = u.iter().zip(&wv).map(|(a, b)| a * b).sum();
            assert!((lhs - rhs).abs() <= 1e-10 * lhs.abs().max(rhs.abs()), "{lhs} vs {rhs}");
            let div = ops.divergence(&ops.gradient(&v));
            assert!(div.iter().zip(&wv).all(|(d, w)| (d + w).abs() < 1e-10 * ops.stiffness.max_abs()));
        }
    }

    #[test]
    fn scaling_behaviour() {
        let m = synth::bumpy_sphere(1);
        let s = 2.5;
        let a = build_operators(&m).unwrap();
        let b = build_operators(&m.scaled(s)).unwrap();
        for (x, y) in a.stiffness.values.iter().zip(&b.stiffness.values) {
            assert!((x - y).abs() < 1e-12 * a.stiffness.max_abs());
        }
        for (x, y) in a.mass.iter().zip(&b.mass) {
            assert!((x * s * s - y).abs() < 1e-12 * y);
        }
        let t = build_operators(&m.translated(Point::new(5.0, -2.0, 1.0))).unwrap();
        for (x, y) in a.mass.iter().zip(&t.mass) {
            assert!((x - y).abs() < 1e-10 * x);
        }
    }

    #[test]
    fn degenerate_face_is_reported() {
        let m = Mesh::new(
            vec![
                Point::new(0., 0., 0.),
                Point::new(1., 0., 0.),
                Point::new(0., 1., 0.),
                Point::new(2., 0., 0.),
            ],
            vec![[0, 1, 2], [0, 1, 3]],
        )
        .unwrap();
        match build_operators(&m) {
            Err(Error::DegenerateFaces { faces }) => assert_eq!(faces, vec![1]),
            other => panic!("expected degenerate error, got {other:?}"),
        }
    }
}
