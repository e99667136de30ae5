use std::collections::VecDeque;
use std::sync::atomic::{AtomicU64, Ordering};

use faer::linalg::solvers::Solve;
use faer::sparse::{SparseColMat, Triplet};
use faer::{Mat, Side};

use super::cg::conjugate_gradient;
use super::{ConstraintSet, WeightField, RESIDUAL_TOLERANCE};
use crate::mesh::{Mesh, Point};
use crate::operators::{CsrMatrix, DiscreteOperators};
use crate::{par, Error, Result};

const CG_TOLERANCE: f64 = 1e-10;
const REFINE_ABOVE: f64 = 1e-13;
const MAX_REFINEMENTS: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SolverBackend {
    /// Sparse Cholesky of the reduced stiffness, factored once.
    #[default]
    Direct,
    /// Jacobi-preconditioned CG, relative tolerance 1e-10, at most 10·|V| iterations.
    ConjugateGradient,
}

#[derive(Debug, Clone)]
pub struct DeformationSolution {
    pub mesh: Mesh,
    pub gamma: f64,
    /// Largest per-channel relative residual of the reduced system.
    pub residual_norm: f64,
    /// Max distance between constrained vertices and their targets.
    pub constraint_violation: f64,
}

/// Right-hand side `rhs_i = Σ_f area_f w_f ⟨∇φ_i, ∇x⟩_f` per coordinate channel, with the
/// face weight taken as the mean of the corner weights.
pub fn assemble_rhs(mesh: &Mesh, ops: &DiscreteOperators, weights: &WeightField) -> Result<Vec<Point>> {
    let n = mesh.vertex_count();
    for actual in [weights.len(), ops.vertex_count()] {
        if actual != n {
            return Err(Error::DimensionMismatch { expected: n, actual });
        }
    }
    let face_w: Vec<f64> = ops.faces.iter().map(|f| weights.face_weight(f)).collect();
    let channels = par::map_range(3, |c| {
        let u: Vec<f64> = mesh.vertices.iter().map(|v| v[c]).collect();
        let mut g = ops.gradient(&u);
        for (gf, w) in g.iter_mut().zip(&face_w) {
            *gf *= *w;
        }
        ops.divergence(&g)
    });
    Ok((0..n)
        .map(|i| Point::new(-channels[0][i], -channels[1][i], -channels[2][i]))
        .collect())
}

/// Reduced stiffness on the free vertices of one constraint pattern, with its factorization.
///
/// The factorization depends only on the rest geometry and the constrained index set, so one
/// solver serves every γ, every coordinate channel and every set of target positions.
pub struct PoissonSolver {
    stiffness: CsrMatrix,
    constrained: Vec<usize>,
    free: Vec<usize>,
    /// Vertex → row in the reduced system (`usize::MAX` when constrained).
    local: Vec<usize>,
    reduced: CsrMatrix,
    factor: Option<faer::sparse::linalg::solvers::Llt<usize, f64>>,
    backend: SolverBackend,
    solves: AtomicU64,
}

impl std::fmt::Debug for PoissonSolver {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("PoissonSolver")
            .field("free", &self.free.len())
            .field("constrained", &self.constrained.len())
            .field("backend", &self.backend)
            .field("solves", &self.solve_count())
            .finish()
    }
}

impl PoissonSolver {
    pub fn new(ops: &DiscreteOperators, constrained: &[usize], backend: SolverBackend) -> Result<Self> {
        let n = ops.vertex_count();
        let mut key = constrained.to_vec();
        key.sort_unstable();
        key.dedup();
        if key.len() != constrained.len() {
            return Err(Error::InvalidParameter("duplicate constrained vertex".into()));
        }
        if let Some(&bad) = key.iter().find(|&&i| i >= n) {
            return Err(Error::OutOfRangeIndex { index: bad as i64, len: n });
        }
        let stiffness = ops.stiffness.clone();
        let mut local = vec![usize::MAX; n];
        let mut is_constrained = vec![false; n];
        for &i in &key {
            is_constrained[i] = true;
        }
        let free: Vec<usize> = (0..n).filter(|&i| !is_constrained[i]).collect();
        for (k, &i) in free.iter().enumerate() {
            local[i] = k;
        }

        // Every free vertex must reach a constrained one through the stiffness graph.
        let mut reached = is_constrained.clone();
        let mut queue: VecDeque<usize> = key.iter().copied().collect();
        while let Some(i) = queue.pop_front() {
            for (j, _) in stiffness.row(i) {
                if !reached[j] {
                    reached[j] = true;
                    queue.push_back(j);
                }
            }
        }
        if let Some(v) = reached.iter().position(|r| !r) {
            return Err(Error::SingularSystem(format!(
                "vertex {v} lies in a component without constrained vertices"
            )));
        }

        let mut triplets = Vec::with_capacity(stiffness.nnz());
        for (k, &i) in free.iter().enumerate() {
            for (j, v) in stiffness.row(i) {
                if local[j] != usize::MAX {
                    triplets.push((k, local[j], v));
                }
            }
        }
        let reduced = CsrMatrix::from_triplets(free.len(), triplets);

        let mut solver = PoissonSolver {
            stiffness,
            constrained: key,
            free,
            local,
            reduced,
            factor: None,
            backend,
            solves: AtomicU64::new(0),
        };
        if backend == SolverBackend::Direct && !solver.free.is_empty() {
            match solver.factorize() {
                Some(f) => solver.factor = Some(f),
                None => solver.backend = SolverBackend::ConjugateGradient,
            }
        }
        Ok(solver)
    }

    fn factorize(&self) -> Option<faer::sparse::linalg::solvers::Llt<usize, f64>> {
        let m = self.reduced.n;
        let entries: Vec<Triplet<usize, usize, f64>> = (0..m)
            .flat_map(|i| {
                self.reduced
                    .row(i)
                    .filter(move |&(j, _)| j <= i)
                    .map(move |(j, v)| Triplet::new(i, j, v))
            })
            .collect();
        let mat = SparseColMat::<usize, f64>::try_new_from_triplets(m, m, &entries).ok()?;
        mat.sp_cholesky(Side::Lower).ok()
    }

    /// Backend actually in use; `Direct` requests fall back to CG if factorization fails.
    pub fn backend(&self) -> SolverBackend {
        self.backend
    }

    pub fn constrained(&self) -> &[usize] {
        &self.constrained
    }

    pub fn free(&self) -> &[usize] {
        &self.free
    }

    pub fn reduced_matrix(&self) -> &CsrMatrix {
        &self.reduced
    }

    /// Number of linear solves performed with this solver.
    pub fn solve_count(&self) -> u64 {
        self.solves.load(Ordering::Relaxed)
    }

    /// Solves `W_FF y = b` for each column of `b` (reduced ordering); returns the max
    /// relative residual.
    pub fn solve_reduced(&self, columns: &mut [Vec<f64>]) -> Result<f64> {
        self.solves.fetch_add(1, Ordering::Relaxed);
        let m = self.reduced.n;
        if m == 0 {
            return Ok(0.0);
        }
        for c in columns.iter() {
            if c.len() != m {
                return Err(Error::DimensionMismatch { expected: m, actual: c.len() });
            }
        }
        let rhs: Vec<Vec<f64>> = columns.to_vec();
        match &self.factor {
            Some(factor) => {
                let solve = |b: &[Vec<f64>]| -> Vec<Vec<f64>> {
                    let mut mat = Mat::from_fn(m, b.len(), |i, c| b[c][i]);
                    factor.solve_in_place(mat.as_mut());
                    (0..b.len()).map(|c| (0..m).map(|i| mat[(i, c)]).collect()).collect()
                };
                let mut x = solve(&rhs);
                let mut residual = self.residuals(&x, &rhs);
                for _ in 0..MAX_REFINEMENTS {
                    if residual.iter().all(|r| r.1 <= REFINE_ABOVE) {
                        break;
                    }
                    let r: Vec<Vec<f64>> = residual.iter().map(|r| r.0.clone()).collect();
                    let dx = solve(&r);
                    for (xc, dc) in x.iter_mut().zip(&dx) {
                        for (a, d) in xc.iter_mut().zip(dc) {
                            *a += d;
                        }
                    }
                    residual = self.residuals(&x, &rhs);
                }
                let worst = residual.iter().fold(0.0, |m: f64, r| m.max(r.1));
                for (dst, src) in columns.iter_mut().zip(x) {
                    *dst = src;
                }
                Ok(worst)
            }
            None => {
                let max_it = 10 * self.stiffness.n;
                let outcomes = par::map_slice(&rhs, |b| {
                    let mut x = vec![0.0; m];
                    let out = conjugate_gradient(&self.reduced, b, &mut x, CG_TOLERANCE, max_it);
                    (x, out)
                });
                let mut worst: f64 = 0.0;
                for (dst, (x, out)) in columns.iter_mut().zip(outcomes) {
                    worst = worst.max(out.relative_residual);
                    *dst = x;
                }
                Ok(worst)
            }
        }
    }

    fn residuals(&self, x: &[Vec<f64>], b: &[Vec<f64>]) -> Vec<(Vec<f64>, f64)> {
        x.iter()
            .zip(b)
            .map(|(xc, bc)| {
                let ax = self.reduced.mul_vec(xc);
                let r: Vec<f64> = bc.iter().zip(&ax).map(|(p, q)| p - q).collect();
                let rn = r.iter().map(|v| v * v).sum::<f64>().sqrt();
                let bn = bc.iter().map(|v| v * v).sum::<f64>().sqrt();
                let rel = if bn > 0.0 { rn / bn } else { rn };
                (r, rel)
            })
            .collect()
    }

    /// Solves `W x = rhs` on free vertices with constrained vertices set to their targets.
    /// Constrained outputs are copies of the targets.
    pub fn solve(&self, rhs: &[Point], constraints: &ConstraintSet) -> Result<(Vec<Point>, f64)> {
        let n = self.stiffness.n;
        if rhs.len() != n {
            return Err(Error::DimensionMismatch { expected: n, actual: rhs.len() });
        }
        if constraints.index_key() != self.constrained {
            return Err(Error::InvalidParameter(
                "constraint indices do not match the factorized pattern".into(),
            ));
        }
        let mut x = vec![Point::zeros(); n];
        for (&i, t) in constraints.indices().iter().zip(constraints.targets()) {
            x[i] = *t;
        }
        let mut columns: Vec<Vec<f64>> = (0..3)
            .map(|c| {
                self.free
                    .iter()
                    .map(|&i| {
                        let coupling: f64 = self
                            .stiffness
                            .row(i)
                            .filter(|&(j, _)| self.local[j] == usize::MAX)
                            .map(|(j, v)| v * x[j][c])
                            .sum();
                        rhs[i][c] - coupling
                    })
                    .collect()
            })
            .collect();
        let residual = self.solve_reduced(&mut columns)?;
        if !(residual <= RESIDUAL_TOLERANCE) {
            return Err(Error::NonConvergence { residual });
        }
        for (k, &i) in self.free.iter().enumerate() {
            x[i] = Point::new(columns[0][k], columns[1][k], columns[2][k]);
        }
        Ok((x, residual))
    }

    /// Full deformation of `mesh` under `weights` with the given targets.
    pub fn deform(
        &self,
        mesh: &Mesh,
        ops: &DiscreteOperators,
        weights: &WeightField,
        constraints: &ConstraintSet,
    ) -> Result<DeformationSolution> {
        weights.validate()?;
        let rhs = assemble_rhs(mesh, ops, weights)?;
        let (positions, residual_norm) = self.solve(&rhs, constraints)?;
        let constraint_violation = constraints
            .indices()
            .iter()
            .zip(constraints.targets())
            .map(|(&i, t)| (positions[i] - t).norm())
            .fold(0.0, f64::max);
        Ok(DeformationSolution {
            mesh: mesh.with_vertices(positions)?,
            gamma: weights.gamma,
            residual_norm,
            constraint_violation,
        })
    }
}

/// One-off constrained solve. At least one constraint is required to remove the constant
/// null space of `W`.
pub fn solve_poisson(
    mesh: &Mesh,
    ops: &DiscreteOperators,
    weights: &WeightField,
    constraints: &ConstraintSet,
) -> Result<DeformationSolution> {
    if constraints.is_empty() {
        return Err(Error::InvalidParameter(
            "at least one constraint is required to anchor the solve".into(),
        ));
    }
    constraints.validate_for(mesh.vertex_count())?;
    let solver = PoissonSolver::new(ops, constraints.indices(), SolverBackend::Direct)?;
    solver.deform(mesh, ops, weights, constraints)
}
