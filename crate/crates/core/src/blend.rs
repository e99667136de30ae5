//! Vertex-wise blending between the rest surface and the γ_f exaggeration, the measured
//! residual against exact solves, and the analytic secant bound.
//!
//! The blend at α = γ/γ_f solves the Poisson problem whose weight is the secant
//! `w_sec = 1 + α(|K|^{γ_f} − 1)` instead of `|K|^γ`. The gap `w_sec − w` is non-negative
//! (convexity of γ ↦ e^{γL}), vanishes at both ends and is at most
//! `γ(γ_f−γ)/2 · L² · max(1, e^{γ_f L})`.

use serde::{Deserialize, Serialize};

use crate::curvature::CurvatureField;
use crate::mesh::{bbox_diagonal, Mesh, Point};
use crate::operators::DiscreteOperators;
use crate::solver::{
    Caricaturizer, ConstraintSet, DeformationSolution, PoissonSolver, SolverBackend, WeightField,
};
use crate::{par, Error, Result};

/// Rest surface, its exaggeration at `gamma_f`, and `gamma_f` itself.
#[derive(Debug, Clone)]
pub struct BlendPair {
    pub base: Mesh,
    pub target: Mesh,
    pub gamma_f: f64,
}

impl BlendPair {
    pub fn new(base: Mesh, target: Mesh, gamma_f: f64) -> Result<Self> {
        base.ensure_compatible(&target)?;
        if !(gamma_f > 0.0 && gamma_f.is_finite()) {
            return Err(Error::InvalidParameter(format!("gamma_f must be positive, got {gamma_f}")));
        }
        Ok(BlendPair { base, target, gamma_f })
    }

    pub fn blend(&self, gamma: f64) -> Result<Mesh> {
        blend(self, gamma)
    }

    /// Blended positions only; `alpha = 0` and `alpha = 1` return exact copies.
    pub fn blend_positions(&self, gamma: f64) -> Result<Vec<Point>> {
        if !(0.0..=self.gamma_f).contains(&gamma) {
            return Err(Error::InvalidParameter(format!(
                "gamma {gamma} outside [0, {}]",
                self.gamma_f
            )));
        }
        if gamma == 0.0 {
            return Ok(self.base.vertices.clone());
        }
        if gamma == self.gamma_f {
            return Ok(self.target.vertices.clone());
        }
        let alpha = gamma / self.gamma_f;
        Ok(self
            .base
            .vertices
            .iter()
            .zip(&self.target.vertices)
            .map(|(b, t)| b * (1.0 - alpha) + t * alpha)
            .collect())
    }
}

/// `S_blend(γ) = (1−α) S_0 + α S_{γ_f}` with `α = γ/γ_f`; no linear solve.
pub fn blend(pair: &BlendPair, gamma: f64) -> Result<Mesh> {
    pair.base.with_vertices(pair.blend_positions(gamma)?)
}

/// Secant weight gap `w_sec − w` for one vertex with `L = ln|K|_ε`.
pub fn secant_gap(log_k: f64, gamma: f64, gamma_f: f64) -> f64 {
    let alpha = gamma / gamma_f;
    // expm1 keeps precision near the endpoints where both terms approach 1.
    alpha * (gamma_f * log_k).exp_m1() - (gamma * log_k).exp_m1()
}

/// Interpolation-remainder bound `γ(γ_f−γ)/2 · L² · max(1, e^{γ_f L})`.
pub fn secant_remainder_bound(log_k: f64, gamma: f64, gamma_f: f64) -> f64 {
    0.5 * gamma * (gamma_f - gamma) * log_k * log_k * (gamma_f * log_k).exp().max(1.0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct GapField {
    pub gamma: f64,
    pub gap: Vec<f64>,
    pub max: f64,
    /// Per-vertex remainder bound at the same γ.
    pub bound: Vec<f64>,
}

pub fn secant_weight_gap(curv: &CurvatureField, gamma: f64, gamma_f: f64) -> Result<GapField> {
    if !(gamma_f > 0.0) || !(0.0..=gamma_f).contains(&gamma) {
        return Err(Error::InvalidParameter(format!(
            "need 0 <= gamma <= gamma_f with gamma_f > 0, got gamma={gamma}, gamma_f={gamma_f}"
        )));
    }
    let gap: Vec<f64> = curv.log_k.iter().map(|&l| secant_gap(l, gamma, gamma_f)).collect();
    let bound = curv
        .log_k
        .iter()
        .map(|&l| secant_remainder_bound(l, gamma, gamma_f))
        .collect();
    let max = gap.iter().fold(0.0, |m: f64, &g| m.max(g));
    Ok(GapField { gamma, gap, max, bound })
}

/// `n` evenly spaced samples over `[0, γ_f]`, endpoints included exactly.
pub fn uniform_grid(gamma_f: f64, samples: usize) -> Result<Vec<f64>> {
    if samples < 2 {
        return Err(Error::InvalidParameter("grid needs at least 2 samples".into()));
    }
    Ok((0..samples)
        .map(|i| gamma_f * i as f64 / (samples - 1) as f64)
        .collect())
}

/// Blend residual per sampled γ, normalised by the rest bounding-box diagonal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlendReport {
    pub gamma_f: f64,
    pub gammas: Vec<f64>,
    /// `max_v |S_blend(γ)_v − S_γ,v| / diag`.
    pub err_linf: Vec<f64>,
    /// `sqrt(Σ_v A_vv |S_blend(γ)_v − S_γ,v|²) / diag`.
    pub err_l2: Vec<f64>,
    pub argmax_gamma: f64,
    pub bbox_diagonal: f64,
}

impl BlendReport {
    pub fn peak_index(&self) -> usize {
        self.err_linf
            .iter()
            .enumerate()
            .fold((0, f64::MIN), |best, (i, &e)| if e > best.1 { (i, e) } else { best })
            .0
    }

    pub fn peak_linf(&self) -> f64 {
        self.err_linf[self.peak_index()]
    }
}

fn validate_grid(grid: &[f64], gamma_f: f64) -> Result<()> {
    if !(gamma_f > 0.0) {
        return Err(Error::InvalidParameter(format!("gamma_f must be positive, got {gamma_f}")));
    }
    if let Some(g) = grid.iter().find(|g| !(0.0..=gamma_f).contains(*g)) {
        return Err(Error::InvalidParameter(format!("grid value {g} outside [0, {gamma_f}]")));
    }
    if !grid.contains(&0.0) || !grid.contains(&gamma_f) {
        return Err(Error::InvalidParameter("grid must include 0 and gamma_f".into()));
    }
    Ok(())
}

fn report_from<F>(base: &Mesh, mass: &[f64], gamma_f: f64, grid: &[f64], exact: F) -> Result<BlendReport>
where
    F: Fn(f64) -> Result<DeformationSolution> + Sync + Send,
{
    validate_grid(grid, gamma_f)?;
    let diag = bbox_diagonal(base)?;
    let target = exact(gamma_f)?.mesh;
    let pair = BlendPair::new(base.clone(), target, gamma_f)?;
    let errors = par::try_map_slice(grid, |&gamma| -> Result<(f64, f64)> {
        if gamma == 0.0 || gamma == gamma_f {
            // Both sides are the same stored surface.
            let blended = pair.blend_positions(gamma)?;
            let reference = if gamma == 0.0 { &pair.base } else { &pair.target };
            return Ok(residual_norms(&blended, &reference.vertices, mass));
        }
        let exact = exact(gamma)?;
        let blended = pair.blend_positions(gamma)?;
        Ok(residual_norms(&blended, &exact.mesh.vertices, mass))
    })?;
    let (err_linf, err_l2): (Vec<f64>, Vec<f64>) = errors
        .into_iter()
        .map(|(linf, l2)| (linf / diag, l2 / diag))
        .unzip();
    let mut report = BlendReport {
        gamma_f,
        gammas: grid.to_vec(),
        err_linf,
        err_l2,
        argmax_gamma: 0.0,
        bbox_diagonal: diag,
    };
    report.argmax_gamma = report.gammas[report.peak_index()];
    Ok(report)
}

fn residual_norms(a: &[Point], b: &[Point], mass: &[f64]) -> (f64, f64) {
    let mut linf: f64 = 0.0;
    let mut l2 = 0.0;
    for ((p, q), m) in a.iter().zip(b).zip(mass) {
        let d = (p - q).norm();
        linf = linf.max(d);
        l2 += m * d * d;
    }
    (linf, l2.sqrt())
}

/// Exact solves at every grid γ against the blend of `S_0 = mesh` and `S_{γ_f}`, all with
/// the same constraint set (one factorization).
pub fn measure_blend_error(
    mesh: &Mesh,
    ops: &DiscreteOperators,
    curv: &CurvatureField,
    gamma_f: f64,
    grid: &[f64],
    constraints: &ConstraintSet,
) -> Result<BlendReport> {
    if constraints.is_empty() {
        return Err(Error::InvalidParameter("at least one constraint is required".into()));
    }
    constraints.validate_for(mesh.vertex_count())?;
    let solver = PoissonSolver::new(ops, constraints.indices(), SolverBackend::Direct)?;
    report_from(mesh, &ops.mass, gamma_f, grid, |gamma| {
        solver.deform(mesh, ops, &WeightField::exponential(curv, gamma), constraints)
    })
}

/// [`measure_blend_error`] through a prepared engine, reusing its anchors and factorization.
pub fn measure_with(engine: &Caricaturizer, gamma_f: f64, grid: &[f64]) -> Result<BlendReport> {
    report_from(&engine.base, &engine.ops.mass, gamma_f, grid, |gamma| engine.solve(gamma))
}

/// Terms of the residual bound `C_P (ln K_∞)² e^{max(0, γ_f ln K_∞)} γ(γ_f−γ) ‖∇S_0‖`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundEstimate {
    pub k_inf: f64,
    pub log_k_inf: f64,
    pub c_p: f64,
    pub grad_energy: f64,
    pub gamma_f: f64,
    pub gammas: Vec<f64>,
    /// Unnormalised bound per grid γ (same units as the A-weighted L² residual).
    pub bound: Vec<f64>,
    /// `max_v (w_sec − w)` per grid γ.
    pub secant_gap_max: Vec<f64>,
}

/// The closed-form bound at one γ.
pub fn residual_bound(c_p: f64, log_k_inf: f64, gamma_f: f64, gamma: f64, grad_energy: f64) -> f64 {
    let c_tilde = c_p * log_k_inf * log_k_inf * (gamma_f * log_k_inf).max(0.0).exp();
    c_tilde * gamma * (gamma_f - gamma) * grad_energy
}

pub fn evaluate_bound(
    curv: &CurvatureField,
    ops: &DiscreteOperators,
    base: &Mesh,
    gamma_f: f64,
    c_p: f64,
    grid: &[f64],
) -> Result<BoundEstimate> {
    if !(c_p > 0.0) {
        return Err(Error::InvalidParameter(format!("C_P must be positive, got {c_p}")));
    }
    if !(gamma_f > 0.0) {
        return Err(Error::InvalidParameter(format!("gamma_f must be positive, got {gamma_f}")));
    }
    let k_inf = curv.k_inf();
    let log_k_inf = k_inf.ln();
    let grad_energy = ops.gradient_energy(base);
    let bound = grid
        .iter()
        .map(|&g| residual_bound(c_p, log_k_inf, gamma_f, g, grad_energy))
        .collect();
    let secant_gap_max = grid
        .iter()
        .map(|&g| {
            curv.log_k
                .iter()
                .map(|&l| secant_gap(l, g, gamma_f).abs())
                .fold(0.0, f64::max)
        })
        .collect();
    Ok(BoundEstimate {
        k_inf,
        log_k_inf,
        c_p,
        grad_energy,
        gamma_f,
        gammas: grid.to_vec(),
        bound,
        secant_gap_max,
    })
}

/// Poincaré constant for fields vanishing on the constrained vertices:
/// `C_P = λ_min^{-1/2}` with `λ_min` the smallest eigenvalue of `W_FF y = λ A_FF y`,
/// found by inverse iteration on the cached factorization.
pub fn calibrate_poincare(solver: &PoissonSolver, ops: &DiscreteOperators) -> Result<f64> {
    let free = solver.free();
    if free.is_empty() {
        return Err(Error::InvalidParameter("no free vertices to calibrate on".into()));
    }
    let mass: Vec<f64> = free.iter().map(|&i| ops.mass[i]).collect();
    let w = solver.reduced_matrix();
    let mut x = vec![1.0; free.len()];
    let mut lambda = f64::INFINITY;
    for _ in 0..1000 {
        let mut col = vec![x.iter().zip(&mass).map(|(a, m)| a * m).collect::<Vec<f64>>()];
        solver.solve_reduced(&mut col)?;
        let y = col.pop().unwrap();
        let a_norm = y.iter().zip(&mass).map(|(v, m)| m * v * v).sum::<f64>().sqrt();
        x = y.iter().map(|v| v / a_norm).collect();
        let wx = w.mul_vec(&x);
        let next: f64 = x.iter().zip(&wx).map(|(a, b)| a * b).sum();
        let done = (next - lambda).abs() <= 1e-13 * next;
        lambda = next;
        if done {
            break;
        }
    }
    if !(lambda > 0.0) {
        return Err(Error::SingularSystem("non-positive Dirichlet eigenvalue".into()));
    }
    Ok(lambda.sqrt().recip())
}

/// JSON written by `forge error-curve` and served by the error-curve endpoint.
/// `err_*` and `bound` are divided by the rest bounding-box diagonal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorCurveReport {
    pub gamma_f: f64,
    pub gammas: Vec<f64>,
    pub err_linf: Vec<f64>,
    pub err_l2: Vec<f64>,
    pub bound: Vec<f64>,
    #[serde(rename = "C_P")]
    pub c_p: f64,
    #[serde(rename = "K_inf")]
    pub k_inf: f64,
    pub argmax_gamma: f64,
    pub bbox_diagonal: f64,
    pub calibrated: bool,
}

impl ErrorCurveReport {
    pub fn new(report: &BlendReport, bound: &BoundEstimate, calibrated: bool) -> Self {
        ErrorCurveReport {
            gamma_f: report.gamma_f,
            gammas: report.gammas.clone(),
            err_linf: report.err_linf.clone(),
            err_l2: report.err_l2.clone(),
            bound: bound.bound.iter().map(|b| b / report.bbox_diagonal).collect(),
            c_p: bound.c_p,
            k_inf: bound.k_inf,
            argmax_gamma: report.argmax_gamma,
            bbox_diagonal: report.bbox_diagonal,
            calibrated,
        }
    }
}

/// Error curve plus bound for a prepared engine; `calibrate` replaces `c_p` with the
/// inverse-iteration estimate.
pub fn error_curve(
    engine: &Caricaturizer,
    gamma_f: f64,
    samples: usize,
    c_p: f64,
    calibrate: bool,
) -> Result<ErrorCurveReport> {
    if samples < 3 {
        return Err(Error::InvalidParameter("samples must be >= 3".into()));
    }
    let grid = uniform_grid(gamma_f, samples)?;
    let report = measure_with(engine, gamma_f, &grid)?;
    let c_p = if calibrate {
        calibrate_poincare(engine.solver(), &engine.ops)?
    } else {
        c_p
    };
    let bound = evaluate_bound(&engine.curvature, &engine.ops, &engine.base, gamma_f, c_p, &grid)?;
    Ok(ErrorCurveReport::new(&report, &bound, calibrate))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::synth;

    fn pair() -> BlendPair {
        let base = synth::icosphere(1);
        let target = base.scaled(1.5).translated(Point::new(0.1, -0.2, 0.3));
        BlendPair::new(base, target, 0.25).unwrap()
    }

    #[test]
    fn blend_endpoints_bitwise() {
        let p = pair();
        assert_eq!(blend(&p, 0.0).unwrap().vertices, p.base.vertices);
        assert_eq!(blend(&p, 0.25).unwrap().vertices, p.target.vertices);
    }

    #[test]
    fn blend_midpoint() {
        let p = pair();
        let mid = blend(&p, 0.125).unwrap();
        for ((m, b), t) in mid.vertices.iter().zip(&p.base.vertices).zip(&p.target.vertices) {
            assert_eq!(*m, (b + t) * 0.5);
        }
    }

    #[test]
    fn blend_rejects_out_of_range_and_incompatible() {
        let p = pair();
        assert!(blend(&p, -0.01).is_err());
        assert!(blend(&p, 0.3).is_err());
        let other = synth::icosphere(2);
        assert!(BlendPair::new(p.base.clone(), other, 0.25).is_err());
        assert!(BlendPair::new(p.base.clone(), p.target.clone(), 0.0).is_err());
    }

    #[test]
    fn gap_vanishes_at_endpoints() {
        let c = CurvatureField::from_magnitudes(vec![1e-6, 0.3, 1.0, 7.0, 1e5], 1e-6);
        for g in [0.0, 0.25] {
            let gap = secant_weight_gap(&c, g, 0.25).unwrap();
            assert!(gap.gap.iter().all(|v| *v == 0.0), "{:?}", gap.gap);
        }
    }

    #[test]
    fn flat_region_uses_unit_branch() {
        // L ≪ 0: e^{γ_f L} < 1 so the bound reduces to γ_f²/8 · L².
        let l = (1e-6f64).ln();
        let gf = 0.25;
        let gap = secant_gap(l, gf / 2.0, gf);
        let bound = secant_remainder_bound(l, gf / 2.0, gf);
        assert!((bound - gf * gf / 8.0 * l * l).abs() < 1e-15 * bound);
        assert!(gap >= 0.0 && gap <= bound);
    }

    #[test]
    fn bound_shape() {
        let (cp, lk, gf, ge) = (1.3, 2.0, 0.25, 4.0);
        assert_eq!(residual_bound(cp, lk, gf, 0.0, ge), 0.0);
        assert_eq!(residual_bound(cp, lk, gf, gf, ge), 0.0);
        for g in [0.01, 0.05, 0.1] {
            let a = residual_bound(cp, lk, gf, gf / 2.0 - g, ge);
            let b = residual_bound(cp, lk, gf, gf / 2.0 + g, ge);
            assert!((a - b).abs() < 1e-12 * a);
        }
    }

    #[test]
    fn grid_validation() {
        assert!(uniform_grid(0.25, 1).is_err());
        let g = uniform_grid(0.25, 11).unwrap();
        assert_eq!(g[0], 0.0);
        assert_eq!(g[5], 0.125);
        assert_eq!(g[10], 0.25);
        assert!(validate_grid(&[0.0, 0.1], 0.25).is_err());
        assert!(validate_grid(&[0.0, 0.3, 0.25], 0.25).is_err());
    }
}
