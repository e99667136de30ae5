//! Angle-deficit Gaussian curvature.

use std::f64::consts::PI;

use crate::mesh::Mesh;
use crate::operators::DiscreteOperators;
use crate::{Error, Result};

/// Relative stabilisation used when no ε is given: `ε = 1e-6 · max|K|`.
pub const DEFAULT_RELATIVE_EPSILON: f64 = 1e-6;
/// Absolute lower bound on ε.
pub const EPSILON_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct CurvatureField {
    /// Signed Gaussian curvature, angle deficit divided by lumped area.
    pub k: Vec<f64>,
    /// `|K|_ε = sqrt(K² + ε²)`.
    pub k_stab: Vec<f64>,
    /// `ln |K|_ε`.
    pub log_k: Vec<f64>,
    /// Per-vertex angle deficit (2π − Σθ inside, π − Σθ on the boundary).
    pub deficit: Vec<f64>,
    pub epsilon: f64,
}

impl CurvatureField {
    /// `K_∞ = max_v |K|_ε`.
    pub fn k_inf(&self) -> f64 {
        self.k_stab.iter().fold(0.0, |m: f64, &v| m.max(v))
    }

    pub fn total_deficit(&self) -> f64 {
        self.deficit.iter().sum()
    }

    pub fn len(&self) -> usize {
        self.k.len()
    }

    pub fn is_empty(&self) -> bool {
        self.k.is_empty()
    }

    /// Builds a field directly from stabilised magnitudes, for working with weights
    /// detached from a mesh.
    pub fn from_magnitudes(k_stab: Vec<f64>, epsilon: f64) -> Self {
        let log_k = k_stab.iter().map(|v| v.ln()).collect();
        CurvatureField {
            k: k_stab.clone(),
            deficit: vec![0.0; k_stab.len()],
            k_stab,
            log_k,
            epsilon,
        }
    }
}

pub fn angle_deficits(mesh: &Mesh, ops: &DiscreteOperators) -> Vec<f64> {
    let mut angle_sum = vec![0.0; mesh.vertex_count()];
    for (f, fr) in ops.faces.iter().zip(&ops.frames) {
        for k in 0..3 {
            angle_sum[f[k]] += fr.angles[k];
        }
    }
    let boundary = mesh.boundary_mask();
    angle_sum
        .iter()
        .zip(&boundary)
        .map(|(&s, &b)| if b { PI - s } else { 2.0 * PI - s })
        .collect()
}

/// Per-vertex Gaussian curvature with ε-stabilised magnitude and its logarithm.
/// `epsilon = None` selects `max(1e-6 · max|K|, 1e-12)`.
pub fn gaussian_curvature(
    mesh: &Mesh,
    ops: &DiscreteOperators,
    epsilon: Option<f64>,
) -> Result<CurvatureField> {
    if ops.vertex_count() != mesh.vertex_count() {
        return Err(Error::DimensionMismatch {
            expected: mesh.vertex_count(),
            actual: ops.vertex_count(),
        });
    }
    let deficit = angle_deficits(mesh, ops);
    let k: Vec<f64> = deficit
        .iter()
        .zip(&ops.mass)
        .map(|(d, a)| if *a > 0.0 { d / a } else { 0.0 })
        .collect();
    let epsilon = match epsilon {
        Some(e) if e > 0.0 && e.is_finite() => e,
        Some(e) => return Err(Error::InvalidParameter(format!("epsilon must be positive, got {e}"))),
        None => {
            let max_k = k.iter().fold(0.0, |m: f64, v| m.max(v.abs()));
            (DEFAULT_RELATIVE_EPSILON * max_k).max(EPSILON_FLOOR)
        }
    };
    let k_stab: Vec<f64> = k.iter().map(|v| v.hypot(epsilon)).collect();
    let log_k = k_stab.iter().map(|v| v.ln()).collect();
    Ok(CurvatureField {
        k,
        k_stab,
        log_k,
        deficit,
        epsilon,
    })
}
