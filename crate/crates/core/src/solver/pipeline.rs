use std::collections::BTreeSet;

use super::{ConstraintSet, DeformationSolution, PoissonSolver, SolverBackend, WeightField};
use crate::curvature::{gaussian_curvature, CurvatureField};
use crate::mesh::{Mesh, Point};
use crate::operators::{build_operators, DiscreteOperators};
use crate::{Error, Result};

/// Constraint pattern plus the components whose position is fixed only up to translation.
#[derive(Debug, Clone)]
pub struct Anchors {
    pub constraints: ConstraintSet,
    /// Component ids (see [`Mesh::connected_components`]) anchored by a single vertex; their
    /// area-weighted centroid is restored after each solve.
    pub realign: Vec<usize>,
    pub component_of: Vec<usize>,
}

impl Anchors {
    /// Boundary ring for open components; the vertex nearest the centroid for closed ones.
    pub fn default_for(mesh: &Mesh) -> Result<Self> {
        Self::build(mesh, &BTreeSet::new())
    }

    /// Pins every vertex outside `region` to its rest position. Components left without
    /// any pinned vertex fall back to the default anchors.
    pub fn outside_region(mesh: &Mesh, region: &BTreeSet<usize>) -> Result<Self> {
        if region.is_empty() {
            return Err(Error::EmptyRegion);
        }
        Self::build(mesh, region)
    }

    fn build(mesh: &Mesh, region: &BTreeSet<usize>) -> Result<Self> {
        let n = mesh.vertex_count();
        if n == 0 {
            return Err(Error::EmptyMesh);
        }
        let (component_of, count) = mesh.connected_components();
        let boundary = mesh.boundary_mask();
        let mut pinned = vec![false; n];
        if !region.is_empty() {
            for (v, p) in pinned.iter_mut().enumerate() {
                *p = !region.contains(&v);
            }
        }
        let mut has_pin = vec![false; count];
        let mut has_boundary = vec![false; count];
        for v in 0..n {
            has_pin[component_of[v]] |= pinned[v];
            has_boundary[component_of[v]] |= boundary[v];
        }
        let mut realign = Vec::new();
        let mut sums = vec![(Point::zeros(), 0usize); count];
        for v in 0..n {
            let s = &mut sums[component_of[v]];
            s.0 += mesh.vertices[v];
            s.1 += 1;
        }
        let mut nearest: Vec<Option<(f64, usize)>> = vec![None; count];
        for v in 0..n {
            let c = component_of[v];
            if has_pin[c] {
                continue;
            }
            if has_boundary[c] {
                pinned[v] |= boundary[v];
            } else {
                let centroid = sums[c].0 / sums[c].1 as f64;
                let d = (mesh.vertices[v] - centroid).norm_squared();
                if nearest[c].is_none_or(|(best, _)| d < best) {
                    nearest[c] = Some((d, v));
                }
            }
        }
        for (c, slot) in nearest.iter().enumerate() {
            if let Some((_, v)) = slot {
                pinned[*v] = true;
                realign.push(c);
            }
        }
        let indices: Vec<usize> = (0..n).filter(|&v| pinned[v]).collect();
        Ok(Anchors {
            constraints: ConstraintSet::pin(mesh, indices)?,
            realign,
            component_of,
        })
    }

    /// Restores the rest-mass-weighted centroid of each single-anchored component.
    pub fn realign_positions(&self, base: &Mesh, mass: &[f64], positions: &mut [Point]) {
        for &c in &self.realign {
            let mut shift = Point::zeros();
            let mut total = 0.0;
            for (v, p) in positions.iter().enumerate() {
                if self.component_of[v] == c {
                    shift += (base.vertices[v] - p) * mass[v];
                    total += mass[v];
                }
            }
            if total > 0.0 {
                shift /= total;
                for (v, p) in positions.iter_mut().enumerate() {
                    if self.component_of[v] == c {
                        *p += shift;
                    }
                }
            }
        }
    }

    /// Adds explicit targets on top of these anchors; an explicit target replaces the rest
    /// pin at the same index. Components touched by `extra` are no longer realigned.
    pub fn with_overrides(&self, extra: &ConstraintSet) -> Result<Self> {
        extra.validate_for(self.component_of.len())?;
        let overridden: BTreeSet<usize> = extra.indices().iter().copied().collect();
        let (mut indices, mut targets) = (Vec::new(), Vec::new());
        for (&i, t) in self.constraints.indices().iter().zip(self.constraints.targets()) {
            if !overridden.contains(&i) {
                indices.push(i);
                targets.push(*t);
            }
        }
        let mut constraints = ConstraintSet::new(indices, targets)?;
        constraints.extend(extra)?;
        let touched: BTreeSet<usize> = overridden.iter().map(|&i| self.component_of[i]).collect();
        Ok(Anchors {
            constraints,
            realign: self.realign.iter().copied().filter(|c| !touched.contains(c)).collect(),
            component_of: self.component_of.clone(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct DisplacementTrend {
    pub gammas: Vec<f64>,
    pub max_displacement: Vec<f64>,
    pub monotone: bool,
}

/// Rest mesh with its operators, curvature, anchors and cached factorization.
#[derive(Debug)]
pub struct Caricaturizer {
    pub base: Mesh,
    pub ops: DiscreteOperators,
    pub curvature: CurvatureField,
    pub anchors: Anchors,
    solver: PoissonSolver,
}

impl Caricaturizer {
    /// Default anchoring for the whole surface.
    pub fn new(base: Mesh, epsilon: Option<f64>) -> Result<Self> {
        let ops = build_operators(&base)?;
        let curvature = gaussian_curvature(&base, &ops, epsilon)?;
        let anchors = Anchors::default_for(&base)?;
        Self::from_parts(base, ops, curvature, anchors)
    }

    /// Only the named regions deform; everything else is pinned.
    pub fn localized<S: AsRef<str>>(base: Mesh, epsilon: Option<f64>, regions: &[S]) -> Result<Self> {
        let region = base.labels.union(regions)?;
        let ops = build_operators(&base)?;
        let curvature = gaussian_curvature(&base, &ops, epsilon)?;
        let anchors = Anchors::outside_region(&base, &region)?;
        Self::from_parts(base, ops, curvature, anchors)
    }

    pub fn from_parts(
        base: Mesh,
        ops: DiscreteOperators,
        curvature: CurvatureField,
        anchors: Anchors,
    ) -> Result<Self> {
        let solver = PoissonSolver::new(&ops, anchors.constraints.indices(), SolverBackend::Direct)?;
        Ok(Caricaturizer {
            base,
            ops,
            curvature,
            anchors,
            solver,
        })
    }

    /// Same rest data with a different constraint pattern (new factorization).
    pub fn with_anchors(&self, anchors: Anchors) -> Result<Self> {
        Self::from_parts(self.base.clone(), self.ops.clone(), self.curvature.clone(), anchors)
    }

    pub fn solver(&self) -> &PoissonSolver {
        &self.solver
    }

    /// Exaggeration at level γ with `w = |K|_ε^γ`. γ = 0 returns the rest mesh unchanged.
    pub fn solve(&self, gamma: f64) -> Result<DeformationSolution> {
        if !(gamma >= 0.0 && gamma.is_finite()) {
            return Err(Error::InvalidParameter(format!("gamma must be non-negative, got {gamma}")));
        }
        if gamma == 0.0 {
            return Ok(DeformationSolution {
                mesh: self.base.clone(),
                gamma,
                residual_norm: 0.0,
                constraint_violation: 0.0,
            });
        }
        self.solve_weights(&WeightField::exponential(&self.curvature, gamma))
    }

    /// Max vertex displacement from the rest mesh at each γ, and whether it never decreases.
    /// Reported, not enforced: the trend is empirical.
    pub fn displacement_trend(&self, gammas: &[f64]) -> Result<DisplacementTrend> {
        let max_displacement = crate::par::try_map_slice(gammas, |&g| -> Result<f64> {
            let sol = self.solve(g)?;
            Ok(sol
                .mesh
                .vertices
                .iter()
                .zip(&self.base.vertices)
                .map(|(a, b)| (a - b).norm())
                .fold(0.0, f64::max))
        })?;
        let monotone = max_displacement.windows(2).all(|w| w[1] >= w[0]);
        Ok(DisplacementTrend {
            gammas: gammas.to_vec(),
            max_displacement,
            monotone,
        })
    }

    pub fn solve_weights(&self, weights: &WeightField) -> Result<DeformationSolution> {
        let mut sol = self
            .solver
            .deform(&self.base, &self.ops, weights, &self.anchors.constraints)?;
        if !self.anchors.realign.is_empty() {
            let mut positions = std::mem::take(&mut sol.mesh.vertices);
            self.anchors
                .realign_positions(&self.base, &self.ops.mass, &mut positions);
            sol.mesh.vertices = positions;
        }
        Ok(sol)
    }
}

/// Curvature → weights(γ) → anchors → constrained solve.
///
/// With `region`, only those labelled vertices move; otherwise the boundary ring is pinned
/// (open surfaces) or a single centroid-nearest vertex is pinned and the centroid restored
/// (closed surfaces).
pub fn caricaturize(
    mesh: &Mesh,
    gamma: f64,
    gamma_f: f64,
    region: Option<&[String]>,
    epsilon: Option<f64>,
) -> Result<DeformationSolution> {
    if !(gamma_f > 0.0) {
        return Err(Error::InvalidParameter(format!("gamma_f must be positive, got {gamma_f}")));
    }
    if !(0.0..=gamma_f).contains(&gamma) {
        return Err(Error::InvalidParameter(format!(
            "gamma {gamma} outside [0, {gamma_f}]"
        )));
    }
    if let Some(names) = region {
        // Validate before the γ = 0 short-circuit so bad requests fail consistently.
        if mesh.labels.union(names)?.is_empty() {
            return Err(Error::EmptyRegion);
        }
    }
    if gamma == 0.0 {
        return Ok(DeformationSolution {
            mesh: mesh.clone(),
            gamma,
            residual_norm: 0.0,
            constraint_violation: 0.0,
        });
    }
    let engine = match region {
        Some(names) => Caricaturizer::localized(mesh.clone(), epsilon, names)?,
        None => Caricaturizer::new(mesh.clone(), epsilon)?,
    };
    engine.solve(gamma)
}
