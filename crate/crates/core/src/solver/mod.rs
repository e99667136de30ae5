//! Curvature-weighted Poisson deformation.
//!
//! For a weight field `w` the right-hand side is the weak divergence of the
//! `w`-scaled face gradients of the input coordinates, and the deformed positions solve
//! `W x̃ = rhs` on free vertices with constrained rows eliminated. With `w ≡ 1` the
//! right-hand side is exactly `W x`, so the input surface is reproduced.

mod cg;
mod constraints;
mod pipeline;
mod poisson;
mod weights;

pub use cg::{conjugate_gradient, CgOutcome};
pub use constraints::ConstraintSet;
pub use pipeline::{caricaturize, Anchors, Caricaturizer, DisplacementTrend};
pub use poisson::{assemble_rhs, solve_poisson, DeformationSolution, PoissonSolver, SolverBackend};
pub use weights::{WeightField, WeightVariant};

/// Exaggeration level used for the global caricature unless configured otherwise.
pub const DEFAULT_GAMMA_F: f64 = 0.25;

/// Relative residual above which a solve is reported as failed.
pub const RESIDUAL_TOLERANCE: f64 = 1e-8;
