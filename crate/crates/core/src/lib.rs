//! Curvature-driven surface caricaturization.
//!
//! The crate is organised bottom-up:
//!
//! - [`mesh`]: triangle meshes, OBJ/PLY input, region labels and synthetic test surfaces
//! - [`operators`]: cotangent stiffness, lumped mass and face gradient/divergence assembly
//! - [`curvature`]: angle-deficit Gaussian curvature with ε-stabilised magnitude
//! - [`solver`]: curvature-weighted Poisson deformation with cached sparse factorizations
//! - [`blend`]: vertex-wise blending between the rest and exaggerated surfaces, measured
//!   residuals and the analytic secant error bound
//! - [`lat`]: per-triangle affine warping of images into pseudo ground truth with validity masks
//!
//! Data-parallel loops (face assembly, per-γ solves, raster rows) run on rayon when the
//! `parallel` feature is enabled (default) and fall back to plain iterators otherwise.

// `!(x > 0.0)` is used deliberately so NaN is rejected with the invalid values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod blend;
pub mod curvature;
mod error;
pub mod lat;
pub mod mesh;
pub mod operators;
mod par;
pub mod solver;

pub use error::{Error, Result};

pub use blend::{
    blend, error_curve, evaluate_bound, measure_blend_error, secant_weight_gap, BlendPair,
    BlendReport, BoundEstimate, ErrorCurveReport, GapField,
};
pub use curvature::{gaussian_curvature, CurvatureField};
pub use mesh::{bbox_diagonal, load_mesh, Mesh, MeshFormat, RegionLabels};
pub use operators::{build_operators, DiscreteOperators};
pub use solver::{
    assemble_rhs, caricaturize, solve_poisson, ConstraintSet, DeformationSolution, PoissonSolver,
    WeightField, WeightVariant, DEFAULT_GAMMA_F,
};
