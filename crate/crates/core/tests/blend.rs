use forge_core::blend::{
    calibrate_poincare, error_curve, evaluate_bound, measure_with, residual_bound, secant_gap,
    secant_remainder_bound, uniform_grid,
};
use forge_core::mesh::synth;
use forge_core::solver::Caricaturizer;
use forge_core::{
    blend, build_operators, gaussian_curvature, measure_blend_error, secant_weight_gap, BlendPair,
    ConstraintSet,
};
use forge_oracles as oracle;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn secant_spot_value_matches_extended_precision() {
    let gap = secant_gap(1.0, 0.125, 0.25);
    let bound = secant_remainder_bound(1.0, 0.125, 0.25);
    assert!((gap - oracle::SPOT_GAP).abs() < 1e-12, "{gap}");
    assert!((bound - oracle::SPOT_BOUND).abs() < 1e-12, "{bound}");
}

#[test]
fn secant_gap_is_nonnegative_and_bounded() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let gf = 0.25;
    for _ in 0..10_000 {
        // |K| spans 1e-8 .. 1e8.
        let l = rng.gen_range(-18.4..18.4);
        let g = rng.gen_range(0.0..=gf);
        let gap = secant_gap(l, g, gf);
        let bound = secant_remainder_bound(l, g, gf);
        let (naive_gap, naive_bound) = oracle::naive_gap_and_bound(l, g, gf);
        assert!(gap >= 0.0, "L={l} γ={g}: {gap}");
        assert!(gap <= bound * (1.0 + 1e-12) + 1e-300, "L={l} γ={g}: {gap} > {bound}");
        assert!((gap - naive_gap).abs() <= 1e-9 * naive_gap.abs().max(1e-6));
        assert!((bound - naive_bound).abs() <= 1e-12 * naive_bound.max(1.0));
    }
}

#[test]
fn gap_field_matches_pointwise_values() {
    let m = synth::bumpy_sphere(2);
    let ops = build_operators(&m).unwrap();
    let curv = gaussian_curvature(&m, &ops, None).unwrap();
    let field = secant_weight_gap(&curv, 0.1, 0.25).unwrap();
    for (i, g) in field.gap.iter().enumerate() {
        assert_eq!(*g, secant_gap(curv.log_k[i], 0.1, 0.25));
        assert!(*g <= field.bound[i]);
    }
    assert!(secant_weight_gap(&curv, 0.3, 0.25).is_err());
}

#[test]
fn blend_errors_vanish_at_the_endpoints() {
    for m in [synth::icosphere(2), synth::face_like(31)] {
        let engine = Caricaturizer::new(m, None).unwrap();
        let grid = uniform_grid(0.25, 11).unwrap();
        let r = measure_with(&engine, 0.25, &grid).unwrap();
        assert_eq!(r.err_linf[0], 0.0);
        assert_eq!(r.err_l2[0], 0.0);
        assert_eq!(r.err_linf[10], 0.0);
        assert_eq!(r.err_l2[10], 0.0);
        assert!(r.err_linf[1..10].iter().all(|e| *e > 0.0));
    }
}

#[test]
fn explicit_constraint_measurement_matches_engine_on_open_mesh() {
    let m = synth::wavy_sheet(20);
    let ops = build_operators(&m).unwrap();
    let curv = gaussian_curvature(&m, &ops, None).unwrap();
    let cs = ConstraintSet::pin(&m, m.boundary_vertices()).unwrap();
    let grid = uniform_grid(0.25, 6).unwrap();
    let a = measure_blend_error(&m, &ops, &curv, 0.25, &grid, &cs).unwrap();
    let b = measure_with(&Caricaturizer::new(m, None).unwrap(), 0.25, &grid).unwrap();
    for (x, y) in a.err_linf.iter().zip(&b.err_linf) {
        assert!((x - y).abs() < 1e-12);
    }
}

#[test]
fn bound_is_zero_at_ends_and_symmetric() {
    let m = synth::bumpy_sphere(2);
    let ops = build_operators(&m).unwrap();
    let curv = gaussian_curvature(&m, &ops, None).unwrap();
    let grid = uniform_grid(0.25, 11).unwrap();
    let b = evaluate_bound(&curv, &ops, &m, 0.25, 1.0, &grid).unwrap();
    assert_eq!(b.bound[0], 0.0);
    assert_eq!(b.bound[10], 0.0);
    for i in 0..5 {
        let (lo, hi) = (b.bound[i], b.bound[10 - i]);
        assert!((lo - hi).abs() <= 1e-12 * lo.max(hi).max(1e-300));
    }
    let mid = residual_bound(1.0, b.log_k_inf, 0.25, 0.125, b.grad_energy);
    assert!((b.bound[5] - mid).abs() <= 1e-12 * mid);
    assert!(evaluate_bound(&curv, &ops, &m, 0.25, 0.0, &grid).is_err());
}

#[test]
fn calibrated_bound_dominates_measured_error_on_icosphere() {
    let engine = Caricaturizer::new(synth::icosphere(2), None).unwrap();
    let report = error_curve(&engine, 0.25, 11, 1.0, true).unwrap();
    assert!(report.calibrated);
    assert!(report.c_p > 0.0);
    for (i, (e, b)) in report.err_l2.iter().zip(&report.bound).enumerate() {
        assert!(e <= b, "sample {i}: measured {e:e} > bound {b:e}");
    }
}

#[test]
fn poincare_constant_matches_unit_square_eigenvalue() {
    // Dirichlet Laplacian on the unit square: λ₁ = 2π², so C_P → 1/(π√2).
    let m = synth::flat_grid(41);
    let engine = Caricaturizer::new(m, None).unwrap();
    let cp = calibrate_poincare(engine.solver(), &engine.ops).unwrap();
    let exact = 1.0 / (std::f64::consts::PI * 2f64.sqrt());
    assert!((cp - exact).abs() < 0.01 * exact, "{cp} vs {exact}");
}

#[test]
fn blend_is_the_vertexwise_interpolant() {
    let base = synth::bumpy_sphere(1);
    let target = caricaturize_full(&base);
    let pair = BlendPair::new(base.clone(), target.clone(), 0.25).unwrap();
    let b = blend(&pair, 0.1).unwrap();
    for i in 0..base.vertex_count() {
        let expect = base.vertices[i] * 0.6 + target.vertices[i] * 0.4;
        assert!((b.vertices[i] - expect).norm() < 1e-15);
    }
}

fn caricaturize_full(m: &forge_core::Mesh) -> forge_core::Mesh {
    forge_core::caricaturize(m, 0.25, 0.25, None, None).unwrap().mesh
}

#[test]
fn error_curve_rejects_short_grids() {
    let engine = Caricaturizer::new(synth::icosphere(1), None).unwrap();
    assert!(error_curve(&engine, 0.25, 2, 1.0, false).is_err());
    let report = error_curve(&engine, 0.25, 3, 1.0, false).unwrap();
    let json = serde_json::to_value(&report).unwrap();
    for key in ["gamma_f", "gammas", "err_linf", "err_l2", "bound", "C_P", "K_inf"] {
        assert!(json.get(key).is_some(), "{key}");
    }
}
