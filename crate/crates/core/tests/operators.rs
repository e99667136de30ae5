use std::f64::consts::PI;
use std::time::Instant;

use forge_core::mesh::synth;
use forge_core::{build_operators, gaussian_curvature, Mesh};
use forge_oracles as oracle;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn meshes() -> Vec<(&'static str, Mesh)> {
    vec![
        ("icosphere-642", synth::icosphere(3)),
        ("bumpy-sphere", synth::bumpy_sphere(3)),
        ("wavy-sheet", synth::wavy_sheet(14)),
        ("face-like", synth::face_like(21)),
    ]
}

#[test]
fn gauss_bonnet_on_three_icosphere_resolutions() {
    for k in [2, 3, 4] {
        let m = synth::icosphere(k);
        let start = Instant::now();
        let ops = build_operators(&m).unwrap();
        let c = gaussian_curvature(&m, &ops, None).unwrap();
        let elapsed = start.elapsed();
        let err = (c.total_deficit() - 4.0 * PI).abs();
        assert!(err < 1e-9 * m.vertex_count() as f64, "k={k}: error {err:e}");
        assert!(elapsed.as_secs_f64() < 1.0);
        let naive = oracle::total_angle_deficit(&m.vertices, &m.faces, &m.boundary_mask());
        assert!((naive - c.total_deficit()).abs() < 1e-9);
    }
}

#[test]
fn open_surface_total_deficit_is_two_pi() {
    for m in [synth::wavy_sheet(20), synth::face_like(31)] {
        let ops = build_operators(&m).unwrap();
        let c = gaussian_curvature(&m, &ops, None).unwrap();
        assert!((c.total_deficit() - 2.0 * PI).abs() < 1e-9);
    }
}

#[test]
fn sphere_curvature_converges_to_one() {
    let mut last = f64::INFINITY;
    for k in [2, 3, 4] {
        let m = synth::icosphere(k);
        let ops = build_operators(&m).unwrap();
        let c = gaussian_curvature(&m, &ops, None).unwrap();
        let worst = c.k.iter().map(|k| (k - 1.0).abs()).fold(0.0, f64::max);
        assert!(worst < last, "no refinement gain at k={k}");
        last = worst;
        let area: f64 = ops.mass.iter().sum();
        assert!((area - 4.0 * PI).abs() < 0.02 * 4.0 * PI || k < 4);
    }
    assert!(last < 0.05, "2562-vertex icosphere: max |K − 1| = {last}");
}

#[test]
fn stiffness_matches_dense_acos_assembly() {
    for (name, m) in meshes().into_iter().take(3) {
        let ops = build_operators(&m).unwrap();
        let dense = oracle::dense_stiffness(&m.vertices, &m.faces);
        let n = m.vertex_count();
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                worst = worst.max((ops.stiffness.get(i, j) - dense[(i, j)]).abs());
            }
        }
        assert!(worst < 1e-10 * ops.stiffness.max_abs(), "{name}: {worst:e}");
    }
}

#[test]
fn face_gradients_reproduce_stiffness_inner_product() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for (name, m) in meshes() {
        let ops = build_operators(&m).unwrap();
        let n = m.vertex_count();
        for _ in 0..100 {
            let u: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let v: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let lhs = ops.face_inner(&ops.gradient(&u), &ops.gradient(&v));
            let wv = ops.stiffness.mul_vec(&v);
            let rhs: f64 = u.iter().zip(&wv).map(|(a, b)| a * b).sum();
            let scale = lhs.abs().max(rhs.abs()).max(1e-300);
            assert!((lhs - rhs).abs() <= 1e-10 * scale, "{name}: {lhs} vs {rhs}");
        }
        // Independent gradient construction on a few pairs.
        let u: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let v: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let naive = oracle::dirichlet_inner(&m.vertices, &m.faces, &u, &v);
        let ours = ops.face_inner(&ops.gradient(&u), &ops.gradient(&v));
        assert!((naive - ours).abs() <= 1e-9 * naive.abs().max(1.0), "{name}");
    }
}

#[test]
fn divergence_is_negative_adjoint_of_gradient() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let m = synth::bumpy_sphere(2);
    let ops = build_operators(&m).unwrap();
    let u: Vec<f64> = (0..m.vertex_count()).map(|_| rng.gen()).collect();
    let div = ops.divergence(&ops.gradient(&u));
    let wu = ops.stiffness.mul_vec(&u);
    for (d, w) in div.iter().zip(&wu) {
        assert!((d + w).abs() < 1e-10 * ops.stiffness.max_abs());
    }
}

#[test]
fn operators_are_translation_invariant_and_scale_covariant() {
    let m = synth::bumpy_sphere(2);
    let ops = build_operators(&m).unwrap();
    let curv = gaussian_curvature(&m, &ops, Some(1e-9)).unwrap();
    let s = 3.0;
    let moved = m.translated(nalgebra::Vector3::new(4.0, -2.0, 9.0)).scaled(s);
    let ops2 = build_operators(&moved).unwrap();
    let curv2 = gaussian_curvature(&moved, &ops2, Some(1e-9 / (s * s))).unwrap();
    for i in 0..m.vertex_count() {
        assert!((ops2.mass[i] - s * s * ops.mass[i]).abs() < 1e-9 * ops2.mass[i]);
        assert!((curv2.k[i] * s * s - curv.k[i]).abs() < 1e-8 * curv.k[i].abs().max(1.0));
    }
    let scale = ops.stiffness.max_abs();
    for (a, b) in ops.stiffness.values.iter().zip(&ops2.stiffness.values) {
        assert!((a - b).abs() < 1e-9 * scale);
    }
}
