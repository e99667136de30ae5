use forge_core::mesh::synth;
use forge_core::solver::{Anchors, Caricaturizer, PoissonSolver, SolverBackend};
use forge_core::{
    assemble_rhs, bbox_diagonal, build_operators, caricaturize, gaussian_curvature, solve_poisson,
    ConstraintSet, Mesh, RegionLabels, WeightField,
};
use forge_oracles as oracle;
use nalgebra::Vector3;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn uniform_weights_reproduce_the_input() {
    for m in [
        synth::icosphere(3),
        synth::bumpy_sphere(3),
        synth::wavy_sheet(30),
        synth::face_like(51),
    ] {
        let engine = Caricaturizer::new(m.clone(), None).unwrap();
        let sol = engine
            .solve_weights(&WeightField::constant(m.vertex_count(), 1.0))
            .unwrap();
        let diag = bbox_diagonal(&m).unwrap();
        let worst = sol
            .mesh
            .vertices
            .iter()
            .zip(&m.vertices)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        assert!(worst < 1e-8 * diag, "max drift {worst:e}");
    }
}

#[test]
fn rhs_matches_brute_force_assembly() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let m = synth::bumpy_sphere(2);
    let ops = build_operators(&m).unwrap();
    let w: Vec<f64> = (0..m.vertex_count()).map(|_| rng.gen_range(0.2..3.0)).collect();
    let ours = assemble_rhs(&m, &ops, &WeightField::explicit(w.clone()).unwrap()).unwrap();
    let naive = oracle::weighted_rhs(&m.vertices, &m.faces, &w);
    let scale = naive.iter().map(|v| v.norm()).fold(0.0, f64::max);
    for (a, b) in ours.iter().zip(&naive) {
        assert!((a - b).norm() < 1e-11 * scale);
    }
}

fn random_case(rng: &mut ChaCha8Rng, m: &Mesh) -> (Vec<f64>, Vec<usize>, Vec<Vector3<f64>>) {
    let n = m.vertex_count();
    let w: Vec<f64> = (0..n).map(|_| rng.gen_range(0.1..5.0)).collect();
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(rng);
    idx.truncate(rng.gen_range(1..=n / 4));
    let targets = idx
        .iter()
        .map(|&i| m.vertices[i] + Vector3::new(rng.gen_range(-0.1..0.1), rng.gen_range(-0.1..0.1), rng.gen_range(-0.1..0.1)))
        .collect();
    (w, idx, targets)
}

#[test]
fn sparse_solve_matches_dense_cholesky_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for m in [synth::icosphere(2), synth::wavy_sheet(12), synth::face_like(13)] {
        assert!(m.vertex_count() <= 200);
        let ops = build_operators(&m).unwrap();
        for _ in 0..20 {
            let (w, idx, targets) = random_case(&mut rng, &m);
            let cs = ConstraintSet::new(idx.clone(), targets.clone()).unwrap();
            let ours = solve_poisson(&m, &ops, &WeightField::explicit(w.clone()).unwrap(), &cs).unwrap();
            let dense = oracle::constrained_solve(&m.vertices, &m.faces, &w, &idx, &targets).unwrap();
            let scale = dense.iter().map(|v| v.amax()).fold(0.0, f64::max);
            let err = ours
                .mesh
                .vertices
                .iter()
                .zip(&dense)
                .map(|(a, b)| (a - b).amax())
                .fold(0.0, f64::max);
            assert!(err <= 1e-9 * scale, "relative error {:e}", err / scale);
        }
    }
}

#[test]
fn conjugate_gradient_backend_agrees_with_direct() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let m = synth::wavy_sheet(16);
    let ops = build_operators(&m).unwrap();
    let (w, idx, targets) = random_case(&mut rng, &m);
    let cs = ConstraintSet::new(idx.clone(), targets).unwrap();
    let wf = WeightField::explicit(w).unwrap();
    let direct = PoissonSolver::new(&ops, &idx, SolverBackend::Direct).unwrap();
    let cg = PoissonSolver::new(&ops, &idx, SolverBackend::ConjugateGradient).unwrap();
    let a = direct.deform(&m, &ops, &wf, &cs).unwrap();
    let b = cg.deform(&m, &ops, &wf, &cs).unwrap();
    for (p, q) in a.mesh.vertices.iter().zip(&b.mesh.vertices) {
        assert!((p - q).norm() < 1e-7);
    }
}

#[test]
fn constrained_vertices_equal_targets_bitwise() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let m = synth::face_like(31);
    let ops = build_operators(&m).unwrap();
    let curv = gaussian_curvature(&m, &ops, None).unwrap();
    for gamma in [0.05, 0.125, 0.25] {
        let (_, idx, targets) = random_case(&mut rng, &m);
        let cs = ConstraintSet::new(idx.clone(), targets.clone()).unwrap();
        let sol = solve_poisson(&m, &ops, &WeightField::exponential(&curv, gamma), &cs).unwrap();
        for (i, t) in idx.iter().zip(&targets) {
            assert_eq!(sol.mesh.vertices[*i], *t);
        }
        assert_eq!(sol.constraint_violation, 0.0);
    }
    for region in [["nose"], ["ear"], ["cheek"]] {
        let sol = caricaturize(&m, 0.25, 0.25, Some(&region.map(String::from)), None).unwrap();
        let inside = m.labels.union(&region).unwrap();
        for v in (0..m.vertex_count()).filter(|v| !inside.contains(v)) {
            assert_eq!(sol.mesh.vertices[v], m.vertices[v]);
        }
    }
}

#[test]
fn constant_weight_two_doubles_a_closed_sphere() {
    let m = synth::icosphere(2);
    let engine = Caricaturizer::new(m.clone(), None).unwrap();
    let sol = engine
        .solve_weights(&WeightField::constant(m.vertex_count(), 2.0))
        .unwrap();
    for (i, j) in [(0, 1), (3, 77), (10, 150), (42, 161)] {
        let d0 = (m.vertices[i] - m.vertices[j]).norm();
        let d1 = (sol.mesh.vertices[i] - sol.mesh.vertices[j]).norm();
        assert!((d1 / d0 - 2.0).abs() < 1e-6);
    }
    // The area-weighted centroid is restored.
    let ops = build_operators(&m).unwrap();
    let c = |pts: &[Vector3<f64>]| {
        pts.iter().zip(&ops.mass).map(|(p, a)| p * *a).sum::<Vector3<f64>>() / ops.total_area()
    };
    assert!((c(&sol.mesh.vertices) - c(&m.vertices)).norm() < 1e-10);
}

#[test]
fn high_curvature_features_move_more_than_flat_ones() {
    let m = synth::face_like(71);
    let sol = caricaturize(&m, 0.25, 0.25, None, None).unwrap();
    let max_over = |name: &str| {
        m.labels
            .get(name)
            .unwrap()
            .iter()
            .map(|&v| (sol.mesh.vertices[v] - m.vertices[v]).norm())
            .fold(0.0, f64::max)
    };
    assert!(max_over("nose") > max_over("cheek"));
    for v in m.boundary_vertices() {
        assert_eq!(sol.mesh.vertices[v], m.vertices[v]);
    }
}

#[test]
fn interior_region_equals_boundary_constrained_solve() {
    let mut m = synth::wavy_sheet(20);
    let boundary = m.boundary_mask();
    let mut labels = RegionLabels::default();
    labels.insert("interior", (0..m.vertex_count()).filter(|&v| !boundary[v]).collect());
    m = m.with_labels(labels).unwrap();
    let global = caricaturize(&m, 0.2, 0.25, None, None).unwrap();
    let local = caricaturize(&m, 0.2, 0.25, Some(&["interior".to_string()]), None).unwrap();
    for (a, b) in global.mesh.vertices.iter().zip(&local.mesh.vertices) {
        assert!((a - b).norm() < 1e-12);
    }
}

#[test]
fn gamma_zero_returns_input_exactly() {
    let m = synth::bumpy_sphere(2);
    assert_eq!(caricaturize(&m, 0.0, 0.25, None, None).unwrap().mesh.vertices, m.vertices);
}

#[test]
fn invalid_requests_are_rejected() {
    let m = synth::face_like(11);
    assert!(caricaturize(&m, 0.3, 0.25, None, None).is_err());
    assert!(caricaturize(&m, -0.1, 0.25, None, None).is_err());
    assert!(caricaturize(&m, 0.1, 0.25, Some(&["tail".to_string()]), None).is_err());
    assert!(caricaturize(&m, 0.1, 0.25, None, Some(0.0)).is_err());
    let ops = build_operators(&m).unwrap();
    let empty = ConstraintSet::new(vec![], vec![]).unwrap();
    assert!(solve_poisson(&m, &ops, &WeightField::constant(m.vertex_count(), 1.0), &empty).is_err());
    assert!(ConstraintSet::new(vec![1, 1], vec![Vector3::zeros(); 2]).is_err());
    assert!(ConstraintSet::new(vec![1], vec![]).is_err());
}

#[test]
fn displacement_trend_is_reported() {
    let engine = Caricaturizer::new(synth::face_like(31), None).unwrap();
    let grid: Vec<f64> = (0..=5).map(|i| 0.05 * i as f64).collect();
    let trend = engine.displacement_trend(&grid).unwrap();
    assert_eq!(trend.max_displacement[0], 0.0);
    // Soft property: print rather than fail when violated.
    if !trend.monotone {
        eprintln!("displacement not monotone: {:?}", trend.max_displacement);
    }
}

#[test]
fn anchors_for_closed_meshes_use_one_vertex() {
    let m = synth::icosphere(2);
    let a = Anchors::default_for(&m).unwrap();
    assert_eq!(a.constraints.len(), 1);
    assert_eq!(a.realign.len(), 1);
    let open = synth::wavy_sheet(10);
    let a = Anchors::default_for(&open).unwrap();
    assert_eq!(a.constraints.len(), open.boundary_vertices().len());
    assert!(a.realign.is_empty());
}

#[test]
fn explicit_targets_override_rest_pins() {
    let m = synth::flat_grid(9);
    let anchors = Anchors::default_for(&m).unwrap();
    let corner = anchors.constraints.indices()[0];
    let lifted = m.vertices[corner] + Vector3::new(0.0, 0.0, 0.3);
    let extra = ConstraintSet::new(vec![corner, 40], vec![lifted, m.vertices[40]]).unwrap();
    let merged = anchors.with_overrides(&extra).unwrap();
    assert_eq!(merged.constraints.len(), anchors.constraints.len() + 1);
    let engine = Caricaturizer::new(m.clone(), None).unwrap().with_anchors(merged).unwrap();
    let sol = engine.solve(0.2).unwrap();
    assert_eq!(sol.mesh.vertices[corner], lifted);
    assert_eq!(sol.mesh.vertices[40], m.vertices[40]);
    assert!(Anchors::default_for(&m)
        .unwrap()
        .with_overrides(&ConstraintSet::new(vec![999], vec![lifted]).unwrap())
        .is_err());

    // A closed sphere stops recentring once a vertex is prescribed.
    let s = synth::icosphere(1);
    let a = Anchors::default_for(&s).unwrap();
    assert_eq!(a.realign.len(), 1);
    let pinned = ConstraintSet::pin(&s, [3]).unwrap();
    assert!(a.with_overrides(&pinned).unwrap().realign.is_empty());
}
