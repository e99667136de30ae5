use std::f64::consts::PI;

use forge_core::blend::{secant_gap, secant_remainder_bound};
use forge_core::lat::{fit_affine, signed_area, Pixel};
use forge_core::mesh::{parse_mesh, synth, write_obj, write_ply, MeshFormat};
use forge_core::operators::CsrMatrix;
use forge_core::{build_operators, gaussian_curvature, BlendPair, ConstraintSet};
use nalgebra::Vector3;
use proptest::prelude::*;

fn perturbed_sphere(seed: &[f64]) -> forge_core::Mesh {
    let m = synth::icosphere(1);
    let v = m
        .vertices
        .iter()
        .enumerate()
        .map(|(i, p)| p * (1.0 + 0.2 * seed[i % seed.len()]))
        .collect();
    m.with_vertices(v).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn total_deficit_is_topological(seed in prop::collection::vec(-1.0f64..1.0, 1..42)) {
        let m = perturbed_sphere(&seed);
        let ops = build_operators(&m).unwrap();
        let c = gaussian_curvature(&m, &ops, None).unwrap();
        prop_assert!((c.total_deficit() - 4.0 * PI).abs() < 1e-9);
    }

    #[test]
    fn stiffness_stays_symmetric_with_constant_null_space(seed in prop::collection::vec(-1.0f64..1.0, 1..42)) {
        let m = perturbed_sphere(&seed);
        let ops = build_operators(&m).unwrap();
        prop_assert!(ops.stiffness.is_symmetric());
        let ones = vec![1.0; m.vertex_count()];
        let w1 = ops.stiffness.mul_vec(&ones);
        prop_assert!(w1.iter().all(|x| x.abs() < 1e-10 * ops.stiffness.max_abs()));
    }

    #[test]
    fn secant_gap_is_nonnegative(l in -40.0f64..40.0, t in 0.0f64..=1.0, gf in 0.01f64..1.0) {
        let g = t * gf;
        let gap = secant_gap(l, g, gf);
        prop_assert!(gap >= -1e-15 * (gf * l).exp().max(1.0));
        prop_assert!(gap <= secant_remainder_bound(l, g, gf) * (1.0 + 1e-10) + 1e-300);
    }

    #[test]
    fn blend_is_affine_in_gamma(a in 0.0f64..=0.25, b in 0.0f64..=0.25) {
        let base = synth::icosphere(1);
        let target = base.scaled(1.7).translated(Vector3::new(0.3, 0.0, -0.2));
        let pair = BlendPair::new(base, target, 0.25).unwrap();
        let (pa, pb) = (pair.blend_positions(a).unwrap(), pair.blend_positions(b).unwrap());
        let mid = pair.blend_positions(0.5 * (a + b)).unwrap();
        for i in 0..pa.len() {
            prop_assert!(((pa[i] + pb[i]) * 0.5 - mid[i]).norm() < 1e-12);
        }
    }

    #[test]
    fn affine_fit_is_exact(
        s in prop::array::uniform6(-500.0f64..500.0),
        d in prop::array::uniform6(-500.0f64..500.0),
    ) {
        let src = [Pixel::new(s[0], s[1]), Pixel::new(s[2], s[3]), Pixel::new(s[4], s[5])];
        let dst = [Pixel::new(d[0], d[1]), Pixel::new(d[2], d[3]), Pixel::new(d[4], d[5])];
        prop_assume!(signed_area(&src).abs() > 1.0);
        let m = fit_affine(&src, &dst).unwrap();
        for i in 0..3 {
            prop_assert!((m.apply(&src[i]) - dst[i]).norm() < 1e-9);
        }
    }

    #[test]
    fn obj_and_ply_roundtrip_bitwise(seed in prop::collection::vec(-1e3f64..1e3, 3..30)) {
        let m = synth::icosphere(0);
        let v = m.vertices.iter().enumerate()
            .map(|(i, p)| p * seed[i % seed.len()].abs().max(1e-3) + Vector3::new(seed[0], 1.0 / 3.0, 0.1))
            .collect();
        let m = m.with_vertices(v).unwrap();
        let obj = parse_mesh(&write_obj(&m), MeshFormat::Obj).unwrap();
        let ply = parse_mesh(&write_ply(&m), MeshFormat::Ply).unwrap();
        prop_assert_eq!(&obj.vertices, &m.vertices);
        prop_assert_eq!(&obj.faces, &m.faces);
        prop_assert_eq!(&ply.vertices, &m.vertices);
        prop_assert_eq!(&ply.faces, &m.faces);
    }

    #[test]
    fn csr_sums_duplicate_triplets(entries in prop::collection::vec((0usize..6, 0usize..6, -5.0f64..5.0), 0..40)) {
        let csr = CsrMatrix::from_triplets(6, entries.clone());
        let mut dense = [[0.0; 6]; 6];
        for (i, j, v) in &entries {
            dense[*i][*j] += v;
        }
        for (i, row) in dense.iter().enumerate() {
            for (j, want) in row.iter().enumerate() {
                prop_assert!((csr.get(i, j) - want).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn constraint_sets_roundtrip_through_json(idx in prop::collection::btree_set(0usize..1000, 0..20)) {
        let idx: Vec<usize> = idx.into_iter().collect();
        let targets = idx.iter().map(|&i| Vector3::new(i as f64, -0.5, 1e-3 * i as f64)).collect();
        let cs = ConstraintSet::new(idx, targets).unwrap();
        let back: ConstraintSet = serde_json::from_str(&serde_json::to_string(&cs).unwrap()).unwrap();
        prop_assert_eq!(back.indices(), cs.indices());
        prop_assert_eq!(back.targets(), cs.targets());
    }
}
