//! Procedural test surfaces.
//!
//! `icosphere(k)` has `10·4^k + 2` vertices (12, 42, 162, 642, 2562, ...). `face_like` is an
//! open height field at head scale (metres) with labelled nose, ear, cheek, eyelid and hair
//! regions, standing in for a fitted face template.

use std::collections::HashMap;

use super::{Mesh, Point, RegionLabels};

/// Unit icosphere by midpoint subdivision of an icosahedron, outward (CCW) winding.
pub fn icosphere(subdivisions: u32) -> Mesh {
    let t = (1.0 + 5f64.sqrt()) / 2.0;
    let mut vertices: Vec<Point> = [
        [-1.0, t, 0.0],
        [1.0, t, 0.0],
        [-1.0, -t, 0.0],
        [1.0, -t, 0.0],
        [0.0, -1.0, t],
        [0.0, 1.0, t],
        [0.0, -1.0, -t],
        [0.0, 1.0, -t],
        [t, 0.0, -1.0],
        [t, 0.0, 1.0],
        [-t, 0.0, -1.0],
        [-t, 0.0, 1.0],
    ]
    .iter()
    .map(|p| Point::new(p[0], p[1], p[2]).normalize())
    .collect();
    let mut faces: Vec<[usize; 3]> = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];
    for _ in 0..subdivisions {
        let mut midpoints: HashMap<(usize, usize), usize> = HashMap::new();
        let mut mid = |a: usize, b: usize, vertices: &mut Vec<Point>| -> usize {
            *midpoints.entry((a.min(b), a.max(b))).or_insert_with(|| {
                vertices.push(((vertices[a] + vertices[b]) * 0.5).normalize());
                vertices.len() - 1
            })
        };
        let mut next = Vec::with_capacity(faces.len() * 4);
        for &[a, b, c] in &faces {
            let ab = mid(a, b, &mut vertices);
            let bc = mid(b, c, &mut vertices);
            let ca = mid(c, a, &mut vertices);
            next.extend_from_slice(&[[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]);
        }
        faces = next;
    }
    Mesh::new(vertices, faces).expect("icosphere is valid")
}

/// Structured `nx × ny` vertex grid over `[x0, x1] × [y0, y1]` with heights from `height`.
/// Quads are split along alternating diagonals.
pub fn height_field(
    nx: usize,
    ny: usize,
    extent: [f64; 4],
    height: impl Fn(f64, f64) -> f64,
) -> Mesh {
    let [x0, x1, y0, y1] = extent;
    let mut vertices = Vec::with_capacity(nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            let x = x0 + (x1 - x0) * i as f64 / (nx - 1) as f64;
            let y = y0 + (y1 - y0) * j as f64 / (ny - 1) as f64;
            vertices.push(Point::new(x, y, height(x, y)));
        }
    }
    let id = |i: usize, j: usize| j * nx + i;
    let mut faces = Vec::with_capacity(2 * (nx - 1) * (ny - 1));
    for j in 0..ny - 1 {
        for i in 0..nx - 1 {
            let (a, b, c, d) = (id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1));
            if (i + j) % 2 == 0 {
                faces.push([a, b, c]);
                faces.push([a, c, d]);
            } else {
                faces.push([a, b, d]);
                faces.push([b, c, d]);
            }
        }
    }
    Mesh::new(vertices, faces).expect("grid is valid")
}

/// Planar `n × n` grid of the unit square at height zero.
pub fn flat_grid(n: usize) -> Mesh {
    height_field(n, n, [0.0, 1.0, 0.0, 1.0], |_, _| 0.0)
}

fn bump(x: f64, y: f64, cx: f64, cy: f64, amplitude: f64, sigma: f64) -> f64 {
    let r2 = (x - cx).powi(2) + (y - cy).powi(2);
    amplitude * (-r2 / (2.0 * sigma * sigma)).exp()
}

const NOSE: (f64, f64) = (0.0, -0.005);
const EARS: [(f64, f64); 2] = [(-0.068, 0.01), (0.068, 0.01)];
const EYES: [(f64, f64); 2] = [(-0.03, 0.03), (0.03, 0.03)];
const CHEEKS: [(f64, f64); 2] = [(-0.042, -0.035), (0.042, -0.035)];

fn face_height(x: f64, y: f64) -> f64 {
    let dome = 0.05 * (1.0 - (x / 0.11).powi(2) - (y / 0.13).powi(2));
    let mut z = dome + bump(x, y, NOSE.0, NOSE.1, 0.028, 0.011);
    for (cx, cy) in EARS {
        z += bump(x, y, cx, cy, 0.016, 0.007);
    }
    for (cx, cy) in EYES {
        z -= bump(x, y, cx, cy, 0.008, 0.01);
    }
    z
}

/// Head-scale open surface (~0.16 m × 0.2 m) with `n × n` vertices.
/// `face_like(71)` has 5041 vertices, close to a FLAME template.
pub fn face_like(n: usize) -> Mesh {
    let extent = [-0.08, 0.08, -0.1, 0.1];
    let mesh = height_field(n, n, extent, face_height);
    let within = |v: &Point, c: (f64, f64), r: f64| (v.x - c.0).hypot(v.y - c.1) <= r;
    let select = |pred: &dyn Fn(&Point) -> bool| -> Vec<usize> {
        mesh.vertices
            .iter()
            .enumerate()
            .filter_map(|(i, v)| pred(v).then_some(i))
            .collect()
    };
    let mut labels = RegionLabels::default();
    labels.insert("nose", select(&|v| within(v, NOSE, 0.026)));
    labels.insert("ear", select(&|v| EARS.iter().any(|&c| within(v, c, 0.014))));
    labels.insert("cheek", select(&|v| CHEEKS.iter().any(|&c| within(v, c, 0.012))));
    labels.insert(
        "eyelid",
        select(&|v| {
            EYES.iter().any(|&(cx, cy)| {
                let r = (v.x - cx).hypot(v.y - cy);
                (0.008..=0.016).contains(&r)
            })
        }),
    );
    labels.insert("hair", select(&|v| v.y >= 0.075));
    mesh.with_labels(labels).expect("labels in range")
}

/// Icosphere with radial Gaussian bumps; a closed surface with mixed-sign curvature.
pub fn bumpy_sphere(subdivisions: u32) -> Mesh {
    let mut mesh = icosphere(subdivisions);
    let centers = [
        Point::new(0.0, 0.0, 1.0),
        Point::new(0.8, 0.6, 0.0).normalize(),
        Point::new(-0.5, -0.4, -0.77).normalize(),
    ];
    for v in &mut mesh.vertices {
        let dir = v.normalize();
        let r = 1.0
            + centers
                .iter()
                .map(|c| 0.25 * (-(dir - c).norm_squared() / (2.0 * 0.12)).exp())
                .sum::<f64>();
        *v = dir * r;
    }
    mesh
}

/// Open sinusoidal sheet of unit width with `n × n` vertices.
pub fn wavy_sheet(n: usize) -> Mesh {
    use std::f64::consts::PI;
    height_field(n, n, [0.0, 1.0, 0.0, 1.0], |x, y| {
        0.08 * (2.0 * PI * x).sin() * (2.0 * PI * y).cos() + bump(x, y, 0.5, 0.5, 0.12, 0.08)
    })
}
