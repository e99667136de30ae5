//! Indexed triangle meshes.

mod io;
pub mod synth;

use std::collections::{BTreeMap, BTreeSet, HashMap};

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub use io::{
    load_labels, load_mesh, load_mesh_with_labels, parse_mesh, save_labels, save_mesh, write_obj,
    write_ply, MeshFormat,
};

pub type Point = Vector3<f64>;

/// Named vertex subsets, e.g. `nose`, `hair`, `ear`.
///
/// Serialized as `{"labels": {"hair": [..], "nose": [..]}}` with 0-based indices.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RegionLabels {
    pub labels: BTreeMap<String, Vec<usize>>,
}

impl RegionLabels {
    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn insert(&mut self, name: impl Into<String>, mut indices: Vec<usize>) {
        indices.sort_unstable();
        indices.dedup();
        self.labels.insert(name.into(), indices);
    }

    pub fn get(&self, name: &str) -> Option<&[usize]> {
        self.labels.get(name).map(Vec::as_slice)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.labels.keys().map(String::as_str)
    }

    /// Union of the named regions. Unknown names are an error.
    pub fn union<S: AsRef<str>>(&self, names: &[S]) -> Result<BTreeSet<usize>> {
        let mut out = BTreeSet::new();
        for name in names {
            let name = name.as_ref();
            let idx = self
                .labels
                .get(name)
                .ok_or_else(|| Error::UnknownRegion(name.to_string()))?;
            out.extend(idx.iter().copied());
        }
        Ok(out)
    }

    /// Per-vertex membership mask for the union of `names`; unknown names are skipped.
    pub fn mask(&self, vertex_count: usize, names: &[String]) -> Vec<bool> {
        let mut mask = vec![false; vertex_count];
        for name in names {
            if let Some(idx) = self.labels.get(name) {
                for &i in idx {
                    if i < vertex_count {
                        mask[i] = true;
                    }
                }
            }
        }
        mask
    }

    fn validate(&self, vertex_count: usize) -> Result<()> {
        for idx in self.labels.values() {
            if let Some(&bad) = idx.iter().find(|&&i| i >= vertex_count) {
                return Err(Error::OutOfRangeIndex {
                    index: bad as i64,
                    len: vertex_count,
                });
            }
        }
        Ok(())
    }
}

/// A triangle surface. Vertex correspondence between meshes is by index, so two meshes
/// with identical face lists are interchangeable carriers of the same connectivity.
#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    pub vertices: Vec<Point>,
    pub faces: Vec<[usize; 3]>,
    pub labels: RegionLabels,
}

impl Mesh {
    /// Builds a mesh and checks index range, repeated corners and edge manifoldness.
    pub fn new(vertices: Vec<Point>, faces: Vec<[usize; 3]>) -> Result<Self> {
        let mesh = Mesh {
            vertices,
            faces,
            labels: RegionLabels::default(),
        };
        mesh.validate()?;
        Ok(mesh)
    }

    pub fn with_labels(mut self, labels: RegionLabels) -> Result<Self> {
        labels.validate(self.vertices.len())?;
        self.labels = labels;
        Ok(self)
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn face_count(&self) -> usize {
        self.faces.len()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.vertices.len();
        for (fi, f) in self.faces.iter().enumerate() {
            for &v in f {
                if v >= n {
                    return Err(Error::OutOfRangeIndex {
                        index: v as i64,
                        len: n,
                    });
                }
            }
            if f[0] == f[1] || f[0] == f[2] {
                return Err(Error::RepeatedVertex { face: fi, vertex: f[0] });
            }
            if f[1] == f[2] {
                return Err(Error::RepeatedVertex { face: fi, vertex: f[1] });
            }
        }
        for (&(a, b), &count) in &self.edge_face_counts() {
            if count > 2 {
                return Err(Error::NonManifoldEdge { a, b, count });
            }
        }
        self.labels.validate(n)
    }

    /// Undirected edge `(min, max)` → number of incident faces.
    pub fn edge_face_counts(&self) -> HashMap<(usize, usize), usize> {
        let mut counts = HashMap::with_capacity(self.faces.len() * 3 / 2);
        for f in &self.faces {
            for k in 0..3 {
                let (a, b) = (f[k], f[(k + 1) % 3]);
                *counts.entry((a.min(b), a.max(b))).or_insert(0) += 1;
            }
        }
        counts
    }

    /// Vertices on an edge with exactly one incident face, in ascending order.
    pub fn boundary_vertices(&self) -> Vec<usize> {
        let mut on_boundary = vec![false; self.vertices.len()];
        for (&(a, b), &count) in &self.edge_face_counts() {
            if count == 1 {
                on_boundary[a] = true;
                on_boundary[b] = true;
            }
        }
        on_boundary
            .iter()
            .enumerate()
            .filter_map(|(i, &b)| b.then_some(i))
            .collect()
    }

    pub fn boundary_mask(&self) -> Vec<bool> {
        let mut mask = vec![false; self.vertices.len()];
        for v in self.boundary_vertices() {
            mask[v] = true;
        }
        mask
    }

    pub fn is_closed(&self) -> bool {
        self.edge_face_counts().values().all(|&c| c == 2)
    }

    /// Euler characteristic V − E + F.
    pub fn euler_characteristic(&self) -> i64 {
        let edges = self.edge_face_counts().len() as i64;
        self.vertices.len() as i64 - edges + self.faces.len() as i64
    }

    /// Connected components over face adjacency; isolated vertices form singleton components.
    /// Returns a component id per vertex and the number of components.
    pub fn connected_components(&self) -> (Vec<usize>, usize) {
        let n = self.vertices.len();
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(parent: &mut [usize], mut x: usize) -> usize {
            while parent[x] != x {
                parent[x] = parent[parent[x]];
                x = parent[x];
            }
            x
        }
        for f in &self.faces {
            for k in 1..3 {
                let (ra, rb) = (find(&mut parent, f[0]), find(&mut parent, f[k]));
                if ra != rb {
                    parent[ra.max(rb)] = ra.min(rb);
                }
            }
        }
        let mut ids = vec![usize::MAX; n];
        let mut roots = HashMap::new();
        for (v, id) in ids.iter_mut().enumerate() {
            let r = find(&mut parent, v);
            let next = roots.len();
            *id = *roots.entry(r).or_insert(next);
        }
        let count = roots.len();
        (ids, count)
    }

    /// Two meshes are compatible iff they share the identical face list.
    pub fn is_compatible(&self, other: &Mesh) -> bool {
        self.vertices.len() == other.vertices.len() && self.faces == other.faces
    }

    pub fn ensure_compatible(&self, other: &Mesh) -> Result<()> {
        if self.vertices.len() != other.vertices.len() {
            return Err(Error::Incompatible(format!(
                "vertex counts differ ({} vs {})",
                self.vertices.len(),
                other.vertices.len()
            )));
        }
        if self.faces != other.faces {
            return Err(Error::Incompatible("face lists differ".into()));
        }
        Ok(())
    }

    /// Copy of this mesh with new positions, keeping faces and labels.
    pub fn with_vertices(&self, vertices: Vec<Point>) -> Result<Mesh> {
        if vertices.len() != self.vertices.len() {
            return Err(Error::DimensionMismatch {
                expected: self.vertices.len(),
                actual: vertices.len(),
            });
        }
        Ok(Mesh {
            vertices,
            faces: self.faces.clone(),
            labels: self.labels.clone(),
        })
    }

    pub fn translated(&self, offset: Point) -> Mesh {
        let mut out = self.clone();
        for v in &mut out.vertices {
            *v += offset;
        }
        out
    }

    pub fn scaled(&self, s: f64) -> Mesh {
        let mut out = self.clone();
        for v in &mut out.vertices {
            *v *= s;
        }
        out
    }

    pub fn centroid(&self) -> Point {
        let sum = self.vertices.iter().fold(Point::zeros(), |acc, v| acc + v);
        sum / self.vertices.len().max(1) as f64
    }

    pub fn face_area(&self, f: usize) -> f64 {
        let [a, b, c] = self.faces[f];
        let (pa, pb, pc) = (self.vertices[a], self.vertices[b], self.vertices[c]);
        0.5 * (pb - pa).cross(&(pc - pa)).norm()
    }

    /// Vertex → faces incidence, in ascending face order.
    pub fn vertex_faces(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.vertices.len()];
        for (fi, f) in self.faces.iter().enumerate() {
            for &v in f {
                out[v].push(fi);
            }
        }
        out
    }
}

/// Length of the axis-aligned bounding-box diagonal.
pub fn bbox_diagonal(mesh: &Mesh) -> Result<f64> {
    let first = *mesh.vertices.first().ok_or(Error::EmptyMesh)?;
    let (lo, hi) = mesh
        .vertices
        .iter()
        .fold((first, first), |(lo, hi), v| (lo.inf(v), hi.sup(v)));
    Ok((hi - lo).norm())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tri() -> Mesh {
        Mesh::new(
            vec![Point::new(0., 0., 0.), Point::new(1., 0., 0.), Point::new(0., 1., 0.)],
            vec![[0, 1, 2]],
        )
        .unwrap()
    }

    #[test]
    fn bbox_of_unit_cube_corners() {
        let mut verts = Vec::new();
        for i in 0..8 {
            verts.push(Point::new((i & 1) as f64, ((i >> 1) & 1) as f64, ((i >> 2) & 1) as f64));
        }
        let mesh = Mesh::new(verts, vec![]).unwrap();
        assert!((bbox_diagonal(&mesh).unwrap() - 3f64.sqrt()).abs() < 1e-15);
        let moved = mesh.translated(Point::new(10.0, -3.0, 7.5));
        assert!((bbox_diagonal(&moved).unwrap() - 3f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn bbox_single_vertex_and_empty() {
        let one = Mesh::new(vec![Point::new(1., 2., 3.)], vec![]).unwrap();
        assert_eq!(bbox_diagonal(&one).unwrap(), 0.0);
        let empty = Mesh::new(vec![], vec![]).unwrap();
        assert!(matches!(bbox_diagonal(&empty), Err(Error::EmptyMesh)));
    }

    #[test]
    fn rejects_bad_faces() {
        let v = vec![Point::zeros(); 3];
        assert!(matches!(
            Mesh::new(v.clone(), vec![[0, 1, 3]]),
            Err(Error::OutOfRangeIndex { index: 3, .. })
        ));
        assert!(matches!(
            Mesh::new(v, vec![[0, 1, 1]]),
            Err(Error::RepeatedVertex { .. })
        ));
    }

    #[test]
    fn rejects_non_manifold_edge() {
        let v = vec![Point::zeros(); 5];
        let err = Mesh::new(v, vec![[0, 1, 2], [1, 0, 3], [0, 1, 4]]).unwrap_err();
        assert!(matches!(err, Error::NonManifoldEdge { a: 0, b: 1, count: 3 }));
    }

    #[test]
    fn boundary_and_components() {
        let m = tri();
        assert_eq!(m.boundary_vertices(), vec![0, 1, 2]);
        assert!(!m.is_closed());
        assert_eq!(m.euler_characteristic(), 1);
        let ico = synth::icosphere(1);
        assert!(ico.is_closed());
        assert_eq!(ico.euler_characteristic(), 2);
        assert!(ico.boundary_vertices().is_empty());
        assert_eq!(ico.connected_components().1, 1);
    }

    #[test]
    fn labels_union_and_unknown() {
        let mut labels = RegionLabels::default();
        labels.insert("nose", vec![2, 0, 2]);
        labels.insert("ear", vec![1]);
        let m = tri().with_labels(labels).unwrap();
        assert_eq!(m.labels.get("nose").unwrap(), &[0, 2]);
        let u = m.labels.union(&["nose", "ear"]).unwrap();
        assert_eq!(u.into_iter().collect::<Vec<_>>(), vec![0, 1, 2]);
        assert!(matches!(m.labels.union(&["hair"]), Err(Error::UnknownRegion(_))));
    }

    #[test]
    fn labels_out_of_range_rejected() {
        let mut labels = RegionLabels::default();
        labels.insert("nose", vec![7]);
        assert!(tri().with_labels(labels).is_err());
    }
}
