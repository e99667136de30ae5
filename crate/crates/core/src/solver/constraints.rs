use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::mesh::{Mesh, Point};
use crate::{Error, Result};

/// Prescribed positions for a subset of vertices (the rows selected by `B` and their `x*`).
///
/// JSON form: `{"indices": [..], "targets": [[x, y, z], ..]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawConstraints", into = "RawConstraints")]
pub struct ConstraintSet {
    indices: Vec<usize>,
    targets: Vec<Point>,
}

#[derive(Serialize, Deserialize)]
struct RawConstraints {
    indices: Vec<usize>,
    targets: Vec<[f64; 3]>,
}

impl TryFrom<RawConstraints> for ConstraintSet {
    type Error = Error;
    fn try_from(raw: RawConstraints) -> Result<Self> {
        ConstraintSet::new(
            raw.indices,
            raw.targets.into_iter().map(Point::from).collect(),
        )
    }
}

impl From<ConstraintSet> for RawConstraints {
    fn from(c: ConstraintSet) -> Self {
        RawConstraints {
            indices: c.indices,
            targets: c.targets.iter().map(|p| [p.x, p.y, p.z]).collect(),
        }
    }
}

impl ConstraintSet {
    pub fn new(indices: Vec<usize>, targets: Vec<Point>) -> Result<Self> {
        if indices.len() != targets.len() {
            return Err(Error::DimensionMismatch {
                expected: indices.len(),
                actual: targets.len(),
            });
        }
        let mut seen = HashSet::with_capacity(indices.len());
        if let Some(dup) = indices.iter().find(|i| !seen.insert(**i)) {
            return Err(Error::InvalidParameter(format!(
                "constraint index {dup} appears more than once"
            )));
        }
        Ok(ConstraintSet { indices, targets })
    }

    /// Pins `indices` to their current positions in `mesh`.
    pub fn pin(mesh: &Mesh, indices: impl IntoIterator<Item = usize>) -> Result<Self> {
        let indices: Vec<usize> = indices.into_iter().collect();
        let n = mesh.vertex_count();
        if let Some(&bad) = indices.iter().find(|&&i| i >= n) {
            return Err(Error::OutOfRangeIndex {
                index: bad as i64,
                len: n,
            });
        }
        let targets = indices.iter().map(|&i| mesh.vertices[i]).collect();
        ConstraintSet::new(indices, targets)
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn targets(&self) -> &[Point] {
        &self.targets
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn validate_for(&self, vertex_count: usize) -> Result<()> {
        match self.indices.iter().find(|&&i| i >= vertex_count) {
            Some(&bad) => Err(Error::OutOfRangeIndex {
                index: bad as i64,
                len: vertex_count,
            }),
            None => Ok(()),
        }
    }

    pub fn extend(&mut self, other: &ConstraintSet) -> Result<()> {
        let mut indices = std::mem::take(&mut self.indices);
        let mut targets = std::mem::take(&mut self.targets);
        indices.extend_from_slice(&other.indices);
        targets.extend_from_slice(&other.targets);
        *self = ConstraintSet::new(indices, targets)?;
        Ok(())
    }

    /// Sorted copy of the constrained indices; the identity of a factorization.
    pub fn index_key(&self) -> Vec<usize> {
        let mut key = self.indices.clone();
        key.sort_unstable();
        key
    }
}
