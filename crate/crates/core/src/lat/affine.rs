//! Per-triangle affine maps between projected correspondences.

use nalgebra::{Matrix2, Vector2};
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Projected triangles with `|signed area|` below this (px²) are degenerate.
pub const DEGENERATE_AREA: f64 = 1e-6;

pub type Pixel = Vector2<f64>;

/// `Φ(x) = A x + b` in pixel coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AffineMap2D {
    /// Row-major.
    pub a: [[f64; 2]; 2],
    pub b: [f64; 2],
}

impl AffineMap2D {
    pub fn identity() -> Self {
        AffineMap2D {
            a: [[1.0, 0.0], [0.0, 1.0]],
            b: [0.0, 0.0],
        }
    }

    pub fn matrix(&self) -> Matrix2<f64> {
        Matrix2::new(self.a[0][0], self.a[0][1], self.a[1][0], self.a[1][1])
    }

    pub fn offset(&self) -> Pixel {
        Pixel::new(self.b[0], self.b[1])
    }

    pub fn apply(&self, p: &Pixel) -> Pixel {
        Pixel::new(
            self.a[0][0] * p.x + self.a[0][1] * p.y + self.b[0],
            self.a[1][0] * p.x + self.a[1][1] * p.y + self.b[1],
        )
    }
}

/// Signed area of a 2D triangle (positive for counter-clockwise in a y-up frame).
pub fn signed_area(p: &[Pixel; 3]) -> f64 {
    0.5 * ((p[1].x - p[0].x) * (p[2].y - p[0].y) - (p[2].x - p[0].x) * (p[1].y - p[0].y))
}

pub fn is_degenerate(p: &[Pixel; 3]) -> bool {
    !(signed_area(p).abs() >= DEGENERATE_AREA)
}

/// The unique affine map sending `src[i]` to `dst[i]`.
pub fn fit_affine(src: &[Pixel; 3], dst: &[Pixel; 3]) -> Result<AffineMap2D> {
    let area = signed_area(src);
    if !(area.abs() >= DEGENERATE_AREA) || dst.iter().any(|p| !p.x.is_finite() || !p.y.is_finite()) {
        return Err(Error::DegenerateTriangle { area });
    }
    let s = Matrix2::from_columns(&[src[1] - src[0], src[2] - src[0]]);
    let d = Matrix2::from_columns(&[dst[1] - dst[0], dst[2] - dst[0]]);
    let det = s[(0, 0)] * s[(1, 1)] - s[(0, 1)] * s[(1, 0)];
    let adj = Matrix2::new(s[(1, 1)], -s[(0, 1)], -s[(1, 0)], s[(0, 0)]);
    // Dividing after the product keeps `src == dst` exactly the identity.
    let mut a = (d * adj) / det;
    // One correction step against the edge residual tightens thin triangles.
    a += ((d - a * s) * adj) / det;
    let b = dst[0] - a * src[0];
    Ok(AffineMap2D {
        a: [[a[(0, 0)], a[(0, 1)]], [a[(1, 0)], a[(1, 1)]]],
        b: [b.x, b.y],
    })
}
