//! Pinhole camera and projection into continuous pixel coordinates.
//!
//! Pixel `(i, j)` covers `[i, i+1) × [j, j+1)`; its centre is at `(i + ½, j + ½)`.

use std::path::Path;

use nalgebra::{Matrix3, Vector2, Vector3};
use serde::{Deserialize, Serialize};

use crate::mesh::Mesh;
use crate::{Error, Result};

/// Vertices with camera-space depth at or below this are treated as behind the camera.
pub const NEAR_PLANE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CameraModel {
    /// Upper-triangular intrinsics in pixels.
    pub intrinsics: [[f64; 3]; 3],
    /// World-to-camera `[R | t]`.
    pub extrinsics: [[f64; 4]; 3],
    pub width: u32,
    pub height: u32,
}

impl CameraModel {
    /// Identity extrinsics, focal `f`, principal point `(cx, cy)`.
    pub fn simple(f: f64, cx: f64, cy: f64, width: u32, height: u32) -> Self {
        CameraModel {
            intrinsics: [[f, 0.0, cx], [0.0, f, cy], [0.0, 0.0, 1.0]],
            extrinsics: [[1.0, 0.0, 0.0, 0.0], [0.0, 1.0, 0.0, 0.0], [0.0, 0.0, 1.0, 0.0]],
            width,
            height,
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let cam: CameraModel = serde_json::from_str(&text)?;
        cam.validate()?;
        Ok(cam)
    }

    pub fn validate(&self) -> Result<()> {
        let k = &self.intrinsics;
        if k.iter().flatten().any(|v| !v.is_finite()) || self.extrinsics.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::InvalidCamera("non-finite entry".into()));
        }
        if k[1][0] != 0.0 || k[2][0] != 0.0 || k[2][1] != 0.0 {
            return Err(Error::InvalidCamera("intrinsics must be upper-triangular".into()));
        }
        if !(k[0][0] > 0.0 && k[1][1] > 0.0) {
            return Err(Error::InvalidCamera("focal entries must be positive".into()));
        }
        if k[2][2] != 1.0 {
            return Err(Error::InvalidCamera("intrinsics[2][2] must be 1".into()));
        }
        let r = self.rotation();
        let dev = (r.transpose() * r - Matrix3::identity()).abs().max();
        if dev > 1e-8 || r.determinant() <= 0.0 {
            return Err(Error::InvalidCamera(format!(
                "rotation block is not a proper rotation (orthonormality error {dev:.3e})"
            )));
        }
        if self.width == 0 || self.height == 0 {
            return Err(Error::InvalidCamera("image size must be positive".into()));
        }
        Ok(())
    }

    pub fn rotation(&self) -> Matrix3<f64> {
        let e = &self.extrinsics;
        Matrix3::new(e[0][0], e[0][1], e[0][2], e[1][0], e[1][1], e[1][2], e[2][0], e[2][1], e[2][2])
    }

    pub fn translation(&self) -> Vector3<f64> {
        let e = &self.extrinsics;
        Vector3::new(e[0][3], e[1][3], e[2][3])
    }

    pub fn to_camera(&self, p: &Vector3<f64>) -> Vector3<f64> {
        self.rotation() * p + self.translation()
    }

    /// Camera-space point to pixel coordinates; `None` at or behind the near plane.
    pub fn to_pixel(&self, c: &Vector3<f64>) -> Option<Vector2<f64>> {
        if !(c.z > NEAR_PLANE) {
            return None;
        }
        let k = &self.intrinsics;
        let (x, y) = (c.x / c.z, c.y / c.z);
        Some(Vector2::new(k[0][0] * x + k[0][1] * y + k[0][2], k[1][1] * y + k[1][2]))
    }
}

/// Per-vertex projection of a mesh.
#[derive(Debug, Clone)]
pub struct Projection {
    /// Pixel coordinates; meaningless where `behind` is set.
    pub points: Vec<Vector2<f64>>,
    /// Camera-space z.
    pub depth: Vec<f64>,
    pub camera_points: Vec<Vector3<f64>>,
    pub behind: Vec<bool>,
    /// Projected outside `[0, width] × [0, height]`; kept for rasterization.
    pub outside: Vec<bool>,
}

pub fn project(mesh: &Mesh, cam: &CameraModel) -> Result<Projection> {
    cam.validate()?;
    let n = mesh.vertex_count();
    let mut out = Projection {
        points: Vec::with_capacity(n),
        depth: Vec::with_capacity(n),
        camera_points: Vec::with_capacity(n),
        behind: Vec::with_capacity(n),
        outside: Vec::with_capacity(n),
    };
    let (w, h) = (cam.width as f64, cam.height as f64);
    for v in &mesh.vertices {
        let c = cam.to_camera(v);
        let px = cam.to_pixel(&c);
        let p = px.unwrap_or_else(|| Vector2::new(f64::NAN, f64::NAN));
        out.outside.push(px.is_some() && !((0.0..=w).contains(&p.x) && (0.0..=h).contains(&p.y)));
        out.behind.push(px.is_none());
        out.points.push(p);
        out.depth.push(c.z);
        out.camera_points.push(c);
    }
    Ok(out)
}
