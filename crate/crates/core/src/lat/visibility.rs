//! Per-view triangle visibility and the combined source/target flag set.

use serde::{Deserialize, Serialize};

use super::affine::Pixel;
use super::camera::{project, CameraModel, Projection};
use super::raster::{rasterize, DepthBuffer, ScreenTriangle};
use crate::mesh::Mesh;
use crate::Result;

/// Visibility of one triangle in one projection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ViewTriangle {
    /// A vertex is behind the camera or the projected area is below the floor.
    pub degenerate: bool,
    /// `n · p₀ > 0` in camera space for the outward (counter-clockwise) normal.
    pub back_facing: bool,
    /// Pixel centres won in the depth buffer.
    pub pixels: u32,
}

impl ViewTriangle {
    pub fn visible(&self) -> bool {
        !self.degenerate && !self.back_facing && self.pixels > 0
    }
}

/// A mesh seen through a camera: projection, per-triangle visibility and depth buffer.
#[derive(Debug, Clone)]
pub struct View {
    pub projection: Projection,
    pub screen: Vec<Option<ScreenTriangle>>,
    pub triangles: Vec<ViewTriangle>,
    pub buffer: DepthBuffer,
}

impl View {
    pub fn new(mesh: &Mesh, cam: &CameraModel) -> Result<Self> {
        let projection = project(mesh, cam)?;
        let mut back = Vec::with_capacity(mesh.face_count());
        let mut degenerate = Vec::with_capacity(mesh.face_count());
        let screen: Vec<Option<ScreenTriangle>> = mesh
            .faces
            .iter()
            .map(|f| {
                let c = f.map(|i| projection.camera_points[i]);
                let n = (c[1] - c[0]).cross(&(c[2] - c[0]));
                let facing_away = n.dot(&c[0]) > 0.0;
                let behind = f.iter().any(|&i| projection.behind[i]);
                let st = if behind {
                    None
                } else {
                    ScreenTriangle::new(f.map(|i| projection.points[i]), f.map(|i| projection.depth[i]))
                };
                back.push(facing_away);
                degenerate.push(st.is_none());
                // Only front-facing triangles compete for pixels.
                st.filter(|_| !facing_away)
            })
            .collect();
        let buffer = rasterize(&screen, cam.width as usize, cam.height as usize);
        let counts = buffer.pixel_counts(screen.len());
        let triangles = (0..screen.len())
            .map(|t| ViewTriangle {
                degenerate: degenerate[t],
                back_facing: back[t],
                pixels: counts[t],
            })
            .collect();
        Ok(View {
            projection,
            screen,
            triangles,
            buffer,
        })
    }

    pub fn corners(&self, face: &[usize; 3]) -> [Pixel; 3] {
        face.map(|i| self.projection.points[i])
    }
}

/// Why a triangle's target pixels may not be trusted.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TriangleFlags {
    /// Degenerate in the source or the target projection.
    pub degenerate: bool,
    pub back_facing_src: bool,
    /// Back-facing in the source or front-facing but winning no source pixel.
    pub occluded_source: bool,
    /// Hidden in the source, visible in the target.
    pub newly_visible: bool,
    pub back_facing_dst: bool,
    /// Front-facing in the target but winning no target pixel.
    pub occluded_dst: bool,
    /// All three vertices carry a fragile label.
    pub fragile: bool,
}

impl TriangleFlags {
    pub fn any(&self) -> bool {
        self.degenerate || self.occluded_source || self.newly_visible || self.fragile
    }
}

pub(crate) fn combine(src: &View, dst: &View) -> Vec<TriangleFlags> {
    src.triangles
        .iter()
        .zip(&dst.triangles)
        .map(|(s, d)| {
            let degenerate = s.degenerate || d.degenerate;
            let hidden_src = !degenerate && (s.back_facing || s.pixels == 0);
            TriangleFlags {
                degenerate,
                back_facing_src: s.back_facing,
                occluded_source: hidden_src,
                newly_visible: hidden_src && d.visible(),
                back_facing_dst: d.back_facing,
                occluded_dst: !d.degenerate && !d.back_facing && d.pixels == 0,
                fragile: false,
            }
        })
        .collect()
}

/// Per-triangle flags for warping `src` into the pose of `dst` under `cam`.
pub fn visibility_mask(src: &Mesh, dst: &Mesh, cam: &CameraModel) -> Result<Vec<TriangleFlags>> {
    src.ensure_compatible(dst)?;
    let (s, d) = (View::new(src, cam)?, View::new(dst, cam)?);
    Ok(combine(&s, &d))
}
