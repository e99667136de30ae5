//! Pseudo ground-truth frames by per-triangle affine warping.
//!
//! Each target pixel covered by the front-most projected target triangle `t` is pulled
//! back through the inverse of `t`'s affine map into the source frame and sampled there.
//! Pixels whose source location cannot be trusted are masked and get alpha 0.

pub mod affine;
pub mod camera;
pub mod image;
pub mod raster;
pub mod visibility;

use std::collections::BTreeSet;

pub use affine::{fit_affine, signed_area, AffineMap2D, Pixel, DEGENERATE_AREA};
pub use camera::{project, CameraModel, Projection, NEAR_PLANE};
pub use image::{mask_legend, RgbaImage, ValidityClass, ValidityMask};
pub use raster::{rasterize, DepthBuffer, ScreenTriangle};
pub use visibility::{visibility_mask, TriangleFlags, View, ViewTriangle};

use crate::mesh::Mesh;
use crate::{par, Error, Result};

/// Sample locations within this of a pixel centre are snapped onto it.
const SNAP: f64 = 1e-9;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum Sampling {
    #[default]
    Bilinear,
    Nearest,
}

#[derive(Debug, Clone, Default)]
pub struct WarpOptions {
    pub sampling: Sampling,
    /// Region labels (from the source mesh) whose triangles are always masked.
    pub fragile_regions: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct PseudoGT {
    pub image: RgbaImage,
    pub mask: ValidityMask,
    pub triangle_flags: Vec<TriangleFlags>,
    /// Source-to-target map per triangle, where both projections are usable.
    pub maps: Vec<Option<AffineMap2D>>,
}

fn snap(v: f64) -> f64 {
    let r = v.round();
    if (v - r).abs() < SNAP {
        r
    } else {
        v
    }
}

/// Samples `img` at continuous pixel coordinates; `None` if any tap falls outside.
pub fn sample(img: &RgbaImage, q: &Pixel, mode: Sampling) -> Option<[u8; 3]> {
    let (w, h) = (img.width as f64, img.height as f64);
    match mode {
        Sampling::Nearest => {
            let (x, y) = (snap(q.x).floor(), snap(q.y).floor());
            if !(0.0..w).contains(&x) || !(0.0..h).contains(&y) {
                return None;
            }
            let p = img.get(x as u32, y as u32);
            Some([p[0], p[1], p[2]])
        }
        Sampling::Bilinear => {
            let (fx, fy) = (snap(q.x - 0.5), snap(q.y - 0.5));
            if !(0.0..=w - 1.0).contains(&fx) || !(0.0..=h - 1.0).contains(&fy) {
                return None;
            }
            let (x0, y0) = (fx.floor(), fy.floor());
            let (tx, ty) = (fx - x0, fy - y0);
            let (x0, y0) = (x0 as u32, y0 as u32);
            let (x1, y1) = ((x0 + 1).min(img.width - 1), (y0 + 1).min(img.height - 1));
            let taps = [
                (img.get(x0, y0), (1.0 - tx) * (1.0 - ty)),
                (img.get(x1, y0), tx * (1.0 - ty)),
                (img.get(x0, y1), (1.0 - tx) * ty),
                (img.get(x1, y1), tx * ty),
            ];
            let mut out = [0u8; 3];
            for (c, slot) in out.iter_mut().enumerate() {
                let v: f64 = taps.iter().map(|(p, wt)| if *wt == 0.0 { 0.0 } else { p[c] as f64 * wt }).sum();
                *slot = v.round().clamp(0.0, 255.0) as u8;
            }
            Some(out)
        }
    }
}

fn fragile_faces(mesh: &Mesh, regions: &[String]) -> Result<Vec<bool>> {
    if regions.is_empty() {
        return Ok(vec![false; mesh.face_count()]);
    }
    let set: BTreeSet<usize> = mesh.labels.union(regions)?;
    Ok(mesh
        .faces
        .iter()
        .map(|f| f.iter().all(|v| set.contains(v)))
        .collect())
}

/// Warps `image` (seen with `src` under `cam`) into the pose of `dst`.
pub fn warp_frame(
    image: &RgbaImage,
    src: &Mesh,
    dst: &Mesh,
    cam: &CameraModel,
    opts: &WarpOptions,
) -> Result<PseudoGT> {
    src.ensure_compatible(dst)?;
    cam.validate()?;
    if image.width != cam.width || image.height != cam.height {
        return Err(Error::InvalidParameter(format!(
            "image is {}×{} but camera expects {}×{}",
            image.width, image.height, cam.width, cam.height
        )));
    }
    let (sv, dv) = (View::new(src, cam)?, View::new(dst, cam)?);
    let mut flags = visibility::combine(&sv, &dv);
    for (f, fragile) in flags.iter_mut().zip(fragile_faces(src, &opts.fragile_regions)?) {
        f.fragile = fragile;
    }
    let usable = |t: usize| !flags[t].degenerate;
    let maps: Vec<Option<AffineMap2D>> = (0..src.face_count())
        .map(|t| {
            let f = &src.faces[t];
            usable(t)
                .then(|| fit_affine(&sv.corners(f), &dv.corners(f)).ok())
                .flatten()
        })
        .collect();
    let inverse: Vec<Option<AffineMap2D>> = (0..src.face_count())
        .map(|t| {
            let f = &src.faces[t];
            maps[t].and_then(|_| fit_affine(&dv.corners(f), &sv.corners(f)).ok())
        })
        .collect();
    let shares_vertex = |a: usize, b: usize| {
        let (fa, fb) = (&src.faces[a], &src.faces[b]);
        fa.iter().any(|v| fb.contains(v))
    };

    let width = cam.width as usize;
    let rows = par::map_range(cam.height as usize, |y| {
        let mut rgba = vec![0u8; width * 4];
        let mut classes = vec![ValidityClass::Background; width];
        for x in 0..width {
            let Some(t) = dv.buffer.winner(x, y) else { continue };
            let fl = &flags[t];
            let class = if fl.degenerate || inverse[t].is_none() {
                ValidityClass::Degenerate
            } else if fl.fragile {
                ValidityClass::FragileRegion
            } else if fl.back_facing_src {
                // Faced away from the source camera: no photometric support at all.
                ValidityClass::NewlyVisible
            } else {
                let p = Pixel::new(x as f64 + 0.5, y as f64 + 0.5);
                let q = inverse[t].unwrap().apply(&p);
                match sample(image, &q, opts.sampling) {
                    None => ValidityClass::Degenerate,
                    Some(rgb) => {
                        let (sx, sy) = ((snap(q.x).floor() as usize).min(width - 1), (snap(q.y).floor() as usize).min(sv.buffer.height - 1));
                        match sv.buffer.winner(sx, sy) {
                            Some(w) if w != t && !shares_vertex(w, t) => ValidityClass::OccludedSource,
                            _ => {
                                rgba[x * 4..x * 4 + 4].copy_from_slice(&[rgb[0], rgb[1], rgb[2], 255]);
                                ValidityClass::Valid
                            }
                        }
                    }
                }
            };
            classes[x] = class;
        }
        (rgba, classes)
    });
    let mut data = Vec::with_capacity(width * cam.height as usize * 4);
    let mut classes = Vec::with_capacity(width * cam.height as usize);
    for (r, c) in rows {
        data.extend(r);
        classes.extend(c);
    }
    Ok(PseudoGT {
        image: RgbaImage::from_raw(cam.width, cam.height, data)?,
        mask: ValidityMask {
            width: cam.width,
            height: cam.height,
            classes,
        },
        triangle_flags: flags,
        maps,
    })
}
