//! Front-to-back over compositing of warped planes, and the full render path.

use rayon::prelude::*;

use crate::camera::{CameraIntrinsics, CameraPose};
use crate::error::{Error, Result};
use crate::mpi::MultiplaneImage;
use crate::raster::Image;
use crate::warp::{plane_setup, warp_plane, WarpedPlane};

/// Composited target view.
#[derive(Clone, Debug, PartialEq)]
pub struct RenderOutput {
    /// `sum_i C'_i a'_i prod_{j<i} (1 - a'_j)`, 3 channels.
    pub color: Image,
    /// `sum_i b_i a'_i prod_{j<i} (1 - a'_j)`, zero everywhere when no plane values were given.
    pub depth: Image,
    /// `prod_i (1 - a'_i)`: how much of the backdrop shows through.
    pub transmittance: Image,
}

impl RenderOutput {
    /// Color composited over a constant backdrop.
    pub fn over_backdrop(&self, backdrop: [f64; 3]) -> Image {
        let mut out = self.color.clone();
        let t = self.transmittance.data();
        for (px, &ti) in out.data_mut().chunks_mut(3).zip(t) {
            for (c, b) in px.iter_mut().zip(backdrop) {
                *c = (*c + ti * b).clamp(0.0, 1.0);
            }
        }
        out
    }
}

/// Canonical and target intrinsics of a render.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CameraPair {
    pub canonical: CameraIntrinsics,
    pub target: CameraIntrinsics,
}

impl CameraPair {
    pub fn same(k: CameraIntrinsics) -> Self {
        Self {
            canonical: k,
            target: k,
        }
    }
}

fn check_planes(planes: &[WarpedPlane]) -> Result<(usize, usize)> {
    let first = planes.first().ok_or(Error::EmptyPlaneList)?;
    let (w, h) = (first.alpha.width(), first.alpha.height());
    for (i, p) in planes.iter().enumerate() {
        if p.alpha.width() != w
            || p.alpha.height() != h
            || p.alpha.channels() != 1
            || p.color.width() != w
            || p.color.height() != h
            || p.color.channels() != 3
        {
            return Err(Error::ShapeMismatch(format!("warped plane {i}")));
        }
    }
    Ok((w, h))
}

/// Over-composites planes ordered near to far (index 0 closest).
pub fn over_composite(planes: &[WarpedPlane], values: Option<&[f64]>) -> Result<RenderOutput> {
    let (w, h) = check_planes(planes)?;
    if let Some(v) = values {
        if v.len() != planes.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} plane values for {} planes",
                v.len(),
                planes.len()
            )));
        }
    }
    let mut color = Image::zeros(w, h, 3);
    let mut depth = Image::zeros(w, h, 1);
    let mut transmittance = Image::zeros(w, h, 1);
    color
        .data_mut()
        .par_chunks_mut(w * 3)
        .zip(depth.data_mut().par_chunks_mut(w))
        .zip(transmittance.data_mut().par_chunks_mut(w))
        .enumerate()
        .for_each(|(y, ((crow, drow), trow))| {
            for x in 0..w {
                let mut t = 1.0;
                let mut rgb = [0.0; 3];
                let mut d = 0.0;
                for (i, p) in planes.iter().enumerate() {
                    let a = p.alpha.get(x, y, 0);
                    let weight = t * a;
                    for (acc, c) in rgb.iter_mut().zip(p.color.pixel(x, y)) {
                        *acc += weight * c;
                    }
                    if let Some(v) = values {
                        d += weight * v[i];
                    }
                    t *= 1.0 - a;
                }
                crow[x * 3..x * 3 + 3].copy_from_slice(&rgb);
                drow[x] = d;
                trow[x] = t;
            }
        });
    Ok(RenderOutput {
        color,
        depth,
        transmittance,
    })
}

/// Per-plane over weights `w_i = a'_i prod_{j<i} (1 - a'_j)`.
pub fn over_weights(alphas: &[&Image]) -> Result<Vec<Image>> {
    let first = alphas.first().ok_or(Error::EmptyPlaneList)?;
    let mut t = Image::filled(first.width(), first.height(), 1, 1.0);
    let mut out = Vec::with_capacity(alphas.len());
    for a in alphas {
        if !a.same_shape(first) {
            return Err(Error::ShapeMismatch("alpha stack".into()));
        }
        let w = Image::from_vec(
            a.width(),
            a.height(),
            1,
            t.data().iter().zip(a.data()).map(|(t, a)| t * a).collect(),
        )?;
        for (ti, ai) in t.data_mut().iter_mut().zip(a.data()) {
            *ti *= 1.0 - ai;
        }
        out.push(w);
    }
    Ok(out)
}

/// Warped planes and their target-frame distances `b_i` for a pose.
#[derive(Clone, Debug)]
pub struct RenderLayers {
    pub planes: Vec<WarpedPlane>,
    pub distances: Vec<f64>,
}

/// Warps every plane of `mpi` into the target view.
pub fn render_layers(mpi: &MultiplaneImage, cams: &CameraPair, pose: &CameraPose) -> Result<RenderLayers> {
    let setup = plane_setup(mpi, &cams.canonical, &cams.target, pose)?;
    let (w, h) = (cams.target.width, cams.target.height);
    let planes = setup
        .par_iter()
        .enumerate()
        .map(|(i, (_, hom))| warp_plane(mpi, i, hom, w, h))
        .collect();
    let distances = setup.iter().map(|(p, _)| p.b()).collect();
    Ok(RenderLayers { planes, distances })
}

/// Renders `mpi` from `pose` (target-to-canonical transform): warp every plane, then
/// over-composite color and depth.
pub fn render(mpi: &MultiplaneImage, cams: &CameraPair, pose: &CameraPose) -> Result<RenderOutput> {
    let layers = render_layers(mpi, cams, pose)?;
    over_composite(&layers.planes, Some(&layers.distances))
}
