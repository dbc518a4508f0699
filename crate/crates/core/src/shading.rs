//! Normals from depth, Lambertian shading, the shading schedule and the depth-accuracy metric.

use nalgebra::Vector3;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

use crate::camera::CameraIntrinsics;
use crate::error::{Error, Result};
use crate::raster::Image;

/// Per-pixel unit normals of a `z`-depth map.
///
/// Pixels are back-projected with the intrinsics and the normal is the normalized cross
/// product of the horizontal and vertical tangents (central differences, one-sided at the
/// borders). Normals are oriented along the viewing direction, so a fronto-parallel
/// surface yields `(0, 0, 1)`. This is the frame in which light directions are given.
pub fn normal_map(depth: &Image, k: &CameraIntrinsics) -> Image {
    assert_eq!(depth.channels(), 1, "depth map must have one channel");
    let (w, h) = (depth.width(), depth.height());
    let point = |x: usize, y: usize| k.unproject(x as f64, y as f64) * depth.get(x, y, 0);
    let tangent = |lo: Vector3<f64>, hi: Vector3<f64>, span: usize| {
        if span == 0 {
            Vector3::zeros()
        } else {
            (hi - lo) / span as f64
        }
    };
    let mut out = Image::zeros(w, h, 3);
    out.data_mut()
        .par_chunks_mut(w * 3)
        .enumerate()
        .for_each(|(y, row)| {
            let (y0, y1) = (y.saturating_sub(1), (y + 1).min(h - 1));
            for x in 0..w {
                let (x0, x1) = (x.saturating_sub(1), (x + 1).min(w - 1));
                let du = tangent(point(x0, y), point(x1, y), x1 - x0);
                let dv = tangent(point(x, y0), point(x, y1), y1 - y0);
                let mut n = du.cross(&dv);
                let len = n.norm();
                n = if len > 0.0 && len.is_finite() {
                    n / len
                } else {
                    Vector3::z()
                };
                if n.z < 0.0 {
                    n = -n;
                }
                row[x * 3..x * 3 + 3].copy_from_slice(n.as_slice());
            }
        });
    out
}

/// Ambient/diffuse coefficients and light direction.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ShadingParams {
    pub ambient: f64,
    pub diffuse: f64,
    pub light_dir: Vector3<f64>,
}

impl ShadingParams {
    pub fn new(ambient: f64, diffuse: f64, light_dir: Vector3<f64>) -> Result<Self> {
        if !(ambient >= 0.0 && diffuse >= 0.0) {
            return Err(Error::Invariant(format!(
                "shading coefficients must be non-negative (k_a = {ambient}, k_d = {diffuse})"
            )));
        }
        if !((light_dir.norm() - 1.0).abs() <= 1e-9) {
            return Err(Error::Invariant("light direction must be unit length".into()));
        }
        Ok(Self {
            ambient,
            diffuse,
            light_dir,
        })
    }
}

/// `C * (k_a + k_d * max(0, l . n))`, clamped to `[0, 1]`.
pub fn apply_shading(color: &Image, normals: &Image, params: &ShadingParams) -> Result<Image> {
    if color.channels() != 3 || normals.channels() != 3 || !color.same_size(normals) {
        return Err(Error::ShapeMismatch("color and normal map".into()));
    }
    let mut out = color.clone();
    for (c, n) in out.data_mut().chunks_mut(3).zip(normals.data().chunks(3)) {
        let lambert = params.light_dir.dot(&Vector3::new(n[0], n[1], n[2])).max(0.0);
        let factor = params.ambient + params.diffuse * lambert;
        for v in c.iter_mut() {
            *v = (*v * factor).clamp(0.0, 1.0);
        }
    }
    Ok(out)
}

/// Horizontal and vertical lighting angles in radians.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LightAngles {
    pub horizontal: f64,
    pub vertical: f64,
}

impl LightAngles {
    pub const HORIZONTAL_MEAN: f64 = 0.0;
    pub const HORIZONTAL_STD: f64 = 0.2;
    pub const VERTICAL_MEAN: f64 = 0.2;
    pub const VERTICAL_STD: f64 = 0.05;

    /// Unit direction in camera coordinates: zero angles give `(0, 0, 1)`, positive
    /// vertical angles tilt upwards (`-y`).
    pub fn direction(&self) -> Vector3<f64> {
        let (sh, ch) = self.horizontal.sin_cos();
        let (sv, cv) = self.vertical.sin_cos();
        Vector3::new(cv * sh, -sv, cv * ch)
    }
}

pub fn sample_light_angles<R: Rng + ?Sized>(rng: &mut R) -> LightAngles {
    let h = Normal::new(LightAngles::HORIZONTAL_MEAN, LightAngles::HORIZONTAL_STD).expect("valid std");
    let v = Normal::new(LightAngles::VERTICAL_MEAN, LightAngles::VERTICAL_STD).expect("valid std");
    LightAngles {
        horizontal: h.sample(rng),
        vertical: v.sample(rng),
    }
}

/// Random training-time light direction.
pub fn sample_lighting<R: Rng + ?Sized>(rng: &mut R) -> Vector3<f64> {
    sample_light_angles(rng).direction()
}

/// `(k_a, k_d)` at a training iteration: `(1, 0)` through iteration 1000, a linear ramp
/// over 1001..=2000, then `(0.9, 0.1)`.
pub fn shading_schedule(iteration: u64) -> (f64, f64) {
    const RAMP_START: u64 = 1000;
    const RAMP_END: u64 = 2000;
    if iteration <= RAMP_START {
        (1.0, 0.0)
    } else if iteration >= RAMP_END {
        (0.9, 0.1)
    } else {
        let t = (iteration - RAMP_START) as f64 / (RAMP_END - RAMP_START) as f64;
        (1.0 - 0.1 * t, 0.1 * t)
    }
}

/// Mean squared difference of two depth maps after standardizing each to zero mean and
/// unit (population) variance over the masked pixels.
pub fn normalized_depth_mse(pred: &Image, reference: &Image, mask: &[bool]) -> Result<f64> {
    if pred.channels() != 1 || !pred.same_shape(reference) || mask.len() != pred.data().len() {
        return Err(Error::ShapeMismatch("depth maps and mask".into()));
    }
    let pick = |img: &Image| -> Vec<f64> {
        img.data()
            .iter()
            .zip(mask)
            .filter(|(_, &m)| m)
            .map(|(&v, _)| v)
            .collect()
    };
    let (p, r) = (pick(pred), pick(reference));
    if p.len() < 2 {
        return Err(Error::DegenerateMask(format!("{} masked pixels", p.len())));
    }
    let standardize = |v: &[f64], what: &str| -> Result<Vec<f64>> {
        let n = v.len() as f64;
        let mean = v.iter().sum::<f64>() / n;
        let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
        if !(var > 0.0) {
            return Err(Error::DegenerateMask(format!("{what} has zero variance")));
        }
        let sd = var.sqrt();
        Ok(v.iter().map(|x| (x - mean) / sd).collect())
    };
    let (p, r) = (standardize(&p, "prediction")?, standardize(&r, "reference")?);
    Ok(p.iter().zip(&r).map(|(a, b)| (a - b).powi(2)).sum::<f64>() / p.len() as f64)
}
