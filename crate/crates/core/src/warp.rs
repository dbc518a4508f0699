//! Plane-induced homographies and bilinear resampling of MPI planes into a target view.

use nalgebra::{Matrix3, Vector3};
use rayon::prelude::*;

use crate::camera::{CameraIntrinsics, CameraPose, PlaneGeometry};
use crate::error::{Error, Result};
use crate::mpi::MultiplaneImage;
use crate::raster::Image;

/// Maps homogeneous target pixels `[x', y', 1]` to canonical pixels `[x, y, 1]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Homography(Matrix3<f64>);

impl Homography {
    pub fn new(matrix: Matrix3<f64>) -> Result<Self> {
        let norm = matrix.norm();
        if !(norm.is_finite() && norm > 0.0) || (matrix / norm).determinant().abs() <= 1e-12 {
            return Err(Error::Invariant("homography is singular".into()));
        }
        Ok(Self(matrix))
    }

    pub fn identity() -> Self {
        Self(Matrix3::identity())
    }

    pub fn matrix(&self) -> &Matrix3<f64> {
        &self.0
    }

    pub fn is_identity(&self) -> bool {
        self.0 == Matrix3::identity()
    }

    pub fn inverse(&self) -> Self {
        // Invertibility is checked at construction.
        Self(self.0.try_inverse().expect("homography is invertible"))
    }

    /// Maps a pixel; `None` when the point lands at or behind the line at infinity.
    #[inline]
    pub fn apply(&self, x: f64, y: f64) -> Option<(f64, f64)> {
        let m = &self.0;
        let w = m[(2, 0)] * x + m[(2, 1)] * y + m[(2, 2)];
        if !(w > 0.0) {
            return None;
        }
        let u = (m[(0, 0)] * x + m[(0, 1)] * y + m[(0, 2)]) / w;
        let v = (m[(1, 0)] * x + m[(1, 1)] * y + m[(1, 2)]) / w;
        Some((u, v))
    }
}

/// Expresses the canonical plane `z = depth` in the target camera frame.
///
/// `relative_pose` maps target-frame points into the canonical frame.
pub fn plane_in_target_frame(depth: f64, relative_pose: &CameraPose) -> Result<PlaneGeometry> {
    let r = relative_pose.rotation();
    let t = relative_pose.translation();
    // e_z . (R X + t) = d  <=>  (R^T e_z) . X = d - t_z
    let normal = r.transpose() * Vector3::z();
    let b = depth - t.z;
    if !(b > 0.0) {
        return Err(Error::PlaneBehindCamera(b));
    }
    PlaneGeometry::new(normal.normalize(), b)
}

/// Homography from target pixels to canonical pixels induced by `plane`:
/// `K_cano (R + t n^T / b) K_tgt^-1`.
///
/// With `normal . X_tgt = b` on the plane, `X_cano = R X_tgt + t (n . X_tgt) / b`.
pub fn plane_homography(
    k_cano: &CameraIntrinsics,
    k_tgt: &CameraIntrinsics,
    relative_pose: &CameraPose,
    plane: &PlaneGeometry,
) -> Result<Homography> {
    let k_tgt_inv = k_tgt.inverse_matrix()?;
    k_cano.validate()?;
    if relative_pose.is_identity() && k_cano.matrix() == k_tgt.matrix() {
        return Ok(Homography::identity());
    }
    let r = relative_pose.rotation();
    let t = relative_pose.translation();
    let m = k_cano.matrix() * (r + t * plane.normal().transpose() / plane.b()) * k_tgt_inv;
    Homography::new(m)
}

/// How samples outside `[0, W-1] x [0, H-1]` are treated.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Border {
    /// Out-of-bounds samples are zero (alpha: empty space).
    Zero,
    /// Coordinates are clamped to the image (color: no dark fringes).
    Clamp,
}

/// Pixel indices and weights of a bilinear lookup. Weights sum to 1.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BilinearTaps {
    pub taps: [(usize, usize, f64); 4],
}

impl BilinearTaps {
    /// Taps for a point, or `None` if the point is outside the image under `Border::Zero`
    /// semantics or is not finite.
    pub fn at(x: f64, y: f64, width: usize, height: usize, border: Border) -> Option<Self> {
        if !(x.is_finite() && y.is_finite()) || width == 0 || height == 0 {
            return None;
        }
        let (max_x, max_y) = ((width - 1) as f64, (height - 1) as f64);
        let (x, y) = match border {
            Border::Zero => {
                if x < 0.0 || y < 0.0 || x > max_x || y > max_y {
                    return None;
                }
                (x, y)
            }
            Border::Clamp => (x.clamp(0.0, max_x), y.clamp(0.0, max_y)),
        };
        let (x0, fx) = split_coord(x, width);
        let (y0, fy) = split_coord(y, height);
        let x1 = (x0 + 1).min(width - 1);
        let y1 = (y0 + 1).min(height - 1);
        Some(Self {
            taps: [
                (x0, y0, (1.0 - fx) * (1.0 - fy)),
                (x1, y0, fx * (1.0 - fy)),
                (x0, y1, (1.0 - fx) * fy),
                (x1, y1, fx * fy),
            ],
        })
    }
}

#[inline]
fn split_coord(v: f64, len: usize) -> (usize, f64) {
    let base = v.floor();
    let mut i = base as usize;
    let mut frac = v - base;
    if i >= len - 1 {
        i = len - 1;
        frac = 0.0;
    }
    (i, frac)
}

/// Bilinear interpolation of all channels at continuous pixel coordinates `(x, y)`,
/// written into `out`.
pub fn bilinear_sample_into(image: &Image, x: f64, y: f64, border: Border, out: &mut [f64]) {
    debug_assert_eq!(out.len(), image.channels());
    out.fill(0.0);
    if let Some(t) = BilinearTaps::at(x, y, image.width(), image.height(), border) {
        for &(px, py, w) in &t.taps {
            if w == 0.0 {
                continue;
            }
            for (o, v) in out.iter_mut().zip(image.pixel(px, py)) {
                *o += w * v;
            }
        }
    }
}

pub fn bilinear_sample(image: &Image, x: f64, y: f64, border: Border) -> Vec<f64> {
    let mut out = vec![0.0; image.channels()];
    bilinear_sample_into(image, x, y, border, &mut out);
    out
}

/// One plane resampled into the target view.
#[derive(Clone, Debug, PartialEq)]
pub struct WarpedPlane {
    pub color: Image,
    pub alpha: Image,
}

/// Resamples plane `index` (0-based) of `mpi` into an `out_width x out_height` target image.
/// Each target pixel reads the canonical plane at `homography(p')`.
pub fn warp_plane(
    mpi: &MultiplaneImage,
    index: usize,
    homography: &Homography,
    out_width: usize,
    out_height: usize,
) -> WarpedPlane {
    let color_src = mpi.plane_color(index);
    let alpha_src = mpi.alpha(index);
    if homography.is_identity() && out_width == mpi.width() && out_height == mpi.height() {
        return WarpedPlane {
            color: color_src.clone(),
            alpha: alpha_src.clone(),
        };
    }
    let mut color = Image::zeros(out_width, out_height, 3);
    let mut alpha = Image::zeros(out_width, out_height, 1);
    color
        .data_mut()
        .par_chunks_mut(out_width * 3)
        .zip(alpha.data_mut().par_chunks_mut(out_width))
        .enumerate()
        .for_each(|(y, (crow, arow))| {
            for x in 0..out_width {
                let Some((u, v)) = homography.apply(x as f64, y as f64) else {
                    continue;
                };
                bilinear_sample_into(color_src, u, v, Border::Clamp, &mut crow[x * 3..x * 3 + 3]);
                bilinear_sample_into(alpha_src, u, v, Border::Zero, &mut arow[x..x + 1]);
            }
        });
    WarpedPlane { color, alpha }
}

/// Per-plane target geometry and homographies for a render.
pub(crate) fn plane_setup(
    mpi: &MultiplaneImage,
    k_cano: &CameraIntrinsics,
    k_tgt: &CameraIntrinsics,
    pose: &CameraPose,
) -> Result<Vec<(PlaneGeometry, Homography)>> {
    mpi.depths()
        .iter()
        .map(|&d| {
            let plane = plane_in_target_frame(d, pose)?;
            let h = plane_homography(k_cano, k_tgt, pose, &plane)?;
            Ok((plane, h))
        })
        .collect()
}
