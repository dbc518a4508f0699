use nalgebra::Vector3;
use rayon::prelude::*;

use crate::camera::CameraIntrinsics;
use crate::error::{Error, Result};
use crate::mpi::MultiplaneImage;
use crate::warp::{bilinear_sample, Border};

/// Scalar field in `[0, 1]` on a regular `nx x ny x nz` grid, x fastest.
///
/// Grid point `(i, j, k)` sits at `origin + spacing .* (i, j, k)`. When `projection` is set
/// those coordinates are `(pixel u, pixel v, depth)` in the canonical camera and mesh
/// vertices are back-projected through it, so every depth slice covers the frustum
/// cross-section.
#[derive(Clone, Debug, PartialEq)]
pub struct OccupancyVolume {
    dims: [usize; 3],
    values: Vec<f64>,
    spacing: Vector3<f64>,
    origin: Vector3<f64>,
    projection: Option<CameraIntrinsics>,
}

impl OccupancyVolume {
    pub fn new(
        dims: [usize; 3],
        values: Vec<f64>,
        spacing: Vector3<f64>,
        origin: Vector3<f64>,
    ) -> Result<Self> {
        if dims.iter().any(|&d| d == 0) {
            return Err(Error::InvalidRange(format!("empty grid {dims:?}")));
        }
        let n = dims[0] * dims[1] * dims[2];
        if values.len() != n {
            return Err(Error::ShapeMismatch(format!(
                "{} values for a {}x{}x{} grid",
                values.len(),
                dims[0],
                dims[1],
                dims[2]
            )));
        }
        if !values.iter().all(|v| (0.0..=1.0).contains(v)) {
            return Err(Error::Invariant("occupancy values must lie in [0, 1]".into()));
        }
        if !spacing.iter().all(|s| s.is_finite() && *s > 0.0) {
            return Err(Error::InvalidRange(format!("voxel spacing {spacing:?}")));
        }
        Ok(Self {
            dims,
            values,
            spacing,
            origin,
            projection: None,
        })
    }

    /// Samples `f` at every grid point.
    pub fn from_fn(
        dims: [usize; 3],
        spacing: Vector3<f64>,
        origin: Vector3<f64>,
        f: impl Fn(Vector3<f64>) -> f64 + Sync,
    ) -> Result<Self> {
        let [nx, ny, _] = dims;
        let values = (0..dims.iter().product::<usize>())
            .into_par_iter()
            .map(|idx| {
                let (i, j, k) = (idx % nx, (idx / nx) % ny, idx / (nx * ny));
                f(origin + spacing.component_mul(&Vector3::new(i as f64, j as f64, k as f64)))
            })
            .collect();
        Self::new(dims, values, spacing, origin)
    }

    pub fn with_projection(mut self, k: CameraIntrinsics) -> Self {
        self.projection = Some(k);
        self
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn spacing(&self) -> &Vector3<f64> {
        &self.spacing
    }

    pub fn origin(&self) -> &Vector3<f64> {
        &self.origin
    }

    pub fn projection(&self) -> Option<&CameraIntrinsics> {
        self.projection.as_ref()
    }

    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        i + self.dims[0] * (j + self.dims[1] * k)
    }

    pub fn get(&self, i: usize, j: usize, k: usize) -> f64 {
        self.values[self.index(i, j, k)]
    }

    /// Grid coordinates to volume coordinates (before any back-projection).
    pub fn grid_to_volume(&self, g: Vector3<f64>) -> Vector3<f64> {
        self.origin + self.spacing.component_mul(&g)
    }

    /// Volume coordinates to output space: identity, or `depth * K^-1 (u, v, 1)`.
    pub fn volume_to_world(&self, p: Vector3<f64>) -> Vector3<f64> {
        match &self.projection {
            None => p,
            Some(k) => k.unproject(p.x, p.y) * p.z,
        }
    }

    pub fn max_value(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }

    /// Adds a layer of zeros on every side so closed surfaces cannot touch the border.
    pub fn padded(&self) -> Self {
        let [nx, ny, nz] = self.dims;
        let dims = [nx + 2, ny + 2, nz + 2];
        let mut values = vec![0.0; dims[0] * dims[1] * dims[2]];
        for k in 0..nz {
            for j in 0..ny {
                let dst = 1 + dims[0] * (j + 1 + dims[1] * (k + 1));
                let src = self.index(0, j, k);
                values[dst..dst + nx].copy_from_slice(&self.values[src..src + nx]);
            }
        }
        Self {
            dims,
            values,
            spacing: self.spacing,
            origin: self.origin - self.spacing,
            projection: self.projection,
        }
    }
}

/// Resamples the raw alpha stack (not the over-weights) onto a grid.
///
/// x/y span the pixel range `[0, W-1] x [0, H-1]`, z spans `[d_1, d_L]` (or
/// `[near, far]` for a single plane). Between adjacent planes values interpolate linearly
/// in depth; outside `[d_1, d_L]` they are zero. The volume back-projects through `k`.
pub fn build_occupancy(
    mpi: &MultiplaneImage,
    k: &CameraIntrinsics,
    grid: [usize; 3],
) -> Result<OccupancyVolume> {
    let [nx, ny, nz] = grid;
    if nx < 2 || ny < 2 || nz < 2 {
        return Err(Error::InvalidRange(format!(
            "occupancy grid {nx}x{ny}x{nz} needs at least 2 samples per axis"
        )));
    }
    let depths = mpi.depths();
    let l = depths.len();
    let (z0, z1) = if l >= 2 {
        (depths[0], depths[l - 1])
    } else {
        (mpi.near(), mpi.far())
    };
    let spacing = Vector3::new(
        (mpi.width().max(2) - 1) as f64 / (nx - 1) as f64,
        (mpi.height().max(2) - 1) as f64 / (ny - 1) as f64,
        (z1 - z0) / (nz - 1) as f64,
    );
    let origin = Vector3::new(0.0, 0.0, z0);
    let slice = nx * ny;
    let mut values = vec![0.0; slice * nz];
    values
        .par_chunks_mut(slice)
        .enumerate()
        .for_each(|(kz, out)| {
            let z = if kz == nz - 1 { z1 } else { z0 + spacing.z * kz as f64 };
            let Some((i, t)) = bracket(depths, z) else {
                return;
            };
            for (idx, o) in out.iter_mut().enumerate() {
                let (u, v) = (spacing.x * (idx % nx) as f64, spacing.y * (idx / nx) as f64);
                let a = bilinear_sample(mpi.alpha(i), u, v, Border::Clamp)[0];
                *o = if t == 0.0 {
                    a
                } else {
                    let b = bilinear_sample(mpi.alpha(i + 1), u, v, Border::Clamp)[0];
                    (1.0 - t) * a + t * b
                };
            }
        });
    Ok(OccupancyVolume::new(grid, values, spacing, origin)?.with_projection(*k))
}

/// Plane index `i` and weight `t` with `z = (1 - t) d_i + t d_{i+1}`.
fn bracket(depths: &[f64], z: f64) -> Option<(usize, f64)> {
    let last = depths.len() - 1;
    if z < depths[0] || z > depths[last] {
        return None;
    }
    let i = depths.partition_point(|&d| d <= z).saturating_sub(1);
    if i == last || depths[i] == z {
        return Some((i, 0.0));
    }
    Some((i, (z - depths[i]) / (depths[i + 1] - depths[i])))
}
