//! Procedural MPIs with known per-pixel depth, for tests and demos.

use std::str::FromStr;

use nalgebra::Vector3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::camera::CameraIntrinsics;
use crate::error::{Error, Result};
use crate::mpi::{place_planes_disparity, MultiplaneImage};
use crate::raster::Image;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SceneKind {
    /// Opaque disks on their own planes in front of an opaque back wall.
    LayeredDisks,
    /// A checkerboard card on the middle plane in front of a back wall.
    CheckerCard,
    /// A sphere sliced into soft per-plane occupancy; no back wall.
    SphereBillboards,
}

impl SceneKind {
    pub const ALL: [SceneKind; 3] = [SceneKind::LayeredDisks, SceneKind::CheckerCard, SceneKind::SphereBillboards];

    pub fn name(self) -> &'static str {
        match self {
            SceneKind::LayeredDisks => "layered-disks",
            SceneKind::CheckerCard => "checker-card",
            SceneKind::SphereBillboards => "sphere-billboards",
        }
    }
}

impl FromStr for SceneKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::UnknownSceneKind(s.to_string()))
    }
}

impl std::fmt::Display for SceneKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SynthParams {
    pub width: usize,
    pub height: usize,
    /// Planes placed evenly in disparity; disk depths are merged into this set.
    pub planes: usize,
    pub near: f64,
    pub far: f64,
    /// Horizontal field of view in degrees.
    pub fov_deg: f64,
    /// Depths of the disks in the layered-disks scene, front to back.
    pub disk_depths: Vec<f64>,
}

impl Default for SynthParams {
    fn default() -> Self {
        Self {
            width: 128,
            height: 128,
            planes: 32,
            near: 0.95,
            far: 1.12,
            fov_deg: 30.0,
            disk_depths: vec![1.0, 1.1],
        }
    }
}

/// A disk, card or sphere in canonical camera coordinates.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SceneObject {
    pub center: Vector3<f64>,
    /// World-space radius (half diagonal for the card).
    pub radius: f64,
    pub color: [f64; 3],
}

#[derive(Clone, Debug, PartialEq)]
pub struct SynthScene {
    pub mpi: MultiplaneImage,
    pub intrinsics: CameraIntrinsics,
    /// Depth of the first surface along each canonical ray (`far` where nothing is hit).
    pub depth: Image,
    pub objects: Vec<SceneObject>,
}

const SUPERSAMPLE: usize = 4;

/// Fraction of the pixel footprint at `(x, y)` inside `inside(u, v)`.
fn coverage(x: usize, y: usize, inside: impl Fn(f64, f64) -> bool) -> f64 {
    let mut hits = 0;
    for sy in 0..SUPERSAMPLE {
        for sx in 0..SUPERSAMPLE {
            let u = x as f64 + (sx as f64 + 0.5) / SUPERSAMPLE as f64 - 0.5;
            let v = y as f64 + (sy as f64 + 0.5) / SUPERSAMPLE as f64 - 0.5;
            hits += inside(u, v) as usize;
        }
    }
    hits as f64 / (SUPERSAMPLE * SUPERSAMPLE) as f64
}

fn random_color(rng: &mut ChaCha8Rng) -> [f64; 3] {
    [0; 3].map(|_| rng.random_range(0.15..0.95))
}

fn backdrop(w: usize, h: usize, a: [f64; 3], b: [f64; 3]) -> Image {
    Image::from_fn(w, h, 3, |x, y, p| {
        let t = 0.5 * (x as f64 / w as f64 + y as f64 / h as f64);
        for c in 0..3 {
            p[c] = a[c] * (1.0 - t) + b[c] * t;
        }
    })
}

impl SynthParams {
    fn validate(&self) -> Result<()> {
        if self.width < 8 || self.height < 8 || self.planes < 2 {
            return Err(Error::InvalidConfig(format!(
                "synthetic scenes need at least 8x8 pixels and 2 planes (got {}x{}, {})",
                self.width, self.height, self.planes
            )));
        }
        if !(self.near > 0.0 && self.near < self.far) {
            return Err(Error::InvalidConfig(format!("near {} / far {}", self.near, self.far)));
        }
        Ok(())
    }
}

pub fn synth_scene(kind: SceneKind, params: &SynthParams, seed: u64) -> Result<SynthScene> {
    params.validate()?;
    let k = CameraIntrinsics::from_fov(params.width, params.height, params.fov_deg)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    match kind {
        SceneKind::LayeredDisks => layered_disks(params, &k, &mut rng),
        SceneKind::CheckerCard => checker_card(params, &k, &mut rng),
        SceneKind::SphereBillboards => sphere_billboards(params, &k, &mut rng),
    }
}

/// Disparity planes with `extra` depths merged in (replacing grid planes closer than 1e-9).
fn merged_depths(params: &SynthParams, extra: &[f64]) -> Result<Vec<f64>> {
    let mut depths = place_planes_disparity(params.planes, params.near, params.far)?;
    depths.retain(|d| extra.iter().all(|e| (d - e).abs() > 1e-9));
    depths.extend_from_slice(extra);
    depths.sort_by(f64::total_cmp);
    Ok(depths)
}

fn layered_disks(params: &SynthParams, k: &CameraIntrinsics, rng: &mut ChaCha8Rng) -> Result<SynthScene> {
    let (w, h) = (params.width, params.height);
    let disk_depths = &params.disk_depths;
    if disk_depths.is_empty()
        || disk_depths.windows(2).any(|p| p[0] >= p[1])
        || disk_depths.iter().any(|&d| !(d > params.near && d < params.far))
    {
        return Err(Error::InvalidConfig(format!(
            "disk depths {disk_depths:?} must be increasing and inside ({}, {})",
            params.near, params.far
        )));
    }
    let n = disk_depths.len();
    let radius_px = w as f64 / (3.0 * (n + 1) as f64);
    let jitter = w as f64 / 64.0;
    let disks: Vec<(f64, f64, f64, [f64; 3])> = disk_depths
        .iter()
        .enumerate()
        .map(|(i, &d)| {
            let cx = w as f64 * (i + 1) as f64 / (n + 1) as f64 - 0.5 + rng.random_range(-jitter..jitter);
            let cy = h as f64 / 2.0 - 0.5 + rng.random_range(-jitter..jitter);
            (cx, cy, d, random_color(rng))
        })
        .collect();
    let (bg_a, bg_b) = (random_color(rng), random_color(rng));
    let depths = merged_depths(params, disk_depths)?;
    let covers: Vec<Image> = disks
        .iter()
        .map(|&(cx, cy, _, _)| {
            Image::from_fn(w, h, 1, |x, y, p| {
                p[0] = coverage(x, y, |u, v| (u - cx).powi(2) + (v - cy).powi(2) <= radius_px * radius_px);
            })
        })
        .collect();
    let mut color = backdrop(w, h, bg_a, bg_b);
    let mut depth = Image::filled(w, h, 1, params.far);
    for (i, (_, _, d, c)) in disks.iter().enumerate().rev() {
        for y in 0..h {
            for x in 0..w {
                if covers[i].get(x, y, 0) > 0.0 {
                    color.pixel_mut(x, y).copy_from_slice(c);
                    depth.set(x, y, 0, *d);
                }
            }
        }
    }
    let last = depths.len() - 1;
    let alphas = depths
        .iter()
        .enumerate()
        .map(|(i, d)| {
            if i == last {
                Image::filled(w, h, 1, 1.0)
            } else if let Some(j) = disk_depths.iter().position(|e| e == d) {
                covers[j].clone()
            } else {
                Image::zeros(w, h, 1)
            }
        })
        .collect();
    let objects = disks
        .iter()
        .map(|&(cx, cy, d, c)| SceneObject {
            center: k.unproject(cx, cy) * d,
            radius: radius_px * d / k.fx,
            color: c,
        })
        .collect();
    Ok(SynthScene {
        mpi: MultiplaneImage::new(color, alphas, depths, params.near, params.far)?,
        intrinsics: *k,
        depth,
        objects,
    })
}

fn checker_card(params: &SynthParams, k: &CameraIntrinsics, rng: &mut ChaCha8Rng) -> Result<SynthScene> {
    let (w, h) = (params.width, params.height);
    let depths = place_planes_disparity(params.planes, params.near, params.far)?;
    let card = depths.len() / 2;
    let dc = depths[card];
    let (x0, x1) = (w as f64 / 5.0 - 0.5, 4.0 * w as f64 / 5.0 - 0.5);
    let (y0, y1) = (h as f64 / 5.0 - 0.5, 4.0 * h as f64 / 5.0 - 0.5);
    let square = (w / 8).max(1) as f64;
    let phase = rng.random_range(0.0..square);
    let (ca, cb) = (random_color(rng), random_color(rng));
    let (bg_a, bg_b) = (random_color(rng), random_color(rng));
    let cover = Image::from_fn(w, h, 1, |x, y, p| {
        p[0] = coverage(x, y, |u, v| (x0..=x1).contains(&u) && (y0..=y1).contains(&v));
    });
    let mut color = backdrop(w, h, bg_a, bg_b);
    let mut depth = Image::filled(w, h, 1, params.far);
    for y in 0..h {
        for x in 0..w {
            if cover.get(x, y, 0) > 0.0 {
                let cell = ((x as f64 + phase) / square).floor() as i64 + ((y as f64 + phase) / square).floor() as i64;
                color
                    .pixel_mut(x, y)
                    .copy_from_slice(if cell.rem_euclid(2) == 0 { &ca } else { &cb });
                depth.set(x, y, 0, dc);
            }
        }
    }
    let last = depths.len() - 1;
    let alphas = (0..depths.len())
        .map(|i| match i {
            _ if i == last => Image::filled(w, h, 1, 1.0),
            _ if i == card => cover.clone(),
            _ => Image::zeros(w, h, 1),
        })
        .collect();
    let center = k.unproject(0.5 * (x0 + x1), 0.5 * (y0 + y1)) * dc;
    let corner = k.unproject(x0, y0) * dc;
    Ok(SynthScene {
        mpi: MultiplaneImage::new(color, alphas, depths, params.near, params.far)?,
        intrinsics: *k,
        depth,
        objects: vec![SceneObject {
            center,
            radius: (corner - center).norm(),
            color: ca,
        }],
    })
}

fn sphere_billboards(params: &SynthParams, k: &CameraIntrinsics, rng: &mut ChaCha8Rng) -> Result<SynthScene> {
    let (w, h) = (params.width, params.height);
    let depths = place_planes_disparity(params.planes, params.near, params.far)?;
    let zc = 0.5 * (params.near + params.far);
    let radius = 0.35 * (params.far - params.near);
    let lateral = 0.1 * radius;
    let center = Vector3::new(rng.random_range(-lateral..lateral), rng.random_range(-lateral..lateral), zc);
    let base = random_color(rng);
    let (cu, cv) = k.project(&center);
    let r_px = k.fx.max(k.fy) * radius / (zc - radius);
    if cu - r_px < 1.0 || cu + r_px > (w - 2) as f64 || cv - r_px < 1.0 || cv + r_px > (h - 2) as f64 {
        return Err(Error::InvalidConfig(format!(
            "sphere of {r_px:.1} px does not fit a {w}x{h} view; widen the field of view"
        )));
    }
    // Linear ramp over two voxels in the coarser of plane spacing and pixel footprint.
    let spacing = depths.windows(2).map(|p| p[1] - p[0]).fold(0.0, f64::max);
    let ramp = 2.0 * spacing.max(params.far / k.fx.min(k.fy));
    let alphas = depths
        .par_iter()
        .map(|&d| {
            Image::from_fn(w, h, 1, |x, y, p| {
                let q = k.unproject(x as f64, y as f64) * d;
                p[0] = (0.5 + (radius - (q - center).norm()) / ramp).clamp(0.0, 1.0);
            })
        })
        .collect::<Vec<_>>();
    let light = Vector3::new(-0.3, -0.4, -1.0).normalize();
    let mut color = Image::filled(w, h, 3, 0.5);
    let mut depth = Image::filled(w, h, 1, params.far);
    for y in 0..h {
        for x in 0..w {
            let ray = k.unproject(x as f64, y as f64);
            let (a, b, c) = (ray.norm_squared(), ray.dot(&center), center.norm_squared() - radius * radius);
            let disc = b * b - a * c;
            if disc < 0.0 {
                continue;
            }
            let t = (b - disc.sqrt()) / a;
            let normal = (ray * t - center) / radius;
            let shade = 0.3 + 0.7 * normal.dot(&light).max(0.0);
            color.pixel_mut(x, y).copy_from_slice(&base.map(|v| v * shade));
            depth.set(x, y, 0, t.clamp(params.near, params.far));
        }
    }
    Ok(SynthScene {
        mpi: MultiplaneImage::new(color, alphas, depths, params.near, params.far)?,
        intrinsics: *k,
        depth,
        objects: vec![SceneObject {
            center,
            radius,
            color: base,
        }],
    })
}
