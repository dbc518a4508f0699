//! Central finite-difference verification of analytic gradients, and the render
//! gradient suite built on it.

use nalgebra::Vector3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::camera::{CameraIntrinsics, CameraPose};
use crate::composite::{render, CameraPair};
use crate::error::Result;
use crate::grad::{flatten_mpi_params, mean_color_loss, mean_color_upstream, mpi_from_params, render_backward};
use crate::mpi::{place_planes_disparity, MultiplaneImage};
use crate::raster::Image;

/// Step, relative tolerance and the denominator floor of the relative error.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FdConfig {
    pub step: f64,
    pub tolerance: f64,
    pub floor: f64,
}

impl Default for FdConfig {
    fn default() -> Self {
        Self {
            step: 1e-4,
            tolerance: 1e-3,
            floor: 1e-6,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FdEntry {
    pub index: usize,
    pub analytic: f64,
    pub numeric: f64,
    /// `|analytic - numeric| / max(|numeric|, floor)`
    pub rel_error: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FdReport {
    pub entries: Vec<FdEntry>,
    pub tolerance: f64,
}

impl FdReport {
    pub fn failures(&self) -> impl Iterator<Item = &FdEntry> {
        self.entries.iter().filter(move |e| !(e.rel_error <= self.tolerance))
    }

    pub fn passed(&self) -> bool {
        self.failures().next().is_none()
    }

    pub fn max_rel_error(&self) -> f64 {
        self.entries.iter().map(|e| e.rel_error).fold(0.0, f64::max)
    }

    /// Largest relative error over `range` of parameter indices.
    pub fn max_rel_error_in(&self, range: std::ops::Range<usize>) -> f64 {
        self.entries
            .iter()
            .filter(|e| range.contains(&e.index))
            .map(|e| e.rel_error)
            .fold(0.0, f64::max)
    }
}

/// Compares `analytic[i]` with `(f(p + h e_i) - f(p - h e_i)) / 2h` for every parameter.
pub fn finite_diff_check(
    forward: impl Fn(&[f64]) -> f64,
    params: &[f64],
    analytic: &[f64],
    config: &FdConfig,
) -> FdReport {
    assert_eq!(params.len(), analytic.len(), "one analytic gradient per parameter");
    let mut probe = params.to_vec();
    let entries = analytic
        .iter()
        .enumerate()
        .map(|(i, &g)| {
            let orig = probe[i];
            probe[i] = orig + config.step;
            let plus = forward(&probe);
            probe[i] = orig - config.step;
            let minus = forward(&probe);
            probe[i] = orig;
            let numeric = (plus - minus) / (2.0 * config.step);
            FdEntry {
                index: i,
                analytic: g,
                numeric,
                rel_error: (g - numeric).abs() / numeric.abs().max(config.floor),
            }
        })
        .collect();
    FdReport {
        entries,
        tolerance: config.tolerance,
    }
}

/// One randomized render-gradient problem.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GradCase {
    pub seed: u64,
    pub width: usize,
    pub height: usize,
    pub planes: usize,
}

/// Random MPI (values kept away from 0 and 1 so probes stay valid), camera and pose.
///
/// Rotations stay below 10 degrees and translations below 0.02, so every plane remains in
/// front of the target camera.
pub fn random_problem(case: &GradCase) -> Result<(MultiplaneImage, CameraPair, CameraPose)> {
    let mut rng = ChaCha8Rng::seed_from_u64(case.seed);
    let (w, h) = (case.width, case.height);
    let mut img = |c| Image::from_fn(w, h, c, |_, _, p| p.iter_mut().for_each(|v| *v = rng.random_range(0.05..0.95)));
    let color = img(3);
    let alphas = (0..case.planes).map(|_| img(1)).collect();
    let mpi = MultiplaneImage::new(color, alphas, place_planes_disparity(case.planes, 0.95, 1.12)?, 0.95, 1.12)?;
    let k = CameraIntrinsics::from_fov(w, h, 50.0)?;
    let angle = 10f64.to_radians();
    let r = CameraPose::yaw_pitch_rotation(rng.random_range(-angle..angle), rng.random_range(-angle..angle));
    let t = Vector3::from_fn(|_, _| rng.random_range(-0.02..0.02));
    Ok((mpi, CameraPair::same(k), CameraPose::new(r, t)?))
}

/// Largest relative error over one parameter tensor.
#[derive(Clone, Debug, PartialEq)]
pub struct TensorError {
    pub name: String,
    pub count: usize,
    pub max_rel_error: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GradCheckOutcome {
    pub case: GradCase,
    pub report: FdReport,
    pub tensors: Vec<TensorError>,
}

impl GradCheckOutcome {
    pub fn passed(&self) -> bool {
        self.report.passed()
    }
}

/// Checks the analytic gradient of the mean rendered color with respect to the color
/// image and every alpha map. With `inject_bug` the analytic alpha gradients are perturbed
/// (scaled by 1.01 plus 1e-3) to prove the harness catches errors.
pub fn render_gradcheck(case: &GradCase, config: &FdConfig, inject_bug: bool) -> Result<GradCheckOutcome> {
    let (mpi, cams, pose) = random_problem(case)?;
    let upstream = mean_color_upstream(case.width, case.height);
    let grads = render_backward(&mpi, &cams, &pose, &upstream)?;
    let mut analytic = grads.flatten();
    let n_color = case.width * case.height * 3;
    if inject_bug {
        for g in &mut analytic[n_color..] {
            *g = *g * 1.01 + 1e-3;
        }
    }
    let params = flatten_mpi_params(&mpi);
    let forward = |p: &[f64]| {
        let probe = mpi_from_params(&mpi, p).expect("probe stays in range");
        mean_color_loss(&render(&probe, &cams, &pose).expect("render").color)
    };
    let report = finite_diff_check(forward, &params, &analytic, config);
    let n_alpha = case.width * case.height;
    let mut tensors = vec![TensorError {
        name: "color".into(),
        count: n_color,
        max_rel_error: report.max_rel_error_in(0..n_color),
    }];
    for i in 0..case.planes {
        let start = n_color + i * n_alpha;
        tensors.push(TensorError {
            name: format!("alpha_{i:03}"),
            count: n_alpha,
            max_rel_error: report.max_rel_error_in(start..start + n_alpha),
        });
    }
    Ok(GradCheckOutcome {
        case: *case,
        report,
        tensors,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_function_is_exact() {
        let f = |p: &[f64]| 3.0 * p[0] - 2.0 * p[1] + 0.5 * p[2];
        let r = finite_diff_check(f, &[0.5, 0.25, 1.0], &[3.0, -2.0, 0.5], &FdConfig::default());
        assert!(r.max_rel_error() < 1e-10);
        assert!(r.passed());
    }

    #[test]
    fn quadratic_within_taylor_bound() {
        let f = |p: &[f64]| p[0] * p[0] + 3.0 * p[0] * p[1] - p[1] * p[1];
        let p = [0.7, -0.4];
        let g = [2.0 * p[0] + 3.0 * p[1], 3.0 * p[0] - 2.0 * p[1]];
        let cfg = FdConfig {
            step: 1e-5,
            tolerance: 1e-6,
            floor: 1e-6,
        };
        let r = finite_diff_check(f, &p, &g, &cfg);
        assert!(r.max_rel_error() <= 1e-6, "{}", r.max_rel_error());
    }

    #[test]
    fn wrong_gradient_is_flagged() {
        let f = |p: &[f64]| p[0] * p[1];
        let r = finite_diff_check(f, &[2.0, 3.0], &[3.0, 2.5], &FdConfig::default());
        assert!(!r.passed());
        let failed: Vec<usize> = r.failures().map(|e| e.index).collect();
        assert_eq!(failed, vec![1]);
    }

    #[test]
    fn render_suite_passes_and_catches_injected_bug() {
        let case = GradCase {
            seed: 5,
            width: 6,
            height: 5,
            planes: 3,
        };
        let ok = render_gradcheck(&case, &FdConfig::default(), false).unwrap();
        assert!(ok.passed(), "max rel error {}", ok.report.max_rel_error());
        assert_eq!(ok.tensors.len(), 4);
        assert_eq!(ok.tensors[0].count, 90);
        let bad = render_gradcheck(&case, &FdConfig::default(), true).unwrap();
        assert!(!bad.passed());
        assert!(bad.tensors[0].max_rel_error <= 1e-3);
        assert!(bad.tensors[1..].iter().all(|t| t.max_rel_error > 1e-3));
    }
}
