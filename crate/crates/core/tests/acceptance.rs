//! Acceptance suite: one PASS/FAIL line per criterion, then a single assertion.
//!
//! Run with `cargo test -p mpi-render --test acceptance -- --nocapture` to see the table.

use std::time::{Duration, Instant};

use nalgebra::{Rotation3, Unit, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use mpi_render::composite::over_weights;
use mpi_render::container::{synth_scene, SceneKind, SynthParams};
use mpi_render::fdcheck::{render_gradcheck, FdConfig, GradCase};
use mpi_render::genstack::loss::{gan_loss_terms, nonsaturating_f, LossParams};
use mpi_render::genstack::{channel_dim, depth_to_alpha, truncate_style, ToyConfig, ToyDiscriminator, ToyGenerator};
use mpi_render::mesh::{marching_cubes, OccupancyVolume};
use mpi_render::shading::shading_schedule;
use mpi_render::warp::{plane_homography, plane_in_target_frame, WarpedPlane};
use mpi_render::{
    over_composite, place_planes_disparity, render, CameraIntrinsics, CameraPair, CameraPose, Image, MultiplaneImage,
};

const NEAR: f64 = 0.95;
const FAR: f64 = 1.12;

struct Outcome {
    name: &'static str,
    passed: bool,
    detail: String,
    elapsed: Duration,
}

fn random_image(rng: &mut ChaCha8Rng, w: usize, h: usize, c: usize) -> Image {
    Image::from_fn(w, h, c, |_, _, p| p.iter_mut().for_each(|v| *v = rng.random()))
}

fn random_mpi(rng: &mut ChaCha8Rng, w: usize, h: usize, l: usize) -> MultiplaneImage {
    let color = random_image(rng, w, h, 3);
    let alphas = (0..l).map(|_| random_image(rng, w, h, 1)).collect();
    MultiplaneImage::new(color, alphas, place_planes_disparity(l, NEAR, FAR).unwrap(), NEAR, FAR).unwrap()
}

fn raw_planes(mpi: &MultiplaneImage) -> Vec<WarpedPlane> {
    (0..mpi.num_planes())
        .map(|i| WarpedPlane {
            color: mpi.plane_color(i).clone(),
            alpha: mpi.alpha(i).clone(),
        })
        .collect()
}

fn homography_vs_ray_plane() -> (bool, String) {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let k = CameraIntrinsics::from_fov(256, 256, 12.0).unwrap();
    let depths = place_planes_disparity(32, NEAR, FAR).unwrap();
    let (mut worst, mut checked, mut skipped) = (0.0f64, 0usize, 0usize);
    for _ in 0..50 {
        let axis = Unit::new_normalize(Vector3::from_fn(|_, _| rng.random::<f64>() - 0.5));
        let angle = rng.random_range(0.0..20f64.to_radians());
        let r = *Rotation3::from_axis_angle(&axis, angle).matrix();
        let dir = Vector3::from_fn(|_, _| rng.random::<f64>() - 0.5).normalize();
        let t = dir * rng.random_range(0.0..0.2 * NEAR);
        let pose = CameraPose::new(r, t).unwrap();
        for &d in &depths {
            let plane = plane_in_target_frame(d, &pose).unwrap();
            let h = plane_homography(&k, &k, &pose, &plane).unwrap();
            for _ in 0..1000 {
                let (x, y) = (rng.random_range(0.0..255.0), rng.random_range(0.0..255.0));
                // Ray from the target camera center, moved to the canonical frame, hits z = d.
                let ray = r * Vector3::new((x - k.cx) / k.fx, (y - k.cy) / k.fy, 1.0);
                let s = (d - t.z) / ray.z;
                let hit = t + ray * s;
                let oracle = (k.fx * hit.x / hit.z + k.cx, k.fy * hit.y / hit.z + k.cy);
                match (s > 0.0, h.apply(x, y)) {
                    (true, Some((u, v))) => {
                        worst = worst.max((u - oracle.0).abs()).max((v - oracle.1).abs());
                        checked += 1;
                    }
                    _ => skipped += 1,
                }
            }
        }
    }
    (
        worst <= 1e-5 && skipped == 0,
        format!("{checked} pixel checks, max error {worst:.2e} px, {skipped} skipped"),
    )
}

fn identity_reduction() -> (bool, String) {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut same = true;
    for l in [1, 4, 32] {
        let mpi = random_mpi(&mut rng, 24, 16, l);
        let k = CameraIntrinsics::from_fov(24, 16, 40.0).unwrap();
        let rendered = render(&mpi, &CameraPair::same(k), &CameraPose::identity()).unwrap();
        let direct = over_composite(&raw_planes(&mpi), Some(mpi.depths())).unwrap();
        same &= rendered == direct;
    }
    let mpi = random_mpi(&mut rng, 24, 16, 8);
    let mut alphas = mpi.alphas().to_vec();
    alphas[0] = Image::filled(24, 16, 1, 1.0);
    let opaque = mpi.with_alphas(alphas, mpi.depths().to_vec()).unwrap();
    let out = over_composite(&raw_planes(&opaque), None).unwrap();
    let exact = out.color == *opaque.color();
    (same && exact, format!("canonical render bitwise equal: {same}; opaque front plane returns C: {exact}"))
}

fn partition_of_unity() -> (bool, String) {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst = 0.0f64;
    for n in 0..100 {
        let l = [1, 2, 8, 32][n % 4];
        let alphas: Vec<Image> = (0..l).map(|_| random_image(&mut rng, 16, 16, 1)).collect();
        let refs: Vec<&Image> = alphas.iter().collect();
        let weights = over_weights(&refs).unwrap();
        for p in 0..256 {
            let t: f64 = alphas.iter().map(|a| 1.0 - a.data()[p]).product();
            let sum: f64 = weights.iter().map(|w| w.data()[p]).sum();
            worst = worst.max((sum + t - 1.0).abs());
        }
    }
    (worst <= 1e-6, format!("max |sum w + T - 1| = {worst:.2e} over 100 stacks"))
}

fn differentiability() -> (bool, String) {
    let mut worst = 0.0f64;
    let mut failures = 0;
    for seed in 0..20 {
        let case = GradCase {
            seed,
            width: 8,
            height: 8,
            planes: 4,
        };
        let o = render_gradcheck(&case, &FdConfig::default(), false).unwrap();
        worst = worst.max(o.report.max_rel_error());
        failures += o.report.failures().count();
    }
    // The loss is multilinear in color and alpha at a fixed pose, so no probe crosses a
    // bilinear kink and nothing is excluded.
    (
        failures == 0 && worst <= 1e-3,
        format!("20 seeds, 8x8, L=4, max rel error {worst:.2e}, 0 points excluded"),
    )
}

fn d2a_round_trip() -> (bool, String) {
    let (w, h) = (64, 48);
    let range = FAR - NEAR;
    let depth = Image::from_fn(w, h, 1, |x, y, p| {
        let (u, v) = (x as f64 / w as f64, y as f64 / h as f64);
        p[0] = NEAR + range * (0.5 + 0.35 * (3.0 * u).sin() * (2.0 * v + 0.3).cos());
    });
    let planes = place_planes_disparity(64, NEAR, FAR).unwrap();
    let half_spacing = planes.windows(2).map(|p| p[1] - p[0]).fold(0.0, f64::max) / 2.0;
    let mut ok = true;
    let mut parts = Vec::new();
    for frac in [0.3, 0.1, 0.05] {
        let eps = frac * range;
        let mut alphas = depth_to_alpha(&depth, &planes, eps).unwrap();
        // The farthest plane is opaque, as in any MPI with a background plane.
        *alphas.last_mut().unwrap() = Image::filled(w, h, 1, 1.0);
        let color = Image::zeros(w, h, 3);
        let stack: Vec<WarpedPlane> = alphas
            .into_iter()
            .map(|alpha| WarpedPlane {
                color: color.clone(),
                alpha,
            })
            .collect();
        let out = over_composite(&stack, Some(&planes)).unwrap();
        let err = out.depth.max_abs_diff(&depth);
        let bound = eps + half_spacing;
        ok &= err <= bound;
        parts.push(format!("eps {frac}: {err:.4} <= {bound:.4}"));
    }
    (ok, parts.join(", "))
}

fn parallax_law() -> (bool, String) {
    let params = SynthParams {
        width: 256,
        height: 256,
        ..SynthParams::default()
    };
    let scene = synth_scene(SceneKind::LayeredDisks, &params, 0).unwrap();
    let k = scene.intrinsics;
    let cams = CameraPair::same(k);
    let center = 0.5 * (NEAR + FAR);
    let poses: Vec<CameraPose> = [-5.0f64, 5.0]
        .iter()
        .map(|deg| CameraPose::orbit(deg.to_radians(), 0.0, center))
        .collect();
    // Disk pixels are found through rendered depth (the wall behind a disk shares its color).
    let centroid = |pose: &CameraPose, d: f64| {
        let out = render(&scene.mpi, &cams, pose).unwrap();
        let b = plane_in_target_frame(d, pose).unwrap().b();
        let (mut sx, mut sy, mut n) = (0.0, 0.0, 0.0);
        for y in 0..256 {
            for x in 0..256 {
                if (out.depth.get(x, y, 0) - b).abs() < 1e-9 {
                    sx += x as f64;
                    sy += y as f64;
                    n += 1.0;
                }
            }
        }
        (sx / n, sy / n)
    };
    let mut parallax = Vec::new();
    for obj in &scene.objects {
        let d = obj.center.z;
        let canonical = centroid(&CameraPose::identity(), d);
        let moved: Vec<(f64, f64)> = poses.iter().map(|p| centroid(p, d)).collect();
        // Displacement of a point at infinity: the rotation-only homography.
        let at_infinity: Vec<f64> = poses
            .iter()
            .map(|p| {
                let ray = p.rotation().transpose() * k.unproject(canonical.0, canonical.1);
                k.project(&ray).0
            })
            .collect();
        let shift = moved[1].0 - moved[0].0;
        parallax.push((shift - (at_infinity[1] - at_infinity[0]), d));
    }
    let (near, far) = (parallax[0], parallax[1]);
    let measured = near.0 / far.0;
    let b = |d: f64| plane_in_target_frame(d, &poses[1]).unwrap().b();
    let expected = b(far.1) / b(near.1);
    let rel = (measured / expected - 1.0).abs();
    (
        rel <= 0.02,
        format!("parallax ratio {measured:.4} vs b_far/b_near {expected:.4} ({:.2}%)", rel * 100.0),
    )
}

fn shading_schedule_values() -> (bool, String) {
    let got = [500, 1500, 5000].map(shading_schedule);
    let want = [(1.0, 0.0), (0.95, 0.05), (0.9, 0.1)];
    let ok = got
        .iter()
        .zip(&want)
        .all(|(g, w)| (g.0 - w.0).abs() <= 1e-15 && (g.1 - w.1).abs() <= 1e-15);
    (ok, format!("(k_a, k_d) at 500/1500/5000 = {got:?}"))
}

fn loss_formulas() -> (bool, String) {
    let f0 = nonsaturating_f(0.0);
    let f0_ok = (f0 + std::f64::consts::LN_2).abs() <= 1e-12;
    let (hi, lo) = (nonsaturating_f(1e4), nonsaturating_f(-1e4));
    let stable = hi.is_finite() && lo.is_finite() && hi.abs() <= 1e-300 && (lo + 1e4).abs() <= 1e-9;

    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let (w, h) = (6, 5);
    let disc = ToyDiscriminator::new(w, h, &mut rng);
    let pose = CameraPose::orbit(0.1, -0.05, 1.0);
    let image = random_image(&mut rng, w, h, 3);
    // The logit is linear in the image, so central differences give the gradient exactly.
    let mut probe = image.clone();
    let mut fd_norm_sq = 0.0;
    for i in 0..w * h * 3 {
        let orig = probe.data()[i];
        probe.data_mut()[i] = orig + 0.5;
        let plus = disc.logit(&probe, &pose).unwrap();
        probe.data_mut()[i] = orig - 0.5;
        let minus = disc.logit(&probe, &pose).unwrap();
        probe.data_mut()[i] = orig;
        fd_norm_sq += (plus - minus).powi(2);
    }
    let analytic: f64 = disc.input_gradient(&pose).unwrap().iter().map(|g| g * g).sum();
    let grad_ok = (analytic - fd_norm_sq).abs() <= 1e-9 * fd_norm_sq;
    let real = disc.logit(&image, &pose).unwrap();
    let with = gan_loss_terms(&[0.3], &[real], &[analytic], &LossParams { lambda: 10.0 }).unwrap();
    let without = gan_loss_terms(&[0.3], &[real], &[analytic], &LossParams { lambda: 0.0 }).unwrap();
    let r1_ok = ((with - without) - 10.0 * analytic).abs() <= 1e-12 * (10.0 * analytic).max(1.0);
    (
        f0_ok && stable && grad_ok && r1_ok,
        format!(
            "f(0) + log 2 = {:.1e}; f(+-1e4) = ({hi:.1e}, {lo}); R1 adds {:.6} vs 10|grad|^2 = {:.6}",
            f0 + std::f64::consts::LN_2,
            with - without,
            10.0 * analytic
        ),
    )
}

fn truncation() -> (bool, String) {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let omega: Vec<f64> = (0..64).map(|_| rng.random_range(-3.0..3.0)).collect();
    let bar: Vec<f64> = (0..64).map(|_| rng.random_range(-1.0..1.0)).collect();
    let identity = truncate_style(&omega, &bar, 1.0).unwrap() == omega;
    let mean = truncate_style(&omega, &bar, 0.0).unwrap() == bar;
    let mut worst = 0.0f64;
    for psi in [0.2, 0.5, 0.9] {
        let t = truncate_style(&omega, &bar, psi).unwrap();
        for i in 0..64 {
            // Collinear with (bar, omega) at parameter psi.
            worst = worst.max((t[i] - bar[i] - psi * (omega[i] - bar[i])).abs());
        }
    }
    (
        identity && mean && worst <= 1e-12,
        format!("psi=1 identity: {identity}; psi=0 mean: {mean}; collinearity residual {worst:.1e}"),
    )
}

fn marching_cubes_sphere() -> (bool, String) {
    let n = 64;
    let r = 0.35;
    let spacing = 1.0 / (n - 1) as f64;
    let c = Vector3::repeat(0.5);
    let vol = OccupancyVolume::from_fn([n; 3], Vector3::repeat(spacing), Vector3::zeros(), |p| {
        (0.5 + (r - (p - c).norm()) / (4.0 * spacing)).clamp(0.0, 1.0)
    })
    .unwrap();
    let mesh = marching_cubes(&vol, 0.5);
    let analytic = 4.0 * std::f64::consts::PI * r * r;
    let rel = (mesh.area() - analytic).abs() / analytic;
    let chi = mesh.euler_characteristic();
    let tight = mesh.is_watertight();
    (
        tight && chi == 2 && rel <= 0.05,
        format!(
            "{} triangles, watertight {tight}, Euler {chi}, area error {:.3}%",
            mesh.triangles.len(),
            rel * 100.0
        ),
    )
}

fn plane_count_flexibility() -> (bool, String) {
    let config = ToyConfig {
        resolution: 128,
        alpha_resolution: 128,
        seed: 11,
        ..ToyConfig::default()
    };
    let generator = ToyGenerator::new(config).unwrap();
    let z = generator.sample_latent(5);
    let few = generator.generate_with_planes(&z, 32).unwrap();
    let many = generator.generate_with_planes(&z, 96).unwrap();
    let identical = few.color() == many.color();
    let k = CameraIntrinsics::from_fov(128, 128, 12.0).unwrap();
    let cams = CameraPair::same(k);
    let a = render(&few, &cams, &CameraPose::identity()).unwrap();
    let b = render(&many, &cams, &CameraPose::identity()).unwrap();
    let mad = a.color.mean_abs_diff(&b.color);
    (
        identical && mad <= 0.02,
        format!("identical color: {identical}; canonical render mean abs diff {mad:.2e}"),
    )
}

fn channel_rule() -> (bool, String) {
    let got = [4, 256, 1024].map(|h| channel_dim(h, 1 << 15));
    (got == [512, 128, 32], format!("dim at 4/256/1024 = {got:?}"))
}

fn timed(name: &'static str, limit: Option<Duration>, f: fn() -> (bool, String)) -> Outcome {
    let start = Instant::now();
    let (mut passed, mut detail) = f();
    let elapsed = start.elapsed();
    if let Some(limit) = limit {
        passed &= elapsed <= limit;
        detail = format!("{detail}; {:.2} s (limit {} s)", elapsed.as_secs_f64(), limit.as_secs());
    }
    Outcome {
        name,
        passed,
        detail,
        elapsed,
    }
}

#[test]
fn acceptance() {
    let start = Instant::now();
    let secs = Duration::from_secs;
    let mut outcomes = vec![
        timed("homography vs ray-plane oracle", Some(secs(10)), homography_vs_ray_plane),
        timed("identity reduction", None, identity_reduction),
        timed("partition of unity", None, partition_of_unity),
        timed("differentiability", Some(secs(60)), differentiability),
        timed("depth-to-alpha round trip", None, d2a_round_trip),
        timed("parallax law", None, parallax_law),
        timed("shading schedule", None, shading_schedule_values),
        timed("loss formulas", None, loss_formulas),
        timed("truncation", None, truncation),
        timed("marching cubes sphere", Some(secs(5)), marching_cubes_sphere),
        timed("plane-count flexibility", None, plane_count_flexibility),
        timed("channel rule", None, channel_rule),
    ];
    let total = start.elapsed();
    outcomes.push(Outcome {
        name: "acceptance suite wall clock",
        passed: total <= secs(180),
        detail: format!("{:.1} s (limit 180 s)", total.as_secs_f64()),
        elapsed: total,
    });
    for o in &outcomes {
        println!(
            "{} {}: {} [{:.2} s]",
            if o.passed { "PASS" } else { "FAIL" },
            o.name,
            o.detail,
            o.elapsed.as_secs_f64()
        );
    }
    let failed: Vec<_> = outcomes.iter().filter(|o| !o.passed).map(|o| o.name).collect();
    assert!(failed.is_empty(), "failed: {failed:?}");
}
