//! Multi-resolution residual accumulation for the color and alpha outputs.

use crate::error::{Error, Result};
use crate::raster::Image;

/// Lowest pyramid resolution.
pub const BASE_RESOLUTION: usize = 4;
/// Channel cap of the feature maps.
pub const MAX_CHANNELS: usize = 512;

/// Channel count `min(channel_base / h, 512)` of the features at resolution `h`.
pub fn channel_dim(resolution: usize, channel_base: usize) -> usize {
    (channel_base / resolution).min(MAX_CHANNELS)
}

/// Resolutions `4, 8, ..., top`.
pub fn resolutions(top: usize) -> Vec<usize> {
    std::iter::successors(Some(BASE_RESOLUTION), |&h| Some(h * 2))
        .take_while(|&h| h <= top)
        .collect()
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Bilinear upsampling by an integer factor with half-pixel centers and edge clamping.
/// The map is linear in the input.
pub fn upsample_bilinear(image: &Image, factor: usize) -> Image {
    assert!(factor >= 1, "upsampling factor must be positive");
    if factor == 1 {
        return image.clone();
    }
    let (w, h, c) = (image.width(), image.height(), image.channels());
    let taps = |i: usize, n: usize| -> (usize, usize, f64) {
        let src = ((i as f64 + 0.5) / factor as f64 - 0.5).clamp(0.0, (n - 1) as f64);
        let lo = src.floor() as usize;
        let hi = (lo + 1).min(n - 1);
        (lo, hi, src - lo as f64)
    };
    let xs: Vec<_> = (0..w * factor).map(|i| taps(i, w)).collect();
    let ys: Vec<_> = (0..h * factor).map(|i| taps(i, h)).collect();
    Image::from_fn(w * factor, h * factor, c, |x, y, out| {
        let (x0, x1, fx) = xs[x];
        let (y0, y1, fy) = ys[y];
        for ch in 0..c {
            out[ch] = (1.0 - fx) * (1.0 - fy) * image.get(x0, y0, ch)
                + fx * (1.0 - fy) * image.get(x1, y0, ch)
                + (1.0 - fx) * fy * image.get(x0, y1, ch)
                + fx * fy * image.get(x1, y1, ch);
        }
    })
}

pub fn upsample2x(image: &Image) -> Image {
    upsample_bilinear(image, 2)
}

/// `acc_4 = r_4`, `acc_h = r_h + up(acc_{h/2})`; returns the top level.
///
/// `residuals` are ordered from 4x4 upwards, each level doubling the previous one.
pub fn accumulate_pyramid(residuals: &[Image], upsample: impl Fn(&Image) -> Image) -> Result<Image> {
    let first = residuals.first().ok_or(Error::MissingResolution(BASE_RESOLUTION))?;
    if first.width() != BASE_RESOLUTION || first.height() != BASE_RESOLUTION {
        return Err(Error::MissingResolution(BASE_RESOLUTION));
    }
    let mut acc = first.clone();
    for (level, r) in residuals.iter().enumerate().skip(1) {
        let expected = BASE_RESOLUTION << level;
        if r.width() != expected || r.height() != expected || r.channels() != first.channels() {
            return Err(Error::MissingResolution(expected));
        }
        let mut up = upsample(&acc);
        if !up.same_shape(r) {
            return Err(Error::ShapeMismatch(format!("upsampler output at {expected}")));
        }
        up.add_assign(r);
        acc = up;
    }
    Ok(acc)
}

/// Accumulates alpha residuals up to their top resolution, upsamples once to `resolution`
/// if needed, and squashes the result into `(0, 1)` with a sigmoid.
pub fn alpha_pyramid(residuals: &[Image], resolution: usize) -> Result<Image> {
    let acc = accumulate_pyramid(residuals, upsample2x)?;
    let top = acc.width();
    if top > resolution {
        return Err(Error::InvalidConfig(format!(
            "alpha resolution {top} exceeds image resolution {resolution}"
        )));
    }
    if !resolution.is_power_of_two() {
        return Err(Error::InvalidConfig(format!("resolution {resolution} is not a power of two")));
    }
    let full = upsample_bilinear(&acc, resolution / top);
    Ok(full.map(sigmoid))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(rng: &mut ChaCha8Rng, n: usize, c: usize) -> Image {
        Image::from_fn(n, n, c, |_, _, p| p.iter_mut().for_each(|v| *v = rng.random_range(-1.0..1.0)))
    }

    #[test]
    fn channel_rule_values() {
        assert_eq!(channel_dim(4, 1 << 15), 512);
        assert_eq!(channel_dim(64, 1 << 15), 512);
        assert_eq!(channel_dim(128, 1 << 15), 256);
        assert_eq!(channel_dim(256, 1 << 15), 128);
        assert_eq!(channel_dim(1024, 1 << 15), 32);
        assert_eq!(channel_dim(256, 1 << 14), 64);
    }

    #[test]
    fn single_level_is_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let r = random(&mut rng, 4, 3);
        assert_eq!(accumulate_pyramid(std::slice::from_ref(&r), upsample2x).unwrap(), r);
    }

    #[test]
    fn zero_upper_residuals_repeat_upsampling() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let r4 = random(&mut rng, 4, 3);
        let out = accumulate_pyramid(&[r4.clone(), Image::zeros(8, 8, 3), Image::zeros(16, 16, 3)], upsample2x).unwrap();
        assert_eq!(out, upsample2x(&upsample2x(&r4)));
    }

    #[test]
    fn matches_unrolled_sum() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let rs = [random(&mut rng, 4, 3), random(&mut rng, 8, 3), random(&mut rng, 16, 3)];
        let out = accumulate_pyramid(&rs, upsample2x).unwrap();
        // up(up(r4)) + up(r8) + r16
        let mut expected = upsample2x(&upsample2x(&rs[0]));
        expected.add_assign(&upsample2x(&rs[1]));
        expected.add_assign(&rs[2]);
        assert!(out.max_abs_diff(&expected) < 1e-12);
    }

    #[test]
    fn missing_levels_are_reported() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        assert!(matches!(
            accumulate_pyramid(&[random(&mut rng, 8, 1)], upsample2x),
            Err(Error::MissingResolution(4))
        ));
        assert!(matches!(
            accumulate_pyramid(&[random(&mut rng, 4, 1), random(&mut rng, 16, 1)], upsample2x),
            Err(Error::MissingResolution(8))
        ));
        assert!(accumulate_pyramid(&[], upsample2x).is_err());
    }

    #[test]
    fn alpha_pyramid_upsamples_once() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let rs = [random(&mut rng, 4, 1), random(&mut rng, 8, 1)];
        let same = alpha_pyramid(&rs, 8).unwrap();
        let acc = accumulate_pyramid(&rs, upsample2x).unwrap();
        assert_eq!(same, acc.map(sigmoid));
        let big = alpha_pyramid(&rs, 32).unwrap();
        assert_eq!(big, upsample_bilinear(&acc, 4).map(sigmoid));
        assert!(big.in_unit_range());
        assert!(alpha_pyramid(&rs, 4).is_err());
    }

    #[test]
    fn zero_alpha_residuals_give_half() {
        let out = alpha_pyramid(&[Image::zeros(4, 4, 1), Image::zeros(8, 8, 1)], 16).unwrap();
        assert!(out.data().iter().all(|&a| a == 0.5));
    }

    #[test]
    fn upsampling_preserves_constants() {
        let img = Image::filled(4, 4, 2, 0.3);
        assert!(upsample_bilinear(&img, 4).data().iter().all(|&v| (v - 0.3).abs() < 1e-15));
    }
}
