//! Depth-to-alpha conversion: a hard depth map becomes a stack of soft-step alpha maps.

use crate::error::{Error, Result};
use crate::raster::Image;

/// `alpha_i(x, y) = clamp((d_i - (depth(x, y) - eps)) / (2 eps), 0, 1)`.
///
/// Alpha ramps linearly from 0 at `depth - eps` to 1 at `depth + eps`. `depth` and
/// `plane_depths` must be in the same (normally `[0, 1]`-normalized) units.
pub fn depth_to_alpha(depth: &Image, plane_depths: &[f64], epsilon: f64) -> Result<Vec<Image>> {
    if !(epsilon > 0.0) {
        return Err(Error::InvalidRange(format!("epsilon {epsilon} must be positive")));
    }
    if depth.channels() != 1 {
        return Err(Error::ShapeMismatch("depth map must have one channel".into()));
    }
    Ok(plane_depths
        .iter()
        .map(|&d| depth.map(|z| ((d - (z - epsilon)) / (2.0 * epsilon)).clamp(0.0, 1.0)))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::composite::over_composite;
    use crate::warp::WarpedPlane;

    #[test]
    fn ramp_examples() {
        let depth = Image::from_vec(3, 1, 1, vec![0.5, 0.2, 0.8]).unwrap();
        let a = depth_to_alpha(&depth, &[0.5], 0.1).unwrap();
        assert!((a[0].get(0, 0, 0) - 0.5).abs() < 1e-12);
        // plane at 0.5 is >= 0.2 + eps and <= 0.8 - eps
        assert_eq!(a[0].get(1, 0, 0), 1.0);
        assert_eq!(a[0].get(2, 0, 0), 0.0);
        assert!(depth_to_alpha(&depth, &[0.5], 0.0).is_err());
    }

    #[test]
    fn monotone_in_plane_depth() {
        let depth = Image::from_fn(5, 1, 1, |x, _, p| p[0] = 0.2 * x as f64);
        let planes: Vec<f64> = (0..20).map(|i| i as f64 / 19.0).collect();
        let a = depth_to_alpha(&depth, &planes, 0.07).unwrap();
        for w in a.windows(2) {
            for (lo, hi) in w[0].data().iter().zip(w[1].data()) {
                assert!(lo <= hi);
            }
        }
    }

    #[test]
    fn dense_planes_reproduce_depth() {
        // Brute-force over-sum per pixel on 128 planes.
        let depth = Image::from_fn(16, 1, 1, |x, _, p| p[0] = 0.3 + 0.4 * x as f64 / 15.0);
        let planes: Vec<f64> = (0..128).map(|i| i as f64 / 127.0).collect();
        let eps = 0.05;
        let alphas = depth_to_alpha(&depth, &planes, eps).unwrap();
        let warped: Vec<WarpedPlane> = alphas
            .into_iter()
            .map(|alpha| WarpedPlane {
                color: Image::zeros(16, 1, 3),
                alpha,
            })
            .collect();
        let out = over_composite(&warped, Some(&planes)).unwrap();
        let spacing = 1.0 / 127.0;
        for (got, want) in out.depth.data().iter().zip(depth.data()) {
            assert!((got - want).abs() <= eps + spacing / 2.0, "{got} vs {want}");
        }
    }
}
