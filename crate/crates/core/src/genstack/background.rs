use crate::error::{Error, Result};
use crate::raster::Image;

/// Border share of the image width averaged into each boundary color.
pub const DEFAULT_FRACTION: f64 = 0.05;

/// Color for the background plane: per row, the left and right `fraction` of the pixels are
/// replaced by their mean, and everything between is linearly interpolated.
pub fn background_fill(color: &Image, fraction: f64) -> Result<Image> {
    let (w, h, c) = (color.width(), color.height(), color.channels());
    let band = (w as f64 * fraction).floor() as usize;
    if band == 0 || 2 * band > w {
        return Err(Error::InvalidRange(format!(
            "border fraction {fraction} of width {w} selects {band} pixels"
        )));
    }
    let mut out = Image::zeros(w, h, c);
    let (first_inner, last_inner) = (band - 1, w - band);
    for y in 0..h {
        for ch in 0..c {
            let left = (0..band).map(|x| color.get(x, y, ch)).sum::<f64>() / band as f64;
            let right = (w - band..w).map(|x| color.get(x, y, ch)).sum::<f64>() / band as f64;
            for x in 0..w {
                let v = if x <= first_inner {
                    left
                } else if x >= last_inner {
                    right
                } else {
                    let t = (x - first_inner) as f64 / (last_inner - first_inner) as f64;
                    left + t * (right - left)
                };
                out.set(x, y, ch, v);
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn horizontally_constant_image_is_unchanged() {
        let img = Image::from_fn(40, 6, 3, |_, y, p| p.fill(y as f64 / 10.0));
        let out = background_fill(&img, DEFAULT_FRACTION).unwrap();
        assert!(out.max_abs_diff(&img) < 1e-15);
    }

    #[test]
    fn black_white_split_is_gray_in_the_middle() {
        let img = Image::from_fn(41, 2, 3, |x, _, p| p.fill(if x < 20 { 0.0 } else { 1.0 }));
        let out = background_fill(&img, DEFAULT_FRACTION).unwrap();
        assert!((out.get(20, 0, 0) - 0.5).abs() < 1e-12);
        for y in 0..2 {
            for x in 1..41 {
                assert!(out.get(x, y, 1) >= out.get(x - 1, y, 1));
            }
        }
    }

    #[test]
    fn too_narrow_image_is_rejected() {
        assert!(background_fill(&Image::zeros(10, 2, 3), DEFAULT_FRACTION).is_err());
    }
}
