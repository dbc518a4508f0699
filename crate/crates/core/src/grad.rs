//! Reverse-mode gradients of the rendered color with respect to the MPI color and alphas.
//!
//! Only the image-valued MPI content is differentiated; plane depths and camera poses are
//! treated as constants.

use rayon::prelude::*;

use crate::camera::CameraPose;
use crate::composite::{render_layers, CameraPair};
use crate::error::{Error, Result};
use crate::mpi::MultiplaneImage;
use crate::raster::Image;
use crate::warp::{plane_setup, Border, BilinearTaps, Homography, WarpedPlane};

/// Gradient with respect to one plane's color (3 channels) and alpha (1 channel).
#[derive(Clone, Debug, PartialEq)]
pub struct PlaneGradient {
    pub color: Image,
    pub alpha: Image,
}

impl PlaneGradient {
    pub fn zeros(width: usize, height: usize) -> Self {
        Self {
            color: Image::zeros(width, height, 3),
            alpha: Image::zeros(width, height, 1),
        }
    }
}

/// Gradients of a scalar loss with respect to the MPI content.
#[derive(Clone, Debug, PartialEq)]
pub struct RenderGradients {
    /// d loss / d C for the shared color image.
    pub color: Vec<f64>,
    /// d loss / d alpha_i, one map per plane.
    pub alphas: Vec<Image>,
    /// d loss / d background color when the last plane carries one.
    pub background: Option<Image>,
    width: usize,
    height: usize,
}

impl RenderGradients {
    pub fn color_image(&self) -> Image {
        Image::from_vec(self.width, self.height, 3, self.color.clone()).expect("shape")
    }

    pub fn all_finite(&self) -> bool {
        self.color.iter().all(|v| v.is_finite())
            && self.alphas.iter().all(Image::all_finite)
            && self.background.as_ref().is_none_or(Image::all_finite)
    }

    /// Concatenation `[color, alpha_1, ..., alpha_L]`, matching [`flatten_mpi_params`].
    pub fn flatten(&self) -> Vec<f64> {
        let mut out = self.color.clone();
        for a in &self.alphas {
            out.extend_from_slice(a.data());
        }
        out
    }
}

/// Backward pass of [`crate::composite::over_composite`] for the color output.
///
/// With `T_k = prod_{j<k} (1 - a_j)` and `S_k` the composite of the planes behind `k`,
/// `dI/dC_k = T_k a_k` and `dI/da_k = T_k (C_k - S_k)`.
pub fn composite_backward(planes: &[WarpedPlane], upstream: &Image) -> Result<Vec<PlaneGradient>> {
    let first = planes.first().ok_or(Error::EmptyPlaneList)?;
    let (w, h) = (first.alpha.width(), first.alpha.height());
    if upstream.width() != w || upstream.height() != h || upstream.channels() != 3 {
        return Err(Error::ShapeMismatch("upstream gradient vs rendered image".into()));
    }
    if planes
        .iter()
        .any(|p| !p.alpha.same_shape(&first.alpha) || !p.color.same_size(&first.alpha) || p.color.channels() != 3)
    {
        return Err(Error::ShapeMismatch("warped planes".into()));
    }
    let l = planes.len();
    let mut grads: Vec<PlaneGradient> = (0..l).map(|_| PlaneGradient::zeros(w, h)).collect();
    let mut trans = vec![0.0; l];
    for y in 0..h {
        for x in 0..w {
            let up = upstream.pixel(x, y);
            let mut t = 1.0;
            for (i, p) in planes.iter().enumerate() {
                trans[i] = t;
                t *= 1.0 - p.alpha.get(x, y, 0);
            }
            let mut behind = [0.0; 3];
            for i in (0..l).rev() {
                let a = planes[i].alpha.get(x, y, 0);
                let c = planes[i].color.pixel(x, y);
                let weight = trans[i] * a;
                let mut da = 0.0;
                let gc = grads[i].color.pixel_mut(x, y);
                for ch in 0..3 {
                    gc[ch] = up[ch] * weight;
                    da += up[ch] * trans[i] * (c[ch] - behind[ch]);
                    behind[ch] = a * c[ch] + (1.0 - a) * behind[ch];
                }
                grads[i].alpha.set(x, y, 0, da);
            }
        }
    }
    Ok(grads)
}

/// Backward pass of [`crate::warp::warp_plane`]: scatters target-view gradients into the
/// canonical plane through the same bilinear taps used by the forward lookup.
pub fn warp_backward(
    mpi: &MultiplaneImage,
    index: usize,
    homography: &Homography,
    upstream: &PlaneGradient,
) -> PlaneGradient {
    let (cw, ch) = (mpi.width(), mpi.height());
    let (ow, oh) = (upstream.alpha.width(), upstream.alpha.height());
    debug_assert!(index < mpi.num_planes());
    if homography.is_identity() && ow == cw && oh == ch {
        return upstream.clone();
    }
    let mut out = PlaneGradient::zeros(cw, ch);
    for y in 0..oh {
        for x in 0..ow {
            let Some((u, v)) = homography.apply(x as f64, y as f64) else {
                continue;
            };
            let gc = upstream.color.pixel(x, y);
            if let Some(taps) = BilinearTaps::at(u, v, cw, ch, Border::Clamp) {
                for &(px, py, wt) in &taps.taps {
                    if wt != 0.0 {
                        for (dst, g) in out.color.pixel_mut(px, py).iter_mut().zip(gc) {
                            *dst += wt * g;
                        }
                    }
                }
            }
            let ga = upstream.alpha.get(x, y, 0);
            if let Some(taps) = BilinearTaps::at(u, v, cw, ch, Border::Zero) {
                for &(px, py, wt) in &taps.taps {
                    if wt != 0.0 {
                        out.alpha.pixel_mut(px, py)[0] += wt * ga;
                    }
                }
            }
        }
    }
    out
}

/// Gradients of `sum(upstream * render(mpi).color)` with respect to the MPI content.
///
/// Planes are processed independently and reduced in plane order, so the result does not
/// depend on thread scheduling.
pub fn render_backward(
    mpi: &MultiplaneImage,
    cams: &CameraPair,
    pose: &CameraPose,
    upstream: &Image,
) -> Result<RenderGradients> {
    let layers = render_layers(mpi, cams, pose)?;
    let setup = plane_setup(mpi, &cams.canonical, &cams.target, pose)?;
    let plane_grads = composite_backward(&layers.planes, upstream)?;
    let canonical: Vec<PlaneGradient> = plane_grads
        .par_iter()
        .enumerate()
        .map(|(i, g)| warp_backward(mpi, i, &setup[i].1, g))
        .collect();
    let l = mpi.num_planes();
    let mut color = Image::zeros(mpi.width(), mpi.height(), 3);
    let mut background = mpi.background().map(|_| Image::zeros(mpi.width(), mpi.height(), 3));
    let mut alphas = Vec::with_capacity(l);
    for (i, g) in canonical.into_iter().enumerate() {
        match background.as_mut() {
            Some(bg) if i + 1 == l => bg.add_assign(&g.color),
            _ => color.add_assign(&g.color),
        }
        alphas.push(g.alpha);
    }
    Ok(RenderGradients {
        width: mpi.width(),
        height: mpi.height(),
        color: color.into_vec(),
        alphas,
        background,
    })
}

/// Mean over all color samples of a rendered image.
pub fn mean_color_loss(color: &Image) -> f64 {
    color.mean()
}

/// Upstream gradient of [`mean_color_loss`].
pub fn mean_color_upstream(width: usize, height: usize) -> Image {
    Image::filled(width, height, 3, 1.0 / (width * height * 3) as f64)
}

/// `[color, alpha_1, ..., alpha_L]` flattened.
pub fn flatten_mpi_params(mpi: &MultiplaneImage) -> Vec<f64> {
    let mut out = mpi.color().data().to_vec();
    for a in mpi.alphas() {
        out.extend_from_slice(a.data());
    }
    out
}

/// Rebuilds an MPI from [`flatten_mpi_params`] output, keeping depths and range of `template`.
pub fn mpi_from_params(template: &MultiplaneImage, params: &[f64]) -> Result<MultiplaneImage> {
    let (w, h) = (template.width(), template.height());
    let n_color = w * h * 3;
    let n_alpha = w * h;
    if params.len() != n_color + n_alpha * template.num_planes() {
        return Err(Error::ShapeMismatch("parameter vector length".into()));
    }
    let color = Image::from_vec(w, h, 3, params[..n_color].to_vec())?;
    let alphas = params[n_color..]
        .chunks(n_alpha)
        .map(|c| Image::from_vec(w, h, 1, c.to_vec()))
        .collect::<Result<Vec<_>>>()?;
    let mut mpi = MultiplaneImage::new(color, alphas, template.depths().to_vec(), template.near(), template.far())?;
    if let Some(bg) = template.background() {
        mpi = mpi.with_background(bg.clone())?;
    }
    Ok(mpi)
}
