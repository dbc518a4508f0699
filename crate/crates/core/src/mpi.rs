//! The multiplane image: one shared color image plus per-plane alpha maps at fixed depths.

use crate::error::{Error, Result};
use crate::raster::Image;

/// A stack of `L` fronto-parallel planes at depths `d_1 < ... < d_L` along the canonical
/// camera `z` axis, sharing one color image.
///
/// The last plane may carry its own color (`background`), used for the background plane
/// filled from the image borders.
#[derive(Clone, Debug, PartialEq)]
pub struct MultiplaneImage {
    color: Image,
    alphas: Vec<Image>,
    depths: Vec<f64>,
    near: f64,
    far: f64,
    background: Option<Image>,
}

impl MultiplaneImage {
    pub fn new(color: Image, alphas: Vec<Image>, depths: Vec<f64>, near: f64, far: f64) -> Result<Self> {
        let mpi = Self {
            color,
            alphas,
            depths,
            near,
            far,
            background: None,
        };
        mpi.validate()?;
        Ok(mpi)
    }

    pub fn with_background(mut self, background: Image) -> Result<Self> {
        self.background = Some(background);
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        let l = self.alphas.len();
        if l == 0 {
            return Err(Error::Invariant("MPI needs at least one plane".into()));
        }
        if self.depths.len() != l {
            return Err(Error::Invariant(format!(
                "{} depths for {l} alpha maps",
                self.depths.len()
            )));
        }
        if self.color.channels() != 3 {
            return Err(Error::Invariant(format!(
                "color image has {} channels, expected 3",
                self.color.channels()
            )));
        }
        if self.color.width() == 0 || self.color.height() == 0 {
            return Err(Error::Invariant("empty color image".into()));
        }
        for (i, a) in self.alphas.iter().enumerate() {
            if a.channels() != 1 || !a.same_size(&self.color) {
                return Err(Error::Invariant(format!(
                    "alpha map {i} is {}x{}x{}, color is {}x{}",
                    a.width(),
                    a.height(),
                    a.channels(),
                    self.color.width(),
                    self.color.height()
                )));
            }
            if !a.in_unit_range() {
                return Err(Error::Invariant(format!("alpha map {i} has values outside [0,1]")));
            }
        }
        if !self.color.in_unit_range() {
            return Err(Error::Invariant("color has values outside [0,1]".into()));
        }
        if let Some(bg) = &self.background {
            if !bg.same_shape(&self.color) {
                return Err(Error::Invariant("background shape differs from color".into()));
            }
            if !bg.in_unit_range() {
                return Err(Error::Invariant("background has values outside [0,1]".into()));
            }
        }
        if !self.depths.iter().all(|d| d.is_finite() && *d > 0.0) {
            return Err(Error::Invariant("plane depths must be positive and finite".into()));
        }
        if let Some(w) = self.depths.windows(2).find(|w| !(w[0] < w[1])) {
            return Err(Error::Invariant(format!(
                "depths not strictly increasing ({} then {})",
                w[0], w[1]
            )));
        }
        if !(self.near <= self.depths[0] && self.depths[l - 1] <= self.far) {
            return Err(Error::Invariant(format!(
                "depths [{}, {}] outside near/far [{}, {}]",
                self.depths[0],
                self.depths[l - 1],
                self.near,
                self.far
            )));
        }
        Ok(())
    }

    pub fn num_planes(&self) -> usize {
        self.alphas.len()
    }

    pub fn width(&self) -> usize {
        self.color.width()
    }

    pub fn height(&self) -> usize {
        self.color.height()
    }

    pub fn color(&self) -> &Image {
        &self.color
    }

    pub fn alphas(&self) -> &[Image] {
        &self.alphas
    }

    pub fn alpha(&self, i: usize) -> &Image {
        &self.alphas[i]
    }

    pub fn depths(&self) -> &[f64] {
        &self.depths
    }

    pub fn near(&self) -> f64 {
        self.near
    }

    pub fn far(&self) -> f64 {
        self.far
    }

    pub fn background(&self) -> Option<&Image> {
        self.background.as_ref()
    }

    /// Color carried by plane `i` (0-based): the background image for the last plane when
    /// present, the shared color otherwise.
    pub fn plane_color(&self, i: usize) -> &Image {
        match &self.background {
            Some(bg) if i + 1 == self.alphas.len() => bg,
            _ => &self.color,
        }
    }

    /// Same geometry with a replaced shared color image (e.g. after shading).
    pub fn with_color(&self, color: Image) -> Result<Self> {
        let mpi = Self {
            color,
            ..self.clone()
        };
        mpi.validate()?;
        Ok(mpi)
    }

    /// Same color with replaced alpha maps. `depths` must match the new stack.
    pub fn with_alphas(&self, alphas: Vec<Image>, depths: Vec<f64>) -> Result<Self> {
        let mpi = Self {
            alphas,
            depths,
            ..self.clone()
        };
        mpi.validate()?;
        Ok(mpi)
    }

    /// Plane depths rescaled to `[0, 1]` between the first and last plane.
    pub fn normalized_depths(&self) -> Vec<f64> {
        let (d1, dl) = (self.depths[0], self.depths[self.depths.len() - 1]);
        self.depths
            .iter()
            .map(|&d| normalize_depth(d, d1, dl).unwrap_or(0.0))
            .collect()
    }
}

/// Depths for `count` planes spaced evenly in disparity (inverse depth) from `near` to `far`.
pub fn place_planes_disparity(count: usize, near: f64, far: f64) -> Result<Vec<f64>> {
    if count == 0 {
        return Err(Error::InvalidRange("plane count must be at least 1".into()));
    }
    if !(near > 0.0 && near < far && far.is_finite()) {
        return Err(Error::InvalidRange(format!("near {near}, far {far}")));
    }
    if count == 1 {
        return Ok(vec![near]);
    }
    let (inv_near, inv_far) = (1.0 / near, 1.0 / far);
    let last = count - 1;
    Ok((0..count)
        .map(|i| match i {
            0 => near,
            i if i == last => far,
            i => {
                let t = i as f64 / last as f64;
                1.0 / (inv_near + t * (inv_far - inv_near))
            }
        })
        .collect())
}

/// `(d - d_first) / (d_last - d_first)`.
///
/// A single-plane stack (`d_first == d_last`) maps to 0.
pub fn normalize_depth(d: f64, d_first: f64, d_last: f64) -> Result<f64> {
    if d_first == d_last {
        return Ok(0.0);
    }
    if !(d_first < d_last) {
        return Err(Error::DegenerateRange(format!(
            "first depth {d_first} beyond last depth {d_last}"
        )));
    }
    Ok((d - d_first) / (d_last - d_first))
}
