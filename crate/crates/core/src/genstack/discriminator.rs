//! Pose-conditioned projection logit, plus a linear toy discriminator for exercising it.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::camera::CameraPose;
use crate::error::{Error, Result};
use crate::raster::Image;

/// Length of the discriminator feature and of the pose embedding.
pub const POSE_DIM: usize = 16;

/// Standardizes `v` to zero mean and unit (population) variance.
pub fn normalize_embedding(v: &[f64]) -> Result<Vec<f64>> {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    if !(var > 0.0) {
        return Err(Error::ZeroVariance);
    }
    let sd = var.sqrt();
    Ok(v.iter().map(|x| (x - mean) / sd).collect())
}

/// `Normalize(pose_embedding) . feature`.
pub fn projection_logit(feature: &[f64], pose_embedding: &[f64]) -> Result<f64> {
    if feature.len() != pose_embedding.len() || feature.is_empty() {
        return Err(Error::ShapeMismatch(format!(
            "feature of length {} vs embedding of length {}",
            feature.len(),
            pose_embedding.len()
        )));
    }
    let e = normalize_embedding(pose_embedding)?;
    Ok(e.iter().zip(feature).map(|(a, b)| a * b).sum())
}

/// Discriminator whose feature is a fixed linear projection of the image and whose pose
/// embedding is a fixed affine map of the flattened extrinsics. The logit is linear in the
/// image, so its input gradient is known in closed form.
#[derive(Clone, Debug)]
pub struct ToyDiscriminator {
    width: usize,
    height: usize,
    /// Row-major `POSE_DIM x (w * h * 3)`.
    feature_weights: Vec<f64>,
    /// Row-major `POSE_DIM x 16`.
    embed_weights: Vec<f64>,
    embed_bias: Vec<f64>,
}

impl ToyDiscriminator {
    pub fn new<R: Rng + ?Sized>(width: usize, height: usize, rng: &mut R) -> Self {
        let n = width * height * 3;
        let scale = 1.0 / (n as f64).sqrt();
        let mut normal = || -> f64 { StandardNormal.sample(rng) };
        let feature_weights = (0..POSE_DIM * n).map(|_| normal() * scale).collect();
        let embed_weights = (0..POSE_DIM * 16).map(|_| normal() * 0.25).collect();
        let embed_bias = (0..POSE_DIM).map(|_| normal()).collect();
        Self {
            width,
            height,
            feature_weights,
            embed_weights,
            embed_bias,
        }
    }

    fn input_len(&self) -> usize {
        self.width * self.height * 3
    }

    pub fn features(&self, image: &Image) -> Result<Vec<f64>> {
        if image.width() != self.width || image.height() != self.height || image.channels() != 3 {
            return Err(Error::ShapeMismatch("discriminator input".into()));
        }
        let n = self.input_len();
        Ok(self
            .feature_weights
            .chunks(n)
            .map(|row| row.iter().zip(image.data()).map(|(w, x)| w * x).sum())
            .collect())
    }

    pub fn pose_embedding(&self, pose: &CameraPose) -> Vec<f64> {
        let v = pose.flattened();
        self.embed_weights
            .chunks(16)
            .zip(&self.embed_bias)
            .map(|(row, b)| row.iter().zip(&v).map(|(w, x)| w * x).sum::<f64>() + b)
            .collect()
    }

    pub fn logit(&self, image: &Image, pose: &CameraPose) -> Result<f64> {
        projection_logit(&self.features(image)?, &self.pose_embedding(pose))
    }

    /// Gradient of [`Self::logit`] with respect to the image, flattened.
    pub fn input_gradient(&self, pose: &CameraPose) -> Result<Vec<f64>> {
        let e = normalize_embedding(&self.pose_embedding(pose))?;
        let n = self.input_len();
        let mut g = vec![0.0; n];
        for (row, ek) in self.feature_weights.chunks(n).zip(&e) {
            for (gi, w) in g.iter_mut().zip(row) {
                *gi += ek * w;
            }
        }
        Ok(g)
    }
}
