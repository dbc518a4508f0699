//! Feature maps and the plane-conditioned feature used by the alpha branch.

use crate::error::{Error, Result};

/// Channel-major `channels x res x res` feature map.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureMap {
    pub resolution: usize,
    pub channels: usize,
    pub data: Vec<f64>,
}

impl FeatureMap {
    pub fn zeros(resolution: usize, channels: usize) -> Self {
        Self {
            resolution,
            channels,
            data: vec![0.0; resolution * resolution * channels],
        }
    }

    pub fn plane_len(&self) -> usize {
        self.resolution * self.resolution
    }

    pub fn channel(&self, c: usize) -> &[f64] {
        let n = self.plane_len();
        &self.data[c * n..(c + 1) * n]
    }

    /// Per-channel spatial mean and (population) standard deviation.
    pub fn channel_stats(&self) -> Vec<(f64, f64)> {
        let n = self.plane_len() as f64;
        (0..self.channels)
            .map(|c| {
                let ch = self.channel(c);
                let mean = ch.iter().sum::<f64>() / n;
                let var = ch.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
                (mean, var.sqrt())
            })
            .collect()
    }
}

/// Intermediate synthesis features `F^h` at every resolution `4..=H`.
#[derive(Clone, Debug, PartialEq)]
pub struct FeaturePyramid {
    pub levels: Vec<FeatureMap>,
}

impl FeaturePyramid {
    pub fn level(&self, resolution: usize) -> Option<&FeatureMap> {
        self.levels.iter().find(|f| f.resolution == resolution)
    }
}

/// Added to the standard deviation before dividing.
pub const STD_EPS: f64 = 1e-8;

/// `(F - mu(F)) / (sigma(F) + eps)` with statistics per channel over space.
pub fn standardize_channels(feature: &FeatureMap) -> FeatureMap {
    let n = feature.plane_len();
    let mut out = feature.clone();
    for (c, (mean, sd)) in feature.channel_stats().into_iter().enumerate() {
        let denom = sd + STD_EPS;
        for v in &mut out.data[c * n..(c + 1) * n] {
            *v = (*v - mean) / denom;
        }
    }
    out
}

/// Plane embedding computed from a normalized plane depth and the style vector.
pub trait PlaneEmbedding {
    fn dim(&self) -> usize;
    fn embed(&self, normalized_depth: f64, omega: &[f64]) -> Vec<f64>;
}

/// `e = depth_weights * d' + style_weights * omega + bias`.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearEmbedding {
    pub depth_weights: Vec<f64>,
    /// Row-major `dim x style_dim`.
    pub style_weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl PlaneEmbedding for LinearEmbedding {
    fn dim(&self) -> usize {
        self.depth_weights.len()
    }

    fn embed(&self, normalized_depth: f64, omega: &[f64]) -> Vec<f64> {
        let dim = self.dim();
        let sd = omega.len();
        assert_eq!(self.style_weights.len(), dim * sd, "style weight shape");
        (0..dim)
            .map(|c| {
                let row = &self.style_weights[c * sd..(c + 1) * sd];
                self.depth_weights[c] * normalized_depth
                    + row.iter().zip(omega).map(|(w, o)| w * o).sum::<f64>()
                    + self.bias[c]
            })
            .collect()
    }
}

/// Plane-aware feature: the per-channel standardized `F^h` shifted by the plane embedding.
///
/// The depth must already be normalized to `[0, 1]`.
pub fn plane_feature(
    feature: &FeatureMap,
    normalized_depth: f64,
    omega: &[f64],
    embed: &dyn PlaneEmbedding,
) -> Result<FeatureMap> {
    if !(0.0..=1.0).contains(&normalized_depth) {
        return Err(Error::Invariant(format!(
            "plane depth {normalized_depth} is not normalized to [0, 1]"
        )));
    }
    let e = embed.embed(normalized_depth, omega);
    plane_feature_with_embedding(feature, &e)
}

pub fn plane_feature_with_embedding(feature: &FeatureMap, embedding: &[f64]) -> Result<FeatureMap> {
    if embedding.len() != feature.channels {
        return Err(Error::ShapeMismatch(format!(
            "embedding of length {} for {} channels",
            embedding.len(),
            feature.channels
        )));
    }
    let n = feature.plane_len();
    let mut out = standardize_channels(feature);
    for (c, e) in embedding.iter().enumerate() {
        for v in &mut out.data[c * n..(c + 1) * n] {
            *v += e;
        }
    }
    Ok(out)
}
