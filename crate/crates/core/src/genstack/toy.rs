//! A seeded, untrained generator that runs the full MPI generation path end to end:
//! mapping, truncation, synthesis pyramid, per-plane conditioned alpha branch and
//! background plane. Weights are random; only shapes and invariants are meaningful.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::background::{background_fill, DEFAULT_FRACTION};
use super::feature::{standardize_channels, FeatureMap, FeaturePyramid, LinearEmbedding, PlaneEmbedding};
use super::pyramid::{accumulate_pyramid, alpha_pyramid, channel_dim, resolutions, upsample2x, BASE_RESOLUTION};
use super::style::{truncate_style, StyleState};
use crate::error::{Error, Result};
use crate::mpi::{normalize_depth, place_planes_disparity, MultiplaneImage};
use crate::raster::Image;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ToyConfig {
    /// Number of planes `L`; does not affect any weight shape.
    pub planes: usize,
    /// Output resolution `H`.
    pub resolution: usize,
    /// Top resolution of the alpha branch `H_alpha`.
    pub alpha_resolution: usize,
    pub near: f64,
    pub far: f64,
    pub channel_base: usize,
    pub latent_dim: usize,
    pub style_dim: usize,
    /// Weight seed.
    pub seed: u64,
    /// Truncation level.
    pub psi: f64,
}

impl Default for ToyConfig {
    fn default() -> Self {
        Self {
            planes: 32,
            resolution: 256,
            alpha_resolution: 256,
            near: 0.95,
            far: 1.12,
            channel_base: 1 << 15,
            latent_dim: 64,
            style_dim: 64,
            seed: 0,
            psi: 1.0,
        }
    }
}

impl ToyConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::InvalidConfig(e.to_string()))
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if self.planes == 0 {
            return bad("planes must be at least 1".into());
        }
        if !self.resolution.is_power_of_two() || self.resolution < BASE_RESOLUTION {
            return bad(format!("resolution {} must be a power of two >= 4", self.resolution));
        }
        if !self.alpha_resolution.is_power_of_two()
            || self.alpha_resolution < BASE_RESOLUTION
            || self.alpha_resolution > self.resolution
        {
            return bad(format!(
                "alpha resolution {} must be a power of two in [4, {}]",
                self.alpha_resolution, self.resolution
            ));
        }
        if self.planes >= 2 && (self.resolution as f64 * DEFAULT_FRACTION) < 1.0 {
            return bad(format!(
                "resolution {} too small for the background plane",
                self.resolution
            ));
        }
        if channel_dim(self.resolution, self.channel_base) == 0 {
            return bad(format!(
                "channel base {} gives no channels at resolution {}",
                self.channel_base, self.resolution
            ));
        }
        if !(self.near > 0.0 && self.near < self.far) {
            return bad(format!("near {} / far {}", self.near, self.far));
        }
        if !(0.0..=1.0).contains(&self.psi) {
            return bad(format!("psi {} outside [0, 1]", self.psi));
        }
        if self.latent_dim == 0 || self.style_dim == 0 {
            return bad("latent and style dimensions must be positive".into());
        }
        Ok(())
    }
}

const LRELU_SLOPE: f64 = 0.2;
const STYLE_STRENGTH: f64 = 0.2;
const NOISE_STRENGTH: f64 = 0.1;
const RGB_GAIN: f64 = 0.25;
const ALPHA_GAIN: f64 = 0.5;
/// Pre-sigmoid alpha gained per level when the normalized depth goes from 0 to 1.
const DEPTH_GAIN: f64 = 1.5;
const MEAN_STYLE_SAMPLES: usize = 256;

fn lrelu(x: f64) -> f64 {
    if x >= 0.0 {
        x
    } else {
        LRELU_SLOPE * x
    }
}

fn gaussians(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> Vec<f64> {
    (0..n)
        .map(|_| {
            let v: f64 = StandardNormal.sample(rng);
            v * scale
        })
        .collect()
}

fn matvec(w: &[f64], x: &[f64]) -> Vec<f64> {
    w.chunks(x.len())
        .map(|row| row.iter().zip(x).map(|(a, b)| a * b).sum())
        .collect()
}

#[derive(Clone, Debug)]
struct AlphaHead {
    weights: Vec<f64>,
    bias: f64,
    embed: LinearEmbedding,
}

impl AlphaHead {
    /// 1x1 convolution to one channel.
    fn apply(&self, feature: &FeatureMap) -> Image {
        let n = feature.plane_len();
        let mut out = vec![self.bias; n];
        for (c, w) in self.weights.iter().enumerate() {
            for (o, v) in out.iter_mut().zip(feature.channel(c)) {
                *o += w * v;
            }
        }
        Image::from_vec(feature.resolution, feature.resolution, 1, out).expect("shape")
    }
}

#[derive(Clone, Debug)]
struct SynthLevel {
    resolution: usize,
    in_channels: usize,
    channels: usize,
    /// `in_channels x style_dim`
    modulation: Vec<f64>,
    /// `channels x in_channels`
    conv: Vec<f64>,
    noise: Vec<f64>,
    /// `3 x channels`
    to_rgb: Vec<f64>,
    rgb_bias: [f64; 3],
    alpha: Option<AlphaHead>,
}

/// Seeded toy generator. Weight shapes depend on the resolutions and channel base only, so
/// one instance can emit MPIs with any plane count.
#[derive(Clone, Debug)]
pub struct ToyGenerator {
    config: ToyConfig,
    mapping: [Vec<f64>; 2],
    const_input: FeatureMap,
    levels: Vec<SynthLevel>,
    omega_bar: Vec<f64>,
}

impl ToyGenerator {
    pub fn new(config: ToyConfig) -> Result<Self> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let (zd, sd) = (config.latent_dim, config.style_dim);
        let mapping = [
            gaussians(&mut rng, sd * zd, 1.0 / (zd as f64).sqrt()),
            gaussians(&mut rng, sd * sd, 1.0 / (sd as f64).sqrt()),
        ];
        let base_channels = channel_dim(BASE_RESOLUTION, config.channel_base);
        let const_input = FeatureMap {
            resolution: BASE_RESOLUTION,
            channels: base_channels,
            data: gaussians(&mut rng, base_channels * BASE_RESOLUTION * BASE_RESOLUTION, 1.0),
        };
        let mut levels = Vec::new();
        let mut in_channels = base_channels;
        for h in resolutions(config.resolution) {
            let channels = channel_dim(h, config.channel_base);
            let modulation = gaussians(&mut rng, in_channels * sd, 1.0 / (sd as f64).sqrt());
            let conv = gaussians(&mut rng, channels * in_channels, (2.0 / in_channels as f64).sqrt());
            let noise = gaussians(&mut rng, h * h, NOISE_STRENGTH);
            let to_rgb = gaussians(&mut rng, 3 * channels, RGB_GAIN / (channels as f64).sqrt());
            let rb = gaussians(&mut rng, 3, 0.1);
            let alpha = (h <= config.alpha_resolution).then(|| {
                let weights = gaussians(&mut rng, channels, ALPHA_GAIN / (channels as f64).sqrt());
                let bias = gaussians(&mut rng, 1, 0.1)[0];
                // Depth weights are aligned with the head so alpha rises with depth; the bias
                // recenters the depth term around mid-range.
                let wn: f64 = weights.iter().map(|w| w * w).sum();
                let depth_weights: Vec<f64> = weights
                    .iter()
                    .map(|w| {
                        let g: f64 = StandardNormal.sample(&mut rng);
                        DEPTH_GAIN * w / wn * (1.0 + 0.1 * g)
                    })
                    .collect();
                let style_weights = gaussians(&mut rng, channels * sd, 0.1 / (sd as f64).sqrt());
                let bias_e = depth_weights.iter().map(|d| -0.5 * d).collect();
                AlphaHead {
                    weights,
                    bias,
                    embed: LinearEmbedding {
                        depth_weights,
                        style_weights,
                        bias: bias_e,
                    },
                }
            });
            levels.push(SynthLevel {
                resolution: h,
                in_channels,
                channels,
                modulation,
                conv,
                noise,
                to_rgb,
                rgb_bias: [rb[0], rb[1], rb[2]],
                alpha,
            });
            in_channels = channels;
        }
        let mut generator = Self {
            config,
            mapping,
            const_input,
            levels,
            omega_bar: Vec::new(),
        };
        let mut mean = vec![0.0; sd];
        for _ in 0..MEAN_STYLE_SAMPLES {
            let z = gaussians(&mut rng, zd, 1.0);
            for (m, w) in mean.iter_mut().zip(generator.map(&z)) {
                *m += w / MEAN_STYLE_SAMPLES as f64;
            }
        }
        generator.omega_bar = mean;
        Ok(generator)
    }

    pub fn config(&self) -> &ToyConfig {
        &self.config
    }

    /// Standard-normal latent code drawn from `z_seed`.
    pub fn sample_latent(&self, z_seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(z_seed);
        gaussians(&mut rng, self.config.latent_dim, 1.0)
    }

    /// Mapping network: normalized latent through two dense layers.
    pub fn map(&self, z: &[f64]) -> Vec<f64> {
        let rms = (z.iter().map(|v| v * v).sum::<f64>() / z.len() as f64).sqrt().max(1e-8);
        let zn: Vec<f64> = z.iter().map(|v| v / rms).collect();
        let hidden: Vec<f64> = matvec(&self.mapping[0], &zn).into_iter().map(lrelu).collect();
        matvec(&self.mapping[1], &hidden)
    }

    pub fn style_state(&self, z: &[f64]) -> Result<StyleState> {
        if z.len() != self.config.latent_dim {
            return Err(Error::ShapeMismatch(format!(
                "latent of length {}, expected {}",
                z.len(),
                self.config.latent_dim
            )));
        }
        Ok(StyleState {
            z: z.to_vec(),
            omega: self.map(z),
            omega_bar: self.omega_bar.clone(),
            psi: self.config.psi,
        })
    }

    /// Synthesis features at every resolution and the accumulated color image in `[0, 1]`.
    pub fn synthesize(&self, omega: &[f64]) -> Result<(FeaturePyramid, Image)> {
        let mut features: Vec<FeatureMap> = Vec::with_capacity(self.levels.len());
        let mut rgb_residuals = Vec::with_capacity(self.levels.len());
        for level in &self.levels {
            let input = match features.last() {
                None => self.const_input.clone(),
                Some(prev) => upsample_feature(prev),
            };
            let feature = self.synth_level(level, &input, omega);
            rgb_residuals.push(to_rgb(level, &feature));
            features.push(feature);
        }
        let acc = accumulate_pyramid(&rgb_residuals, upsample2x)?;
        let color = acc.map(|v| (0.5 * (v + 1.0)).clamp(0.0, 1.0));
        Ok((FeaturePyramid { levels: features }, color))
    }

    fn synth_level(&self, level: &SynthLevel, input: &FeatureMap, omega: &[f64]) -> FeatureMap {
        debug_assert_eq!(input.channels, level.in_channels);
        let style: Vec<f64> = matvec(&level.modulation, omega)
            .into_iter()
            .map(|s| 1.0 + STYLE_STRENGTH * s)
            .collect();
        let n = input.plane_len();
        let mut out = FeatureMap::zeros(level.resolution, level.channels);
        let cin = level.in_channels;
        out.data.par_chunks_mut(n).enumerate().for_each(|(c, dst)| {
            let row = &level.conv[c * cin..(c + 1) * cin];
            for (k, (w, s)) in row.iter().zip(&style).enumerate() {
                let ws = w * s;
                for (d, v) in dst.iter_mut().zip(input.channel(k)) {
                    *d += ws * v;
                }
            }
            for (d, nz) in dst.iter_mut().zip(&level.noise) {
                *d = lrelu(*d + nz);
            }
        });
        out
    }

    /// Pre-sigmoid alpha residuals of one plane, from 4x4 up to the alpha resolution.
    ///
    /// `ToAlpha(standardize(F) + e) = ToAlpha(standardize(F)) + w . e` since the head is a
    /// 1x1 convolution; the standardized projection is shared across planes.
    fn alpha_residuals(&self, shared: &[Image], normalized_depth: f64, omega: &[f64]) -> Vec<Image> {
        self.levels
            .iter()
            .filter_map(|l| l.alpha.as_ref())
            .zip(shared)
            .map(|(head, proj)| {
                let e = head.embed.embed(normalized_depth, omega);
                let shift: f64 = head.weights.iter().zip(&e).map(|(w, v)| w * v).sum();
                proj.map(|v| v + shift)
            })
            .collect()
    }

    fn shared_alpha_projections(&self, pyramid: &FeaturePyramid) -> Vec<Image> {
        self.levels
            .iter()
            .zip(&pyramid.levels)
            .filter_map(|(l, f)| l.alpha.as_ref().map(|head| head.apply(&standardize_channels(f))))
            .collect()
    }

    /// Generates an MPI with `config.planes` planes placed evenly in disparity.
    pub fn generate(&self, z: &[f64]) -> Result<MultiplaneImage> {
        self.generate_with_planes(z, self.config.planes)
    }

    pub fn generate_with_planes(&self, z: &[f64], planes: usize) -> Result<MultiplaneImage> {
        let cfg = &self.config;
        let state = self.style_state(z)?;
        let omega = truncate_style(&state.omega, &state.omega_bar, state.psi)?;
        let (pyramid, color) = self.synthesize(&omega)?;
        let depths = place_planes_disparity(planes, cfg.near, cfg.far)?;
        let (first, last) = (depths[0], depths[planes - 1]);
        let shared = self.shared_alpha_projections(&pyramid);
        let mut alphas = depths
            .par_iter()
            .map(|&d| {
                let dn = normalize_depth(d, first, last)?;
                alpha_pyramid(&self.alpha_residuals(&shared, dn, &omega), cfg.resolution)
            })
            .collect::<Result<Vec<_>>>()?;
        let mpi = if planes >= 2 {
            let bg = background_fill(&color, DEFAULT_FRACTION)?;
            alphas[planes - 1] = Image::filled(cfg.resolution, cfg.resolution, 1, 1.0);
            MultiplaneImage::new(color, alphas, depths, cfg.near, cfg.far)?.with_background(bg)?
        } else {
            MultiplaneImage::new(color, alphas, depths, cfg.near, cfg.far)?
        };
        Ok(mpi)
    }

    #[cfg(test)]
    fn alpha_residuals_direct(&self, pyramid: &FeaturePyramid, normalized_depth: f64, omega: &[f64]) -> Vec<Image> {
        use super::feature::plane_feature;
        self.levels
            .iter()
            .zip(&pyramid.levels)
            .filter_map(|(l, f)| {
                l.alpha.as_ref().map(|head| {
                    let fa = plane_feature(f, normalized_depth, omega, &head.embed).unwrap();
                    head.apply(&fa)
                })
            })
            .collect()
    }
}

fn upsample_feature(f: &FeatureMap) -> FeatureMap {
    let n = f.resolution;
    let mut out = FeatureMap::zeros(n * 2, f.channels);
    let m = out.plane_len();
    out.data.par_chunks_mut(m).enumerate().for_each(|(c, dst)| {
        let src = Image::from_vec(n, n, 1, f.channel(c).to_vec()).expect("shape");
        dst.copy_from_slice(upsample2x(&src).data());
    });
    out
}

fn to_rgb(level: &SynthLevel, feature: &FeatureMap) -> Image {
    let n = feature.plane_len();
    let mut data = vec![0.0; n * 3];
    for ch in 0..3 {
        let row = &level.to_rgb[ch * level.channels..(ch + 1) * level.channels];
        let mut acc = vec![level.rgb_bias[ch]; n];
        for (c, w) in row.iter().enumerate() {
            for (a, v) in acc.iter_mut().zip(feature.channel(c)) {
                *a += w * v;
            }
        }
        for (p, a) in acc.into_iter().enumerate() {
            data[p * 3 + ch] = a;
        }
    }
    Image::from_vec(feature.resolution, feature.resolution, 3, data).expect("shape")
}

/// One-shot generation: builds the seeded weights of `config` and runs them on `z`.
pub fn toy_mpi_generate(z: &[f64], config: &ToyConfig) -> Result<MultiplaneImage> {
    ToyGenerator::new(config.clone())?.generate(z)
}

/// Draws a latent of the configured size from `rng`.
pub fn random_latent<R: Rng + ?Sized>(config: &ToyConfig, rng: &mut R) -> Vec<f64> {
    (0..config.latent_dim)
        .map(|_| StandardNormal.sample(rng))
        .collect()
}
