//! Forward-only toy versions of the generator-side formulas: residual pyramids, the
//! plane-conditioned alpha branch, truncation, depth-to-alpha, the background plane, the
//! pose-conditioned discriminator logit and the adversarial loss.

pub mod background;
pub mod d2a;
pub mod discriminator;
pub mod feature;
pub mod loss;
pub mod pyramid;
pub mod style;
pub mod toy;

pub use background::background_fill;
pub use d2a::depth_to_alpha;
pub use discriminator::{projection_logit, ToyDiscriminator};
pub use feature::{plane_feature, FeatureMap, FeaturePyramid, LinearEmbedding, PlaneEmbedding};
pub use loss::{gan_loss_terms, nonsaturating_f, LossParams};
pub use pyramid::{accumulate_pyramid, alpha_pyramid, channel_dim, upsample_bilinear};
pub use style::{truncate_style, StyleState};
pub use toy::{toy_mpi_generate, ToyConfig, ToyGenerator};
