//! Non-saturating GAN loss terms with an R1 penalty.

use crate::error::{Error, Result};

/// Weight of the R1 penalty.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LossParams {
    pub lambda: f64,
}

impl Default for LossParams {
    fn default() -> Self {
        Self { lambda: 10.0 }
    }
}

/// `log(1 + exp(x))` without overflow.
pub fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

/// `f(x) = -log(1 + exp(-x))`.
pub fn nonsaturating_f(x: f64) -> f64 {
    -softplus(-x)
}

/// `f'(x) = sigmoid(-x)`.
pub fn nonsaturating_f_prime(x: f64) -> f64 {
    crate::genstack::pyramid::sigmoid(-x)
}

/// `mean_fake f(x) + mean_real [f(x) + lambda * |grad|^2]`.
pub fn gan_loss_terms(
    fake_logits: &[f64],
    real_logits: &[f64],
    grad_norms_sq: &[f64],
    params: &LossParams,
) -> Result<f64> {
    if real_logits.len() != grad_norms_sq.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} real logits with {} gradient norms",
            real_logits.len(),
            grad_norms_sq.len()
        )));
    }
    if fake_logits.is_empty() || real_logits.is_empty() {
        return Err(Error::ShapeMismatch("empty logit batch".into()));
    }
    if !(params.lambda >= 0.0) {
        return Err(Error::InvalidRange(format!("lambda {}", params.lambda)));
    }
    let fake = fake_logits.iter().map(|&x| nonsaturating_f(x)).sum::<f64>() / fake_logits.len() as f64;
    let real = real_logits
        .iter()
        .zip(grad_norms_sq)
        .map(|(&x, &g)| nonsaturating_f(x) + params.lambda * g)
        .sum::<f64>()
        / real_logits.len() as f64;
    Ok(fake + real)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn f_values() {
        assert!((nonsaturating_f(0.0) + std::f64::consts::LN_2).abs() < 1e-15);
        assert!((nonsaturating_f(-50.0) + 50.0).abs() < 1e-12);
        assert_eq!(nonsaturating_f(-1e4), -1e4);
        assert!(nonsaturating_f(1e4).abs() < 1e-300);
        assert!(nonsaturating_f(1e4).is_finite());
    }

    #[test]
    fn derivative_is_sigmoid_of_negative() {
        for x in [-30.0, -2.0, -0.1, 0.0, 0.7, 5.0, 40.0] {
            let h = 1e-5;
            let fd = (nonsaturating_f(x + h) - nonsaturating_f(x - h)) / (2.0 * h);
            assert!((fd - nonsaturating_f_prime(x)).abs() < 1e-9, "x = {x}");
        }
    }

    #[test]
    fn r1_term_adds_weighted_norm() {
        let p = LossParams::default();
        let base = gan_loss_terms(&[0.3], &[-0.2], &[0.0], &p).unwrap();
        let with = gan_loss_terms(&[0.3], &[-0.2], &[0.1], &p).unwrap();
        assert!((with - base - 1.0).abs() < 1e-12);
        assert!(gan_loss_terms(&[0.3], &[-0.2, 0.1], &[0.1], &p).is_err());
    }
}
