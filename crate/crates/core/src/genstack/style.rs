//! Style embedding state and truncation.

use crate::error::{Error, Result};

/// Latent code, style embedding, its running mean, and the truncation level.
#[derive(Clone, Debug, PartialEq)]
pub struct StyleState {
    pub z: Vec<f64>,
    pub omega: Vec<f64>,
    pub omega_bar: Vec<f64>,
    pub psi: f64,
}

impl StyleState {
    pub fn truncated(&self) -> Result<Vec<f64>> {
        truncate_style(&self.omega, &self.omega_bar, self.psi)
    }
}

/// `omega_bar + psi * (omega - omega_bar)`.
pub fn truncate_style(omega: &[f64], omega_bar: &[f64], psi: f64) -> Result<Vec<f64>> {
    if omega.len() != omega_bar.len() {
        return Err(Error::ShapeMismatch(format!(
            "style of length {} vs mean of length {}",
            omega.len(),
            omega_bar.len()
        )));
    }
    if !(0.0..=1.0).contains(&psi) {
        return Err(Error::InvalidRange(format!("truncation psi {psi} outside [0, 1]")));
    }
    Ok(omega
        .iter()
        .zip(omega_bar)
        .map(|(w, m)| m + psi * (w - m))
        .collect())
}
