//! Evaluation metrics against a known ground truth.

use crate::datagen::Instance;
use crate::error::{Error, Result};
use crate::model::{value, Assortment};

/// `V(s*; θ*) − V(ŝ; θ*)`; float noise below `1e-9` is clamped to zero.
pub fn regret(instance: &Instance, s_hat: &Assortment) -> Result<f64> {
    let gap = instance.v_star - value(&instance.catalog, s_hat, &instance.theta_star)?;
    Ok(if gap < 0.0 && gap > -1e-9 { 0.0 } else { gap })
}

/// `|ŝ ∩ s*| / |s*|`
pub fn assortment_accuracy(s_hat: &Assortment, s_star: &Assortment) -> Result<f64> {
    if s_star.is_empty() {
        return Err(Error::EmptyAssortment);
    }
    Ok(s_hat.intersection_len(s_star) as f64 / s_star.len() as f64)
}
