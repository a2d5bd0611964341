//! Error measures against reference fields.

use crate::{Error, Result};

/// `‖u − u_ref‖₂ / ‖u_ref‖₂` over a shared point set.
pub fn relative_l2(u: &[f64], u_ref: &[f64]) -> Result<f64> {
    weighted_relative_l2(u, u_ref, None)
}

/// `sqrt(Σ wᵢ(uᵢ − refᵢ)²) / sqrt(Σ wᵢ refᵢ²)`; unit weights when `None`.
pub fn weighted_relative_l2(u: &[f64], u_ref: &[f64], weights: Option<&[f64]>) -> Result<f64> {
    if u.len() != u_ref.len() {
        return Err(Error::Precondition(format!("{} values against {} reference values", u.len(), u_ref.len())));
    }
    if let Some(w) = weights {
        if w.len() != u.len() {
            return Err(Error::Precondition(format!("{} weights for {} values", w.len(), u.len())));
        }
        if w.iter().any(|x| !(*x >= 0.0)) {
            return Err(Error::Precondition("weights must be non-negative".into()));
        }
    }
    let w = |i: usize| weights.map_or(1.0, |w| w[i]);
    let den: f64 = u_ref.iter().enumerate().map(|(i, r)| w(i) * r * r).sum();
    if den == 0.0 {
        return Err(Error::numeric("relative error against an identically zero reference"));
    }
    let num: f64 = u.iter().zip(u_ref).enumerate().map(|(i, (a, b))| w(i) * (a - b) * (a - b)).sum();
    Ok((num / den).sqrt())
}

/// Root-mean-square of a slice; zero for an empty slice.
pub fn rms(v: &[f64]) -> f64 {
    if v.is_empty() {
        return 0.0;
    }
    (v.iter().map(|x| x * x).sum::<f64>() / v.len() as f64).sqrt()
}
