use crate::error::{QrmError, Result};
use crate::field::Field;
use crate::operators::DenseOperator;

/// CSV stand-in for an infinite PSNR.
pub const PSNR_CAP_DB: f64 = 200.0;

/// Sum of squared errors `‖û − u‖₂²`.
pub fn mse<U: Field>(u_hat: &U, u_true: &U) -> Result<f64> {
    if !u_hat.same_shape(u_true) {
        return Err(QrmError::dimension("mse", u_true.len(), u_hat.len()));
    }
    Ok(u_hat
        .values()
        .iter()
        .zip(u_true.values())
        .map(|(a, b)| (a - b) * (a - b))
        .sum())
}

/// Expected squared error `σ²·tr((A_ΛᵀA_Λ)⁻¹)` of least squares restricted
/// to the true support `Λ`.
pub fn oracle_mse(a: &DenseOperator, support: &[usize], sigma: f64) -> Result<f64> {
    if support.is_empty() {
        return Err(QrmError::invalid("oracle needs a nonempty support"));
    }
    if let Some(&bad) = support.iter().find(|&&i| i >= a.cols()) {
        return Err(QrmError::invalid(format!("support index {bad} out of range")));
    }
    let sub = a.columns(support);
    let gram = sub.tr_mul(&sub);
    let chol = gram
        .clone()
        .cholesky()
        .ok_or_else(|| QrmError::Numeric("A_Λ is rank deficient".into()))?;
    let l = chol.l_dirty();
    if (0..gram.nrows()).any(|i| !(l[(i, i)] * l[(i, i)] > 1e-12 * gram[(i, i)])) {
        return Err(QrmError::Numeric("A_Λ is rank deficient".into()));
    }
    let inv = chol.inverse();
    Ok(sigma * sigma * inv.trace())
}

/// Relative error `‖u⋆ − ũ‖₂/‖ũ‖₂` and `PSNR = 10 log₁₀(N P² / ‖u⋆ − ũ‖₂²)`
/// with `P = max ũ`. An exact match gives `+∞` PSNR.
pub fn re_psnr<U: Field>(u_star: &U, u_true: &U) -> Result<(f64, f64)> {
    if !u_star.same_shape(u_true) {
        return Err(QrmError::dimension("re_psnr", u_true.len(), u_star.len()));
    }
    let t = u_true.norm();
    if !(t > 0.0) {
        return Err(QrmError::invalid("reference image is zero"));
    }
    let err = u_star.distance(u_true);
    let peak = u_true.values().iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let psnr = if err == 0.0 {
        f64::INFINITY
    } else {
        10.0 * (u_true.len() as f64 * peak * peak / (err * err)).log10()
    };
    Ok((err / t, psnr))
}
