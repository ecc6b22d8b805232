use crate::error::{QrmError, Result};

/// Soft thresholding `sign(x)·max(|x|−t, 0)`.
#[inline]
pub fn shrink_scalar(x: f64, t: f64) -> f64 {
    if x > t {
        x - t
    } else if x < -t {
        x + t
    } else {
        0.0
    }
}

/// Entrywise soft thresholding, the proximal map of `t‖·‖₁`.
pub fn shrink(x: &[f64], t: f64) -> Result<Vec<f64>> {
    if !(t >= 0.0) {
        return Err(QrmError::invalid(format!("shrink threshold must be >= 0, got {t}")));
    }
    Ok(x.iter().map(|&v| shrink_scalar(v, t)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn examples() {
        assert_eq!(shrink(&[3.0], 1.0).unwrap(), vec![2.0]);
        assert_eq!(shrink(&[-0.5], 1.0).unwrap(), vec![0.0]);
        assert_eq!(shrink(&[-2.5, 0.0], 1.0).unwrap(), vec![-1.5, 0.0]);
    }

    #[test]
    fn negative_threshold_rejected() {
        assert!(shrink(&[1.0], -1e-3).is_err());
        assert!(shrink(&[1.0], f64::NAN).is_err());
    }
}
