use std::f64::consts::PI;

use crate::error::{QrmError, Result};

/// Boolean sampling pattern over unshifted DFT indices (DC at `(0, 0)`).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SamplingMask {
    height: usize,
    width: usize,
    data: Vec<bool>,
}

impl SamplingMask {
    pub fn new(height: usize, width: usize, data: Vec<bool>) -> Result<Self> {
        if data.len() != height * width {
            return Err(QrmError::dimension("SamplingMask::new", height * width, data.len()));
        }
        Ok(SamplingMask {
            height,
            width,
            data,
        })
    }

    pub fn full(height: usize, width: usize) -> Self {
        SamplingMask {
            height,
            width,
            data: vec![true; height * width],
        }
    }

    /// `n_lines` lines through the DC term at angles `πi/n_lines`, one
    /// sample per integer radius, rounded to the nearest grid frequency.
    /// The result is made symmetric under `k ↦ −k` and always holds DC.
    pub fn radial(height: usize, width: usize, n_lines: usize) -> Result<Self> {
        if n_lines == 0 {
            return Err(QrmError::invalid("radial mask needs at least one line"));
        }
        if height == 0 || width == 0 {
            return Err(QrmError::invalid("radial mask needs a non-empty grid"));
        }
        let mut mask = SamplingMask {
            height,
            width,
            data: vec![false; height * width],
        };
        let half_h = (height / 2) as i64;
        let half_w = (width / 2) as i64;
        let radius = height.max(width) as i64;
        for line in 0..n_lines {
            let theta = PI * line as f64 / n_lines as f64;
            let (sin, cos) = theta.sin_cos();
            for r in -radius..=radius {
                let ky = (r as f64 * sin).round() as i64;
                let kx = (r as f64 * cos).round() as i64;
                if ky.abs() <= half_h && kx.abs() <= half_w {
                    mask.set_signed(ky, kx);
                }
            }
        }
        mask.set_signed(0, 0);
        mask.symmetrize();
        Ok(mask)
    }

    fn set_signed(&mut self, ky: i64, kx: i64) {
        let i = ky.rem_euclid(self.height as i64) as usize;
        let j = kx.rem_euclid(self.width as i64) as usize;
        self.data[i * self.width + j] = true;
    }

    fn symmetrize(&mut self) {
        let (h, w) = (self.height, self.width);
        for i in 0..h {
            for j in 0..w {
                if self.data[i * w + j] {
                    let mi = (h - i) % h;
                    let mj = (w - j) % w;
                    self.data[mi * w + mj] = true;
                }
            }
        }
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> bool {
        self.data[i * self.width + j]
    }

    pub fn as_slice(&self) -> &[bool] {
        &self.data
    }

    pub fn count(&self) -> usize {
        self.data.iter().filter(|&&b| b).count()
    }

    pub fn fraction(&self) -> f64 {
        self.count() as f64 / self.data.len() as f64
    }

    pub fn is_symmetric(&self) -> bool {
        let (h, w) = (self.height, self.width);
        (0..h).all(|i| (0..w).all(|j| self.get(i, j) == self.get((h - i) % h, (w - j) % w)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_line_is_one_diameter() {
        for (h, w) in [(32, 32), (16, 24)] {
            let m = SamplingMask::radial(h, w, 1).unwrap();
            assert_eq!(m.count(), w);
            assert!(m.get(0, 0));
            assert!((0..w).all(|j| m.get(0, j)));
        }
    }

    #[test]
    fn symmetric_with_dc() {
        for lines in [3, 7, 10, 13] {
            let m = SamplingMask::radial(64, 48, lines).unwrap();
            assert!(m.is_symmetric());
            assert!(m.get(0, 0));
        }
    }

    #[test]
    fn dense_limit_does_not_exceed_one() {
        let m = SamplingMask::radial(32, 32, 32).unwrap();
        assert!(m.fraction() <= 1.0);
        assert!(m.fraction() > 0.5);
        let sparse = SamplingMask::radial(32, 32, 4).unwrap();
        assert!(sparse.fraction() < m.fraction());
    }

    #[test]
    fn ten_lines_on_256_is_deterministic() {
        let a = SamplingMask::radial(256, 256, 10).unwrap();
        let b = SamplingMask::radial(256, 256, 10).unwrap();
        assert_eq!(a, b);
        // frozen count for the rasterization rule
        assert_eq!(a.count(), 2671);
    }

    #[test]
    fn zero_lines_rejected() {
        assert!(SamplingMask::radial(8, 8, 0).is_err());
    }
}
