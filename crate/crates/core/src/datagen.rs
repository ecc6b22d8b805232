//! Seeded experiment inputs.
//!
//! Randomness comes from ChaCha20 (20 rounds, RFC 7539 block function as
//! implemented by `rand_chacha`), keyed by the 64-bit seed in little-endian
//! order in the first 8 key bytes with the remaining 24 bytes zero, stream
//! and counter starting at zero. Derived draws:
//!
//! - uniform on `[0, 1)`: `(next_u64 >> 11) · 2⁻⁵³`
//! - standard normal: Box–Muller on `u₁ = 1 − uniform`, `u₂ = uniform`,
//!   returning `√(−2 ln u₁)·cos(2πu₂)` then `√(−2 ln u₁)·sin(2πu₂)`
//! - index in `[0, n)`: Lemire's multiply-shift with rejection

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand_chacha::ChaCha20Rng;
use rand_core::{RngCore, SeedableRng};

use crate::error::{QrmError, Result};
use crate::field::{DenseVector, ImageGrid};
use crate::operators::{DenseOperator, KSpace, SamplingMask};

#[derive(Clone, Debug)]
pub struct ExperimentRng {
    inner: ChaCha20Rng,
    spare: Option<f64>,
}

impl ExperimentRng {
    pub fn new(seed: u64) -> Self {
        let mut key = [0u8; 32];
        key[..8].copy_from_slice(&seed.to_le_bytes());
        ExperimentRng {
            inner: ChaCha20Rng::from_seed(key),
            spare: None,
        }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn normal(&mut self) -> f64 {
        if let Some(z) = self.spare.take() {
            return z;
        }
        let u1 = 1.0 - self.uniform();
        let u2 = self.uniform();
        let r = (-2.0 * u1.ln()).sqrt();
        let (s, c) = (2.0 * PI * u2).sin_cos();
        self.spare = Some(r * s);
        r * c
    }

    /// Uniform index in `[0, n)`.
    pub fn index(&mut self, n: usize) -> usize {
        assert!(n > 0);
        let n = n as u64;
        let mut m = self.next_u64() as u128 * n as u128;
        if (m as u64) < n {
            let t = n.wrapping_neg() % n;
            while (m as u64) < t {
                m = self.next_u64() as u128 * n as u128;
            }
        }
        (m >> 64) as usize
    }
}

/// `m × n` matrix of standard normals, drawn row by row, then each column
/// centered and scaled to unit Euclidean norm.
pub fn gen_gaussian_matrix(m: usize, n: usize, seed: u64) -> Result<DenseOperator> {
    if m == 0 || n == 0 {
        return Err(QrmError::invalid(format!("matrix must be non-empty, got {m}x{n}")));
    }
    let mut rng = ExperimentRng::new(seed);
    let mut entries = Vec::with_capacity(m * n);
    for _ in 0..m * n {
        entries.push(rng.normal());
    }
    let mut a = DMatrix::from_row_slice(m, n, &entries);
    for mut col in a.column_iter_mut() {
        let mean = col.sum() / m as f64;
        col.add_scalar_mut(-mean);
        let norm = col.norm();
        if norm > 0.0 {
            col /= norm;
        }
    }
    DenseOperator::new(a)
}

/// `s`-sparse vector: the support is the first `s` positions of a partial
/// Fisher–Yates shuffle of `0..n`, sorted ascending; amplitudes are standard
/// normals assigned in ascending index order.
pub fn gen_sparse_signal(n: usize, s: usize, seed: u64) -> Result<(DenseVector, Vec<usize>)> {
    if s == 0 || s > n {
        return Err(QrmError::invalid(format!("need 1 <= s <= n, got s={s}, n={n}")));
    }
    let mut rng = ExperimentRng::new(seed);
    let mut idx: Vec<usize> = (0..n).collect();
    for i in 0..s {
        let j = i + rng.index(n - i);
        idx.swap(i, j);
    }
    let mut support = idx[..s].to_vec();
    support.sort_unstable();
    let mut u = DenseVector::zeros(n);
    for &i in &support {
        let mut a = rng.normal();
        while a == 0.0 {
            a = rng.normal();
        }
        u[i] = a;
    }
    Ok((u, support))
}

fn check_sigma(sigma: f64) -> Result<()> {
    if !(sigma >= 0.0 && sigma.is_finite()) {
        return Err(QrmError::invalid(format!("sigma must be >= 0, got {sigma}")));
    }
    Ok(())
}

/// Adds i.i.d. `N(0, σ²)` noise to every entry.
pub fn add_noise(clean: &DenseVector, sigma: f64, seed: u64) -> Result<DenseVector> {
    check_sigma(sigma)?;
    if sigma == 0.0 {
        return Ok(clean.clone());
    }
    let mut rng = ExperimentRng::new(seed);
    Ok(clean.map(|v| v + sigma * rng.normal()))
}

/// Adds i.i.d. `N(0, σ²)` noise to the real and imaginary parts of each
/// sampled frequency; unsampled entries stay zero. Draws run over the full
/// grid in row-major order (real part first) so the stream does not depend
/// on the mask.
pub fn add_noise_kspace(
    clean: &KSpace,
    mask: &SamplingMask,
    sigma: f64,
    seed: u64,
) -> Result<KSpace> {
    check_sigma(sigma)?;
    if clean.shape() != (mask.height(), mask.width()) {
        return Err(QrmError::dimension(
            "add_noise_kspace",
            format!("{:?}", (mask.height(), mask.width())),
            format!("{:?}", clean.shape()),
        ));
    }
    let mut rng = ExperimentRng::new(seed);
    let mut data = clean.data.clone();
    for (v, &keep) in data.iter_mut().zip(mask.as_slice()) {
        let (re, im) = if sigma > 0.0 {
            (rng.normal(), rng.normal())
        } else {
            (0.0, 0.0)
        };
        *v = if keep {
            *v + Complex64::new(sigma * re, sigma * im)
        } else {
            Complex64::new(0.0, 0.0)
        };
    }
    let (h, w) = clean.shape();
    KSpace::new(h, w, data)
}

/// `(intensity, a, b, x0, y0, angle in degrees)` of the modified
/// Shepp–Logan phantom.
pub const SHEPP_LOGAN_ELLIPSES: [[f64; 6]; 10] = [
    [1.0, 0.69, 0.92, 0.0, 0.0, 0.0],
    [-0.8, 0.6624, 0.874, 0.0, -0.0184, 0.0],
    [-0.2, 0.11, 0.31, 0.22, 0.0, -18.0],
    [-0.2, 0.16, 0.41, -0.22, 0.0, 18.0],
    [0.1, 0.21, 0.25, 0.0, 0.35, 0.0],
    [0.1, 0.046, 0.046, 0.0, 0.1, 0.0],
    [0.1, 0.046, 0.046, 0.0, -0.1, 0.0],
    [0.1, 0.046, 0.023, -0.08, -0.605, 0.0],
    [0.1, 0.023, 0.023, 0.0, -0.606, 0.0],
    [0.1, 0.023, 0.046, 0.06, -0.605, 0.0],
];

/// Renders the modified Shepp–Logan phantom on `[−1, 1]²` sampled at pixel
/// centers `x_j = (j − (W−1)/2)/((W−1)/2)` and `y_i = −(i − (H−1)/2)/((H−1)/2)`
/// (row 0 at the top), clamped to `[0, 1]`.
pub fn shepp_logan(height: usize, width: usize) -> Result<ImageGrid> {
    if height < 32 || width < 32 {
        return Err(QrmError::invalid(format!(
            "phantom needs at least 32x32 pixels, got {height}x{width}"
        )));
    }
    let cy = (height - 1) as f64 / 2.0;
    let cx = (width - 1) as f64 / 2.0;
    let ellipses: Vec<_> = SHEPP_LOGAN_ELLIPSES
        .iter()
        .map(|e| {
            let phi = e[5].to_radians();
            (e[0], e[1] * e[1], e[2] * e[2], e[3], e[4], phi.cos(), phi.sin())
        })
        .collect();
    Ok(ImageGrid::from_fn(height, width, |i, j| {
        let x = (j as f64 - cx) / cx;
        let y = -(i as f64 - cy) / cy;
        let mut v = 0.0;
        for &(amp, asq, bsq, x0, y0, c, s) in &ellipses {
            let dx = x - x0;
            let dy = y - y0;
            let p = dx * c + dy * s;
            let q = dy * c - dx * s;
            if p * p / asq + q * q / bsq <= 1.0 {
                v += amp;
            }
        }
        v.clamp(0.0, 1.0)
    }))
}
