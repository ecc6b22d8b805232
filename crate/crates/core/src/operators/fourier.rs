use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use super::{LinearOperator, Measurement, SamplingMask};
use crate::error::{QrmError, Result};
use crate::field::ImageGrid;

/// Unitary 2-D DFT on row-major `H × W` buffers.
#[derive(Clone)]
pub struct Fft2 {
    height: usize,
    width: usize,
    row_fwd: Arc<dyn Fft<f64>>,
    row_inv: Arc<dyn Fft<f64>>,
    col_fwd: Arc<dyn Fft<f64>>,
    col_inv: Arc<dyn Fft<f64>>,
    scale: f64,
}

impl std::fmt::Debug for Fft2 {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Fft2")
            .field("height", &self.height)
            .field("width", &self.width)
            .finish()
    }
}

impl Fft2 {
    pub fn new(height: usize, width: usize) -> Self {
        let mut planner = FftPlanner::new();
        Fft2 {
            height,
            width,
            row_fwd: planner.plan_fft_forward(width),
            row_inv: planner.plan_fft_inverse(width),
            col_fwd: planner.plan_fft_forward(height),
            col_inv: planner.plan_fft_inverse(height),
            scale: 1.0 / ((height * width) as f64).sqrt(),
        }
    }

    pub fn forward(&self, buf: &mut [Complex64]) {
        self.run(buf, &self.row_fwd, &self.col_fwd);
    }

    pub fn inverse(&self, buf: &mut [Complex64]) {
        self.run(buf, &self.row_inv, &self.col_inv);
    }

    fn run(&self, buf: &mut [Complex64], rows: &Arc<dyn Fft<f64>>, cols: &Arc<dyn Fft<f64>>) {
        let (h, w) = (self.height, self.width);
        assert_eq!(buf.len(), h * w);
        rows.process(buf);
        let mut t = vec![Complex64::new(0.0, 0.0); h * w];
        transpose(buf, &mut t, h, w);
        cols.process(&mut t);
        transpose(&t, buf, w, h);
        for v in buf.iter_mut() {
            *v *= self.scale;
        }
    }

    /// Unitary DFT of a real image.
    pub fn forward_real(&self, u: &ImageGrid) -> Vec<Complex64> {
        let mut buf: Vec<Complex64> = u
            .as_slice()
            .iter()
            .map(|&v| Complex64::new(v, 0.0))
            .collect();
        self.forward(&mut buf);
        buf
    }

    /// Real part of the inverse unitary DFT.
    pub fn inverse_real(&self, mut buf: Vec<Complex64>) -> ImageGrid {
        self.inverse(&mut buf);
        ImageGrid::from_fn(self.height, self.width, |i, j| buf[i * self.width + j].re)
    }
}

fn transpose(src: &[Complex64], dst: &mut [Complex64], rows: usize, cols: usize) {
    const B: usize = 16;
    for ib in (0..rows).step_by(B) {
        for jb in (0..cols).step_by(B) {
            for i in ib..(ib + B).min(rows) {
                for j in jb..(jb + B).min(cols) {
                    dst[j * rows + i] = src[i * cols + j];
                }
            }
        }
    }
}

/// Masked k-space data on the full unshifted grid; unsampled entries are
/// zero.
#[derive(Clone, Debug, PartialEq)]
pub struct KSpace {
    height: usize,
    width: usize,
    pub data: Vec<Complex64>,
}

impl KSpace {
    pub fn new(height: usize, width: usize, data: Vec<Complex64>) -> Result<Self> {
        if data.len() != height * width {
            return Err(QrmError::dimension("KSpace::new", height * width, data.len()));
        }
        Ok(KSpace {
            height,
            width,
            data,
        })
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.height, self.width)
    }
}

impl Measurement for KSpace {
    fn inner(&self, other: &Self) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a.re * b.re + a.im * b.im)
            .sum()
    }

    fn distance_sq(&self, other: &Self) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum()
    }
}

/// `u ↦ M ⊙ F u` for a unitary DFT `F` and a radial sampling mask `M`.
#[derive(Clone, Debug)]
pub struct RadialFourierOperator {
    mask: SamplingMask,
    n_lines: Option<usize>,
    fft: Fft2,
}

impl RadialFourierOperator {
    pub fn new(mask: SamplingMask) -> Result<Self> {
        if !mask.is_symmetric() {
            return Err(QrmError::invalid("sampling mask must be symmetric under k -> -k"));
        }
        if !mask.get(0, 0) {
            return Err(QrmError::invalid("sampling mask must contain the DC frequency"));
        }
        let fft = Fft2::new(mask.height(), mask.width());
        Ok(RadialFourierOperator {
            mask,
            n_lines: None,
            fft,
        })
    }

    pub fn radial(height: usize, width: usize, n_lines: usize) -> Result<Self> {
        let mut op = Self::new(SamplingMask::radial(height, width, n_lines)?)?;
        op.n_lines = Some(n_lines);
        Ok(op)
    }

    pub fn mask(&self) -> &SamplingMask {
        &self.mask
    }

    pub fn n_lines(&self) -> Option<usize> {
        self.n_lines
    }

    pub fn fft(&self) -> &Fft2 {
        &self.fft
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.mask.height(), self.mask.width())
    }

    fn check_shape(&self, shape: (usize, usize), context: &'static str) -> Result<()> {
        if shape != self.shape() {
            return Err(QrmError::dimension(
                context,
                format!("{:?}", self.shape()),
                format!("{shape:?}"),
            ));
        }
        Ok(())
    }

    fn apply_mask(&self, buf: &mut [Complex64]) {
        for (v, &keep) in buf.iter_mut().zip(self.mask.as_slice()) {
            if !keep {
                *v = Complex64::new(0.0, 0.0);
            }
        }
    }
}

impl LinearOperator for RadialFourierOperator {
    type Domain = ImageGrid;
    type Range = KSpace;

    fn apply(&self, u: &ImageGrid) -> Result<KSpace> {
        self.check_shape(u.shape(), "RadialFourierOperator::apply")?;
        let mut buf = self.fft.forward_real(u);
        self.apply_mask(&mut buf);
        let (h, w) = self.shape();
        KSpace::new(h, w, buf)
    }

    fn apply_adjoint(&self, r: &KSpace) -> Result<ImageGrid> {
        self.check_shape(r.shape(), "RadialFourierOperator::apply_adjoint")?;
        let mut buf = r.data.clone();
        self.apply_mask(&mut buf);
        Ok(self.fft.inverse_real(buf))
    }
}

/// Fourier-domain diagonal of `λAᵀA + ρDᵀD + βI` for the periodic gradient
/// `D`, row-major over unshifted frequencies.
pub fn spectral_denominator(
    op: &RadialFourierOperator,
    rho: f64,
    beta: f64,
    lambda: f64,
) -> Vec<f64> {
    let (h, w) = op.shape();
    let wy: Vec<f64> = (0..h)
        .map(|k| 2.0 - 2.0 * (2.0 * PI * k as f64 / h as f64).cos())
        .collect();
    let wx: Vec<f64> = (0..w)
        .map(|k| 2.0 - 2.0 * (2.0 * PI * k as f64 / w as f64).cos())
        .collect();
    let mut out = Vec::with_capacity(h * w);
    for (i, &ey) in wy.iter().enumerate() {
        for (j, &ex) in wx.iter().enumerate() {
            let m = if op.mask.get(i, j) { 1.0 } else { 0.0 };
            out.push(lambda * m + rho * (ey + ex) + beta);
        }
    }
    out
}

/// Solves `(λAᵀA + ρDᵀD + βI) x = b` by division in the Fourier domain.
#[derive(Clone, Debug)]
pub struct SpectralSolver {
    denom: Vec<f64>,
    fft: Fft2,
    shape: (usize, usize),
}

impl SpectralSolver {
    pub fn new(op: &RadialFourierOperator, rho: f64, beta: f64, lambda: f64) -> Result<Self> {
        let denom = spectral_denominator(op, rho, beta, lambda);
        if denom.iter().any(|&d| !(d > 0.0)) {
            return Err(QrmError::Numeric(
                "spectral denominator is not positive; need beta > 0 or a sampled DC term".into(),
            ));
        }
        Ok(SpectralSolver {
            denom,
            fft: op.fft.clone(),
            shape: op.shape(),
        })
    }

    pub fn denominator(&self) -> &[f64] {
        &self.denom
    }

    pub fn solve(&self, b: &ImageGrid) -> ImageGrid {
        debug_assert_eq!(b.shape(), self.shape);
        let mut buf = self.fft.forward_real(b);
        for (v, d) in buf.iter_mut().zip(&self.denom) {
            *v /= *d;
        }
        self.fft.inverse_real(buf)
    }
}
