//! Unknowns of the recovery problems: real signals and real images.
//!
//! Both implement [`Field`], the small set of Euclidean operations the outer
//! flow and the inner solvers need, so the outer loop can be written once.

use nalgebra::DVector;

use crate::error::{QrmError, Result};

/// A real signal `u ∈ ℝⁿ`.
pub type DenseVector = DVector<f64>;

/// Flat Euclidean view of an unknown.
pub trait Field: Clone + Send + Sync {
    fn values(&self) -> &[f64];
    fn values_mut(&mut self) -> &mut [f64];

    /// A zero-valued field of the same shape.
    fn zeros_like(&self) -> Self;

    fn same_shape(&self, other: &Self) -> bool;

    fn len(&self) -> usize {
        self.values().len()
    }

    fn is_empty(&self) -> bool {
        self.values().is_empty()
    }

    fn dot(&self, other: &Self) -> f64 {
        dot(self.values(), other.values())
    }

    fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    fn scale(&mut self, alpha: f64) {
        self.values_mut().iter_mut().for_each(|v| *v *= alpha);
    }

    /// `self += alpha * x`
    fn axpy(&mut self, alpha: f64, x: &Self) {
        for (s, v) in self.values_mut().iter_mut().zip(x.values()) {
            *s += alpha * v;
        }
    }

    /// `‖self − other‖₂`
    fn distance(&self, other: &Self) -> f64 {
        self.values()
            .iter()
            .zip(other.values())
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }

    fn is_finite(&self) -> bool {
        self.values().iter().all(|v| v.is_finite())
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm1(a: &[f64]) -> f64 {
    a.iter().map(|v| v.abs()).sum()
}

pub(crate) fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

impl Field for DenseVector {
    fn values(&self) -> &[f64] {
        self.as_slice()
    }

    fn values_mut(&mut self) -> &mut [f64] {
        self.as_mut_slice()
    }

    fn zeros_like(&self) -> Self {
        DVector::zeros(self.len())
    }

    fn same_shape(&self, other: &Self) -> bool {
        self.len() == other.len()
    }
}

/// An `H × W` real image stored row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct ImageGrid {
    height: usize,
    width: usize,
    data: Vec<f64>,
}

impl ImageGrid {
    pub fn new(height: usize, width: usize, data: Vec<f64>) -> Result<Self> {
        if height < 2 || width < 2 {
            return Err(QrmError::invalid(format!(
                "image must be at least 2x2, got {height}x{width}"
            )));
        }
        if data.len() != height * width {
            return Err(QrmError::dimension(
                "ImageGrid::new",
                height * width,
                data.len(),
            ));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(QrmError::invalid("image contains non-finite values"));
        }
        Ok(ImageGrid {
            height,
            width,
            data,
        })
    }

    pub fn zeros(height: usize, width: usize) -> Self {
        ImageGrid {
            height,
            width,
            data: vec![0.0; height * width],
        }
    }

    pub fn from_fn(height: usize, width: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(height * width);
        for i in 0..height {
            for j in 0..width {
                data.push(f(i, j));
            }
        }
        ImageGrid {
            height,
            width,
            data,
        }
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.width + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.width + j] = v;
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn max(&self) -> f64 {
        self.data.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.data.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

impl Field for ImageGrid {
    fn values(&self) -> &[f64] {
        &self.data
    }

    fn values_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    fn zeros_like(&self) -> Self {
        ImageGrid::zeros(self.height, self.width)
    }

    fn same_shape(&self, other: &Self) -> bool {
        self.shape() == other.shape()
    }
}

/// Forward differences of an image in x (along a row) and y (down a
/// column), with periodic wrap at the border.
#[derive(Clone, Debug, PartialEq)]
pub struct GradientField {
    height: usize,
    width: usize,
    pub dx: Vec<f64>,
    pub dy: Vec<f64>,
}

impl GradientField {
    pub fn zeros(height: usize, width: usize) -> Self {
        GradientField {
            height,
            width,
            dx: vec![0.0; height * width],
            dy: vec![0.0; height * width],
        }
    }

    pub fn from_parts(height: usize, width: usize, dx: Vec<f64>, dy: Vec<f64>) -> Result<Self> {
        if dx.len() != height * width || dy.len() != height * width {
            return Err(QrmError::dimension(
                "GradientField::from_parts",
                height * width,
                format!("{}/{}", dx.len(), dy.len()),
            ));
        }
        Ok(GradientField {
            height,
            width,
            dx,
            dy,
        })
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    /// Iterates over all `2HW` difference entries, x-part first.
    pub fn iter(&self) -> impl Iterator<Item = &f64> {
        self.dx.iter().chain(self.dy.iter())
    }

    pub fn iter_mut(&mut self) -> impl Iterator<Item = &mut f64> {
        self.dx.iter_mut().chain(self.dy.iter_mut())
    }

    pub fn dot(&self, other: &GradientField) -> f64 {
        dot(&self.dx, &other.dx) + dot(&self.dy, &other.dy)
    }

    pub fn norm1(&self) -> f64 {
        norm1(&self.dx) + norm1(&self.dy)
    }

    pub fn norm2(&self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn scale(&mut self, alpha: f64) {
        self.iter_mut().for_each(|v| *v *= alpha);
    }

    pub fn distance(&self, other: &GradientField) -> f64 {
        self.iter()
            .zip(other.iter())
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }
}

pub(crate) fn check_finite<F: Field>(u: &F, context: &str) -> Result<()> {
    if u.is_finite() {
        Ok(())
    } else {
        Err(QrmError::invalid(format!("{context}: non-finite entries")))
    }
}
