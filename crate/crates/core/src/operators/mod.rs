//! Measurement operators `A` with their adjoints, plus the periodic
//! discrete gradient used by the image regularizer.

mod dense;
mod fourier;
mod gradient;
mod mask;

pub use dense::DenseOperator;
pub use fourier::{spectral_denominator, Fft2, KSpace, RadialFourierOperator, SpectralSolver};
pub use gradient::{grad, grad_adjoint, grad_adjoint_into, grad_into};
pub use mask::SamplingMask;

use crate::error::Result;
use crate::field::{DenseVector, Field};

/// Elements of an operator's range.
pub trait Measurement: Clone + Send + Sync {
    /// Real inner product.
    fn inner(&self, other: &Self) -> f64;

    fn norm(&self) -> f64 {
        self.inner(self).sqrt()
    }

    /// `‖self − other‖₂²`
    fn distance_sq(&self, other: &Self) -> f64;
}

impl Measurement for DenseVector {
    fn inner(&self, other: &Self) -> f64 {
        Field::dot(self, other)
    }

    fn distance_sq(&self, other: &Self) -> f64 {
        let d = Field::distance(self, other);
        d * d
    }
}

/// A linear map between real spaces with an exact adjoint.
pub trait LinearOperator: Send + Sync {
    type Domain: Field;
    type Range: Measurement;

    fn apply(&self, u: &Self::Domain) -> Result<Self::Range>;

    fn apply_adjoint(&self, r: &Self::Range) -> Result<Self::Domain>;
}
