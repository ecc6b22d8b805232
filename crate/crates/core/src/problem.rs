//! Recovery problems `Au ≈ f` and the composite objective
//! `G(u) = R(u) + (λ/2)‖Au − f‖₂²`.

use crate::admm::{ImageAdmm, InnerSolver, SignalAdmm};
use crate::error::{QrmError, Result};
use crate::field::{DenseVector, Field, ImageGrid};
use crate::operators::{DenseOperator, KSpace, LinearOperator, Measurement, RadialFourierOperator};
use crate::regularizers::Regularizer;

/// A forward operator together with observed data.
pub trait Problem: Send + Sync {
    type U: Field;
    type Op: LinearOperator<Domain = Self::U>;
    type Inner<'a>: InnerSolver<Self::U>
    where
        Self: 'a;

    fn operator(&self) -> &Self::Op;

    fn data(&self) -> &<Self::Op as LinearOperator>::Range;

    /// `(n, 1)` for signals, `(H, W)` for images.
    fn ambient_dims(&self) -> (usize, usize);

    fn check_domain(&self, u: &Self::U) -> Result<()>;

    fn zero(&self) -> Self::U;

    /// The convex sparsity term of the L1-type baselines: `‖u‖₁` for
    /// signals, `‖∇u‖₁` for images.
    fn l1_term(&self, u: &Self::U) -> f64;

    fn inner_solver(
        &self,
        beta: f64,
        rho: f64,
        lambda: f64,
        eps: f64,
        j_max: usize,
    ) -> Result<Self::Inner<'_>>;

    /// `‖Au − f‖₂²` and `‖Au‖₂`.
    fn residual(&self, u: &Self::U) -> Result<(f64, f64)> {
        let au = self.operator().apply(u)?;
        Ok((au.distance_sq(self.data()), au.norm()))
    }

    fn data_norm(&self) -> f64 {
        self.data().norm()
    }
}

#[derive(Clone, Debug)]
pub struct SignalProblem {
    pub a: DenseOperator,
    pub f: DenseVector,
}

impl SignalProblem {
    pub fn new(a: DenseOperator, f: DenseVector) -> Result<Self> {
        if f.len() != a.rows() {
            return Err(QrmError::dimension("SignalProblem::new", a.rows(), f.len()));
        }
        crate::field::check_finite(&f, "measurements")?;
        Ok(SignalProblem { a, f })
    }
}

impl Problem for SignalProblem {
    type U = DenseVector;
    type Op = DenseOperator;
    type Inner<'a> = SignalAdmm<'a>;

    fn operator(&self) -> &DenseOperator {
        &self.a
    }

    fn data(&self) -> &DenseVector {
        &self.f
    }

    fn ambient_dims(&self) -> (usize, usize) {
        (self.a.cols(), 1)
    }

    fn check_domain(&self, u: &DenseVector) -> Result<()> {
        if u.len() != self.a.cols() {
            return Err(QrmError::dimension("SignalProblem", self.a.cols(), u.len()));
        }
        crate::field::check_finite(u, "iterate")
    }

    fn zero(&self) -> DenseVector {
        DenseVector::zeros(self.a.cols())
    }

    fn l1_term(&self, u: &DenseVector) -> f64 {
        crate::field::norm1(u.as_slice())
    }

    fn inner_solver(
        &self,
        beta: f64,
        rho: f64,
        lambda: f64,
        eps: f64,
        j_max: usize,
    ) -> Result<SignalAdmm<'_>> {
        SignalAdmm::new(&self.a, &self.f, beta, rho, lambda, eps, j_max)
    }
}

#[derive(Clone, Debug)]
pub struct ImageProblem {
    pub op: RadialFourierOperator,
    pub f: KSpace,
}

impl ImageProblem {
    pub fn new(op: RadialFourierOperator, f: KSpace) -> Result<Self> {
        if f.shape() != op.shape() {
            return Err(QrmError::dimension(
                "ImageProblem::new",
                format!("{:?}", op.shape()),
                format!("{:?}", f.shape()),
            ));
        }
        Ok(ImageProblem { op, f })
    }
}

impl Problem for ImageProblem {
    type U = ImageGrid;
    type Op = RadialFourierOperator;
    type Inner<'a> = ImageAdmm<'a>;

    fn operator(&self) -> &RadialFourierOperator {
        &self.op
    }

    fn data(&self) -> &KSpace {
        &self.f
    }

    fn ambient_dims(&self) -> (usize, usize) {
        self.op.shape()
    }

    fn check_domain(&self, u: &ImageGrid) -> Result<()> {
        if u.shape() != self.op.shape() {
            return Err(QrmError::dimension(
                "ImageProblem",
                format!("{:?}", self.op.shape()),
                format!("{:?}", u.shape()),
            ));
        }
        crate::field::check_finite(u, "iterate")
    }

    fn zero(&self) -> ImageGrid {
        let (h, w) = self.op.shape();
        ImageGrid::zeros(h, w)
    }

    fn l1_term(&self, u: &ImageGrid) -> f64 {
        crate::operators::grad(u).norm1()
    }

    fn inner_solver(
        &self,
        beta: f64,
        rho: f64,
        lambda: f64,
        eps: f64,
        j_max: usize,
    ) -> Result<ImageAdmm<'_>> {
        ImageAdmm::new(&self.op, &self.f, beta, rho, lambda, eps, j_max)
    }
}

/// `G(u) = R(u) + (λ/2)‖Au − f‖₂²`, with `R(0) = 0`.
pub fn objective_g<Op, R>(
    u: &Op::Domain,
    regularizer: &R,
    operator: &Op,
    f: &Op::Range,
    lambda: f64,
) -> Result<f64>
where
    Op: LinearOperator,
    R: Regularizer<Op::Domain> + ?Sized,
{
    let au = operator.apply(u)?;
    let r = regularizer.eval(u).r;
    Ok(r + 0.5 * lambda * au.distance_sq(f))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::regularizers::SignalRegularizer;
    use nalgebra::DMatrix;

    fn v(x: &[f64]) -> DenseVector {
        DenseVector::from_vec(x.to_vec())
    }

    #[test]
    fn objective_examples() {
        let reg = SignalRegularizer::L1OverL2;
        let a = DenseOperator::new(DMatrix::from_element(2, 3, 0.7)).unwrap();
        let g = objective_g(&DenseVector::zeros(3), &reg, &a, &v(&[0.0, 2.0]), 1.0).unwrap();
        assert_eq!(g, 2.0);

        let eye = DenseOperator::new(DMatrix::identity(2, 2)).unwrap();
        let g = objective_g(&v(&[3.0, 4.0]), &reg, &eye, &v(&[3.0, 4.0]), 7.0).unwrap();
        assert!((g - 1.4).abs() < 1e-15);

        let row = DenseOperator::new(DMatrix::from_row_slice(1, 2, &[1.0, 0.0])).unwrap();
        let g = objective_g(&v(&[1.0, 0.0]), &reg, &row, &v(&[0.0]), 2.0).unwrap();
        assert_eq!(g, 2.0);
    }

    #[test]
    fn objective_shape_mismatch() {
        let reg = SignalRegularizer::L1OverL2;
        let eye = DenseOperator::new(DMatrix::identity(2, 2)).unwrap();
        assert!(objective_g(&v(&[1.0]), &reg, &eye, &v(&[0.0, 0.0]), 1.0).is_err());
    }
}
