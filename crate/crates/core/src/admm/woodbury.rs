use nalgebra::{DMatrix, DVector};

use crate::error::{QrmError, Result};
use crate::field::DenseVector;
use crate::operators::DenseOperator;

/// Applies `(λAᵀA + (β+ρ)I)⁻¹` through the Sherman–Morrison–Woodbury
/// identity `κI − λκ²Aᵀ(I + λκAAᵀ)⁻¹A`, with the `m × m` Cholesky factor
/// folded into `B = L⁻¹A` once at construction.
#[derive(Clone, Debug)]
pub struct WoodburySolver {
    kappa: f64,
    lambda: f64,
    l: DMatrix<f64>,
    b: DMatrix<f64>,
    tmp: DVector<f64>,
}

impl WoodburySolver {
    pub fn new(a: &DenseOperator, kappa: f64, lambda: f64) -> Result<Self> {
        if !(kappa > 0.0 && kappa.is_finite()) {
            return Err(QrmError::invalid(format!("kappa must be > 0, got {kappa}")));
        }
        if !(lambda >= 0.0 && lambda.is_finite()) {
            return Err(QrmError::invalid(format!("lambda must be >= 0, got {lambda}")));
        }
        let a = a.matrix();
        let m = a.nrows();
        let mut gram = a * a.transpose();
        gram *= lambda * kappa;
        for i in 0..m {
            gram[(i, i)] += 1.0;
        }
        let chol = gram
            .cholesky()
            .ok_or_else(|| QrmError::Numeric("I + λκAAᵀ is not positive definite".into()))?;
        let l = chol.l();
        let b = l
            .solve_lower_triangular(a)
            .ok_or_else(|| QrmError::Numeric("singular Cholesky factor".into()))?;
        Ok(WoodburySolver {
            kappa,
            lambda,
            l,
            b,
            tmp: DVector::zeros(m),
        })
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// Lower Cholesky factor `L` of `I + λκAAᵀ`.
    pub fn factor(&self) -> &DMatrix<f64> {
        &self.l
    }

    /// `‖LLᵀ − (I+λκAAᵀ)‖_F / ‖I+λκAAᵀ‖_F` for the stored factor.
    pub fn factor_residual(&self, a: &DenseOperator) -> f64 {
        let a = a.matrix();
        let mut target = a * a.transpose();
        target *= self.lambda * self.kappa;
        for i in 0..target.nrows() {
            target[(i, i)] += 1.0;
        }
        let diff = &self.l * self.l.transpose() - &target;
        diff.norm() / target.norm()
    }

    pub fn solve(&mut self, rhs: &DenseVector) -> DenseVector {
        let mut out = DenseVector::zeros(rhs.len());
        self.solve_into(rhs, &mut out);
        out
    }

    pub fn solve_into(&mut self, rhs: &DenseVector, out: &mut DenseVector) {
        debug_assert_eq!(rhs.len(), self.b.ncols());
        let k = self.kappa;
        self.tmp.gemv(1.0, &self.b, rhs, 0.0);
        out.gemv_tr(-self.lambda * k * k, &self.b, &self.tmp, 0.0);
        out.axpy(k, rhs, 1.0);
    }
}

/// One-shot form of [`WoodburySolver::solve`].
pub fn woodbury_solve(
    a: &DenseOperator,
    kappa: f64,
    lambda: f64,
    b: &DenseVector,
) -> Result<DenseVector> {
    if b.len() != a.cols() {
        return Err(QrmError::dimension("woodbury_solve", a.cols(), b.len()));
    }
    Ok(WoodburySolver::new(a, kappa, lambda)?.solve(b))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_matrix_gives_kappa_b() {
        let a = DenseOperator::new(DMatrix::zeros(3, 5)).unwrap();
        let b = DenseVector::from_vec(vec![1.0, -2.0, 0.5, 3.0, 0.0]);
        let x = woodbury_solve(&a, 0.25, 7.0, &b).unwrap();
        assert_eq!(x, &b * 0.25);
    }

    #[test]
    fn residual_of_factor_is_small() {
        let a = DMatrix::from_fn(4, 9, |i, j| ((i * 9 + j) as f64 * 0.613).sin());
        let a = DenseOperator::new(a).unwrap();
        let w = WoodburySolver::new(&a, 1.0 / 11.0, 3.0).unwrap();
        assert!(w.factor_residual(&a) <= 1e-12);
    }

    #[test]
    fn rejects_bad_kappa() {
        let a = DenseOperator::new(DMatrix::identity(2, 2)).unwrap();
        assert!(WoodburySolver::new(&a, 0.0, 1.0).is_err());
    }
}
