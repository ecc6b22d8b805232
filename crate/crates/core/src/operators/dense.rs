use nalgebra::DMatrix;

use super::LinearOperator;
use crate::error::{QrmError, Result};
use crate::field::DenseVector;

/// A dense `m × n` sensing matrix.
#[derive(Clone, Debug)]
pub struct DenseOperator {
    matrix: DMatrix<f64>,
}

impl DenseOperator {
    pub fn new(matrix: DMatrix<f64>) -> Result<Self> {
        if matrix.nrows() == 0 || matrix.ncols() == 0 {
            return Err(QrmError::invalid(format!(
                "sensing matrix must be non-empty, got {}x{}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        if matrix.iter().any(|v| !v.is_finite()) {
            return Err(QrmError::invalid("sensing matrix has non-finite entries"));
        }
        Ok(DenseOperator { matrix })
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn rows(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn cols(&self) -> usize {
        self.matrix.ncols()
    }

    /// Submatrix of the given columns.
    pub fn columns(&self, idx: &[usize]) -> DMatrix<f64> {
        self.matrix.select_columns(idx)
    }
}

impl LinearOperator for DenseOperator {
    type Domain = DenseVector;
    type Range = DenseVector;

    fn apply(&self, u: &DenseVector) -> Result<DenseVector> {
        if u.len() != self.cols() {
            return Err(QrmError::dimension("DenseOperator::apply", self.cols(), u.len()));
        }
        Ok(&self.matrix * u)
    }

    fn apply_adjoint(&self, r: &DenseVector) -> Result<DenseVector> {
        if r.len() != self.rows() {
            return Err(QrmError::dimension(
                "DenseOperator::apply_adjoint",
                self.rows(),
                r.len(),
            ));
        }
        Ok(self.matrix.tr_mul(r))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_apply_and_adjoint() {
        let a = DenseOperator::new(DMatrix::identity(2, 2)).unwrap();
        let u = DenseVector::from_vec(vec![1.0, 2.0]);
        assert_eq!(a.apply(&u).unwrap(), u);
        assert_eq!(a.apply_adjoint(&u).unwrap(), u);
    }

    #[test]
    fn rejects_empty_and_mismatch() {
        assert!(DenseOperator::new(DMatrix::zeros(0, 4)).is_err());
        let a = DenseOperator::new(DMatrix::zeros(2, 3)).unwrap();
        assert!(a.apply(&DenseVector::zeros(2)).is_err());
        assert!(a.apply_adjoint(&DenseVector::zeros(3)).is_err());
    }

    #[test]
    fn matches_triple_loop_product() {
        // 5x8 with deterministic pseudo-random entries
        let m = 5;
        let n = 8;
        let entries: Vec<f64> = (0..m * n)
            .map(|i| ((i * 7919 % 101) as f64 / 50.0) - 1.0)
            .collect();
        let mat = DMatrix::from_row_slice(m, n, &entries);
        let u: Vec<f64> = (0..n).map(|i| (i as f64 * 0.37).sin()).collect();
        let a = DenseOperator::new(mat).unwrap();
        let got = a.apply(&DenseVector::from_vec(u.clone())).unwrap();
        for i in 0..m {
            let mut acc = 0.0;
            for (j, uj) in u.iter().enumerate() {
                acc += entries[i * n + j] * uj;
            }
            assert!((got[i] - acc).abs() <= 1e-13);
        }
    }
}
