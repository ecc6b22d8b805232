//! Quotient regularizers `R = J/H` with absolutely one-homogeneous `J` and
//! `H`: `‖u‖₁/‖u‖₂`, `‖u‖₁/‖u‖₍K₎`, and `‖∇u‖₁/‖∇u‖₂`.

use crate::error::{QrmError, Result};
use crate::field::{norm1, norm2, DenseVector, Field, GradientField, ImageGrid};
use crate::operators::{grad, grad_adjoint};

/// `(J(u), H(u), R(u))` with `R(u) = 0` whenever `H(u) = 0`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuotientValue {
    pub j: f64,
    pub h: f64,
    pub r: f64,
}

impl QuotientValue {
    fn new(j: f64, h: f64) -> Self {
        let r = if h > 0.0 { j / h } else { 0.0 };
        QuotientValue { j, h, r }
    }
}

/// Subgradients `p ∈ ∂J(u)` and `q ∈ ∂H(u)`.
#[derive(Clone, Debug)]
pub struct SubgradientPair<U> {
    pub p: U,
    pub q: U,
}

pub trait Regularizer<U: Field>: Send + Sync {
    fn eval(&self, u: &U) -> QuotientValue;

    /// An element of `∂J(u)`; valid at every `u`, including zero.
    fn subgrad_numerator(&self, u: &U) -> U;

    /// An element of `∂H(u)`. Fails with `DegenerateIterate` when `H(u) = 0`.
    fn subgrad_denominator(&self, u: &U) -> Result<U>;

    fn subgradients(&self, u: &U) -> Result<SubgradientPair<U>> {
        Ok(SubgradientPair {
            p: self.subgrad_numerator(u),
            q: self.subgrad_denominator(u)?,
        })
    }

    /// Linear term of the semi-implicit step, `hᵏ = (R(uᵏ)/H(uᵏ)) qᵏ`.
    fn linear_term(&self, u: &U) -> Result<U> {
        let v = self.eval(u);
        if !(v.h > 0.0) {
            return Err(QrmError::DegenerateIterate);
        }
        let mut q = self.subgrad_denominator(u)?;
        q.scale(v.r / v.h);
        Ok(q)
    }

    /// A finite `M` with `R(u) ≤ M` for every `u` of the given size.
    fn upper_bound(&self, u_len: usize) -> f64;
}

/// Regularizer kinds as chosen in configs and on the command line.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum QuotientRegularizer {
    L1OverL2,
    L1OverSK(usize),
    GradL1OverL2,
}

impl QuotientRegularizer {
    /// The signal-domain regularizer, if this kind acts on signals.
    pub fn signal(self) -> Result<SignalRegularizer> {
        match self {
            QuotientRegularizer::L1OverL2 => Ok(SignalRegularizer::L1OverL2),
            QuotientRegularizer::L1OverSK(k) => SignalRegularizer::l1_over_sk(k),
            QuotientRegularizer::GradL1OverL2 => Err(QrmError::invalid(
                "the gradient regularizer acts on images, not signals",
            )),
        }
    }

    /// `M` with `R(u) ≤ M` everywhere. For the gradient ratio `dims` is
    /// `(H, W)`; for signal kinds it is `(n, 1)`. With `K = n` the ratio is
    /// identically one and `√n` is returned as a conservative bound.
    pub fn upper_bound(self, dims: (usize, usize)) -> f64 {
        let n = dims.0 * dims.1;
        match self {
            QuotientRegularizer::L1OverL2 => (n as f64).sqrt(),
            QuotientRegularizer::L1OverSK(k) if k < n => n as f64 / k as f64,
            QuotientRegularizer::L1OverSK(_) => (n as f64).sqrt(),
            QuotientRegularizer::GradL1OverL2 => ((2 * n) as f64).sqrt(),
        }
    }
}

/// `L1/L2` or `L1/S_K` on a signal.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SignalRegularizer {
    L1OverL2,
    L1OverSK { k: usize },
}

impl SignalRegularizer {
    pub fn l1_over_sk(k: usize) -> Result<Self> {
        if k == 0 {
            return Err(QrmError::invalid("K must be >= 1"));
        }
        Ok(SignalRegularizer::L1OverSK { k })
    }

    pub fn kind(&self) -> QuotientRegularizer {
        match *self {
            SignalRegularizer::L1OverL2 => QuotientRegularizer::L1OverL2,
            SignalRegularizer::L1OverSK { k } => QuotientRegularizer::L1OverSK(k),
        }
    }

    fn check_k(&self, n: usize) {
        if let SignalRegularizer::L1OverSK { k } = *self {
            assert!(k <= n, "K = {k} exceeds the signal length {n}");
        }
    }
}

/// Indices of the `k` largest magnitudes; ties go to the smaller index.
pub fn largest_magnitudes(u: &[f64], k: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..u.len()).collect();
    idx.sort_by(|&a, &b| u[b].abs().total_cmp(&u[a].abs()).then(a.cmp(&b)));
    idx.truncate(k);
    idx
}

/// `‖u‖₍K₎`, the sum of the `k` largest magnitudes.
pub fn k_largest_sum(u: &[f64], k: usize) -> f64 {
    let mut mags: Vec<f64> = u.iter().map(|v| v.abs()).collect();
    let k = k.min(mags.len());
    if k == 0 {
        return 0.0;
    }
    mags.select_nth_unstable_by(k - 1, |a, b| b.total_cmp(a));
    mags[..k].iter().sum()
}

fn sign(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

impl Regularizer<DenseVector> for SignalRegularizer {
    fn eval(&self, u: &DenseVector) -> QuotientValue {
        self.check_k(u.len());
        let j = norm1(u.as_slice());
        let h = match *self {
            SignalRegularizer::L1OverL2 => norm2(u.as_slice()),
            SignalRegularizer::L1OverSK { k } => k_largest_sum(u.as_slice(), k),
        };
        QuotientValue::new(j, h)
    }

    fn subgrad_numerator(&self, u: &DenseVector) -> DenseVector {
        u.map(sign)
    }

    fn subgrad_denominator(&self, u: &DenseVector) -> Result<DenseVector> {
        self.check_k(u.len());
        match *self {
            SignalRegularizer::L1OverL2 => {
                let h = norm2(u.as_slice());
                if !(h > 0.0) {
                    return Err(QrmError::DegenerateIterate);
                }
                Ok(u / h)
            }
            SignalRegularizer::L1OverSK { k } => {
                let mut q = DenseVector::zeros(u.len());
                let mut any = false;
                for i in largest_magnitudes(u.as_slice(), k) {
                    q[i] = sign(u[i]);
                    any |= u[i] != 0.0;
                }
                if !any {
                    return Err(QrmError::DegenerateIterate);
                }
                Ok(q)
            }
        }
    }

    fn upper_bound(&self, u_len: usize) -> f64 {
        self.kind().upper_bound((u_len, 1))
    }
}

/// `‖∇u‖₁/‖∇u‖₂` with anisotropic, periodic forward differences.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct GradL1OverL2;

impl GradL1OverL2 {
    pub fn eval_gradient(g: &GradientField) -> QuotientValue {
        QuotientValue::new(g.norm1(), g.norm2())
    }
}

impl Regularizer<ImageGrid> for GradL1OverL2 {
    fn eval(&self, u: &ImageGrid) -> QuotientValue {
        Self::eval_gradient(&grad(u))
    }

    fn subgrad_numerator(&self, u: &ImageGrid) -> ImageGrid {
        let mut g = grad(u);
        g.iter_mut().for_each(|v| *v = sign(*v));
        grad_adjoint(&g)
    }

    fn subgrad_denominator(&self, u: &ImageGrid) -> Result<ImageGrid> {
        let mut g = grad(u);
        let h = g.norm2();
        if !(h > 0.0) {
            return Err(QrmError::DegenerateIterate);
        }
        g.scale(1.0 / h);
        Ok(grad_adjoint(&g))
    }

    fn upper_bound(&self, u_len: usize) -> f64 {
        ((2 * u_len) as f64).sqrt()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(x: &[f64]) -> DenseVector {
        DenseVector::from_vec(x.to_vec())
    }

    fn assert_close(a: &[f64], b: &[f64], tol: f64) {
        assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(b) {
            assert!((x - y).abs() <= tol, "{a:?} vs {b:?}");
        }
    }

    #[test]
    fn eval_examples() {
        let r = SignalRegularizer::L1OverL2.eval(&v(&[3.0, 4.0]));
        assert_eq!((r.j, r.h), (7.0, 5.0));
        assert!((r.r - 1.4).abs() < 1e-15);

        let r = SignalRegularizer::L1OverSK { k: 2 }.eval(&v(&[3.0, -1.0, 2.0]));
        assert_eq!((r.j, r.h), (6.0, 5.0));
        assert!((r.r - 1.2).abs() < 1e-15);

        let c = ImageGrid::from_fn(4, 4, |_, _| 3.0);
        let r = GradL1OverL2.eval(&c);
        assert_eq!((r.j, r.h, r.r), (0.0, 0.0, 0.0));
    }

    #[test]
    fn zero_vector_convention() {
        let r = SignalRegularizer::L1OverL2.eval(&DenseVector::zeros(3));
        assert_eq!(r.r, 0.0);
        let p = SignalRegularizer::L1OverL2.subgrad_numerator(&DenseVector::zeros(3));
        assert_eq!(p.as_slice(), &[0.0; 3]);
    }

    #[test]
    fn subgrad_h_examples() {
        let q = SignalRegularizer::L1OverL2
            .subgrad_denominator(&v(&[3.0, 4.0]))
            .unwrap();
        assert_close(q.as_slice(), &[0.6, 0.8], 1e-15);

        let q = SignalRegularizer::L1OverSK { k: 2 }
            .subgrad_denominator(&v(&[3.0, -1.0, 2.0]))
            .unwrap();
        assert_close(q.as_slice(), &[1.0, 0.0, 1.0], 0.0);
    }

    #[test]
    fn subgrad_h_degenerate() {
        for reg in [SignalRegularizer::L1OverL2, SignalRegularizer::L1OverSK { k: 2 }] {
            assert!(matches!(
                reg.subgrad_denominator(&DenseVector::zeros(4)),
                Err(QrmError::DegenerateIterate)
            ));
            assert!(matches!(
                reg.linear_term(&DenseVector::zeros(4)),
                Err(QrmError::DegenerateIterate)
            ));
        }
        let c = ImageGrid::from_fn(3, 3, |_, _| 1.0);
        assert!(matches!(
            GradL1OverL2.subgrad_denominator(&c),
            Err(QrmError::DegenerateIterate)
        ));
    }

    #[test]
    fn subgrad_j_example() {
        let p = SignalRegularizer::L1OverL2.subgrad_numerator(&v(&[3.0, -1.0, 0.0]));
        assert_eq!(p.as_slice(), &[1.0, -1.0, 0.0]);
    }

    #[test]
    fn linear_term_examples() {
        let h = SignalRegularizer::L1OverL2.linear_term(&v(&[3.0, 4.0])).unwrap();
        assert_close(h.as_slice(), &[0.168, 0.224], 1e-15);

        // (J/H²)·sign on Ω_K = (6/25)·[1, 0, 1]
        let h = SignalRegularizer::L1OverSK { k: 2 }
            .linear_term(&v(&[3.0, -1.0, 2.0]))
            .unwrap();
        assert_close(h.as_slice(), &[0.24, 0.0, 0.24], 1e-15);
    }

    #[test]
    fn ties_break_by_index() {
        assert_eq!(largest_magnitudes(&[1.0, -2.0, 2.0, 0.5], 2), vec![1, 2]);
        assert_eq!(largest_magnitudes(&[1.0, 1.0, 1.0], 2), vec![0, 1]);
        let q = SignalRegularizer::L1OverSK { k: 1 }
            .subgrad_denominator(&v(&[-2.0, 2.0]))
            .unwrap();
        assert_eq!(q.as_slice(), &[-1.0, 0.0]);
    }

    #[test]
    fn sk_with_k_equal_n_is_l1() {
        let u = v(&[0.3, -1.5, 2.0, 0.0, -0.1]);
        let r = SignalRegularizer::L1OverSK { k: 5 }.eval(&u);
        assert_eq!(r.h, r.j);
        assert_eq!(r.r, 1.0);
    }

    #[test]
    fn upper_bounds() {
        assert!((QuotientRegularizer::L1OverL2.upper_bound((512, 1)) - 512f64.sqrt()).abs() < 1e-12);
        assert!((QuotientRegularizer::L1OverSK(512).upper_bound((512, 1)) - 512f64.sqrt()).abs() < 1e-12);
        assert!((QuotientRegularizer::L1OverSK(100).upper_bound((512, 1)) - 5.12).abs() < 1e-12);
        assert!((QuotientRegularizer::GradL1OverL2.upper_bound((16, 16)) - 512f64.sqrt()).abs() < 1e-12);
        assert_eq!(
            GradL1OverL2.upper_bound(256),
            QuotientRegularizer::GradL1OverL2.upper_bound((16, 16))
        );
    }
}
