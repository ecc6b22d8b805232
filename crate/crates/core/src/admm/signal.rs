use super::{shrink_scalar, AdmmState, InnerOutcome, InnerSolver, Subproblem, WoodburySolver};
use crate::error::{QrmError, Result};
use crate::field::{DenseVector, Field};
use crate::operators::{DenseOperator, LinearOperator};

/// ADMM on the split `u = y` for dense sensing matrices:
///
/// ```text
/// u ← shrink(y − η, w/ρ)
/// y ← (λAᵀA + (β+ρ)I)⁻¹ (βc + h + λAᵀf + ρ(u + η))
/// η ← η + u − y
/// ```
#[derive(Clone, Debug)]
pub struct SignalAdmm<'a> {
    a: &'a DenseOperator,
    f: &'a DenseVector,
    beta: f64,
    rho: f64,
    lambda: f64,
    eps: f64,
    j_max: usize,
    woodbury: WoodburySolver,
    at_f: DenseVector,
    state: AdmmState<DenseVector, DenseVector>,
    rhs: DenseVector,
}

impl<'a> SignalAdmm<'a> {
    pub fn new(
        a: &'a DenseOperator,
        f: &'a DenseVector,
        beta: f64,
        rho: f64,
        lambda: f64,
        eps: f64,
        j_max: usize,
    ) -> Result<Self> {
        if f.len() != a.rows() {
            return Err(QrmError::dimension("SignalAdmm::new", a.rows(), f.len()));
        }
        if !(beta >= 0.0 && rho > 0.0 && rho.is_finite() && beta.is_finite()) {
            return Err(QrmError::invalid(format!(
                "need beta >= 0 and rho > 0, got beta={beta}, rho={rho}"
            )));
        }
        if j_max == 0 {
            return Err(QrmError::invalid("jMax must be >= 1"));
        }
        let woodbury = WoodburySolver::new(a, 1.0 / (beta + rho), lambda)?;
        let mut at_f = a.apply_adjoint(f)?;
        at_f *= lambda;
        let n = a.cols();
        Ok(SignalAdmm {
            a,
            f,
            beta,
            rho,
            lambda,
            eps,
            j_max,
            woodbury,
            at_f,
            state: AdmmState {
                u: DenseVector::zeros(n),
                y: DenseVector::zeros(n),
                eta: DenseVector::zeros(n),
                j: 0,
            },
            rhs: DenseVector::zeros(n),
        })
    }

    pub fn state(&self) -> &AdmmState<DenseVector, DenseVector> {
        &self.state
    }

    pub fn woodbury(&self) -> &WoodburySolver {
        &self.woodbury
    }
}

impl InnerSolver<DenseVector> for SignalAdmm<'_> {
    fn solve(&mut self, sub: &Subproblem<'_, DenseVector>) -> Result<InnerOutcome<DenseVector>> {
        sub.validate()?;
        if sub.center.len() != self.a.cols() {
            return Err(QrmError::dimension("SignalAdmm::solve", self.a.cols(), sub.center.len()));
        }
        let mut c = sub.linear + &self.at_f;
        if self.beta > 0.0 {
            c.axpy(self.beta, sub.center, 1.0);
        }
        let t = sub.weight / self.rho;
        let floor = 1e-8 * Field::norm(sub.center);
        let st = &mut self.state;
        let mut u_new = DenseVector::zeros(c.len());
        let mut converged = false;
        let mut primal = f64::INFINITY;
        let mut j = 0;
        while j < self.j_max {
            j += 1;
            for ((un, y), e) in u_new.iter_mut().zip(st.y.iter()).zip(st.eta.iter()) {
                *un = shrink_scalar(y - e, t);
            }
            for (((r, ci), un), e) in self
                .rhs
                .iter_mut()
                .zip(c.iter())
                .zip(u_new.iter())
                .zip(st.eta.iter())
            {
                *r = ci + self.rho * (un + e);
            }
            self.woodbury.solve_into(&self.rhs, &mut st.y);
            let mut change = 0.0;
            let mut res = 0.0;
            let mut unorm = 0.0;
            for (((e, un), y), uo) in st
                .eta
                .iter_mut()
                .zip(u_new.iter())
                .zip(st.y.iter())
                .zip(st.u.iter())
            {
                let d = un - y;
                *e += d;
                res += d * d;
                change += (un - uo) * (un - uo);
                unorm += un * un;
            }
            std::mem::swap(&mut st.u, &mut u_new);
            primal = res.sqrt();
            let unorm = unorm.sqrt();
            if j > 1 && change.sqrt() <= self.eps * unorm && primal <= floor.max(1e-8 * unorm) {
                converged = true;
                break;
            }
        }
        st.j = j;
        Ok(InnerOutcome {
            u: st.u.clone(),
            iterations: j,
            converged,
            primal_residual: primal,
        })
    }

    fn kkt_residual(&self, sub: &Subproblem<'_, DenseVector>, u: &DenseVector) -> Result<f64> {
        signal_kkt_residual(self.a, self.f, self.lambda, self.beta, sub, u)
    }

    fn reset(&mut self, u: &DenseVector) {
        self.state.u.copy_from(u);
        self.state.y.copy_from(u);
        self.state.eta.fill(0.0);
        self.state.j = 0;
    }

    fn beta(&self) -> f64 {
        self.beta
    }
}

/// Euclidean distance from `−[β(u−c) − h + λAᵀ(Au−f)]` to `w·∂‖u‖₁`,
/// evaluated coordinatewise by projection onto `{w·sign(uᵢ)}` or
/// `[−w, w]`.
pub fn signal_kkt_residual(
    a: &DenseOperator,
    f: &DenseVector,
    lambda: f64,
    beta: f64,
    sub: &Subproblem<'_, DenseVector>,
    u: &DenseVector,
) -> Result<f64> {
    sub.validate()?;
    let mut g = a.apply_adjoint(&(a.apply(u)? - f))?;
    g *= lambda;
    g -= sub.linear;
    if beta != 0.0 {
        g.axpy(beta, &(u - sub.center), 1.0);
    }
    let w = sub.weight;
    let mut acc = 0.0;
    for (gi, ui) in g.iter().zip(u.iter()) {
        let d = if *ui > 0.0 {
            gi + w
        } else if *ui < 0.0 {
            gi - w
        } else {
            (gi.abs() - w).max(0.0)
        };
        acc += d * d;
    }
    Ok(acc.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;

    #[test]
    fn prox_example_with_zero_operator() {
        // (1/2)‖u−[2,0]‖² + ‖u‖₁/2 has minimizer [1.5, 0]
        let a = DenseOperator::new(DMatrix::zeros(1, 2)).unwrap();
        let f = DenseVector::zeros(1);
        let mut s = SignalAdmm::new(&a, &f, 1.0, 1.0, 0.0, 1e-12, 5000).unwrap();
        let c = DenseVector::from_vec(vec![2.0, 0.0]);
        let h = DenseVector::zeros(2);
        s.reset(&c);
        let sub = Subproblem {
            center: &c,
            linear: &h,
            weight: 1.0 / Field::norm(&c),
        };
        let out = s.solve(&sub).unwrap();
        assert!(out.converged);
        assert!((out.u[0] - 1.5).abs() < 1e-9 && out.u[1] == 0.0);
        assert!(s.kkt_residual(&sub, &out.u).unwrap() < 1e-9);
    }

    #[test]
    fn kkt_of_exact_one_dimensional_minimizer_is_zero() {
        // min (1/2)(u−3)² + 0.5|u| + (2/2)(u−1)² → u = (3 + 2 − 0.5)/3 = 1.5
        let a = DenseOperator::new(DMatrix::from_element(1, 1, 1.0)).unwrap();
        let f = DenseVector::from_vec(vec![1.0]);
        let c = DenseVector::from_vec(vec![3.0]);
        let h = DenseVector::zeros(1);
        let sub = Subproblem {
            center: &c,
            linear: &h,
            weight: 0.5,
        };
        let u = DenseVector::from_vec(vec![1.5]);
        let r = signal_kkt_residual(&a, &f, 2.0, 1.0, &sub, &u).unwrap();
        assert!(r <= 1e-12);
        let r = signal_kkt_residual(&a, &f, 2.0, 1.0, &sub, &DenseVector::from_vec(vec![1.5 + 1e-3])).unwrap();
        assert!((r - 3e-3).abs() < 1e-12);
        let r = signal_kkt_residual(&a, &f, 2.0, 1.0, &sub, &DenseVector::from_vec(vec![-4.0])).unwrap();
        assert!(r > 1.0);
    }
}
