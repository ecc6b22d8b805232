use super::{shrink_scalar, AdmmState, InnerOutcome, InnerSolver, Subproblem};
use crate::error::{QrmError, Result};
use crate::field::{Field, GradientField, ImageGrid};
use crate::operators::{
    grad, grad_adjoint, grad_adjoint_into, grad_into, KSpace, LinearOperator,
    RadialFourierOperator, SpectralSolver,
};

/// ADMM on the split `y = ∇u` for masked Fourier data:
///
/// ```text
/// u ← (λAᵀA + ρDᵀD + βI)⁻¹ (βc + h + λAᵀf + ρDᵀ(y − η))
/// y ← shrink(∇u + η, w/ρ)
/// η ← η + ∇u − y
/// ```
#[derive(Clone, Debug)]
pub struct ImageAdmm<'a> {
    op: &'a RadialFourierOperator,
    f: &'a KSpace,
    beta: f64,
    rho: f64,
    lambda: f64,
    eps: f64,
    j_max: usize,
    spectral: SpectralSolver,
    at_f: ImageGrid,
    state: AdmmState<ImageGrid, GradientField>,
    du: GradientField,
    work: GradientField,
    rhs: ImageGrid,
}

impl<'a> ImageAdmm<'a> {
    pub fn new(
        op: &'a RadialFourierOperator,
        f: &'a KSpace,
        beta: f64,
        rho: f64,
        lambda: f64,
        eps: f64,
        j_max: usize,
    ) -> Result<Self> {
        if f.shape() != op.shape() {
            return Err(QrmError::dimension(
                "ImageAdmm::new",
                format!("{:?}", op.shape()),
                format!("{:?}", f.shape()),
            ));
        }
        if !(beta >= 0.0 && rho > 0.0 && rho.is_finite() && beta.is_finite()) {
            return Err(QrmError::invalid(format!(
                "need beta >= 0 and rho > 0, got beta={beta}, rho={rho}"
            )));
        }
        if j_max == 0 {
            return Err(QrmError::invalid("jMax must be >= 1"));
        }
        let spectral = SpectralSolver::new(op, rho, beta, lambda)?;
        let mut at_f = op.apply_adjoint(f)?;
        at_f.scale(lambda);
        let (h, w) = op.shape();
        Ok(ImageAdmm {
            op,
            f,
            beta,
            rho,
            lambda,
            eps,
            j_max,
            spectral,
            at_f,
            state: AdmmState {
                u: ImageGrid::zeros(h, w),
                y: GradientField::zeros(h, w),
                eta: GradientField::zeros(h, w),
                j: 0,
            },
            du: GradientField::zeros(h, w),
            work: GradientField::zeros(h, w),
            rhs: ImageGrid::zeros(h, w),
        })
    }

    pub fn state(&self) -> &AdmmState<ImageGrid, GradientField> {
        &self.state
    }

    /// The dual certificate `z = ρη/w` projected onto `∂‖·‖₁` at `y`.
    pub fn certificate(&self, weight: f64) -> GradientField {
        let (h, w) = self.op.shape();
        let mut z = GradientField::zeros(h, w);
        if weight <= 0.0 {
            return z;
        }
        let s = self.rho / weight;
        for ((zi, e), y) in z.iter_mut().zip(self.state.eta.iter()).zip(self.state.y.iter()) {
            *zi = if *y > 0.0 {
                1.0
            } else if *y < 0.0 {
                -1.0
            } else {
                (s * e).clamp(-1.0, 1.0)
            };
        }
        z
    }
}

impl InnerSolver<ImageGrid> for ImageAdmm<'_> {
    fn solve(&mut self, sub: &Subproblem<'_, ImageGrid>) -> Result<InnerOutcome<ImageGrid>> {
        sub.validate()?;
        if sub.center.shape() != self.op.shape() {
            return Err(QrmError::dimension(
                "ImageAdmm::solve",
                format!("{:?}", self.op.shape()),
                format!("{:?}", sub.center.shape()),
            ));
        }
        let mut base = self.at_f.clone();
        base.axpy(1.0, sub.linear);
        if self.beta > 0.0 {
            base.axpy(self.beta, sub.center);
        }
        let t = sub.weight / self.rho;
        let floor = 1e-8 * grad(sub.center).norm2();
        let mut converged = false;
        let mut primal = f64::INFINITY;
        let mut j = 0;
        while j < self.j_max {
            j += 1;
            let st = &mut self.state;
            for ((wv, y), e) in self.work.iter_mut().zip(st.y.iter()).zip(st.eta.iter()) {
                *wv = y - e;
            }
            grad_adjoint_into(&self.work, &mut self.rhs);
            {
                let r = self.rhs.values_mut();
                for (ri, bi) in r.iter_mut().zip(base.values()) {
                    *ri = bi + self.rho * *ri;
                }
            }
            let u_new = self.spectral.solve(&self.rhs);
            grad_into(&u_new, &mut self.du);
            let mut res = 0.0;
            let mut dnorm = 0.0;
            for ((y, e), d) in st.y.iter_mut().zip(st.eta.iter_mut()).zip(self.du.iter()) {
                *y = shrink_scalar(d + *e, t);
                let r = d - *y;
                *e += r;
                res += r * r;
                dnorm += d * d;
            }
            let change = u_new.distance(&st.u);
            let unorm = u_new.norm();
            st.u = u_new;
            primal = res.sqrt();
            if j > 1 && change <= self.eps * unorm && primal <= floor.max(1e-8 * dnorm.sqrt()) {
                converged = true;
                break;
            }
        }
        self.state.j = j;
        Ok(InnerOutcome {
            u: self.state.u.clone(),
            iterations: j,
            converged,
            primal_residual: primal,
        })
    }

    /// Uses the solver's current dual variable as the subgradient
    /// certificate for `‖∇u‖₁`.
    fn kkt_residual(&self, sub: &Subproblem<'_, ImageGrid>, u: &ImageGrid) -> Result<f64> {
        let z = self.certificate(sub.weight);
        image_kkt_residual(self.op, self.f, self.lambda, self.beta, sub, u, &z)
    }

    fn reset(&mut self, u: &ImageGrid) {
        self.state.u = u.clone();
        grad_into(u, &mut self.state.y);
        self.state.eta.iter_mut().for_each(|v| *v = 0.0);
        self.state.j = 0;
    }

    fn beta(&self) -> f64 {
        self.beta
    }
}

/// `‖β(u−c) − h + λAᵀ(Au−f) + w·Dᵀz‖₂` for a certificate `z` that the
/// caller asserts lies in `∂‖·‖₁` at the split variable.
pub fn image_kkt_residual(
    op: &RadialFourierOperator,
    f: &KSpace,
    lambda: f64,
    beta: f64,
    sub: &Subproblem<'_, ImageGrid>,
    u: &ImageGrid,
    certificate: &GradientField,
) -> Result<f64> {
    sub.validate()?;
    let mut r = op.apply(u)?;
    for (ri, fi) in r.data.iter_mut().zip(&f.data) {
        *ri -= fi;
    }
    let mut g = op.apply_adjoint(&r)?;
    g.scale(lambda);
    g.axpy(-1.0, sub.linear);
    if beta != 0.0 {
        g.axpy(beta, u);
        g.axpy(-beta, sub.center);
    }
    g.axpy(sub.weight, &grad_adjoint(certificate));
    Ok(g.norm())
}
