//! Convex L1 / TV baseline and the DCA scheme for the quotient model.

use crate::admm::{InnerSolver, Subproblem};
use crate::config::SolverConfig;
use crate::error::{QrmError, Result};
use crate::field::Field;
use crate::flow::{outer_loop, relative_change, OuterLoopRecord, SolveResult, SolveStatus};
use crate::problem::Problem;
use crate::regularizers::Regularizer;

/// Minimizes `μ‖u‖₁ + (λ/2)‖Au − f‖₂²` (signals) or `μ‖∇u‖₁ + (λ/2)‖Au − f‖₂²`
/// (images) from zero with one ADMM run of at most `config.j_max` steps.
///
/// The trace holds the start (`k = 0`) and the solution (`k = 1`); its `r`
/// column is `μ·J(u)` and `objective` the baseline objective. `config.beta`
/// is ignored.
pub fn l1_solve<P: Problem>(
    problem: &P,
    lambda: f64,
    mu: f64,
    config: &SolverConfig,
) -> Result<SolveResult<P::U>> {
    if !(mu > 0.0 && mu.is_finite()) {
        return Err(QrmError::invalid(format!("mu must be > 0, got {mu}")));
    }
    let config = SolverConfig {
        lambda,
        ..config.clone()
    };
    config.validate()?;
    let mut solver = problem.inner_solver(0.0, config.rho, lambda, config.eps, config.j_max)?;
    let zero = problem.zero();
    solver.reset(&zero);
    let sub = Subproblem {
        center: &zero,
        linear: &zero,
        weight: mu,
    };
    let out = solver.solve(&sub)?;
    let kkt = solver.kkt_residual(&sub, &out.u)?;
    let rec = |k, u: &P::U, rel_change, inner_iters, inner_kkt| -> Result<OuterLoopRecord> {
        let (res_sq, au_norm) = problem.residual(u)?;
        let r = mu * problem.l1_term(u);
        let fidelity = 0.5 * lambda * res_sq;
        Ok(OuterLoopRecord {
            k,
            objective: r + fidelity,
            r,
            fidelity,
            u_norm: u.norm(),
            au_minus_f_norm: au_norm - problem.data_norm(),
            rel_change,
            inner_iters,
            inner_kkt,
        })
    };
    let trace = vec![
        rec(0, &zero, 0.0, 0, 0.0)?,
        rec(1, &out.u, relative_change(&out.u, &zero), out.iterations, kkt)?,
    ];
    Ok(SolveResult {
        u_star: out.u,
        trace,
        status: if out.converged {
            SolveStatus::Converged
        } else {
            SolveStatus::MaxIterations
        },
        stationarity: Some(kkt),
    })
}

/// DCA on `G = D₁ − D₂` with `D₁ = μJ + (λ/2)‖Au−f‖²` and `D₂ = μJ − R`:
/// `vᵏ = μpᵏ − (pᵏ − R(uᵏ)qᵏ)/H(uᵏ)`, then
/// `uᵏ⁺¹ = argmin μJ(u) + (λ/2)‖Au−f‖² − ⟨u, vᵏ⟩`.
/// The trace reports the quotient objective `G`.
pub fn dca_solve<P, R>(
    problem: &P,
    regularizer: &R,
    mu: f64,
    config: &SolverConfig,
    u0: &P::U,
) -> Result<SolveResult<P::U>>
where
    P: Problem,
    R: Regularizer<P::U> + ?Sized,
{
    if !(mu > 0.0 && mu.is_finite()) {
        return Err(QrmError::invalid(format!("DCA needs mu > 0, got {mu}")));
    }
    outer_loop(problem, regularizer, config, u0, 0.0, |u, v| {
        let pair = regularizer.subgradients(u)?;
        let mut lin = pair.q;
        lin.scale(v.r / v.h);
        lin.axpy(mu - 1.0 / v.h, &pair.p);
        Ok((lin, mu))
    })
}
