//! The semi-implicit gradient flow. Each outer step solves
//!
//! ```text
//! uᵏ⁺¹ = argmin_u (β/2)‖u − uᵏ‖² − ⟨hᵏ, u⟩ + J(u)/H(uᵏ) + (λ/2)‖Au − f‖²
//! ```
//!
//! with `hᵏ = (R(uᵏ)/H(uᵏ)) qᵏ`, `qᵏ ∈ ∂H(uᵏ)`.

use crate::admm::{InnerSolver, Subproblem};
use crate::config::SolverConfig;
use crate::error::{QrmError, Result};
use crate::field::Field;
use crate::problem::Problem;
use crate::regularizers::{QuotientRegularizer, QuotientValue, Regularizer};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SolveStatus {
    Converged,
    MaxIterations,
    DegenerateIterate,
}

impl SolveStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            SolveStatus::Converged => "converged",
            SolveStatus::MaxIterations => "max_iterations",
            SolveStatus::DegenerateIterate => "degenerate_iterate",
        }
    }
}

/// Diagnostics of one outer iterate `uᵏ`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OuterLoopRecord {
    pub k: usize,
    /// `G(uᵏ)`
    pub objective: f64,
    /// `R(uᵏ)`
    pub r: f64,
    /// `(λ/2)‖Auᵏ − f‖₂²`
    pub fidelity: f64,
    pub u_norm: f64,
    /// `‖Auᵏ‖₂ − ‖f‖₂`
    pub au_minus_f_norm: f64,
    /// `‖uᵏ − uᵏ⁻¹‖₂ / ‖uᵏ‖₂`; zero at `k = 0`.
    pub rel_change: f64,
    /// Inner iterations spent producing `uᵏ`.
    pub inner_iters: usize,
    /// KKT residual of the subproblem that produced `uᵏ`; zero at `k = 0`.
    pub inner_kkt: f64,
}

#[derive(Clone, Debug)]
pub struct SolveResult<U> {
    pub u_star: U,
    pub trace: Vec<OuterLoopRecord>,
    pub status: SolveStatus,
    /// Distance from satisfying `0 ∈ λAᵀ(Au−f) + (∂J(u) − R(u)q)/H(u)` at
    /// `u_star`; `None` when `H(u_star) = 0`.
    pub stationarity: Option<f64>,
}

impl<U> SolveResult<U> {
    pub fn last(&self) -> &OuterLoopRecord {
        self.trace.last().expect("trace has at least one record")
    }

    pub fn total_inner_iters(&self) -> usize {
        self.trace.iter().map(|r| r.inner_iters).sum()
    }

    pub fn max_inner_kkt(&self) -> f64 {
        self.trace.iter().map(|r| r.inner_kkt).fold(0.0, f64::max)
    }
}

pub(crate) fn record<P: Problem>(
    problem: &P,
    v: QuotientValue,
    u: &P::U,
    lambda: f64,
) -> Result<(f64, f64, f64)> {
    let (res_sq, au_norm) = problem.residual(u)?;
    let fidelity = 0.5 * lambda * res_sq;
    Ok((v.r + fidelity, fidelity, au_norm - problem.data_norm()))
}

pub(crate) fn relative_change<U: Field>(new: &U, old: &U) -> f64 {
    let d = new.distance(old);
    let n = new.norm();
    if d == 0.0 {
        0.0
    } else if n == 0.0 {
        f64::INFINITY
    } else {
        d / n
    }
}

/// Shared outer loop. `step` maps `(uᵏ, R-values at uᵏ)` to the linear term
/// and `J` weight of the next subproblem.
pub(crate) fn outer_loop<P, R, S>(
    problem: &P,
    regularizer: &R,
    config: &SolverConfig,
    u0: &P::U,
    inner_beta: f64,
    mut step: S,
) -> Result<SolveResult<P::U>>
where
    P: Problem,
    R: Regularizer<P::U> + ?Sized,
    S: FnMut(&P::U, QuotientValue) -> Result<(P::U, f64)>,
{
    config.validate()?;
    problem.check_domain(u0)?;
    let mut solver = problem.inner_solver(
        inner_beta,
        config.rho,
        config.lambda,
        config.eps,
        config.j_max,
    )?;
    solver.reset(u0);

    let mut u = u0.clone();
    let mut trace = Vec::with_capacity(config.k_max + 1);
    let mut rel_change = 0.0;
    let mut inner_iters = 0;
    let mut inner_kkt = 0.0;
    let status;
    let mut k = 0;
    loop {
        let v = regularizer.eval(&u);
        let (objective, fidelity, au_minus_f_norm) = record(problem, v, &u, config.lambda)?;
        trace.push(OuterLoopRecord {
            k,
            objective,
            r: v.r,
            fidelity,
            u_norm: u.norm(),
            au_minus_f_norm,
            rel_change,
            inner_iters,
            inner_kkt,
        });
        if !(v.h > 0.0) {
            status = SolveStatus::DegenerateIterate;
            break;
        }
        if k > 0 && rel_change <= config.eps {
            status = SolveStatus::Converged;
            break;
        }
        if k == config.k_max {
            status = SolveStatus::MaxIterations;
            break;
        }
        let (linear, weight) = step(&u, v)?;
        let sub = Subproblem {
            center: &u,
            linear: &linear,
            weight,
        };
        let out = solver.solve(&sub)?;
        inner_kkt = solver.kkt_residual(&sub, &out.u)?;
        inner_iters = out.iterations;
        rel_change = relative_change(&out.u, &u);
        u = out.u;
        k += 1;
    }

    let stationarity = if status == SolveStatus::DegenerateIterate {
        None
    } else {
        let v = regularizer.eval(&u);
        let h = regularizer.linear_term(&u)?;
        let sub = Subproblem {
            center: &u,
            linear: &h,
            weight: 1.0 / v.h,
        };
        Some(solver.kkt_residual(&sub, &u)?)
    };

    Ok(SolveResult {
        u_star: u,
        trace,
        status,
        stationarity,
    })
}

/// Runs the semi-implicit flow from `u0` until the relative change drops to
/// `config.eps` or `config.k_max` steps are taken. The inner solver is warm
/// started across outer steps.
pub fn qrm_solve<P, R>(
    problem: &P,
    regularizer: &R,
    config: &SolverConfig,
    u0: &P::U,
) -> Result<SolveResult<P::U>>
where
    P: Problem,
    R: Regularizer<P::U> + ?Sized,
{
    outer_loop(problem, regularizer, config, u0, config.beta, |u, v| {
        Ok((regularizer.linear_term(u)?, 1.0 / v.h))
    })
}

/// Largest `λ` below which the zero vector may beat every nonzero point:
/// `2M/‖f‖₂²` with `M` a uniform bound on `R`.
pub fn theorem1_threshold<P: Problem>(problem: &P, regularizer: QuotientRegularizer) -> Result<f64> {
    let f_sq = problem.data_norm().powi(2);
    if !(f_sq > 0.0) {
        return Err(QrmError::invalid("threshold undefined for f = 0"));
    }
    Ok(2.0 * regularizer.upper_bound(problem.ambient_dims()) / f_sq)
}

/// Scale of `u0` relative to the data in the two norm-monotonicity runs:
/// `‖Au0‖₂ = factor·‖f‖₂`.
pub const CASE1_FACTOR: f64 = 2.0;
pub const CASE2_FACTOR: f64 = 0.25;

#[derive(Clone, Debug, PartialEq)]
pub struct NormStep {
    pub k: usize,
    pub u_norm: f64,
    /// Sign of `‖uᵏ‖₂ − ‖uᵏ⁻¹‖₂` (0 at `k = 0`).
    pub delta_sign: i8,
    pub au_minus_f_norm: f64,
    /// `‖Auᵏ‖₂ ≥ ‖f‖₂` while `‖uᵏ‖₂` grew by more than `1e-9` relative.
    pub flagged: bool,
}

#[derive(Clone, Debug)]
pub struct NormCase {
    pub scale: f64,
    pub status: SolveStatus,
    pub steps: Vec<NormStep>,
}

impl NormCase {
    pub fn flags(&self) -> usize {
        self.steps.iter().filter(|s| s.flagged).count()
    }

    /// Number of leading steps (from `k = 1`) over which `‖uᵏ‖₂` strictly
    /// increases.
    pub fn leading_increases(&self) -> usize {
        self.steps
            .iter()
            .skip(1)
            .take_while(|s| s.delta_sign > 0)
            .count()
    }
}

#[derive(Clone, Debug)]
pub struct NormMonotonicityReport {
    /// Started with `‖Au0‖₂ > ‖f‖₂`.
    pub case1: NormCase,
    /// Started with `‖Au0‖₂ < ‖f‖₂`.
    pub case2: NormCase,
}

fn norm_case<P, R>(
    problem: &P,
    regularizer: &R,
    config: &SolverConfig,
    u0: &P::U,
    factor: f64,
) -> Result<NormCase>
where
    P: Problem,
    R: Regularizer<P::U> + ?Sized,
{
    let (_, au0) = problem.residual(u0)?;
    if !(au0 > 0.0) {
        return Err(QrmError::invalid("norm monotonicity check needs Au0 != 0"));
    }
    let scale = factor * problem.data_norm() / au0;
    let mut start = u0.clone();
    start.scale(scale);
    let res = qrm_solve(problem, regularizer, config, &start)?;
    let mut steps = Vec::with_capacity(res.trace.len());
    let mut prev: Option<f64> = None;
    for r in &res.trace {
        let (delta_sign, grew) = match prev {
            None => (0, false),
            Some(p) => {
                let s = if r.u_norm > p {
                    1
                } else if r.u_norm < p {
                    -1
                } else {
                    0
                };
                (s, r.u_norm > p * (1.0 + 1e-9))
            }
        };
        steps.push(NormStep {
            k: r.k,
            u_norm: r.u_norm,
            delta_sign,
            au_minus_f_norm: r.au_minus_f_norm,
            flagged: grew && r.au_minus_f_norm >= 0.0,
        });
        prev = Some(r.u_norm);
    }
    Ok(NormCase {
        scale,
        status: res.status,
        steps,
    })
}

/// Runs the flow from `u0` rescaled to `‖Au0‖₂ = 2‖f‖₂` and to
/// `‖Au0‖₂ = ‖f‖₂/4`, tracking `‖uᵏ‖₂` against the sign of
/// `‖Auᵏ‖₂ − ‖f‖₂`.
pub fn verify_norm_monotonicity<P, R>(
    problem: &P,
    regularizer: &R,
    config: &SolverConfig,
    u0: &P::U,
) -> Result<NormMonotonicityReport>
where
    P: Problem,
    R: Regularizer<P::U> + ?Sized,
{
    Ok(NormMonotonicityReport {
        case1: norm_case(problem, regularizer, config, u0, CASE1_FACTOR)?,
        case2: norm_case(problem, regularizer, config, u0, CASE2_FACTOR)?,
    })
}
