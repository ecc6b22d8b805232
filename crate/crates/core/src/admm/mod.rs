//! ADMM solvers for the convex subproblem
//!
//! ```text
//! min_u  (β/2)‖u − c‖² − ⟨h, u⟩ + w·J(u) + (λ/2)‖Au − f‖²
//! ```
//!
//! where `J` is `‖·‖₁` for signals and `‖∇·‖₁` for images. The flow step uses
//! `c = uᵏ`, `h = hᵏ`, `w = 1/H(uᵏ)`; the L1 and TV baselines use `β = 0`,
//! `h = 0`, `w = μ`; DCA uses `β = 0`, `h = vᵏ`, `w = μ`.

mod image;
mod shrink;
mod signal;
mod woodbury;

pub use image::{image_kkt_residual, ImageAdmm};
pub use shrink::{shrink, shrink_scalar};
pub use signal::{signal_kkt_residual, SignalAdmm};
pub use woodbury::{woodbury_solve, WoodburySolver};

use crate::error::{QrmError, Result};
use crate::field::Field;

/// Data of one subproblem. `beta` lives in the solver since it enters the
/// cached factorization.
#[derive(Clone, Copy, Debug)]
pub struct Subproblem<'a, U> {
    /// Proximal center `c`; unused when `β = 0`.
    pub center: &'a U,
    /// Linear term `h`, entering as `−⟨h, u⟩`.
    pub linear: &'a U,
    /// Weight `w ≥ 0` on `J`.
    pub weight: f64,
}

impl<U: Field> Subproblem<'_, U> {
    pub(crate) fn validate(&self) -> Result<()> {
        if !(self.weight >= 0.0 && self.weight.is_finite()) {
            return Err(QrmError::invalid(format!(
                "subproblem weight must be finite and >= 0, got {}",
                self.weight
            )));
        }
        if !self.center.same_shape(self.linear) {
            return Err(QrmError::dimension(
                "Subproblem",
                self.center.len(),
                self.linear.len(),
            ));
        }
        Ok(())
    }
}

/// ADMM iterates: primal `u`, split variable `y`, scaled dual `eta`.
#[derive(Clone, Debug)]
pub struct AdmmState<U, Y> {
    pub u: U,
    pub y: Y,
    pub eta: Y,
    /// Iterations taken by the most recent solve.
    pub j: usize,
}

#[derive(Clone, Debug)]
pub struct InnerOutcome<U> {
    pub u: U,
    pub iterations: usize,
    pub converged: bool,
    /// `‖u − y‖` (signal) or `‖∇u − y‖` (image) at exit.
    pub primal_residual: f64,
}

/// A subproblem solver bound to one operator, data vector and `(β, ρ, λ)`.
/// The split and dual variables persist between calls so consecutive
/// solves warm start.
pub trait InnerSolver<U: Field> {
    fn solve(&mut self, sub: &Subproblem<'_, U>) -> Result<InnerOutcome<U>>;

    /// Distance of the optimality condition from being satisfied at `u`.
    fn kkt_residual(&self, sub: &Subproblem<'_, U>, u: &U) -> Result<f64>;

    /// Restarts the split variable from `u` and the dual from zero.
    fn reset(&mut self, u: &U);

    fn beta(&self) -> f64;
}
