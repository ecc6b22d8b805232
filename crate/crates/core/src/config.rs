use crate::error::{QrmError, Result};

/// Parameters shared by the outer flow and the inner ADMM loops.
#[derive(Clone, Debug, PartialEq)]
pub struct SolverConfig {
    /// Inverse time step of the flow, `β = 1/dt`.
    pub beta: f64,
    /// ADMM penalty.
    pub rho: f64,
    /// Fidelity weight.
    pub lambda: f64,
    /// Number of largest magnitudes summed by the `L1/S_K` denominator.
    pub k: usize,
    /// Relative-change tolerance for both loops.
    pub eps: f64,
    pub k_max: usize,
    pub j_max: usize,
    pub seed: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            beta: 1.0,
            rho: 10.0,
            lambda: 1.0,
            k: 100,
            eps: 1e-8,
            k_max: 100,
            j_max: 200,
            seed: 0,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("beta", self.beta),
            ("rho", self.rho),
            ("lambda", self.lambda),
            ("eps", self.eps),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(QrmError::invalid(format!("{name} must be > 0, got {v}")));
            }
        }
        if self.k == 0 {
            return Err(QrmError::invalid("K must be >= 1"));
        }
        if self.k_max == 0 || self.j_max == 0 {
            return Err(QrmError::invalid("kMax and jMax must be >= 1"));
        }
        Ok(())
    }

    /// `κ = 1/(β+ρ)`
    pub fn kappa(&self) -> f64 {
        1.0 / (self.beta + self.rho)
    }

    /// Default fidelity weight `1000/‖f‖₂²`.
    pub fn default_lambda(f_norm_sq: f64) -> f64 {
        1000.0 / f_norm_sq
    }
}
