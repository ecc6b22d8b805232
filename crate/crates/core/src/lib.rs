//! Quotient regularization models
//!
//! ```text
//! min_u  J(u)/H(u) + (λ/2)‖Au − f‖₂²
//! ```
//!
//! for absolutely one-homogeneous convex `J`, `H`, solved by a semi-implicit
//! discretization of the gradient flow whose convex steps are handled by
//! ADMM: a Woodbury-accelerated solver for dense sensing matrices and an
//! FFT-diagonalized solver for masked Fourier (MRI) data.

pub mod admm;
pub mod baselines;
pub mod config;
pub mod datagen;
pub mod error;
pub mod field;
pub mod flow;
pub mod io;
pub mod metrics;
pub mod operators;
pub mod problem;
pub mod regularizers;

pub use baselines::{dca_solve, l1_solve};
pub use config::SolverConfig;
pub use error::{QrmError, Result};
pub use field::{DenseVector, Field, GradientField, ImageGrid};
pub use flow::{
    qrm_solve, theorem1_threshold, verify_norm_monotonicity, OuterLoopRecord, SolveResult,
    SolveStatus,
};
pub use problem::{objective_g, ImageProblem, Problem, SignalProblem};
pub use regularizers::{
    GradL1OverL2, QuotientRegularizer, QuotientValue, Regularizer, SignalRegularizer,
    SubgradientPair,
};
