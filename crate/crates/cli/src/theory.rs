//! Numerical checks of the flow: objective decay traces for the three
//! regularizers, the two-case norm monotonicity report, and a randomized
//! property suite checked against independent dense oracles.

use std::f64::consts::PI;
use std::path::Path;

use nalgebra::{Complex, DMatrix, DVector};
use qrm::admm::{shrink, WoodburySolver};
use qrm::datagen::ExperimentRng;
use qrm::field::Field;
use qrm::flow::NormMonotonicityReport;
use qrm::operators::{
    grad, grad_adjoint, DenseOperator, LinearOperator, Measurement, RadialFourierOperator,
    SpectralSolver,
};
use qrm::{
    l1_solve, qrm_solve, verify_norm_monotonicity, DenseVector, GradL1OverL2, GradientField,
    ImageGrid, OuterLoopRecord, Regularizer, SignalRegularizer,
    SolveStatus,
};

use crate::ini::Ini;
use crate::mri::{make_problem, MriSettings};
use crate::settings::{MethodSettings, SettingsError, SignalMethod, SignalSettings, EXPERIMENT_SECTION};
use crate::signal::{make_instance, objective_increases, solve_method};
use crate::HarnessError;

/// Section with the image instance of the gradient decay trace.
pub const IMAGE_SECTION: &str = "image";

#[derive(Clone, Debug)]
pub struct TheorySettings {
    pub signal: SignalSettings,
    pub image: MriSettings,
    /// Randomized cases per property.
    pub cases: usize,
    /// Flow parameters of the norm monotonicity runs (L1/L2).
    pub norm: MethodSettings,
}

impl TheorySettings {
    pub fn from_ini(ini: &Ini, base_dir: &Path) -> Result<Self, SettingsError> {
        let cases = ini.get(EXPERIMENT_SECTION, "cases")?.unwrap_or(1000);
        if cases == 0 {
            return Err(SettingsError::Invalid("cases must be >= 1".into()));
        }
        Ok(TheorySettings {
            signal: SignalSettings::from_ini(ini)?,
            image: MriSettings::from_section(ini, IMAGE_SECTION, base_dir)?,
            cases,
            norm: MethodSettings::from_ini(ini, &["norm", "qrm_l1l2"])?,
        })
    }

    pub fn m(&self) -> usize {
        self.signal.m_values[0]
    }

    pub fn k(&self) -> usize {
        self.signal.k_values[0]
    }
}

#[derive(Clone, Debug)]
pub struct DecayTrace {
    pub label: String,
    pub file_stem: &'static str,
    pub status: SolveStatus,
    pub trace: Vec<OuterLoopRecord>,
    /// Steps after the first with `G` up by more than `1e-9` relative.
    pub increases: usize,
}

/// `G(uᵏ)` traces of L1/L2 and L1/S_K on the first signal trial and of the
/// gradient model on the configured image, each started from its L1-type
/// baseline solution.
pub fn decay_traces(settings: &TheorySettings) -> Result<Vec<DecayTrace>, HarnessError> {
    let sig = &settings.signal;
    let inst = make_instance(sig, settings.m(), 0)?;
    let l1 = solve_method(sig, &inst, SignalMethod::L1, None)?;
    let mut out = Vec::new();
    let methods = [
        (SignalRegularizer::L1OverL2, "decay_l1l2"),
        (SignalRegularizer::L1OverSK { k: settings.k() }, "decay_sk"),
    ];
    for (reg, stem) in methods {
        let method = SignalMethod::Qrm(reg);
        let res = solve_method(sig, &inst, method, Some(&l1))?;
        out.push(DecayTrace {
            label: method.label(),
            file_stem: stem,
            status: res.status,
            increases: objective_increases(&res, 1e-9),
            trace: res.trace,
        });
    }

    let img = &settings.image;
    let truth = img.load_phantom()?;
    let problem = make_problem(img, &truth, img.lines[0], img.sigmas[0])?;
    let tv = l1_solve(&problem, img.tv.lambda, img.tv.mu, &img.tv.solver_config(1, img.seed))?;
    let res = qrm_solve(&problem, &GradL1OverL2, &img.qrm.solver_config(1, img.seed), &tv.u_star)?;
    out.push(DecayTrace {
        label: "QRM-grad-L1/L2".into(),
        file_stem: "decay_grad",
        status: res.status,
        increases: objective_increases(&res, 1e-9),
        trace: res.trace,
    });
    Ok(out)
}

/// Both norm monotonicity cases for L1/L2 on the first signal trial,
/// rescaling the L1 baseline solution.
pub fn norm_report(settings: &TheorySettings) -> Result<NormMonotonicityReport, HarnessError> {
    let sig = &settings.signal;
    let inst = make_instance(sig, settings.m(), 0)?;
    let l1 = solve_method(sig, &inst, SignalMethod::L1, None)?;
    let cfg = settings.norm.solver_config(sig.n, sig.seed);
    Ok(verify_norm_monotonicity(
        &inst.problem,
        &SignalRegularizer::L1OverL2,
        &cfg,
        &l1.u_star,
    )?)
}

#[derive(Clone, Debug, PartialEq)]
pub struct PropertyOutcome {
    pub name: &'static str,
    pub cases: usize,
    pub failures: usize,
    /// Largest normalized error seen.
    pub max_error: f64,
    pub tolerance: f64,
}

impl PropertyOutcome {
    pub fn passed(&self) -> bool {
        self.failures == 0
    }
}

type Check = fn(&mut ExperimentRng) -> Result<f64, HarnessError>;

/// Runs every property `cases` times. Each case draws from its own stream
/// so a failure can be replayed from `(seed, property, case)`.
pub fn property_suite(cases: usize, seed: u64) -> Result<Vec<PropertyOutcome>, HarnessError> {
    let props: [(&'static str, f64, Check); 6] = [
        ("lemma1", 1e-12, lemma1_case),
        ("homogeneity", 1e-12, homogeneity_case),
        ("adjoint", 1e-11, adjoint_case),
        ("shrink_prox", 1e-12, shrink_case),
        ("woodbury_vs_dense", 1e-10, woodbury_case),
        ("spectral_vs_dense_8x8", 1e-9, spectral_case),
    ];
    let mut out = Vec::with_capacity(props.len());
    for (pi, (name, tol, check)) in props.into_iter().enumerate() {
        let mut failures = 0;
        let mut max_error: f64 = 0.0;
        for c in 0..cases {
            let mut rng = ExperimentRng::new(seed ^ ((pi as u64) << 48) ^ c as u64);
            let err = check(&mut rng)?;
            if !(err <= tol) {
                failures += 1;
            }
            max_error = if err.is_nan() { f64::NAN } else { max_error.max(err) };
        }
        out.push(PropertyOutcome {
            name,
            cases,
            failures,
            max_error,
            tolerance: tol,
        });
    }
    Ok(out)
}

/// Entries with random scale; about one in five is exactly zero.
fn rand_values(rng: &mut ExperimentRng, n: usize) -> Vec<f64> {
    let scale = (rng.uniform() * 6.0 - 3.0).exp();
    let mut v: Vec<f64> = (0..n)
        .map(|_| {
            if rng.uniform() < 0.2 {
                0.0
            } else {
                scale * rng.normal()
            }
        })
        .collect();
    if v.iter().all(|&x| x == 0.0) {
        v[0] = scale;
    }
    v
}

fn rand_vector(rng: &mut ExperimentRng, n: usize) -> DenseVector {
    DenseVector::from_vec(rand_values(rng, n))
}

fn rand_image(rng: &mut ExperimentRng, h: usize, w: usize) -> ImageGrid {
    let mut v = rand_values(rng, h * w);
    // break constant images so H(u) > 0
    v[0] += 1.0 + v[1].abs();
    ImageGrid::new(h, w, v).expect("shape matches")
}

fn rand_matrix(rng: &mut ExperimentRng, m: usize, n: usize) -> DMatrix<f64> {
    DMatrix::from_fn(m, n, |_, _| rng.normal())
}

fn log_uniform(rng: &mut ExperimentRng, lo: f64, hi: f64) -> f64 {
    (lo.ln() + rng.uniform() * (hi.ln() - lo.ln())).exp()
}

/// `F(u) = ⟨p, u⟩` and `F(v) ≥ ⟨p, v⟩` at a random `v`, for `p ∈ ∂F(u)` and
/// `F ∈ {J, H}`; errors are relative to `‖u‖₁ + ‖v‖₁`.
fn subgradient_error<U, R>(reg: &R, u: &U, v: &U) -> Result<f64, HarnessError>
where
    U: Field,
    R: Regularizer<U>,
{
    let sg = reg.subgradients(u)?;
    let at_u = reg.eval(u);
    let at_v = reg.eval(v);
    let mut err: f64 = 0.0;
    for (f_u, f_v, g) in [(at_u.j, at_v.j, &sg.p), (at_u.h, at_v.h, &sg.q)] {
        err = err.max((f_u - g.dot(u)).abs());
        err = err.max((g.dot(v) - f_v).max(0.0));
    }
    Ok(err / (l1(u.values()) + l1(v.values())))
}

fn l1(v: &[f64]) -> f64 {
    v.iter().map(|x| x.abs()).sum()
}

fn lemma1_case(rng: &mut ExperimentRng) -> Result<f64, HarnessError> {
    let n = 1 + rng.index(40);
    let k = 1 + rng.index(n);
    let u = rand_vector(rng, n);
    let v = rand_vector(rng, n);
    let mut err: f64 = 0.0;
    for reg in [SignalRegularizer::L1OverL2, SignalRegularizer::L1OverSK { k }] {
        err = err.max(subgradient_error(&reg, &u, &v)?);
    }
    let (h, w) = (2 + rng.index(10), 2 + rng.index(10));
    let ui = rand_image(rng, h, w);
    let vi = rand_image(rng, h, w);
    Ok(err.max(subgradient_error(&GradL1OverL2, &ui, &vi)?))
}

fn homogeneity_case(rng: &mut ExperimentRng) -> Result<f64, HarnessError> {
    let mut alpha = rng.uniform() * 10.0 - 5.0;
    if alpha == 0.0 {
        alpha = 1.0;
    }
    fn check<U: Field, R: Regularizer<U>>(reg: &R, u: &U, alpha: f64) -> f64 {
        let mut su = u.clone();
        su.scale(alpha);
        let a = reg.eval(u);
        let b = reg.eval(&su);
        let rel = |x: f64, y: f64| (x - y).abs() / y.abs().max(f64::MIN_POSITIVE);
        rel(b.j, alpha.abs() * a.j)
            .max(rel(b.h, alpha.abs() * a.h))
            .max(rel(b.r, a.r))
    }
    let n = 1 + rng.index(40);
    let k = 1 + rng.index(n);
    let u = rand_vector(rng, n);
    let (h, w) = (2 + rng.index(10), 2 + rng.index(10));
    let ui = rand_image(rng, h, w);
    Ok(check(&SignalRegularizer::L1OverL2, &u, alpha)
        .max(check(&SignalRegularizer::L1OverSK { k }, &u, alpha))
        .max(check(&GradL1OverL2, &ui, alpha)))
}

fn adjoint_case(rng: &mut ExperimentRng) -> Result<f64, HarnessError> {
    let (m, n) = (1 + rng.index(30), 1 + rng.index(30));
    let a = DenseOperator::new(rand_matrix(rng, m, n))?;
    let x = rand_vector(rng, n);
    let y = rand_vector(rng, m);
    let lhs = a.apply(&x)?.dot(&y);
    let rhs = x.dot(&a.apply_adjoint(&y)?);
    let mut err = (lhs - rhs).abs() / (x.norm() * y.norm());

    let (h, w) = (4 + rng.index(21), 4 + rng.index(21));
    let lines = 1 + rng.index(h.max(w));
    let op = RadialFourierOperator::radial(h, w, lines)?;
    let xi = rand_image(rng, h, w);
    let yk = op.apply(&rand_image(rng, h, w))?;
    let lhs = op.apply(&xi)?.inner(&yk);
    let rhs = xi.dot(&op.apply_adjoint(&yk)?);
    err = err.max((lhs - rhs).abs() / (xi.norm() * yk.norm()));

    let gy = GradientField::from_parts(
        h,
        w,
        rand_values(rng, h * w),
        rand_values(rng, h * w),
    )?;
    let lhs = grad(&xi).dot(&gy);
    let rhs = xi.dot(&grad_adjoint(&gy));
    Ok(err.max((lhs - rhs).abs() / (xi.norm() * gy.norm2())))
}

/// Compares `shrink` against the best of the scalar candidates
/// `{0, x − t, x + t}` of `t|z| + (z − x)²/2`.
fn shrink_case(rng: &mut ExperimentRng) -> Result<f64, HarnessError> {
    let n = 1 + rng.index(20);
    let x = rand_values(rng, n);
    let t = if rng.uniform() < 0.1 { 0.0 } else { log_uniform(rng, 1e-3, 10.0) };
    let z = shrink(&x, t)?;
    let obj = |zi: f64, xi: f64| t * zi.abs() + 0.5 * (zi - xi) * (zi - xi);
    let mut err: f64 = 0.0;
    for (&zi, &xi) in z.iter().zip(&x) {
        let best = [0.0, xi - t, xi + t]
            .into_iter()
            .min_by(|a, b| obj(*a, xi).total_cmp(&obj(*b, xi)))
            .expect("three candidates");
        err = err.max((zi - best).abs() / (1.0 + xi.abs()));
    }
    Ok(err)
}

fn woodbury_case(rng: &mut ExperimentRng) -> Result<f64, HarnessError> {
    let (m, n) = (1 + rng.index(15), 1 + rng.index(30));
    let mat = rand_matrix(rng, m, n);
    let kappa = 1.0 / log_uniform(rng, 0.1, 20.0);
    let lambda = log_uniform(rng, 1e-2, 1e2);
    let b = rand_vector(rng, n);
    let mut dense = mat.transpose() * &mat * lambda;
    for i in 0..n {
        dense[(i, i)] += 1.0 / kappa;
    }
    let expected = dense
        .lu()
        .solve(&b)
        .ok_or_else(|| HarnessError::Config("dense oracle matrix is singular".into()))?;
    let mut solver = WoodburySolver::new(&DenseOperator::new(mat)?, kappa, lambda)?;
    let got = solver.solve(&b);
    Ok((got - &expected).norm() / expected.norm())
}

/// Dense `λAᵀA + ρDᵀD + βI` on an 8×8 grid from an explicit unitary DFT
/// matrix and an explicit difference matrix, solved by LU.
fn spectral_case(rng: &mut ExperimentRng) -> Result<f64, HarnessError> {
    const S: usize = 8;
    const N: usize = S * S;
    let lines = 1 + rng.index(S);
    let rho = log_uniform(rng, 1e-2, 10.0);
    let beta = log_uniform(rng, 1e-2, 5.0);
    let lambda = log_uniform(rng, 1e-2, 1e2);
    let op = RadialFourierOperator::radial(S, S, lines)?;
    let b = rand_image(rng, S, S);

    let f = DMatrix::from_fn(N, N, |r, c| {
        let (k1, k2) = (r / S, r % S);
        let (i, j) = (c / S, c % S);
        let phase = -2.0 * PI * ((k1 * i + k2 * j) % S) as f64 / S as f64;
        Complex::new(phase.cos(), phase.sin()) / S as f64
    });
    let mut pf = f.clone();
    for r in 0..N {
        if !op.mask().get(r / S, r % S) {
            pf.row_mut(r).fill(Complex::new(0.0, 0.0));
        }
    }
    let ata = (f.adjoint() * pf).map(|z| z.re);

    let mut d = DMatrix::<f64>::zeros(2 * N, N);
    for i in 0..S {
        for j in 0..S {
            let p = i * S + j;
            d[(p, p)] -= 1.0;
            d[(p, i * S + (j + 1) % S)] += 1.0;
            d[(N + p, p)] -= 1.0;
            d[(N + p, ((i + 1) % S) * S + j)] += 1.0;
        }
    }
    let mut dense = ata * lambda + d.transpose() * &d * rho;
    for i in 0..N {
        dense[(i, i)] += beta;
    }
    let rhs = DVector::from_column_slice(b.as_slice());
    let expected = dense
        .lu()
        .solve(&rhs)
        .ok_or_else(|| HarnessError::Config("dense oracle matrix is singular".into()))?;
    let got = SpectralSolver::new(&op, rho, beta, lambda)?.solve(&b);
    let got = DVector::from_column_slice(got.as_slice());
    Ok((got - &expected).norm() / expected.norm())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suite_passes_on_a_few_cases() {
        let res = property_suite(20, 3).unwrap();
        assert_eq!(res.len(), 6);
        for p in &res {
            assert!(p.passed(), "{} failed: max error {}", p.name, p.max_error);
            assert_eq!(p.cases, 20);
        }
    }
}
