//! Sparse signal recovery trials and the two signal tables.

use qrm::datagen::{add_noise, gen_gaussian_matrix, gen_sparse_signal, ExperimentRng};
use qrm::metrics::{mse, oracle_mse};
use qrm::{
    dca_solve, l1_solve, qrm_solve, theorem1_threshold, DenseVector, Problem,
    SignalProblem, SignalRegularizer, SolveResult, SolveStatus,
};
use rayon::prelude::*;

use crate::settings::{SignalMethod, SignalSettings};
use crate::HarnessError;

/// Seed mixing for the independent random streams of one trial.
pub fn derive_seed(base: u64, tag: u64) -> u64 {
    ExperimentRng::new(base ^ tag.rotate_left(40)).next_u64()
}

#[derive(Clone, Debug)]
pub struct SignalInstance {
    pub m: usize,
    pub trial: usize,
    pub problem: SignalProblem,
    pub u_true: DenseVector,
    pub support: Vec<usize>,
}

/// Trial `t` uses base seed `seed + t`. The sparse signal depends only on the
/// base seed; the matrix and noise streams also mix in `m`.
pub fn make_instance(
    settings: &SignalSettings,
    m: usize,
    trial: usize,
) -> Result<SignalInstance, HarnessError> {
    let base = settings.seed.wrapping_add(trial as u64);
    let (u_true, support) = gen_sparse_signal(settings.n, settings.s, derive_seed(base, 1))?;
    let a = gen_gaussian_matrix(m, settings.n, derive_seed(base, (2 << 20) | m as u64))?;
    let clean = a.matrix() * &u_true;
    let f = add_noise(&clean, settings.sigma, derive_seed(base, (3 << 20) | m as u64))?;
    Ok(SignalInstance {
        m,
        trial,
        problem: SignalProblem::new(a, f)?,
        u_true,
        support,
    })
}

#[derive(Clone, Debug)]
pub struct MethodOutcome {
    pub method: SignalMethod,
    pub mse: f64,
    pub lambda: f64,
    /// `2M/‖f‖₂²` for quotient methods.
    pub threshold: Option<f64>,
    pub nonzero: bool,
    pub status: SolveStatus,
    pub outer_iters: usize,
    pub inner_iters: usize,
    pub max_inner_kkt: f64,
    pub stationarity: Option<f64>,
    /// Steps `k → k+1` with `k ≥ 1` where `G` rose by more than `1e-9`
    /// relative.
    pub g_increases: usize,
}

pub fn objective_increases<U>(res: &SolveResult<U>, rel_tol: f64) -> usize {
    res.trace
        .windows(2)
        .skip(1)
        .filter(|w| w[1].objective > w[0].objective + rel_tol * w[0].objective.abs())
        .count()
}

fn outcome(
    method: SignalMethod,
    inst: &SignalInstance,
    res: &SolveResult<DenseVector>,
    lambda: f64,
    threshold: Option<f64>,
) -> Result<MethodOutcome, HarnessError> {
    Ok(MethodOutcome {
        method,
        mse: mse(&res.u_star, &inst.u_true)?,
        lambda,
        threshold,
        nonzero: res.u_star.iter().any(|v| *v != 0.0),
        status: res.status,
        outer_iters: res.trace.len() - 1,
        inner_iters: res.total_inner_iters(),
        max_inner_kkt: res.max_inner_kkt(),
        stationarity: res.stationarity,
        g_increases: objective_increases(res, 1e-9),
    })
}

/// Full solution of one method, for single-run commands.
pub fn solve_method(
    settings: &SignalSettings,
    inst: &SignalInstance,
    method: SignalMethod,
    l1_init: Option<&SolveResult<DenseVector>>,
) -> Result<SolveResult<DenseVector>, HarnessError> {
    let seed = settings.seed.wrapping_add(inst.trial as u64);
    let l1 = settings.method(&SignalMethod::L1)?;
    let l1_cfg = l1.solver_config(settings.n, seed);
    if method == SignalMethod::L1 {
        return Ok(l1_solve(&inst.problem, l1.lambda, l1.mu, &l1_cfg)?);
    }
    let ms = settings.method(&method)?;
    let owned;
    let init = match (ms.init_lambda, l1_init) {
        (Some(lam), _) => {
            owned = l1_solve(&inst.problem, lam, 1.0, &l1_cfg)?;
            &owned
        }
        (None, Some(r)) => r,
        (None, None) => {
            owned = l1_solve(&inst.problem, l1.lambda, l1.mu, &l1_cfg)?;
            &owned
        }
    };
    let cfg = ms.solver_config(method.k(settings.n), seed);
    Ok(match method {
        SignalMethod::Qrm(r) => qrm_solve(&inst.problem, &r, &cfg, &init.u_star)?,
        SignalMethod::Dca(r) => dca_solve(&inst.problem, &r, ms.mu, &cfg, &init.u_star)?,
        SignalMethod::L1 => unreachable!(),
    })
}

/// Runs every method on one instance. Quotient methods start from the L1
/// baseline solution.
pub fn run_methods(
    settings: &SignalSettings,
    inst: &SignalInstance,
    methods: &[SignalMethod],
) -> Result<Vec<MethodOutcome>, HarnessError> {
    let l1_settings = settings.method(&SignalMethod::L1)?;
    let l1 = solve_method(settings, inst, SignalMethod::L1, None)?;
    let mut out = Vec::with_capacity(methods.len());
    for &method in methods {
        let o = match method {
            SignalMethod::L1 => outcome(method, inst, &l1, l1_settings.lambda, None)?,
            SignalMethod::Qrm(r) | SignalMethod::Dca(r) => {
                let ms = settings.method(&method)?;
                let res = solve_method(settings, inst, method, Some(&l1))?;
                let t = theorem1_threshold(&inst.problem, r.kind())?;
                outcome(method, inst, &res, ms.lambda, Some(t))?
            }
        };
        out.push(o);
    }
    Ok(out)
}

#[derive(Clone, Debug)]
pub struct TrialRecord {
    pub m: usize,
    pub trial: usize,
    pub oracle: f64,
    pub f_norm_sq: f64,
    pub outcomes: Vec<MethodOutcome>,
}

pub fn run_trial(
    settings: &SignalSettings,
    methods: &[SignalMethod],
    m: usize,
    trial: usize,
) -> Result<TrialRecord, HarnessError> {
    let inst = make_instance(settings, m, trial)?;
    let oracle = oracle_mse(&inst.problem.a, &inst.support, settings.sigma)?;
    let outcomes = run_methods(settings, &inst, methods)?;
    Ok(TrialRecord {
        m,
        trial,
        oracle,
        f_norm_sq: inst.problem.data_norm().powi(2),
        outcomes,
    })
}

/// All `(m, trial)` pairs, dispatched over `jobs` workers. Results come back
/// in `(m, trial)` order regardless of scheduling.
pub fn run_bench(
    settings: &SignalSettings,
    methods: &[SignalMethod],
    jobs: usize,
) -> Result<Vec<TrialRecord>, HarnessError> {
    let tasks: Vec<(usize, usize)> = settings
        .m_values
        .iter()
        .flat_map(|&m| (0..settings.trials).map(move |t| (m, t)))
        .collect();
    let pool = crate::thread_pool(jobs)?;
    pool.install(|| {
        tasks
            .par_iter()
            .map(|&(m, t)| run_trial(settings, methods, m, t))
            .collect()
    })
}

/// Mean and standard error of the mean.
pub fn mean_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

#[derive(Clone, Debug, PartialEq)]
pub struct TableCell {
    pub row: String,
    pub m: usize,
    pub mean_mse: f64,
    pub std_err: f64,
    pub trials: usize,
    pub threshold_violations: usize,
    pub zero_solutions: usize,
    pub max_inner_kkt: f64,
    pub g_increases: usize,
}

/// Aggregates per-method cells plus an `oracle` row, keyed by method label.
pub fn aggregate(records: &[TrialRecord], methods: &[SignalMethod], m_values: &[usize]) -> Vec<TableCell> {
    let mut cells = Vec::new();
    for (mi, method) in methods.iter().enumerate() {
        for &m in m_values {
            let os: Vec<&MethodOutcome> = records
                .iter()
                .filter(|r| r.m == m)
                .map(|r| &r.outcomes[mi])
                .collect();
            let (mean, se) = mean_stderr(&os.iter().map(|o| o.mse).collect::<Vec<_>>());
            cells.push(TableCell {
                row: method.label(),
                m,
                mean_mse: mean,
                std_err: se,
                trials: os.len(),
                threshold_violations: os
                    .iter()
                    .filter(|o| o.threshold.is_some_and(|t| !(o.lambda > t)))
                    .count(),
                zero_solutions: os.iter().filter(|o| !o.nonzero).count(),
                max_inner_kkt: os.iter().map(|o| o.max_inner_kkt).fold(0.0, f64::max),
                g_increases: os.iter().map(|o| o.g_increases).sum(),
            });
        }
    }
    for &m in m_values {
        let xs: Vec<f64> = records.iter().filter(|r| r.m == m).map(|r| r.oracle).collect();
        let (mean, se) = mean_stderr(&xs);
        cells.push(TableCell {
            row: "oracle".into(),
            m,
            mean_mse: mean,
            std_err: se,
            trials: xs.len(),
            threshold_violations: 0,
            zero_solutions: 0,
            max_inner_kkt: 0.0,
            g_increases: 0,
        });
    }
    cells
}

pub fn table1_methods(settings: &SignalSettings) -> Vec<SignalMethod> {
    let mut v = vec![SignalMethod::L1];
    for &k in &settings.k_values {
        if k == settings.n {
            continue;
        }
        v.push(SignalMethod::Qrm(SignalRegularizer::L1OverSK { k }));
    }
    // the K = n row runs L1/L2
    v.push(SignalMethod::Qrm(SignalRegularizer::L1OverL2));
    v
}

pub fn table2_methods(settings: &SignalSettings) -> Vec<SignalMethod> {
    let k = settings.k_values[0];
    let sk = SignalRegularizer::L1OverSK { k };
    vec![
        SignalMethod::L1,
        SignalMethod::Dca(SignalRegularizer::L1OverL2),
        SignalMethod::Dca(sk),
        SignalMethod::Qrm(SignalRegularizer::L1OverL2),
        SignalMethod::Qrm(sk),
    ]
}
