//! Subcommands. Each reads one config file, applies the command-line
//! overrides, writes its CSV/PGM/PBM outputs under `out_dir` and returns the
//! computed results for printing or inspection.

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use qrm::io::{write_pbm, write_pgm, PgmFormat, TRACE_HEADER};
use qrm::metrics::{mse, oracle_mse, re_psnr};
use qrm::operators::SamplingMask;
use qrm::{
    l1_solve, qrm_solve, theorem1_threshold, GradL1OverL2, ImageGrid, OuterLoopRecord,
    QuotientRegularizer, SolveResult,
};

use crate::ini::Ini;
use crate::mri::{self, make_problem, psnr_for_csv, MriCondition, MriSettings};
use crate::report::{fmt_f64, write_csv, RunStamp};
use crate::settings::{SettingsError, SignalMethod, SignalSettings, EXPERIMENT_SECTION};
use crate::signal::{self, make_instance, solve_method, TableCell, TrialRecord};
use crate::theory::{self, DecayTrace, PropertyOutcome, TheorySettings, IMAGE_SECTION};
use crate::HarnessError;

#[derive(Clone, Debug)]
pub struct RunOptions {
    pub config: PathBuf,
    pub seed: Option<u64>,
    pub trials: Option<usize>,
    pub jobs: usize,
    pub out_dir: PathBuf,
}

impl RunOptions {
    pub fn new(config: impl Into<PathBuf>, out_dir: impl Into<PathBuf>) -> Self {
        RunOptions {
            config: config.into(),
            seed: None,
            trials: None,
            jobs: default_jobs(),
            out_dir: out_dir.into(),
        }
    }
}

pub fn default_jobs() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

/// A parsed config with overrides applied.
#[derive(Clone, Debug)]
pub struct LoadedConfig {
    pub ini: Ini,
    pub stamp: RunStamp,
    /// Directory of the config file, for relative paths inside it.
    pub base_dir: PathBuf,
}

/// The stamp hashes the config text followed by one `--flag=value` line per
/// override, so overridden runs never share a hash with the plain file.
pub fn load_config(opts: &RunOptions) -> Result<LoadedConfig, HarnessError> {
    let path = &opts.config;
    let text = fs::read_to_string(path)
        .map_err(|e| HarnessError::Config(format!("cannot read config {}: {e}", path.display())))?;
    let mut ini = Ini::parse(&text)
        .map_err(|e| HarnessError::Config(format!("{}: {e}", path.display())))?;
    let mut hashed = text.clone();
    if let Some(seed) = opts.seed {
        for section in [EXPERIMENT_SECTION, IMAGE_SECTION] {
            if ini.has_section(section) {
                ini.set(section, "seed", seed.to_string());
            }
        }
        hashed.push_str(&format!("\n--seed={seed}\n"));
    }
    if let Some(trials) = opts.trials {
        ini.set(EXPERIMENT_SECTION, "trials", trials.to_string());
        hashed.push_str(&format!("\n--trials={trials}\n"));
    }
    let seed = ini
        .require::<u64>(EXPERIMENT_SECTION, "seed")
        .map_err(|e| HarnessError::Config(format!("{}: {e}", path.display())))?;
    fs::create_dir_all(&opts.out_dir)?;
    Ok(LoadedConfig {
        ini,
        stamp: RunStamp::new(&hashed, seed),
        base_dir: path.parent().map(Path::to_path_buf).unwrap_or_default(),
    })
}

fn config_error(opts: &RunOptions, e: SettingsError) -> HarnessError {
    HarnessError::Config(format!("{}: {e}", opts.config.display()))
}

fn trace_rows(trace: &[OuterLoopRecord]) -> Vec<Vec<String>> {
    trace
        .iter()
        .map(|r| {
            vec![
                r.k.to_string(),
                fmt_f64(r.objective),
                fmt_f64(r.r),
                fmt_f64(r.fidelity),
                fmt_f64(r.u_norm),
                fmt_f64(r.au_minus_f_norm),
                fmt_f64(r.rel_change),
                r.inner_iters.to_string(),
            ]
        })
        .collect()
}

fn write_trace(path: &Path, stamp: &RunStamp, trace: &[OuterLoopRecord]) -> Result<(), HarnessError> {
    let header: Vec<&str> = TRACE_HEADER.split(',').collect();
    write_csv(path, stamp, &header, &trace_rows(trace))
}

fn opt_f64(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_default()
}

fn warn_threshold(label: &str, lambda: f64, threshold: f64) {
    if !(lambda > threshold) {
        eprintln!(
            "warning: {label}: lambda = {lambda} does not exceed 2M/||f||^2 = {threshold}; \
             the zero vector may be a global minimizer"
        );
    }
}

#[derive(Clone, Debug)]
pub struct SignalTrial {
    pub trial: usize,
    pub mse: f64,
    pub oracle_mse: f64,
    pub threshold: Option<f64>,
    pub result: SolveResult<qrm::DenseVector>,
}

#[derive(Clone, Debug)]
pub struct SignalRun {
    pub method: SignalMethod,
    pub m: usize,
    pub lambda: f64,
    pub trials: Vec<SignalTrial>,
}

/// `[experiment] method` names the solver (`l1`, `qrm_l1l2`, `qrm_sk`,
/// `dca_l1l2`, `dca_sk`); the first `m` and `K` values are used. Writes
/// `solution.csv` and `trace.csv` for the first trial and one
/// `metrics.csv` row per trial.
pub fn recover_signal(opts: &RunOptions) -> Result<SignalRun, HarnessError> {
    let cfg = load_config(opts)?;
    let settings = SignalSettings::from_ini(&cfg.ini).map_err(|e| config_error(opts, e))?;
    let name = cfg.ini.raw(EXPERIMENT_SECTION, "method").unwrap_or("qrm_sk");
    let method = SignalMethod::parse(name, settings.k_values[0])
        .map_err(|e| HarnessError::Config(format!("[{EXPERIMENT_SECTION}] method: {e}")))?;
    let lambda = settings.method(&method)?.lambda;
    let m = settings.m_values[0];

    let mut trials = Vec::with_capacity(settings.trials);
    for t in 0..settings.trials {
        let inst = make_instance(&settings, m, t)?;
        let result = solve_method(&settings, &inst, method, None)?;
        let threshold = match method {
            SignalMethod::Qrm(r) | SignalMethod::Dca(r) => {
                let th = theorem1_threshold(&inst.problem, r.kind())?;
                warn_threshold(&method.label(), lambda, th);
                Some(th)
            }
            SignalMethod::L1 => None,
        };
        if t == 0 {
            let rows: Vec<Vec<String>> = result
                .u_star
                .iter()
                .zip(inst.u_true.iter())
                .enumerate()
                .map(|(i, (u, v))| vec![i.to_string(), fmt_f64(*u), fmt_f64(*v)])
                .collect();
            write_csv(
                opts.out_dir.join("solution.csv"),
                &cfg.stamp,
                &["index", "u_star", "u_true"],
                &rows,
            )?;
            write_trace(&opts.out_dir.join("trace.csv"), &cfg.stamp, &result.trace)?;
        }
        trials.push(SignalTrial {
            trial: t,
            mse: mse(&result.u_star, &inst.u_true)?,
            oracle_mse: oracle_mse(&inst.problem.a, &inst.support, settings.sigma)?,
            threshold,
            result,
        });
    }

    let rows: Vec<Vec<String>> = trials
        .iter()
        .map(|t| {
            vec![
                method.label(),
                m.to_string(),
                t.trial.to_string(),
                fmt_f64(t.mse),
                fmt_f64(t.oracle_mse),
                fmt_f64(lambda),
                opt_f64(t.threshold),
                t.result.status.as_str().into(),
                (t.result.trace.len() - 1).to_string(),
                t.result.total_inner_iters().to_string(),
                fmt_f64(t.result.max_inner_kkt()),
                opt_f64(t.result.stationarity),
            ]
        })
        .collect();
    write_csv(
        opts.out_dir.join("metrics.csv"),
        &cfg.stamp,
        &[
            "method",
            "m",
            "trial",
            "mse",
            "oracle_mse",
            "lambda",
            "threshold",
            "status",
            "outer_iters",
            "inner_iters",
            "max_inner_kkt",
            "stationarity",
        ],
        &rows,
    )?;
    Ok(SignalRun {
        method,
        m,
        lambda,
        trials,
    })
}

#[derive(Clone, Debug)]
pub struct ImageRun {
    pub method: &'static str,
    pub lines: usize,
    pub sigma: f64,
    pub re: f64,
    pub psnr: f64,
    pub result: SolveResult<ImageGrid>,
}

fn write_image(path: &Path, img: &ImageGrid, hi: f64) -> Result<(), HarnessError> {
    let file = BufWriter::new(File::create(path)?);
    write_pgm(file, img, 0.0, hi, u16::MAX, PgmFormat::Binary)?;
    Ok(())
}

fn write_mask(path: &Path, mask: &SamplingMask) -> Result<(), HarnessError> {
    write_pbm(BufWriter::new(File::create(path)?), mask)?;
    Ok(())
}

/// `[experiment] method` is `qrm` (default, started from TV) or `tv`; the
/// first `lines` and `sigma` values are used.
pub fn recover_image(opts: &RunOptions) -> Result<ImageRun, HarnessError> {
    let cfg = load_config(opts)?;
    let settings = MriSettings::from_ini(&cfg.ini, &cfg.base_dir).map_err(|e| config_error(opts, e))?;
    let method = match cfg.ini.raw(EXPERIMENT_SECTION, "method").unwrap_or("qrm") {
        "qrm" => "QRM-grad-L1/L2",
        "tv" => "TV",
        other => {
            return Err(HarnessError::Config(format!(
                "[{EXPERIMENT_SECTION}] method: expected qrm or tv, got {other:?}"
            )))
        }
    };
    let truth = settings.load_phantom()?;
    let (lines, sigma) = (settings.lines[0], settings.sigmas[0]);
    let problem = make_problem(&settings, &truth, lines, sigma)?;
    let tv_cfg = settings.tv.solver_config(1, settings.seed);
    let tv = l1_solve(&problem, settings.tv.lambda, settings.tv.mu, &tv_cfg)?;
    let result = if method == "TV" {
        tv
    } else {
        let th = theorem1_threshold(&problem, QuotientRegularizer::GradL1OverL2)?;
        warn_threshold(method, settings.qrm.lambda, th);
        qrm_solve(&problem, &GradL1OverL2, &settings.qrm.solver_config(1, settings.seed), &tv.u_star)?
    };
    let (re, psnr) = re_psnr(&result.u_star, &truth)?;

    let (h, w) = truth.shape();
    let diff = ImageGrid::from_fn(h, w, |i, j| (result.u_star.get(i, j) - truth.get(i, j)).abs());
    write_image(&opts.out_dir.join("truth.pgm"), &truth, 1.0)?;
    write_image(&opts.out_dir.join("recon.pgm"), &result.u_star, 1.0)?;
    write_image(&opts.out_dir.join("diff.pgm"), &diff, diff.max().max(1e-12))?;
    write_mask(&opts.out_dir.join("mask.pbm"), problem.op.mask())?;
    write_trace(&opts.out_dir.join("trace.csv"), &cfg.stamp, &result.trace)?;
    write_csv(
        opts.out_dir.join("metrics.csv"),
        &cfg.stamp,
        &["method", "lines", "sigma", "sampling_fraction", "re", "psnr", "status", "outer_iters", "inner_iters", "max_inner_kkt"],
        &[vec![
            method.into(),
            lines.to_string(),
            fmt_f64(sigma),
            fmt_f64(problem.op.mask().fraction()),
            fmt_f64(re),
            fmt_f64(psnr_for_csv(psnr)),
            result.status.as_str().into(),
            (result.trace.len() - 1).to_string(),
            result.total_inner_iters().to_string(),
            fmt_f64(result.max_inner_kkt()),
        ]],
    )?;
    Ok(ImageRun {
        method,
        lines,
        sigma,
        re,
        psnr,
        result,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Table {
    /// Impact of `K`: baseline, `L1/S_K` for each `K < n`, and `L1/L2`.
    One,
    /// Baseline, DCA and QRM for both signal regularizers.
    Two,
}

#[derive(Clone, Debug)]
pub struct TableRun {
    pub methods: Vec<SignalMethod>,
    pub m_values: Vec<usize>,
    pub records: Vec<TrialRecord>,
    pub cells: Vec<TableCell>,
}

impl TableRun {
    pub fn cell(&self, row: &str, m: usize) -> Option<&TableCell> {
        self.cells.iter().find(|c| c.row == row && c.m == m)
    }
}

/// Writes `table{1,2}.csv` (one row per method and `m`, with the standard
/// error) and `table{1,2}_trials.csv` (every method on every trial).
pub fn bench_table(opts: &RunOptions, table: Table) -> Result<TableRun, HarnessError> {
    let cfg = load_config(opts)?;
    let settings = SignalSettings::from_ini(&cfg.ini).map_err(|e| config_error(opts, e))?;
    let methods = match table {
        Table::One => signal::table1_methods(&settings),
        Table::Two => signal::table2_methods(&settings),
    };
    let records = signal::run_bench(&settings, &methods, opts.jobs)?;
    let cells = signal::aggregate(&records, &methods, &settings.m_values);
    for c in &cells {
        if c.threshold_violations > 0 {
            eprintln!(
                "warning: {} m={}: lambda does not exceed 2M/||f||^2 on {} of {} trials",
                c.row, c.m, c.threshold_violations, c.trials
            );
        }
    }
    let stem = match table {
        Table::One => "table1",
        Table::Two => "table2",
    };
    let rows: Vec<Vec<String>> = cells
        .iter()
        .map(|c| {
            vec![
                c.row.clone(),
                c.m.to_string(),
                fmt_f64(c.mean_mse),
                fmt_f64(c.std_err),
                c.trials.to_string(),
                c.threshold_violations.to_string(),
                c.zero_solutions.to_string(),
                fmt_f64(c.max_inner_kkt),
                c.g_increases.to_string(),
            ]
        })
        .collect();
    write_csv(
        opts.out_dir.join(format!("{stem}.csv")),
        &cfg.stamp,
        &[
            "method",
            "m",
            "mean_mse",
            "std_err",
            "trials",
            "threshold_violations",
            "zero_solutions",
            "max_inner_kkt",
            "g_increases",
        ],
        &rows,
    )?;
    let mut rows = Vec::new();
    for r in &records {
        for o in &r.outcomes {
            rows.push(vec![
                o.method.label(),
                r.m.to_string(),
                r.trial.to_string(),
                fmt_f64(o.mse),
                fmt_f64(r.oracle),
                fmt_f64(o.lambda),
                opt_f64(o.threshold),
                fmt_f64(r.f_norm_sq),
                o.nonzero.to_string(),
                o.status.as_str().into(),
                o.outer_iters.to_string(),
                o.inner_iters.to_string(),
                fmt_f64(o.max_inner_kkt),
                opt_f64(o.stationarity),
                o.g_increases.to_string(),
            ]);
        }
    }
    write_csv(
        opts.out_dir.join(format!("{stem}_trials.csv")),
        &cfg.stamp,
        &[
            "method",
            "m",
            "trial",
            "mse",
            "oracle_mse",
            "lambda",
            "threshold",
            "f_norm_sq",
            "nonzero",
            "status",
            "outer_iters",
            "inner_iters",
            "max_inner_kkt",
            "stationarity",
            "g_increases",
        ],
        &rows,
    )?;
    Ok(TableRun {
        methods,
        m_values: settings.m_values.clone(),
        records,
        cells,
    })
}

/// Writes `mri.csv`, reconstruction and difference PGMs per method and
/// condition, and one PBM mask per line count.
pub fn bench_mri(opts: &RunOptions) -> Result<Vec<MriCondition>, HarnessError> {
    let cfg = load_config(opts)?;
    let settings = MriSettings::from_ini(&cfg.ini, &cfg.base_dir).map_err(|e| config_error(opts, e))?;
    let truth = settings.load_phantom()?;
    let conditions = mri::run_bench(&settings, &truth, opts.jobs)?;
    let (h, w) = truth.shape();
    for &lines in &settings.lines {
        let mask = SamplingMask::radial(h, w, lines)?;
        write_mask(&opts.out_dir.join(format!("mask_lines{lines}.pbm")), &mask)?;
    }
    let mut rows = Vec::new();
    for c in &conditions {
        mri::write_images(&opts.out_dir, c, &truth)?;
        for rec in [&c.tv, &c.qrm] {
            rows.push(vec![
                c.lines.to_string(),
                fmt_f64(c.sigma),
                fmt_f64(c.sampling_fraction),
                rec.method.into(),
                fmt_f64(rec.re),
                fmt_f64(psnr_for_csv(rec.psnr)),
                rec.status.as_str().into(),
                rec.outer_iters.to_string(),
                rec.inner_iters.to_string(),
                fmt_f64(rec.max_inner_kkt),
            ]);
        }
    }
    write_csv(
        opts.out_dir.join("mri.csv"),
        &cfg.stamp,
        &["lines", "sigma", "sampling_fraction", "method", "re", "psnr", "status", "outer_iters", "inner_iters", "max_inner_kkt"],
        &rows,
    )?;
    Ok(conditions)
}

#[derive(Clone, Debug)]
pub struct TheoryRun {
    pub decay: Vec<DecayTrace>,
    pub norm: qrm::flow::NormMonotonicityReport,
    pub properties: Vec<PropertyOutcome>,
}

/// Writes one `decay_*.csv` trace per regularizer, `norm_monotonicity.csv`
/// with both cases, and `properties.csv` with pass counts.
pub fn verify_theory(opts: &RunOptions) -> Result<TheoryRun, HarnessError> {
    let cfg = load_config(opts)?;
    let settings = TheorySettings::from_ini(&cfg.ini, &cfg.base_dir).map_err(|e| config_error(opts, e))?;
    let decay = theory::decay_traces(&settings)?;
    for d in &decay {
        write_trace(&opts.out_dir.join(format!("{}.csv", d.file_stem)), &cfg.stamp, &d.trace)?;
    }
    let norm = theory::norm_report(&settings)?;
    let mut rows = Vec::new();
    for (name, case) in [("case1", &norm.case1), ("case2", &norm.case2)] {
        for s in &case.steps {
            rows.push(vec![
                name.into(),
                s.k.to_string(),
                fmt_f64(s.u_norm),
                s.delta_sign.to_string(),
                fmt_f64(s.au_minus_f_norm),
                s.flagged.to_string(),
            ]);
        }
    }
    write_csv(
        opts.out_dir.join("norm_monotonicity.csv"),
        &cfg.stamp,
        &["case", "k", "u_norm", "delta_sign", "Au_minus_f_norm", "flagged"],
        &rows,
    )?;
    let properties = theory::property_suite(settings.cases, settings.signal.seed)?;
    let rows: Vec<Vec<String>> = properties
        .iter()
        .map(|p| {
            vec![
                p.name.into(),
                p.cases.to_string(),
                p.failures.to_string(),
                fmt_f64(p.max_error),
                fmt_f64(p.tolerance),
            ]
        })
        .collect();
    write_csv(
        opts.out_dir.join("properties.csv"),
        &cfg.stamp,
        &["property", "cases", "failures", "max_error", "tolerance"],
        &rows,
    )?;
    Ok(TheoryRun {
        decay,
        norm,
        properties,
    })
}
