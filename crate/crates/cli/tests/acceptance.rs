//! Acceptance run: one PASS/FAIL line per criterion, nonzero exit when any
//! fails. Pass criterion numbers as arguments to run a subset, e.g.
//! `cargo test -p qrm-cli --test acceptance -- 1 3 4`.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use qrm::admm::{shrink_scalar, signal_kkt_residual, InnerSolver, SignalAdmm, Subproblem};
use qrm::datagen::{gen_gaussian_matrix, ExperimentRng};
use qrm::DenseVector;
use qrm_harness::commands::{self, RunOptions, Table, TableRun};
use qrm_harness::ini::Ini;
use qrm_harness::mri::{self, MriCondition, MriSettings};
use qrm_harness::theory::{self, TheorySettings};

fn configs_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn read_config(name: &str) -> String {
    std::fs::read_to_string(configs_dir().join(name)).expect("shipped config")
}

struct Timed<T> {
    value: T,
    secs: f64,
}

fn timed<T>(f: impl FnOnce() -> T) -> Timed<T> {
    let t = Instant::now();
    let value = f();
    Timed {
        value,
        secs: t.elapsed().as_secs_f64(),
    }
}

/// Benchmark runs shared between criteria, computed on first use.
struct Runs {
    scratch: tempfile::TempDir,
    jobs: usize,
    theory: Option<TheorySettings>,
    table2: Option<Timed<TableRun>>,
    table1: Option<Timed<TableRun>>,
    mri: Option<Vec<Timed<MriCondition>>>,
}

impl Runs {
    fn new() -> Self {
        Runs {
            scratch: tempfile::tempdir().expect("temp dir"),
            jobs: commands::default_jobs(),
            theory: None,
            table2: None,
            table1: None,
            mri: None,
        }
    }

    fn dir(&self, name: &str) -> PathBuf {
        self.scratch.path().join(name)
    }

    fn theory(&mut self) -> &TheorySettings {
        self.theory.get_or_insert_with(|| {
            let ini = Ini::parse(&read_config("theory.ini")).expect("theory.ini parses");
            TheorySettings::from_ini(&ini, &configs_dir()).expect("theory.ini is valid")
        })
    }

    fn table2(&mut self) -> &Timed<TableRun> {
        if self.table2.is_none() {
            let mut opts = RunOptions::new(configs_dir().join("table2.ini"), self.dir("table2"));
            opts.jobs = self.jobs;
            self.table2 = Some(timed(|| commands::bench_table(&opts, Table::Two).expect("table 2 run")));
        }
        self.table2.as_ref().unwrap()
    }

    /// Table 1 on m ∈ {250, 300, 360}.
    fn table1(&mut self) -> &Timed<TableRun> {
        if self.table1.is_none() {
            let text = read_config("table1.ini").replace("m = 250:10:360", "m = 250, 300, 360");
            assert!(text.contains("m = 250, 300, 360"), "table1.ini m list changed");
            let path = self.dir("table1_subset.ini");
            std::fs::write(&path, text).unwrap();
            let mut opts = RunOptions::new(path, self.dir("table1"));
            opts.jobs = self.jobs;
            self.table1 = Some(timed(|| commands::bench_table(&opts, Table::One).expect("table 1 run")));
        }
        self.table1.as_ref().unwrap()
    }

    /// The two graded MRI conditions, (10, 0.01) and (7, 0.05).
    fn mri(&mut self) -> &[Timed<MriCondition>] {
        if self.mri.is_none() {
            let ini = Ini::parse(&read_config("mri.ini")).unwrap();
            let settings = MriSettings::from_ini(&ini, &configs_dir()).unwrap();
            let truth = settings.load_phantom().unwrap();
            let runs = [(10, 0.01), (7, 0.05)]
                .into_iter()
                .map(|(l, s)| timed(|| mri::run_condition(&settings, &truth, l, s).expect("MRI run")))
                .collect();
            self.mri = Some(runs);
        }
        self.mri.as_deref().unwrap()
    }
}

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict {
        pass,
        detail: detail.into(),
    }
}

fn criterion_1(runs: &mut Runs) -> Verdict {
    let cases = runs.theory().cases.max(1000);
    let seed = runs.theory().signal.seed;
    let t = timed(|| theory::property_suite(cases, seed).expect("property suite"));
    let failures: usize = t.value.iter().map(|p| p.failures).sum();
    let names: Vec<String> = t
        .value
        .iter()
        .map(|p| format!("{} {}/{}", p.name, p.cases - p.failures, p.cases))
        .collect();
    verdict(
        failures == 0 && t.value.len() == 6 && t.secs < 120.0,
        format!("{}; {failures} failures; {:.1} s (limit 120 s)", names.join(", "), t.secs),
    )
}

/// Proximal gradient on the same subproblem, run until the iterate stops
/// moving.
fn prox_gradient_oracle(
    a: &DMatrix<f64>,
    f: &DVector<f64>,
    beta: f64,
    lambda: f64,
    c: &DVector<f64>,
    h: &DVector<f64>,
    w: f64,
) -> DVector<f64> {
    let ata = a.transpose() * a;
    let lip = beta + lambda * ata.symmetric_eigenvalues().max();
    let atf = a.transpose() * f;
    let mut u = DVector::zeros(a.ncols());
    for _ in 0..200_000 {
        let g = (&u - c) * beta - h + (&ata * &u - &atf) * lambda;
        let next = (&u - g / lip).map(|x| shrink_scalar(x, w / lip));
        let moved = (&next - &u).norm();
        u = next;
        if moved < 1e-16 {
            break;
        }
    }
    u
}

fn criterion_2(runs: &mut Runs) -> Verdict {
    let (beta, rho, lambda) = (1.0, 1.0, 1.0);
    let mut worst: f64 = 0.0;
    let mut oracle_kkt: f64 = 0.0;
    for inst in 0..20u64 {
        let mut rng = ExperimentRng::new(0xacce_0000 + inst);
        let a = gen_gaussian_matrix(5, 12, 0xacce_1000 + inst).unwrap();
        let f = DenseVector::from_fn(5, |_, _| rng.normal());
        let c = DenseVector::from_fn(12, |_, _| rng.normal());
        let h = DenseVector::from_fn(12, |_, _| 0.3 * rng.normal());
        let w = 0.1 + rng.uniform();
        let sub = Subproblem {
            center: &c,
            linear: &h,
            weight: w,
        };
        let mut admm = SignalAdmm::new(&a, &f, beta, rho, lambda, 1e-14, 200_000).unwrap();
        admm.reset(&c);
        let u = admm.solve(&sub).unwrap().u;
        let want = prox_gradient_oracle(a.matrix(), &f, beta, lambda, &c, &h, w);
        worst = worst.max((&u - &want).norm());
        oracle_kkt = oracle_kkt.max(signal_kkt_residual(&a, &f, lambda, beta, &sub, &u).unwrap());
    }
    let kkt = |run: &TableRun| run.cells.iter().map(|c| c.max_inner_kkt).fold(0.0, f64::max);
    let t2 = kkt(&runs.table2().value);
    let t1 = kkt(&runs.table1().value);
    let img = runs
        .mri()
        .iter()
        .flat_map(|c| [c.value.tv.max_inner_kkt, c.value.qrm.max_inner_kkt])
        .fold(0.0, f64::max);
    let pass = worst <= 1e-6 && oracle_kkt <= 1e-6 && t2 <= 1e-6 && t1 <= 1e-6 && img <= 1e-6;
    verdict(
        pass,
        format!(
            "oracle max |u - u_ref| = {worst:.2e} over 20 instances (tol 1e-6), KKT {oracle_kkt:.2e}; max inner KKT: table2 {t2:.2e}, table1 {t1:.2e}, MRI {img:.2e} (tol 1e-6)"
        ),
    )
}

fn criterion_3(runs: &mut Runs) -> Verdict {
    let t = timed(|| theory::norm_report(runs.theory()).expect("norm report"));
    let c1 = t.value.case1.flags();
    let c2 = t.value.case2.leading_increases();
    let started_right = t.value.case1.steps[0].au_minus_f_norm > 0.0 && t.value.case2.steps[0].au_minus_f_norm < 0.0;
    verdict(
        c1 == 0 && c2 >= 10 && started_right && t.secs < 30.0,
        format!(
            "case 1 flags = {c1} over {} steps; case 2 leading norm increases = {c2} (need >= 10); {:.1} s (limit 30 s)",
            t.value.case1.steps.len(),
            t.secs
        ),
    )
}

fn criterion_4(runs: &mut Runs) -> Verdict {
    let traces = theory::decay_traces(runs.theory()).expect("decay traces");
    let mut parts: Vec<String> = traces
        .iter()
        .map(|d| format!("{} {} increases/{} steps", d.label, d.increases, d.trace.len() - 1))
        .collect();
    let mut total: usize = traces.iter().map(|d| d.increases).sum();
    runs.table2();
    runs.table1();
    let (t2, t1) = (runs.table2.as_ref().unwrap(), runs.table1.as_ref().unwrap());
    for (name, run) in [("table2", &t2.value), ("table1", &t1.value)] {
        let n: usize = run
            .cells
            .iter()
            .filter(|c| c.row.starts_with("QRM-"))
            .map(|c| c.g_increases)
            .sum();
        parts.push(format!("{name} QRM runs {n} increases"));
        total += n;
    }
    verdict(total == 0 && traces.len() == 3, parts.join("; "))
}

fn means(run: &TableRun) -> BTreeMap<(String, usize), f64> {
    run.cells.iter().map(|c| ((c.row.clone(), c.m), c.mean_mse)).collect()
}

fn criterion_5(runs: &mut Runs) -> Verdict {
    let t = runs.table2();
    let k = t
        .value
        .methods
        .iter()
        .find_map(|m| m.label().strip_prefix("QRM-L1/SK(").map(str::to_string))
        .unwrap_or_default();
    let sk = format!("QRM-L1/SK({k}");
    let mse = means(&t.value);
    let mut ordered = true;
    let mut parts = Vec::new();
    for &m in &t.value.m_values {
        let (a, b, c) = (mse[&(sk.clone(), m)], mse[&("QRM-L1/L2".into(), m)], mse[&("L1".into(), m)]);
        ordered &= a < b && b < c;
        parts.push(format!("m={m}: SK {a:.3} / L1L2 {b:.3} / L1 {c:.3}"));
    }
    let at360 = mse.get(&(sk.clone(), 360)).copied().unwrap_or(f64::NAN);
    let band = (1.8..=3.0).contains(&at360);
    verdict(
        ordered && band && t.secs < 900.0,
        format!(
            "(a) ordering {}: {}; (b) QRM-L1/SK at m=360 = {at360:.3} in [1.8, 3.0]: {}; {:.0} s (limit 900 s)",
            if ordered { "holds" } else { "violated" },
            parts.join(", "),
            if band { "yes" } else { "no" },
            t.secs
        ),
    )
}

fn criterion_6(runs: &mut Runs) -> Verdict {
    let t = runs.table1();
    let mse = means(&t.value);
    let mut pass = t.secs < 1200.0;
    let mut parts = Vec::new();
    for &m in &t.value.m_values {
        let k10 = mse[&("QRM-L1/SK(K=10)".into(), m)];
        let l1 = mse[&("L1".into(), m)];
        for k in [100, 150] {
            let v = mse[&(format!("QRM-L1/SK(K={k})"), m)];
            let ok = v < k10 && v < l1;
            pass &= ok;
            parts.push(format!("m={m} K={k} {v:.3}{}", if ok { "" } else { " (!)" }));
        }
        parts.push(format!("m={m} K=10 {k10:.3} L1 {l1:.3}"));
    }
    verdict(pass, format!("{}; {:.0} s (limit 1200 s)", parts.join(", "), t.secs))
}

fn criterion_7(runs: &mut Runs) -> Verdict {
    let c = runs.mri();
    let (a, b) = (&c[0].value, &c[1].value);
    let band = a.qrm.re <= 0.05;
    let ratio = a.tv.re >= 2.0 * a.qrm.re;
    let low = b.qrm.re < b.tv.re;
    let slow = c.iter().map(|t| t.secs).fold(0.0, f64::max);
    verdict(
        band && ratio && low && slow < 600.0,
        format!(
            "(10, 0.01): QRM RE {:.2}% (need <= 5%), TV RE {:.2}% (need >= 2x QRM); (7, 0.05): QRM RE {:.2}% vs TV {:.2}% (need QRM < TV); slowest condition {slow:.0} s (limit 600 s)",
            100.0 * a.qrm.re,
            100.0 * a.tv.re,
            100.0 * b.qrm.re,
            100.0 * b.tv.re
        ),
    )
}

fn criterion_8(runs: &mut Runs) -> Verdict {
    let t = runs.table2();
    let mut checked = 0;
    let mut violations = 0;
    let mut zeros = 0;
    for r in &t.value.records {
        for o in &r.outcomes {
            zeros += usize::from(!o.nonzero);
            if let Some(th) = o.threshold {
                checked += 1;
                violations += usize::from(!(o.lambda > th));
            }
        }
    }
    verdict(
        violations == 0 && zeros == 0 && checked > 0,
        format!("{checked} quotient-model solves checked: {violations} with lambda <= 2M/||f||^2, {zeros} zero solutions"),
    )
}

fn files_of(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    for e in std::fs::read_dir(dir).unwrap() {
        let e = e.unwrap();
        out.insert(e.file_name().to_string_lossy().into_owned(), std::fs::read(e.path()).unwrap());
    }
    out
}

fn criterion_9(runs: &mut Runs) -> Verdict {
    let t2 = runs.dir("det_table2.ini");
    std::fs::write(&t2, read_config("table2.ini").replace("m = 240:60:360", "m = 240")).unwrap();
    let mri_cfg = runs.dir("det_mri.ini");
    let mri_text = read_config("mri.ini")
        .replace("size = 256", "size = 64")
        .replace("lines = 7, 10, 13", "lines = 13")
        .replace("sigma = 0.01, 0.05", "sigma = 0.01")
        .replace("k_max = 40", "k_max = 5");
    std::fs::write(&mri_cfg, mri_text).unwrap();

    type Bench = fn(&RunOptions) -> Result<(), qrm_harness::HarnessError>;
    let benches: [(&str, PathBuf, Bench); 4] = [
        ("bench-table2", t2, |o| commands::bench_table(o, Table::Two).map(drop)),
        ("bench-mri", mri_cfg, |o| commands::bench_mri(o).map(drop)),
        ("verify-theory", configs_dir().join("theory.ini"), |o| commands::verify_theory(o).map(drop)),
        ("recover-signal", configs_dir().join("signal.ini"), |o| commands::recover_signal(o).map(drop)),
    ];
    let mut pass = true;
    let mut parts = Vec::new();
    for (name, cfg, run) in benches {
        let mut outs = Vec::new();
        for (rep, jobs) in [(0, 1), (1, 2)] {
            let mut opts = RunOptions::new(&cfg, runs.dir(&format!("det_{name}_{rep}")));
            opts.jobs = jobs;
            opts.trials = Some(2);
            run(&opts).expect("benchmark run");
            outs.push(files_of(&opts.out_dir));
        }
        let csvs = outs[0].keys().filter(|k| k.ends_with(".csv")).count();
        let same = outs[0] == outs[1] && csvs > 0;
        pass &= same;
        parts.push(format!(
            "{name} {} files ({csvs} CSV) {}",
            outs[0].len(),
            if same { "identical" } else { "DIFFER" }
        ));
    }
    verdict(pass, format!("{} (runs with 1 and 2 workers)", parts.join(", ")))
}

fn main() -> ExitCode {
    let criteria: [(u8, &str, fn(&mut Runs) -> Verdict); 9] = [
        (1, "property suite", criterion_1),
        (2, "inner-solver oracle and KKT", criterion_2),
        (3, "norm monotonicity", criterion_3),
        (4, "objective decay", criterion_4),
        (5, "Table 2 ordering and band", criterion_5),
        (6, "Table 1 impact of K", criterion_6),
        (7, "Table 3 MRI bands", criterion_7),
        (8, "lambda threshold and nonzero solutions", criterion_8),
        (9, "determinism", criterion_9),
    ];
    let selected: Vec<u8> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut runs = Runs::new();
    let mut failed = Vec::new();
    for (id, name, check) in criteria {
        if !selected.is_empty() && !selected.contains(&id) {
            continue;
        }
        let t = timed(|| check(&mut runs));
        let v = t.value;
        println!(
            "[{}] criterion {id} ({name}): {} [{:.1} s]",
            if v.pass { "PASS" } else { "FAIL" },
            v.detail,
            t.secs
        );
        if !v.pass {
            failed.push(id);
        }
    }
    if failed.is_empty() {
        println!("acceptance: all selected criteria pass");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: failing criteria {failed:?}");
        ExitCode::FAILURE
    }
}
