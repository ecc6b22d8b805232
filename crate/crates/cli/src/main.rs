use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use qrm_harness::commands::{self, RunOptions, Table, TableRun};
use qrm_harness::HarnessError;

/// Quotient regularization experiments: sparse signal recovery, radial MRI
/// reconstruction, and numerical checks of the gradient flow.
#[derive(Parser)]
#[command(name = "qrm", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Recover one sparse signal (or one trial set) with a single method.
    RecoverSignal(Common),
    /// Reconstruct one phantom from radial Fourier samples.
    RecoverImage(Common),
    /// Mean MSE over (method, m) for several K.
    BenchTable1(Common),
    /// Mean MSE over (method, m) for baseline, DCA and QRM.
    BenchTable2(Common),
    /// RE/PSNR of TV and QRM over line counts and noise levels.
    BenchMri(Common),
    /// Objective decay, norm monotonicity and the property suite.
    VerifyTheory(Common),
}

#[derive(Args)]
struct Common {
    /// INI config file.
    #[arg(long)]
    config: PathBuf,
    /// Overrides `[experiment] seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides `[experiment] trials`.
    #[arg(long)]
    trials: Option<usize>,
    /// Worker threads; defaults to the number of hardware threads.
    #[arg(long)]
    jobs: Option<usize>,
    #[arg(long, default_value = "out")]
    out_dir: PathBuf,
}

impl Common {
    fn options(&self) -> RunOptions {
        RunOptions {
            config: self.config.clone(),
            seed: self.seed,
            trials: self.trials,
            jobs: self.jobs.unwrap_or_else(commands::default_jobs),
            out_dir: self.out_dir.clone(),
        }
    }
}

fn print_table(run: &TableRun) {
    print!("{:<22}", "method");
    for m in &run.m_values {
        print!(" {:>18}", format!("m={m}"));
    }
    println!();
    let mut rows: Vec<String> = run.methods.iter().map(|m| m.label()).collect();
    rows.push("oracle".into());
    for row in rows {
        print!("{row:<22}");
        for &m in &run.m_values {
            match run.cell(&row, m) {
                Some(c) => print!(" {:>18}", format!("{:.3} ± {:.3}", c.mean_mse, c.std_err)),
                None => print!(" {:>18}", "-"),
            }
        }
        println!();
    }
}

fn run(cli: Cli) -> Result<(), HarnessError> {
    match cli.command {
        Command::RecoverSignal(c) => {
            let r = commands::recover_signal(&c.options())?;
            for t in &r.trials {
                println!(
                    "{} m={} trial={} mse={:.4} oracle={:.4} status={} outer={}",
                    r.method.label(),
                    r.m,
                    t.trial,
                    t.mse,
                    t.oracle_mse,
                    t.result.status.as_str(),
                    t.result.trace.len() - 1
                );
            }
        }
        Command::RecoverImage(c) => {
            let r = commands::recover_image(&c.options())?;
            println!(
                "{} lines={} sigma={} RE={:.2}% PSNR={:.2} status={}",
                r.method,
                r.lines,
                r.sigma,
                100.0 * r.re,
                r.psnr,
                r.result.status.as_str()
            );
        }
        Command::BenchTable1(c) => print_table(&commands::bench_table(&c.options(), Table::One)?),
        Command::BenchTable2(c) => print_table(&commands::bench_table(&c.options(), Table::Two)?),
        Command::BenchMri(c) => {
            println!("{:>5} {:>6} {:>16} {:>16}", "lines", "sigma", "TV RE/PSNR", "QRM RE/PSNR");
            for cond in commands::bench_mri(&c.options())? {
                println!(
                    "{:>5} {:>6} {:>16} {:>16}",
                    cond.lines,
                    cond.sigma,
                    format!("{:.2}%/{:.2}", 100.0 * cond.tv.re, cond.tv.psnr),
                    format!("{:.2}%/{:.2}", 100.0 * cond.qrm.re, cond.qrm.psnr)
                );
            }
        }
        Command::VerifyTheory(c) => {
            let r = commands::verify_theory(&c.options())?;
            for d in &r.decay {
                println!(
                    "decay {:<18} iterations={} objective increases after k=1: {}",
                    d.label,
                    d.trace.len() - 1,
                    d.increases
                );
            }
            println!(
                "norm case1 flags={} | case2 leading increases={}",
                r.norm.case1.flags(),
                r.norm.case2.leading_increases()
            );
            for p in &r.properties {
                println!(
                    "property {:<22} {}/{} passed (max error {:.2e}, tol {:.0e})",
                    p.name,
                    p.cases - p.failures,
                    p.cases,
                    p.max_error,
                    p.tolerance
                );
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
