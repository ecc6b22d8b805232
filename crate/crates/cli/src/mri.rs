//! Radial-line MRI reconstructions: TV baseline against the gradient
//! quotient model started from the TV solution.

use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use qrm::datagen::{add_noise_kspace, shepp_logan};
use qrm::io::{read_pgm, write_pgm, PgmFormat};
use qrm::metrics::{re_psnr, PSNR_CAP_DB};
use qrm::operators::{LinearOperator, RadialFourierOperator};
use qrm::{l1_solve, qrm_solve, GradL1OverL2, ImageGrid, ImageProblem, SolveResult, SolveStatus};
use rayon::prelude::*;

use crate::ini::Ini;
use crate::settings::{MethodSettings, SettingsError, EXPERIMENT_SECTION};
use crate::signal::derive_seed;
use crate::HarnessError;

#[derive(Clone, Debug, PartialEq)]
pub enum PhantomSource {
    SheppLogan,
    Pgm(PathBuf),
}

/// Convention under which `sigma` is read. `Orthonormal` adds noise of
/// standard deviation `sigma` to each component of the unitary-DFT data;
/// `Unnormalized` reads `sigma` against the unnormalized DFT, so the
/// unitary data receive `sigma/√(HW)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NoiseScale {
    Orthonormal,
    Unnormalized,
}

#[derive(Clone, Debug)]
pub struct MriSettings {
    pub size: usize,
    pub lines: Vec<usize>,
    pub sigmas: Vec<f64>,
    pub seed: u64,
    pub phantom: PhantomSource,
    pub noise_scale: NoiseScale,
    pub tv: MethodSettings,
    pub qrm: MethodSettings,
}

fn float_list(ini: &Ini, section: &str, key: &str) -> Result<Vec<f64>, SettingsError> {
    let raw = ini.raw(section, key).ok_or_else(|| crate::ini::IniError::MissingKey {
        section: section.into(),
        key: key.into(),
    })?;
    raw.split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| SettingsError::Invalid(format!("[{section}] {key}: bad number {s:?}")))
        })
        .collect()
}

impl MriSettings {
    /// `base_dir` resolves a relative phantom path.
    pub fn from_ini(ini: &Ini, base_dir: &Path) -> Result<Self, SettingsError> {
        Self::from_section(ini, EXPERIMENT_SECTION, base_dir)
    }

    /// As [`MriSettings::from_ini`] with the instance keys read from
    /// `section`.
    pub fn from_section(ini: &Ini, section: &str, base_dir: &Path) -> Result<Self, SettingsError> {
        let e = section;
        let phantom = match ini.raw(e, "phantom").unwrap_or("shepp_logan") {
            "shepp_logan" => PhantomSource::SheppLogan,
            path => PhantomSource::Pgm(base_dir.join(path)),
        };
        let noise_scale = match ini.raw(e, "noise_scale").unwrap_or("orthonormal") {
            "orthonormal" => NoiseScale::Orthonormal,
            "unnormalized" => NoiseScale::Unnormalized,
            other => {
                return Err(SettingsError::Invalid(format!(
                    "[{e}] noise_scale: expected orthonormal or unnormalized, got {other:?}"
                )))
            }
        };
        let s = MriSettings {
            size: ini.require(e, "size")?,
            lines: ini.require_list(e, "lines")?,
            sigmas: float_list(ini, e, "sigma")?,
            seed: ini.require(e, "seed")?,
            phantom,
            noise_scale,
            tv: MethodSettings::from_ini(ini, &["tv"])?,
            qrm: MethodSettings::from_ini(ini, &["qrm_grad"])?,
        };
        if s.sigmas.iter().any(|v| !(*v >= 0.0)) {
            return Err(SettingsError::Invalid("sigma values must be >= 0".into()));
        }
        Ok(s)
    }

    pub fn load_phantom(&self) -> Result<ImageGrid, HarnessError> {
        let img = match &self.phantom {
            PhantomSource::SheppLogan => shepp_logan(self.size, self.size)?,
            PhantomSource::Pgm(p) => read_pgm(File::open(p)?)?,
        };
        if img.shape() != (self.size, self.size) {
            return Err(HarnessError::Config(format!(
                "phantom is {}x{}, config size is {}",
                img.height(),
                img.width(),
                self.size
            )));
        }
        Ok(img)
    }
}

#[derive(Clone, Debug)]
pub struct Reconstruction {
    pub method: &'static str,
    pub re: f64,
    pub psnr: f64,
    pub status: SolveStatus,
    pub outer_iters: usize,
    pub inner_iters: usize,
    pub max_inner_kkt: f64,
    pub image: ImageGrid,
}

#[derive(Clone, Debug)]
pub struct MriCondition {
    pub lines: usize,
    pub sigma: f64,
    pub sampling_fraction: f64,
    pub tv: Reconstruction,
    pub qrm: Reconstruction,
}

fn reconstruction(
    method: &'static str,
    res: SolveResult<ImageGrid>,
    truth: &ImageGrid,
) -> Result<Reconstruction, HarnessError> {
    let (re, psnr) = re_psnr(&res.u_star, truth)?;
    Ok(Reconstruction {
        method,
        re,
        psnr,
        status: res.status,
        outer_iters: res.trace.len() - 1,
        inner_iters: res.total_inner_iters(),
        max_inner_kkt: res.max_inner_kkt(),
        image: res.u_star,
    })
}

pub fn condition_seed(seed: u64, lines: usize, sigma: f64) -> u64 {
    derive_seed(seed ^ sigma.to_bits(), (4 << 20) | lines as u64)
}

/// Noisy radial data of `truth` for one `(lines, sigma)` condition.
pub fn make_problem(
    settings: &MriSettings,
    truth: &ImageGrid,
    lines: usize,
    sigma: f64,
) -> Result<ImageProblem, HarnessError> {
    let (h, w) = truth.shape();
    let op = RadialFourierOperator::radial(h, w, lines)?;
    let clean = op.apply(truth)?;
    let std = match settings.noise_scale {
        NoiseScale::Orthonormal => sigma,
        NoiseScale::Unnormalized => sigma / ((h * w) as f64).sqrt(),
    };
    let f = add_noise_kspace(&clean, op.mask(), std, condition_seed(settings.seed, lines, sigma))?;
    Ok(ImageProblem::new(op, f)?)
}

/// Simulates noisy radial data for one condition and runs both methods.
pub fn run_condition(
    settings: &MriSettings,
    truth: &ImageGrid,
    lines: usize,
    sigma: f64,
) -> Result<MriCondition, HarnessError> {
    let problem = make_problem(settings, truth, lines, sigma)?;
    let fraction = problem.op.mask().fraction();
    let tv_cfg = settings.tv.solver_config(1, settings.seed);
    let tv = l1_solve(&problem, settings.tv.lambda, settings.tv.mu, &tv_cfg)?;
    let q_cfg = settings.qrm.solver_config(1, settings.seed);
    let q = qrm_solve(&problem, &GradL1OverL2, &q_cfg, &tv.u_star)?;
    Ok(MriCondition {
        lines,
        sigma,
        sampling_fraction: fraction,
        tv: reconstruction("TV", tv, truth)?,
        qrm: reconstruction("QRM-grad-L1/L2", q, truth)?,
    })
}

pub fn run_bench(
    settings: &MriSettings,
    truth: &ImageGrid,
    jobs: usize,
) -> Result<Vec<MriCondition>, HarnessError> {
    let tasks: Vec<(usize, f64)> = settings
        .lines
        .iter()
        .flat_map(|&l| settings.sigmas.iter().map(move |&s| (l, s)))
        .collect();
    crate::thread_pool(jobs)?.install(|| {
        tasks
            .par_iter()
            .map(|&(l, s)| run_condition(settings, truth, l, s))
            .collect()
    })
}

pub fn psnr_for_csv(p: f64) -> f64 {
    p.min(PSNR_CAP_DB)
}

fn abs_diff(a: &ImageGrid, b: &ImageGrid) -> ImageGrid {
    let (h, w) = a.shape();
    ImageGrid::from_fn(h, w, |i, j| (a.get(i, j) - b.get(i, j)).abs())
}

/// Writes `recon` (range `[0, 1]`) and `|recon − truth|` PGMs per method.
/// Difference maps of one condition share the scale `[0, d]` with `d` the
/// largest difference of either method. Returns the file names and `d`.
pub fn write_images(
    dir: &Path,
    cond: &MriCondition,
    truth: &ImageGrid,
) -> Result<(Vec<String>, f64), HarnessError> {
    let tag = format!("lines{}_sigma{}", cond.lines, cond.sigma);
    let diffs = [abs_diff(&cond.tv.image, truth), abs_diff(&cond.qrm.image, truth)];
    let dmax = diffs.iter().map(|d| d.max()).fold(0.0, f64::max).max(1e-12);
    let mut names = Vec::new();
    for (rec, diff) in [&cond.tv, &cond.qrm].into_iter().zip(&diffs) {
        let method = if rec.method == "TV" { "tv" } else { "qrm" };
        for (kind, img, hi) in [("recon", &rec.image, 1.0), ("diff", diff, dmax)] {
            let name = format!("{method}_{kind}_{tag}.pgm");
            let file = BufWriter::new(File::create(dir.join(&name))?);
            write_pgm(file, img, 0.0, hi, u16::MAX, PgmFormat::Binary)?;
            names.push(name);
        }
    }
    Ok((names, dmax))
}
