//! Typed views of experiment config files.

use qrm::{QrmError, SignalRegularizer, SolverConfig};

use crate::ini::{Ini, IniError};

/// Section holding defaults shared by all methods.
pub const SOLVER_SECTION: &str = "solver";

/// Per-method solver parameters. `lambda` must appear in the method's own
/// section chain; the rest fall back to `[solver]` and then to built-in
/// defaults.
#[derive(Clone, Debug, PartialEq)]
pub struct MethodSettings {
    pub lambda: f64,
    pub mu: f64,
    pub beta: f64,
    pub rho: f64,
    pub eps: f64,
    pub k_max: usize,
    pub j_max: usize,
    /// `λ` of the `μ = 1` L1 solve used as the starting point; `None`
    /// starts from the L1 baseline solution.
    pub init_lambda: Option<f64>,
}

impl MethodSettings {
    /// `chain` lists sections from most to least specific, e.g.
    /// `["qrm_sk_10", "qrm_sk"]`; `[solver]` is appended.
    pub fn from_ini(ini: &Ini, chain: &[&str]) -> Result<Self, IniError> {
        let primary = chain[0];
        let lambda = match ini.get_inherited(chain, "lambda")? {
            Some(v) => v,
            None => {
                return Err(IniError::MissingKey {
                    section: chain.last().copied().unwrap_or(primary).to_string(),
                    key: "lambda".into(),
                })
            }
        };
        let mut full: Vec<&str> = chain.to_vec();
        full.push(SOLVER_SECTION);
        let d = SolverConfig::default();
        Ok(MethodSettings {
            lambda,
            mu: ini.get_inherited(&full, "mu")?.unwrap_or(1.0),
            beta: ini.get_inherited(&full, "beta")?.unwrap_or(d.beta),
            rho: ini.get_inherited(&full, "rho")?.unwrap_or(d.rho),
            eps: ini.get_inherited(&full, "eps")?.unwrap_or(d.eps),
            k_max: ini.get_inherited(&full, "k_max")?.unwrap_or(d.k_max),
            j_max: ini.get_inherited(&full, "j_max")?.unwrap_or(d.j_max),
            init_lambda: ini.get_inherited(chain, "init_lambda")?,
        })
    }

    pub fn solver_config(&self, k: usize, seed: u64) -> SolverConfig {
        SolverConfig {
            beta: self.beta,
            rho: self.rho,
            lambda: self.lambda,
            k,
            eps: self.eps,
            k_max: self.k_max,
            j_max: self.j_max,
            seed,
        }
    }
}

#[derive(Debug)]
pub enum SettingsError {
    Ini(IniError),
    Invalid(String),
}

impl std::fmt::Display for SettingsError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SettingsError::Ini(e) => e.fmt(f),
            SettingsError::Invalid(m) => f.write_str(m),
        }
    }
}

impl std::error::Error for SettingsError {}

impl From<IniError> for SettingsError {
    fn from(e: IniError) -> Self {
        SettingsError::Ini(e)
    }
}

impl From<QrmError> for SettingsError {
    fn from(e: QrmError) -> Self {
        SettingsError::Invalid(e.to_string())
    }
}

/// Signal-recovery solvers, named as in config sections.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SignalMethod {
    L1,
    Qrm(SignalRegularizer),
    Dca(SignalRegularizer),
}

impl SignalMethod {
    pub fn label(&self) -> String {
        fn reg(r: &SignalRegularizer) -> String {
            match r {
                SignalRegularizer::L1OverL2 => "L1/L2".into(),
                SignalRegularizer::L1OverSK { k } => format!("L1/SK(K={k})"),
            }
        }
        match self {
            SignalMethod::L1 => "L1".into(),
            SignalMethod::Qrm(r) => format!("QRM-{}", reg(r)),
            SignalMethod::Dca(r) => format!("DCA-{}", reg(r)),
        }
    }

    /// Config sections that parameterize this method, most specific first.
    pub fn sections(&self) -> Vec<String> {
        match self {
            SignalMethod::L1 => vec!["l1".into()],
            SignalMethod::Qrm(SignalRegularizer::L1OverL2) => vec!["qrm_l1l2".into()],
            SignalMethod::Qrm(SignalRegularizer::L1OverSK { k }) => {
                vec![format!("qrm_sk_{k}"), "qrm_sk".into()]
            }
            SignalMethod::Dca(SignalRegularizer::L1OverL2) => vec!["dca_l1l2".into()],
            SignalMethod::Dca(SignalRegularizer::L1OverSK { k }) => {
                vec![format!("dca_sk_{k}"), "dca_sk".into()]
            }
        }
    }

    pub fn k(&self, n: usize) -> usize {
        match self {
            SignalMethod::Qrm(SignalRegularizer::L1OverSK { k })
            | SignalMethod::Dca(SignalRegularizer::L1OverSK { k }) => *k,
            _ => n,
        }
    }

    /// Parses `l1`, `qrm_l1l2`, `qrm_sk`, `dca_l1l2`, `dca_sk`; the SK
    /// variants take `k`.
    pub fn parse(name: &str, k: usize) -> Result<Self, String> {
        let sk = SignalRegularizer::l1_over_sk(k).map_err(|e| e.to_string());
        Ok(match name {
            "l1" => SignalMethod::L1,
            "qrm_l1l2" => SignalMethod::Qrm(SignalRegularizer::L1OverL2),
            "qrm_sk" => SignalMethod::Qrm(sk?),
            "dca_l1l2" => SignalMethod::Dca(SignalRegularizer::L1OverL2),
            "dca_sk" => SignalMethod::Dca(sk?),
            other => return Err(format!("unknown method {other:?}")),
        })
    }
}

/// Instance generation and per-method parameters for the signal benches.
#[derive(Clone, Debug)]
pub struct SignalSettings {
    pub n: usize,
    pub s: usize,
    pub sigma: f64,
    pub seed: u64,
    pub trials: usize,
    pub m_values: Vec<usize>,
    pub k_values: Vec<usize>,
    ini: Ini,
}

pub const EXPERIMENT_SECTION: &str = "experiment";

impl SignalSettings {
    pub fn from_ini(ini: &Ini) -> Result<Self, SettingsError> {
        let e = EXPERIMENT_SECTION;
        let s = SignalSettings {
            n: ini.require(e, "n")?,
            s: ini.require(e, "s")?,
            sigma: ini.require(e, "sigma")?,
            seed: ini.require(e, "seed")?,
            trials: ini.require(e, "trials")?,
            m_values: ini.require_list(e, "m")?,
            k_values: ini.get_list(e, "K")?.unwrap_or_else(|| vec![100]),
            ini: ini.clone(),
        };
        if s.s == 0 || s.s > s.n {
            return Err(SettingsError::Invalid(format!("need 1 <= s <= n, got s={}, n={}", s.s, s.n)));
        }
        if s.trials == 0 {
            return Err(SettingsError::Invalid("trials must be >= 1".into()));
        }
        if let Some(&k) = s.k_values.iter().find(|&&k| k == 0 || k > s.n) {
            return Err(SettingsError::Invalid(format!("K = {k} outside 1..=n")));
        }
        Ok(s)
    }

    pub fn method(&self, method: &SignalMethod) -> Result<MethodSettings, IniError> {
        let secs = method.sections();
        let refs: Vec<&str> = secs.iter().map(String::as_str).collect();
        MethodSettings::from_ini(&self.ini, &refs)
    }

    pub fn ini(&self) -> &Ini {
        &self.ini
    }
}
