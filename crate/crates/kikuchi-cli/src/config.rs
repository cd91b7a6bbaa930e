//! Run configuration: a single TOML file, overridden by flags.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use kikuchi::model::ProblemParams;
use kikuchi::recovery::{Fig2Config, RecoverConfig, Setting, Strategy};
use kikuchi::resources::EstimatorConfig;
use serde::{Deserialize, Serialize};

/// Environment variable holding the default worker count.
pub const THREADS_ENV: &str = "KIKUCHI_THREADS";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum SampleModel {
    /// Poisson model with repeated subsets merged.
    Planted,
    /// `round(m)` distinct subsets.
    Simple,
    /// Planted with ρ forced to 0.
    Random,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Precision {
    F32,
    F64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProblemSection {
    pub n: usize,
    pub k: usize,
    pub ell: usize,
    /// Observation count; `10 n² ln n` when absent.
    pub m: Option<f64>,
    pub rho: f64,
    pub model: SampleModel,
    /// Read the tensor from this file instead of sampling.
    pub input: Option<PathBuf>,
}

impl Default for ProblemSection {
    fn default() -> Self {
        ProblemSection { n: 20, k: 4, ell: 6, m: None, rho: 1.0, model: SampleModel::Planted, input: None }
    }
}

impl ProblemSection {
    pub fn params(&self, seed: u64) -> ProblemParams {
        let m = self.m.unwrap_or_else(|| ProblemParams::default_m(self.n));
        ProblemParams::new(self.n, self.k, self.ell, m, self.rho, seed)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DetectSection {
    pub gamma: f64,
    pub kappa: f64,
    pub eps_prob: f64,
    /// Observation count entering the thresholds; `Σ|T_S|` when absent.
    pub m: Option<f64>,
    pub tol: f64,
    pub max_iter: Option<usize>,
    pub max_basis: usize,
    pub precision: Precision,
}

impl Default for DetectSection {
    fn default() -> Self {
        DetectSection { gamma: 0.1, kappa: 1.0, eps_prob: 1.0, m: None, tol: 1e-6, max_iter: None, max_basis: 300, precision: Precision::F64 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RecoverSection {
    pub top: usize,
    pub strategy: Strategy,
    pub boost: bool,
    pub max_basis: usize,
    pub tol: f64,
}

impl Default for RecoverSection {
    fn default() -> Self {
        let d = RecoverConfig::default();
        RecoverSection { top: d.top, strategy: d.strategy, boost: d.boost, max_basis: d.max_basis, tol: d.tol }
    }
}

/// Grid overrides; unset fields take the setting's defaults.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Fig2Section {
    pub setting: Option<Setting>,
    pub n: Option<usize>,
    pub k: Option<usize>,
    pub ell: Option<usize>,
    pub rhos: Option<Vec<f64>>,
    pub obs_fractions: Option<Vec<f64>>,
    pub trials: Option<usize>,
    pub top: Option<usize>,
    pub max_basis: Option<usize>,
    pub tol: Option<f64>,
}

impl Fig2Section {
    pub fn resolve(&self, seed: u64) -> Fig2Config {
        let mut c = match self.setting.unwrap_or(Setting::Symmetric) {
            Setting::Symmetric => Fig2Config::symmetric(),
            Setting::Asymmetric => Fig2Config::asymmetric(),
        };
        c.seed = seed;
        macro_rules! take {
            ($($f:ident),*) => { $( if let Some(v) = &self.$f { c.$f = v.clone(); } )* };
        }
        take!(n, k, ell, rhos, obs_fractions, trials, top, max_basis, tol);
        c
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CircuitsSection {
    pub dicke_l: Vec<u32>,
    pub shuffle_c: Vec<usize>,
    /// Run the block-encoding check on the built-in (n=6, k=2, ℓ=2) instance.
    pub block_encoding: bool,
    pub qsp_phases: usize,
    pub qsp_epsilons: Vec<f64>,
    pub tol: f64,
}

impl Default for CircuitsSection {
    fn default() -> Self {
        CircuitsSection {
            dicke_l: vec![1, 2, 3],
            shuffle_c: vec![2, 3, 4],
            block_encoding: true,
            qsp_phases: 50,
            qsp_epsilons: vec![1e-10, 1e-9, 1e-8, 1e-7, 1e-6],
            tol: 1e-12,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BenchSection {
    pub n: usize,
    pub k: usize,
    pub ell: usize,
    pub m: Option<f64>,
    pub reps: usize,
}

impl Default for BenchSection {
    fn default() -> Self {
        BenchSection { n: 20, k: 4, ell: 6, m: None, reps: 20 }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub threads: Option<usize>,
    pub out: Option<PathBuf>,
    pub problem: ProblemSection,
    pub detect: DetectSection,
    pub recover: RecoverSection,
    pub fig2: Fig2Section,
    pub estimate: EstimatorConfig,
    pub circuits: CircuitsSection,
    pub bench: BenchSection,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).context("invalid config")
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::from_toml(&text).with_context(|| format!("in {}", path.display()))
    }

    pub fn recover_config(&self) -> RecoverConfig {
        let r = &self.recover;
        RecoverConfig { ell: self.problem.ell, top: r.top, strategy: r.strategy, boost: r.boost, max_basis: r.max_basis, tol: r.tol }
    }

    /// Flag, then config, then `KIKUCHI_THREADS`; `None` leaves rayon's default.
    pub fn resolve_threads(&mut self) -> Result<()> {
        if self.threads.is_none() {
            if let Ok(v) = std::env::var(THREADS_ENV) {
                let t: usize = v.trim().parse().with_context(|| format!("{THREADS_ENV}={v:?} is not a count"))?;
                self.threads = Some(t);
            }
        }
        if self.threads == Some(0) {
            bail!("threads must be positive");
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        let p = &self.problem;
        if !(0.0..=1.0).contains(&p.rho) {
            bail!("problem.rho = {} outside [0,1]", p.rho);
        }
        if p.m.is_some_and(|m| !(m >= 0.0) || !m.is_finite()) {
            bail!("problem.m must be a non-negative number");
        }
        let d = &self.detect;
        if !(d.gamma > 0.0 && d.gamma < 1.0) || !(d.kappa > 0.0) || !(d.eps_prob > 0.0) || !(d.tol > 0.0) {
            bail!("detect: need 0 < gamma < 1 and positive kappa, eps_prob, tol");
        }
        if self.recover.top == 0 {
            bail!("recover.top must be positive");
        }
        if self.bench.reps == 0 {
            bail!("bench.reps must be positive");
        }
        if self.circuits.qsp_epsilons.iter().any(|e| !(*e > 0.0)) {
            bail!("circuits.qsp_epsilons must be positive");
        }
        Ok(())
    }

    /// One-line JSON of the resolved configuration for output headers.
    pub fn header_json(&self) -> String {
        serde_json::to_string(self).expect("config serialises")
    }
}
