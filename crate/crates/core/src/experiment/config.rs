//! Experiment configuration (TOML).

use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::estimator::EstimatorOptions;
use crate::norms::NormOptions;
use crate::tensor::DEFAULT_PARTITION_CAP;
use crate::{Error, Result};

use super::family::Family;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    VerifyWick,
    VerifyMerging,
    BoundSweep,
    Decoupling,
    Khintchine,
    Replay,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::VerifyWick => "verify-wick",
            Command::VerifyMerging => "verify-merging",
            Command::BoundSweep => "bound-sweep",
            Command::Decoupling => "decoupling",
            Command::Khintchine => "khintchine",
            Command::Replay => "replay",
        }
    }
}

impl FromStr for Command {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        [
            Command::VerifyWick,
            Command::VerifyMerging,
            Command::BoundSweep,
            Command::Decoupling,
            Command::Khintchine,
            Command::Replay,
        ]
        .into_iter()
        .find(|c| c.name() == s)
        .ok_or_else(|| Error::Config(format!("unknown command `{s}`")))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grid {
    #[serde(rename = "N", default = "default_n")]
    pub n: Vec<u32>,
    #[serde(default = "default_k")]
    pub k: Vec<usize>,
    #[serde(default = "default_p")]
    pub p: Vec<f64>,
    #[serde(default = "default_d")]
    pub d: Vec<usize>,
}

fn default_n() -> Vec<u32> {
    vec![4, 8, 16, 32]
}
fn default_k() -> Vec<usize> {
    vec![1, 2, 3]
}
fn default_p() -> Vec<f64> {
    vec![2.0, 4.0, 8.0]
}
fn default_d() -> Vec<usize> {
    vec![1]
}

impl Default for Grid {
    fn default() -> Self {
        Self {
            n: default_n(),
            k: default_k(),
            p: default_p(),
            d: default_d(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SignPattern {
    /// `+ - + - ...`; every adjacent pair of chaos labels can pair.
    Alternating,
    /// All `+`; no pairings in the complex sense.
    Plus,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FamilyConfig {
    #[serde(default = "default_families")]
    pub names: Vec<Family>,
    /// Fill probability of `sparse-gaussian`.
    #[serde(default = "default_density")]
    pub density: f64,
    /// Target number of stored entries per generated tensor.
    #[serde(default = "default_budget")]
    pub budget: usize,
    #[serde(default = "default_labels")]
    pub a_labels: usize,
    #[serde(default = "default_labels")]
    pub b_labels: usize,
    #[serde(default = "default_signs")]
    pub signs: SignPattern,
}

fn default_families() -> Vec<Family> {
    Family::ALL.to_vec()
}
fn default_density() -> f64 {
    0.1
}
fn default_budget() -> usize {
    32768
}
fn default_labels() -> usize {
    1
}
fn default_signs() -> SignPattern {
    SignPattern::Alternating
}

impl Default for FamilyConfig {
    fn default() -> Self {
        Self {
            names: default_families(),
            density: default_density(),
            budget: default_budget(),
            a_labels: 1,
            b_labels: 1,
            signs: default_signs(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    /// Per-sample power iteration tolerance.
    #[serde(default = "default_norm_tol")]
    pub norm_tol: f64,
    #[serde(default = "default_bootstrap")]
    pub bootstrap: usize,
    /// Relative slack of the merging and duality checks.
    #[serde(default = "default_exact_slack")]
    pub norm_slack: f64,
    #[serde(default = "default_fd_step")]
    pub fd_step: f64,
    #[serde(default = "default_fd_tol")]
    pub fd_tol: f64,
    /// Standard errors allowed below zero in the decoupling and Khintchine gates.
    #[serde(default = "default_mc_sigmas")]
    pub mc_sigmas: f64,
    /// Standard errors allowed above zero for the trend slope.
    #[serde(default = "default_trend_sigmas")]
    pub trend_sigmas: f64,
}

fn default_norm_tol() -> f64 {
    1e-8
}
fn default_bootstrap() -> usize {
    1000
}
fn default_exact_slack() -> f64 {
    1e-8
}
fn default_fd_step() -> f64 {
    1e-5
}
fn default_fd_tol() -> f64 {
    1e-6
}
fn default_mc_sigmas() -> f64 {
    3.0
}
fn default_trend_sigmas() -> f64 {
    2.0
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            norm_tol: default_norm_tol(),
            bootstrap: default_bootstrap(),
            norm_slack: default_exact_slack(),
            fd_step: default_fd_step(),
            fd_tol: default_fd_tol(),
            mc_sigmas: default_mc_sigmas(),
            trend_sigmas: default_trend_sigmas(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyConfig {
    /// Randomized cases per check.
    #[serde(default = "default_cases")]
    pub cases: usize,
}

fn default_cases() -> usize {
    1000
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self { cases: default_cases() }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReplayConfig {
    /// JSON sidecar of the run to replay.
    pub results: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default = "default_dir")]
    pub dir: PathBuf,
}

fn default_dir() -> PathBuf {
    PathBuf::from("results")
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { dir: default_dir() }
    }
}

/// Declarative description of one run.
///
/// ```toml
/// command = "bound-sweep"
/// seed = 7
/// samples = 512
///
/// [grid]
/// N = [4, 8, 16, 32]
/// k = [1, 2, 3]
/// p = [2.0, 4.0, 8.0]
/// d = [1]
///
/// [family]
/// names = ["dense-gaussian", "rank-one"]
/// ```
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub command: Command,
    /// Mandatory; runs are never seeded from the clock.
    pub seed: u64,
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default)]
    pub grid: Grid,
    #[serde(default)]
    pub family: FamilyConfig,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub verify: VerifyConfig,
    #[serde(default)]
    pub replay: ReplayConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

fn default_samples() -> usize {
    512
}

/// Largest chaos order a grid may request.
pub const MAX_CHAOS_ORDER: usize = 6;
/// Largest lattice dimension a grid may request.
pub const MAX_DIM: usize = 3;

impl ExperimentConfig {
    pub fn new(command: Command, seed: u64) -> Self {
        Self {
            command,
            seed,
            samples: default_samples(),
            grid: Grid::default(),
            family: FamilyConfig::default(),
            tolerances: Tolerances::default(),
            verify: VerifyConfig::default(),
            replay: ReplayConfig::default(),
            output: OutputConfig::default(),
        }
    }

    pub fn from_toml(s: &str) -> Result<Self> {
        let c: Self = toml::from_str(s)?;
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config is always representable as TOML")
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.samples < 2 {
            return bad(format!("samples = {} (need at least 2)", self.samples));
        }
        let g = &self.grid;
        if g.n.is_empty() || g.k.is_empty() || g.p.is_empty() || g.d.is_empty() {
            return bad("every grid axis needs at least one value".into());
        }
        if let Some(n) = g.n.iter().find(|&&n| n < 2) {
            return bad(format!("N = {n}: truncation must be at least 2"));
        }
        if let Some(k) =
            g.k.iter()
                .find(|&&k| k == 0 || k > MAX_CHAOS_ORDER.min(DEFAULT_PARTITION_CAP))
        {
            return bad(format!("k = {k} outside 1..={MAX_CHAOS_ORDER}"));
        }
        if let Some(p) = g.p.iter().find(|&&p| p.is_nan() || p < 1.0) {
            return bad(format!("p = {p}: moments need p >= 1"));
        }
        if let Some(d) = g.d.iter().find(|&&d| d == 0 || d > MAX_DIM) {
            return bad(format!("d = {d} outside 1..={MAX_DIM}"));
        }
        let f = &self.family;
        if f.names.is_empty() {
            return bad("no tensor family selected".into());
        }
        if !(f.density > 0.0 && f.density <= 1.0) {
            return bad(format!("density {} outside (0, 1]", f.density));
        }
        if f.budget == 0 {
            return bad("budget must be positive".into());
        }
        let t = &self.tolerances;
        if !(t.norm_tol > 0.0 && t.fd_step > 0.0 && t.fd_tol > 0.0) {
            return bad("tolerances must be positive".into());
        }
        if self.command == Command::Replay && self.replay.results.is_none() {
            return bad("replay needs [replay] results = <path to results.json>".into());
        }
        Ok(())
    }

    pub fn estimator_options(&self) -> EstimatorOptions {
        EstimatorOptions {
            norm: NormOptions {
                tol: self.tolerances.norm_tol,
                ..NormOptions::default()
            },
            bootstrap: self.tolerances.bootstrap,
        }
    }

    /// SHA-256 over everything that determines the numbers (the output
    /// directory is excluded).
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.output = OutputConfig::default();
        let bytes = serde_json::to_vec(&c).expect("config serializes");
        Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect()
    }
}
