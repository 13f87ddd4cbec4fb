//! Experiment orchestration: configuration, tensor families, execution,
//! persistence and summary tables.
//!
//! A run expands the grid of an [`ExperimentConfig`] into cells
//! `(family, d, k, N, p)`. Cells sharing `(family, d, k, N)` share a tensor
//! and a set of Monte Carlo samples; the seed of that unit is derived from the
//! config seed and the unit coordinates only, so any cell can be recomputed
//! alone and reproduces the same numbers.

mod config;
mod family;
mod oracle;
mod store;
mod summary;
mod verify;

use std::collections::{BTreeMap, BTreeSet};
use std::f64::consts::FRAC_PI_2;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::Mutex;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::estimator::{bound_experiments, decoupling_experiments, RandomTensorSpec};
use crate::norms::NormOptions;
use crate::sampler::{derive_seed, STREAM_G, STREAM_G_TILDE, TRANSFORM_NAME};
use crate::tensor::l1_ball;
use crate::wick::Sign;
use crate::{Error, Result};

pub use config::{
    Command, ExperimentConfig, FamilyConfig, Grid, OutputConfig, ReplayConfig, SignPattern, Tolerances, VerifyConfig,
    MAX_CHAOS_ORDER, MAX_DIM,
};
pub use family::{generate_family, generate_family_by_name, Family, FamilyParams};
pub use oracle::{max_modulus_moment_quadrature, max_modulus_moments, max_modulus_samples, OracleEstimate};
pub use store::{csv_bytes, load_run, write_atomic, write_run, CSV_HEADER};
pub use summary::{format_table, summarize, within_group_slope, Regression, TrendSummary};
pub use verify::{
    check_duality, check_laguerre_derivatives, check_listed_polynomials, check_merging, check_orthogonality,
    check_phi_derivative, check_renorm_table, check_zero_expectation, collision_patterns, random_chaos_spec,
    random_tensor, sign_patterns, verify_merging, verify_wick, Gate,
};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Draws behind each order-statistics oracle value.
pub const ORACLE_SAMPLES: usize = 200_000;

/// One output row.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultRecord {
    pub config_hash: String,
    pub command: Command,
    pub family: Family,
    pub d: usize,
    pub k: usize,
    #[serde(rename = "N")]
    pub n: u32,
    pub p: f64,
    pub samples: usize,
    /// Seed of the cell's Monte Carlo run.
    pub seed: u64,
    pub lhs: f64,
    pub stderr: f64,
    pub rhs_max: f64,
    pub best_partition: String,
    pub ratio: f64,
    pub runtime_ms: u64,
    pub version: String,
    pub transform: String,
    /// Samples whose norm failed to converge.
    #[serde(default)]
    pub flagged: usize,
    /// Command-specific values (decoupling terms, oracle, ratio error).
    #[serde(default)]
    pub extras: BTreeMap<String, f64>,
}

impl ResultRecord {
    pub fn cell(&self) -> CellKey {
        CellKey {
            family: self.family,
            d: self.d,
            k: self.k,
            n: self.n,
            p: self.p,
        }
    }

    pub fn cell_key(&self) -> String {
        self.cell().to_string()
    }

    pub fn extra(&self, name: &str) -> Option<f64> {
        self.extras.get(name).copied()
    }
}

/// Grid coordinates of one record, written `family,d,k,N,p`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CellKey {
    pub family: Family,
    pub d: usize,
    pub k: usize,
    pub n: u32,
    pub p: f64,
}

impl CellKey {
    fn unit(&self) -> Unit {
        Unit {
            family: self.family,
            d: self.d,
            k: self.k,
            n: self.n,
        }
    }
}

impl fmt::Display for CellKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{},{},{},{}", self.family, self.d, self.k, self.n, self.p)
    }
}

impl FromStr for CellKey {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(',').map(str::trim).collect();
        let bad = || Error::InvalidArgument(format!("cell `{s}` is not `family,d,k,N,p`"));
        if parts.len() != 5 {
            return Err(bad());
        }
        Ok(Self {
            family: parts[0].parse()?,
            d: parts[1].parse().map_err(|_| bad())?,
            k: parts[2].parse().map_err(|_| bad())?,
            n: parts[3].parse().map_err(|_| bad())?,
            p: parts[4].parse().map_err(|_| bad())?,
        })
    }
}

/// Cells sharing a tensor and a sample set.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
struct Unit {
    family: Family,
    d: usize,
    k: usize,
    n: u32,
}

impl fmt::Display for Unit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{},{},{}", self.family, self.d, self.k, self.n)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellFailure {
    /// `family,d,k,N`.
    pub unit: String,
    pub error: String,
}

/// Everything a run produces; serialized as the JSON sidecar.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunFile {
    pub config_hash: String,
    pub config: ExperimentConfig,
    pub version: String,
    pub transform: String,
    /// Stream assignment of the Gaussian fields.
    pub streams: BTreeMap<String, u32>,
    /// `false` while a run is still checkpointing.
    pub complete: bool,
    pub records: Vec<ResultRecord>,
    pub failures: Vec<CellFailure>,
    pub gates: Vec<Gate>,
    pub summary: Vec<TrendSummary>,
}

impl RunFile {
    fn new(config: &ExperimentConfig) -> Self {
        Self {
            config_hash: config.hash(),
            config: config.clone(),
            version: VERSION.to_string(),
            transform: TRANSFORM_NAME.to_string(),
            streams: [("g".to_string(), STREAM_G), ("g_tilde".to_string(), STREAM_G_TILDE)].into(),
            complete: false,
            records: Vec::new(),
            failures: Vec::new(),
            gates: Vec::new(),
            summary: Vec::new(),
        }
    }

    /// All gates passed and no cell failed.
    pub fn passed(&self) -> bool {
        self.failures.is_empty() && self.gates.iter().all(|g| g.passed)
    }
}

#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    /// Worker threads; `None` uses the rayon default.
    pub workers: Option<usize>,
    /// Where results are written. Nothing is written when `None`.
    pub out_dir: Option<PathBuf>,
    /// Restrict the run (or replay) to one cell.
    pub cell: Option<CellKey>,
}

impl RunOptions {
    pub fn with_workers(workers: usize) -> Self {
        Self {
            workers: Some(workers),
            ..Self::default()
        }
    }
}

/// Runs `config`, writing results under `opts.out_dir` if set.
///
/// Per-cell failures are recorded and the run continues; the returned file
/// fails [`RunFile::passed`] in that case.
pub fn run(config: &ExperimentConfig, opts: &RunOptions) -> Result<RunFile> {
    config.validate()?;
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(w) = opts.workers {
        if w == 0 {
            return Err(Error::InvalidArgument("workers must be positive".into()));
        }
        builder = builder.num_threads(w);
    }
    let pool = builder
        .build()
        .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?;
    pool.install(|| match config.command {
        Command::Replay => {
            let path = config.replay.results.as_ref().expect("validated");
            let out = replay(&load_run(path)?, opts.cell.as_ref())?;
            if let Some(dir) = &opts.out_dir {
                write_run(dir, "replay", &out, true)?;
            }
            Ok(out)
        }
        Command::VerifyWick | Command::VerifyMerging => {
            let mut out = RunFile::new(config);
            let (t, cases) = (&config.tolerances, config.verify.cases);
            out.gates = if config.command == Command::VerifyWick {
                verify_wick(cases, t.fd_step, t.fd_tol, config.seed)
            } else {
                verify_merging(cases, t.norm_slack, config.seed)
            };
            out.complete = true;
            if let Some(dir) = &opts.out_dir {
                write_run(dir, "verify", &out, false)?;
            }
            Ok(out)
        }
        _ => sweep(config, opts),
    })
}

/// The units and `p` values a sweep covers, in canonical order.
fn plan(config: &ExperimentConfig, cell: Option<&CellKey>) -> Vec<(Unit, Vec<f64>)> {
    let ks: Vec<usize> = match config.command {
        Command::Khintchine => vec![1],
        _ => config.grid.k.clone(),
    };
    let mut units = BTreeSet::new();
    for &family in &config.family.names {
        for &d in &config.grid.d {
            for &k in &ks {
                for &n in &config.grid.n {
                    units.insert(Unit { family, d, k, n });
                }
            }
        }
    }
    units
        .into_iter()
        .filter_map(|u| match cell {
            None => Some((u, config.grid.p.clone())),
            Some(c) if c.unit() == u => Some((u, vec![c.p])),
            Some(_) => None,
        })
        .collect()
}

fn family_index(f: Family) -> u64 {
    Family::ALL.iter().position(|&g| g == f).expect("listed family") as u64
}

/// Monte Carlo seed of the cells `(family, d, k, N, ·)`.
pub fn unit_seed(config_seed: u64, family: Family, d: usize, k: usize, n: u32) -> u64 {
    derive_seed(config_seed, &[family_index(family), d as u64, k as u64, n as u64])
}

/// The random tensor spec of a unit and its Monte Carlo seed.
pub fn cell_spec(
    config: &ExperimentConfig,
    family: Family,
    d: usize,
    k: usize,
    n: u32,
) -> Result<(RandomTensorSpec, u64)> {
    let seed = unit_seed(config.seed, family, d, k, n);
    let f = &config.family;
    let params = FamilyParams {
        k,
        d,
        n,
        a_labels: f.a_labels,
        b_labels: f.b_labels,
        density: f.density,
        budget: f.budget,
        side_cap: NormOptions::default().dense_cap,
    };
    let h = generate_family(family, &params, derive_seed(seed, &[0x68]))?;
    let signs = match f.signs {
        SignPattern::Alternating => Sign::alternating(k),
        SignPattern::Plus => vec![Sign::Plus; k],
    };
    Ok((RandomTensorSpec::new(h, signs)?, seed))
}

struct Row {
    lhs: f64,
    stderr: f64,
    rhs_max: f64,
    best_partition: String,
    ratio: f64,
    flagged: usize,
    extras: BTreeMap<String, f64>,
}

fn compute_unit(config: &ExperimentConfig, hash: &str, u: Unit, ps: &[f64]) -> Result<Vec<ResultRecord>> {
    let start = Instant::now();
    let (spec, seed) = cell_spec(config, u.family, u.d, u.k, u.n)?;
    let opts = config.estimator_options();
    let rows: Vec<Row> = match config.command {
        Command::BoundSweep | Command::Khintchine => {
            let reports = bound_experiments(&spec, ps, config.samples, seed, &opts)?;
            let oracle = (config.command == Command::Khintchine
                && u.family == Family::DiagonalPairing
                && config.family.a_labels == 1
                && config.family.b_labels == 1)
                .then(|| {
                    max_modulus_moments(
                        l1_ball(u.d, u.n).len(),
                        ps,
                        ORACLE_SAMPLES,
                        derive_seed(seed, &[0x6f72]),
                    )
                });
            reports
                .into_iter()
                .enumerate()
                .map(|(i, r)| {
                    let mut extras = BTreeMap::from([("ratio_stderr".to_string(), r.ratio_stderr)]);
                    if let Some(o) = &oracle {
                        extras.insert("oracle".into(), o[i].value);
                        extras.insert("oracle_stderr".into(), o[i].stderr);
                    }
                    Row {
                        lhs: r.lhs.mean_p_norm,
                        stderr: r.lhs.stderr,
                        rhs_max: r.rhs_max,
                        best_partition: r.best_partition.to_string(),
                        ratio: r.ratio,
                        flagged: r.lhs.flagged,
                        extras,
                    }
                })
                .collect()
        }
        Command::Decoupling => decoupling_experiments(&spec, ps, config.samples, seed, &opts)?
            .into_iter()
            .map(|r| {
                let lhs = r.lhs.mean_p_norm;
                let ratio = if lhs > 0.0 { r.rhs / lhs } else { 0.0 };
                let rhs_se = FRAC_PI_2 * r.terms.iter().map(|t| t.stderr.powi(2)).sum::<f64>().sqrt();
                let ratio_se = if lhs > 0.0 && r.rhs > 0.0 {
                    ratio * ((r.lhs.stderr / lhs).powi(2) + (rhs_se / r.rhs).powi(2)).sqrt()
                } else {
                    0.0
                };
                let mut extras = BTreeMap::from([
                    ("slack".to_string(), r.slack),
                    ("combined_stderr".to_string(), r.combined_stderr),
                    ("ratio_stderr".to_string(), ratio_se),
                ]);
                for (j, t) in r.terms.iter().enumerate() {
                    extras.insert(format!("term_{}", j + 1), t.mean_p_norm);
                    extras.insert(format!("term_{}_stderr", j + 1), t.stderr);
                }
                Row {
                    lhs,
                    stderr: r.lhs.stderr,
                    rhs_max: r.rhs,
                    best_partition: String::new(),
                    ratio,
                    flagged: r.lhs.flagged,
                    extras,
                }
            })
            .collect(),
        c => return Err(Error::InvalidArgument(format!("{} has no grid cells", c.name()))),
    };
    let runtime_ms = start.elapsed().as_millis() as u64;
    Ok(ps
        .iter()
        .zip(rows)
        .map(|(&p, row)| ResultRecord {
            config_hash: hash.to_string(),
            command: config.command,
            family: u.family,
            d: u.d,
            k: u.k,
            n: u.n,
            p,
            samples: config.samples,
            seed,
            lhs: row.lhs,
            stderr: row.stderr,
            rhs_max: row.rhs_max,
            best_partition: row.best_partition,
            ratio: row.ratio,
            runtime_ms,
            version: VERSION.to_string(),
            transform: TRANSFORM_NAME.to_string(),
            flagged: row.flagged,
            extras: row.extras,
        })
        .collect())
}

fn sort_records(records: &mut [ResultRecord]) {
    records.sort_by(|a, b| {
        (a.family, a.d, a.k, a.n)
            .cmp(&(b.family, b.d, b.k, b.n))
            .then(a.p.total_cmp(&b.p))
    });
}

/// Records of an earlier run of the same config in `dir`, if any.
fn resumable(dir: &Path, hash: &str) -> Vec<ResultRecord> {
    match load_run(&dir.join("results.json")) {
        Ok(f) if f.config_hash == hash => f.records,
        _ => Vec::new(),
    }
}

fn sweep(config: &ExperimentConfig, opts: &RunOptions) -> Result<RunFile> {
    let mut out = RunFile::new(config);
    let hash = out.config_hash.clone();
    let previous = opts.out_dir.as_deref().map(|d| resumable(d, &hash)).unwrap_or_default();
    let done: BTreeMap<String, ResultRecord> = previous.into_iter().map(|r| (r.cell_key(), r)).collect();

    let todo: Vec<(Unit, Vec<f64>)> = plan(config, opts.cell.as_ref())
        .into_iter()
        .filter(|(u, ps)| {
            ps.iter().any(|&p| {
                let key = CellKey {
                    family: u.family,
                    d: u.d,
                    k: u.k,
                    n: u.n,
                    p,
                };
                !done.contains_key(&key.to_string())
            })
        })
        .collect();

    let state = Mutex::new((done, Vec::<CellFailure>::new()));
    let checkpoint = |records: &BTreeMap<String, ResultRecord>, failures: &[CellFailure]| -> Result<()> {
        if let Some(dir) = &opts.out_dir {
            let mut file = out.clone();
            file.records = records.values().cloned().collect();
            sort_records(&mut file.records);
            file.failures = failures.to_vec();
            write_run(dir, "results", &file, false)?;
        }
        Ok(())
    };
    todo.par_iter().try_for_each(|(u, ps)| -> Result<()> {
        let result = compute_unit(config, &hash, *u, ps);
        let mut guard = state.lock().expect("no panics while holding the lock");
        let (records, failures) = &mut *guard;
        match result {
            Ok(recs) => records.extend(recs.into_iter().map(|r| (r.cell_key(), r))),
            Err(e) => failures.push(CellFailure {
                unit: u.to_string(),
                error: e.to_string(),
            }),
        }
        checkpoint(records, failures)
    })?;

    let (records, mut failures) = state.into_inner().expect("lock is not poisoned");
    failures.sort_by(|a, b| a.unit.cmp(&b.unit));
    out.records = records.into_values().collect();
    sort_records(&mut out.records);
    out.failures = failures;
    out.gates = sweep_gates(config, &out.records);
    if matches!(config.command, Command::BoundSweep | Command::Khintchine) {
        out.summary = summarize(&out.records, config.tolerances.trend_sigmas);
    }
    out.complete = true;
    if let Some(dir) = &opts.out_dir {
        write_run(dir, "results", &out, true)?;
    }
    Ok(out)
}

fn sweep_gates(config: &ExperimentConfig, records: &[ResultRecord]) -> Vec<Gate> {
    let sigmas = config.tolerances.mc_sigmas;
    let mut gates = Vec::new();
    match config.command {
        Command::BoundSweep | Command::Khintchine => {
            for s in summarize(records, config.tolerances.trend_sigmas) {
                let slope = match (s.slope, s.slope_stderr) {
                    (Some(b), Some(se)) => format!("slope {b:.4} ± {se:.4}"),
                    _ => "single N, no trend".to_string(),
                };
                gates.push(Gate::new(
                    format!("bounded ratio k={}", s.k),
                    s.passed,
                    format!(
                        "{} cells, finite {}, max ratio {:.4} at {}, {slope}",
                        s.cells, s.all_finite, s.max_ratio, s.max_ratio_cell
                    ),
                ));
            }
            let with_oracle: Vec<&ResultRecord> = records.iter().filter(|r| r.extra("oracle").is_some()).collect();
            if !with_oracle.is_empty() {
                let mut bad = Vec::new();
                let mut worst = 0.0f64;
                for r in &with_oracle {
                    let (o, ose) = (r.extra("oracle").unwrap(), r.extra("oracle_stderr").unwrap());
                    let z = (r.lhs - o).abs() / (r.stderr.powi(2) + ose.powi(2)).sqrt();
                    worst = worst.max(z);
                    if z > sigmas {
                        bad.push(r.cell_key());
                    }
                }
                gates.push(Gate::new(
                    "order-statistics oracle",
                    bad.is_empty(),
                    format!(
                        "{} cells, max |lhs - oracle| = {worst:.2} stderr {}",
                        with_oracle.len(),
                        bad.join(" ")
                    ),
                ));
            }
        }
        Command::Decoupling => {
            let mut bad = Vec::new();
            let mut worst = f64::INFINITY;
            for r in records {
                let (slack, se) = (
                    r.extra("slack").unwrap_or(f64::NAN),
                    r.extra("combined_stderr").unwrap_or(0.0),
                );
                let z = if se > 0.0 {
                    slack / se
                } else {
                    slack.signum() * f64::INFINITY
                };
                worst = worst.min(z);
                if slack.is_nan() || slack < -sigmas * se {
                    bad.push(r.cell_key());
                }
            }
            gates.push(Gate::new(
                "decoupling slack",
                bad.is_empty(),
                format!("{} cells, min slack {worst:.2} stderr {}", records.len(), bad.join(" ")),
            ));
            let k1: Vec<&ResultRecord> = records.iter().filter(|r| r.k == 1).collect();
            if !k1.is_empty() {
                let mut bad = Vec::new();
                let mut worst = 0.0f64;
                for r in &k1 {
                    let se = r.extra("ratio_stderr").unwrap_or(0.0);
                    let dev = (r.ratio - FRAC_PI_2).abs();
                    worst = worst.max(if se > 0.0 { dev / se } else { dev });
                    if dev > sigmas * se {
                        bad.push(r.cell_key());
                    }
                }
                gates.push(Gate::new(
                    "decoupling k=1 ratio pi/2",
                    bad.is_empty(),
                    format!(
                        "{} cells, max |rhs/lhs - pi/2| = {worst:.2} stderr {}",
                        k1.len(),
                        bad.join(" ")
                    ),
                ));
            }
        }
        _ => {}
    }
    gates
}

/// Recomputes the records of `file` (or the one matching `cell`) and checks
/// that every `lhs` is bit-identical.
pub fn replay(file: &RunFile, cell: Option<&CellKey>) -> Result<RunFile> {
    let config = &file.config;
    let mut out = RunFile::new(config);
    let hash_ok = config.hash() == file.config_hash;
    out.gates.push(Gate::new(
        "config hash",
        hash_ok,
        format!("stored {} recomputed {}", file.config_hash, config.hash()),
    ));
    let targets: Vec<&ResultRecord> = file
        .records
        .iter()
        .filter(|r| cell.is_none_or(|c| r.cell() == *c))
        .collect();
    if targets.is_empty() {
        out.gates.push(Gate::new("replay", false, "no matching record"));
        return Ok(out);
    }
    let mut units: BTreeMap<Unit, Vec<f64>> = BTreeMap::new();
    for r in &targets {
        units.entry(r.cell().unit()).or_default().push(r.p);
    }
    let results: Vec<(Unit, Result<Vec<ResultRecord>>)> = units
        .into_par_iter()
        .map(|(u, ps)| (u, compute_unit(config, &file.config_hash, u, &ps)))
        .collect();
    for (u, r) in results {
        match r {
            Ok(recs) => out.records.extend(recs),
            Err(e) => out.failures.push(CellFailure {
                unit: u.to_string(),
                error: e.to_string(),
            }),
        }
    }
    sort_records(&mut out.records);
    let fresh: BTreeMap<String, &ResultRecord> = out.records.iter().map(|r| (r.cell_key(), r)).collect();
    let mut bad = Vec::new();
    for r in &targets {
        let same = fresh.get(&r.cell_key()).is_some_and(|f| {
            f.lhs.to_bits() == r.lhs.to_bits()
                && f.stderr.to_bits() == r.stderr.to_bits()
                && f.rhs_max.to_bits() == r.rhs_max.to_bits()
                && f.seed == r.seed
        });
        if !same {
            bad.push(r.cell_key());
        }
    }
    out.gates.push(Gate::new(
        "replay",
        bad.is_empty(),
        if bad.is_empty() {
            format!("{} records bit-identical", targets.len())
        } else {
            format!("mismatch in {}", bad.join(" "))
        },
    ));
    out.complete = true;
    Ok(out)
}
