//! Monte Carlo moments of the random tensor `G` and the three inequality
//! experiments built on them.
//!
//! Sample `i` of a run seeded by `seed` draws its Gaussian fields from the
//! master seed [`sample_seed`]`(seed, i)`: stream 0 is `g`, stream 1 is `g̃`.
//! Per-sample norms are collected in sample order and reduced pairwise, so an
//! estimate is bit-identical whatever the number of worker threads.

use std::collections::{BTreeSet, HashMap};
use std::f64::consts::FRAC_PI_2;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::norms::{spectral_norm, tensor_norm, NormOptions};
use crate::sampler::{derive_seed, sample_seed, Field, GaussianField, STREAM_G, STREAM_G_TILDE};
use crate::tensor::{enumerate_partitions, IndexLabel, LabelGroup, Partition, Tensor, DEFAULT_PARTITION_CAP};
use crate::wick::{renorm_factor, Sign};
use crate::{Error, Result};

#[derive(Clone, Debug)]
pub struct EstimatorOptions {
    /// Options for every per-sample and deterministic norm.
    pub norm: NormOptions,
    /// Bootstrap resamples behind each standard error.
    pub bootstrap: usize,
}

impl Default for EstimatorOptions {
    fn default() -> Self {
        Self {
            norm: NormOptions {
                tol: 1e-8,
                ..NormOptions::default()
            },
            bootstrap: 1000,
        }
    }
}

/// Site profile reduced to an index into the distinct-site table.
type Profile = Vec<(usize, u32, i32)>;

/// One distinct `n_J` of the support of `h`.
#[derive(Clone, Debug)]
struct Group {
    /// Distinct-site index of each `n_j`.
    j_sites: Vec<usize>,
    profile: Profile,
    /// Profile of `n_{J∖j}` for each `j`.
    without: Vec<Profile>,
    /// `(row, col, h)` for every `(n_A, n_B)` paired with this `n_J`.
    entries: Vec<(usize, usize, Complex64)>,
}

/// `h` reorganized by `n_J` for fast repeated realization.
#[derive(Clone, Debug)]
struct Compiled {
    sites: Vec<Vec<i32>>,
    rows: Vec<Vec<i32>>,
    cols: Vec<Vec<i32>>,
    groups: Vec<Group>,
}

fn profile(sites: &[usize], signs: &[Sign]) -> Profile {
    let mut out: Profile = Vec::new();
    for (&s, sign) in sites.iter().zip(signs) {
        match out.iter_mut().find(|(t, _, _)| *t == s) {
            Some((_, sigma, mu)) => {
                *sigma += 1;
                *mu += sign.value();
            }
            None => out.push((s, 1, sign.value())),
        }
    }
    out
}

fn eval_profile(profile: &Profile, values: &[Complex64]) -> Complex64 {
    profile
        .iter()
        .map(|&(s, sigma, mu)| renorm_factor(sigma, mu, values[s]))
        .product()
}

impl Compiled {
    fn new(h: &Tensor, j_axes: &[usize], a_axes: &[usize], b_axes: &[usize], signs: &[Sign]) -> Self {
        let gather = |key: &[i32], ax: &[usize]| -> Vec<i32> {
            ax.iter().flat_map(|&a| h.axis_coords(key, a).iter().copied()).collect()
        };
        let rows: Vec<Vec<i32>> = h
            .iter_flat()
            .map(|(k, _)| gather(k, b_axes))
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        let cols: Vec<Vec<i32>> = h
            .iter_flat()
            .map(|(k, _)| gather(k, a_axes))
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        let row_pos: HashMap<&[i32], usize> = rows.iter().enumerate().map(|(i, r)| (r.as_slice(), i)).collect();
        let col_pos: HashMap<&[i32], usize> = cols.iter().enumerate().map(|(i, c)| (c.as_slice(), i)).collect();

        let mut sites: Vec<Vec<i32>> = Vec::new();
        let mut site_pos: HashMap<Vec<i32>, usize> = HashMap::new();
        let mut groups: Vec<Group> = Vec::new();
        let mut group_pos: HashMap<Vec<usize>, usize> = HashMap::new();
        for (key, v) in h.iter_flat() {
            let j_sites: Vec<usize> = j_axes
                .iter()
                .map(|&a| {
                    let p = h.axis_coords(key, a);
                    *site_pos.entry(p.to_vec()).or_insert_with(|| {
                        sites.push(p.to_vec());
                        sites.len() - 1
                    })
                })
                .collect();
            let gi = *group_pos.entry(j_sites.clone()).or_insert_with(|| {
                let without = (0..j_sites.len())
                    .map(|j| {
                        let mut s = j_sites.clone();
                        let mut sg = signs.to_vec();
                        s.remove(j);
                        sg.remove(j);
                        profile(&s, &sg)
                    })
                    .collect();
                groups.push(Group {
                    profile: profile(&j_sites, signs),
                    j_sites: j_sites.clone(),
                    without,
                    entries: Vec::new(),
                });
                groups.len() - 1
            });
            let r = row_pos[gather(key, b_axes).as_slice()];
            let c = col_pos[gather(key, a_axes).as_slice()];
            groups[gi].entries.push((r, c, v));
        }
        Self {
            sites,
            rows,
            cols,
            groups,
        }
    }

    fn values(&self, field: &impl Field) -> Vec<Complex64> {
        self.sites.iter().map(|s| field.value(s)).collect()
    }

    fn zeros(&self) -> DMatrix<Complex64> {
        DMatrix::zeros(self.rows.len(), self.cols.len())
    }

    /// `G` as a dense (n_B × n_A) matrix.
    fn realize(&self, g: &[Complex64]) -> DMatrix<Complex64> {
        let mut m = self.zeros();
        for grp in &self.groups {
            let w = eval_profile(&grp.profile, g);
            for &(r, c, v) in &grp.entries {
                m[(r, c)] += v * w;
            }
        }
        m
    }

    /// `Σ h g̃_{n_j}^{ι_j} ℒ(g_{n_{J∖j}}^{ι_{J∖j}})` as a dense matrix.
    fn decoupled(&self, j: usize, sign: Sign, g: &[Complex64], g_tilde: &[Complex64]) -> DMatrix<Complex64> {
        let mut m = self.zeros();
        for grp in &self.groups {
            let w = sign.apply(g_tilde[grp.j_sites[j]]) * eval_profile(&grp.without[j], g);
            for &(r, c, v) in &grp.entries {
                m[(r, c)] += v * w;
            }
        }
        m
    }
}

/// Coefficient tensor `h[n_J, n_A, n_B]` together with the signs `ι_J`.
///
/// The chaos labels must be named `j1..jk`; the remaining labels belong to
/// group `A` (input) or `B` (output).
#[derive(Clone, Debug)]
pub struct RandomTensorSpec {
    h: Tensor,
    signs: Vec<Sign>,
    j_axes: Vec<usize>,
    a_axes: Vec<usize>,
    b_axes: Vec<usize>,
    compiled: Compiled,
}

impl RandomTensorSpec {
    pub fn new(h: Tensor, signs: Vec<Sign>) -> Result<Self> {
        let k = signs.len();
        if k == 0 {
            return Err(Error::ChaosSpec("chaos order must be at least 1".into()));
        }
        let of_group =
            |g: LabelGroup| -> Vec<usize> { (0..h.labels().len()).filter(|&i| h.labels()[i].group == g).collect() };
        if of_group(LabelGroup::J).len() != k {
            return Err(Error::ChaosSpec(format!(
                "{} signs but {} chaos labels",
                k,
                of_group(LabelGroup::J).len()
            )));
        }
        let j_axes = (1..=k)
            .map(|i| {
                let ax = h.axis_of(&format!("j{i}"))?;
                if h.labels()[ax].group != LabelGroup::J {
                    return Err(Error::ChaosSpec(format!("label j{i} is not a chaos label")));
                }
                Ok(ax)
            })
            .collect::<Result<Vec<_>>>()?;
        let a_axes = of_group(LabelGroup::A);
        let b_axes = of_group(LabelGroup::B);
        let compiled = Compiled::new(&h, &j_axes, &a_axes, &b_axes, &signs);
        Ok(Self {
            h,
            signs,
            j_axes,
            a_axes,
            b_axes,
            compiled,
        })
    }

    pub fn h(&self) -> &Tensor {
        &self.h
    }

    pub fn signs(&self) -> &[Sign] {
        &self.signs
    }

    /// Chaos order `k`.
    pub fn order(&self) -> usize {
        self.signs.len()
    }

    pub fn truncation(&self) -> u32 {
        self.h.truncation()
    }

    pub fn dim(&self) -> usize {
        self.h.dim()
    }

    fn labels_at(&self, axes: &[usize]) -> Vec<IndexLabel> {
        axes.iter().map(|&a| self.h.labels()[a].clone()).collect()
    }

    /// `j1..jk` in order.
    pub fn j_labels(&self) -> Vec<IndexLabel> {
        self.labels_at(&self.j_axes)
    }

    pub fn a_labels(&self) -> Vec<IndexLabel> {
        self.labels_at(&self.a_axes)
    }

    pub fn b_labels(&self) -> Vec<IndexLabel> {
        self.labels_at(&self.b_axes)
    }

    /// The same spec with `h` multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        Self::new(self.h.scale(Complex64::new(factor, 0.0)), self.signs.clone())
    }

    fn g_field(&self, seed: u64, i: u64) -> GaussianField {
        GaussianField::complex(sample_seed(seed, i), STREAM_G, self.dim())
    }

    /// Dense `G` (rows `n_B`, columns `n_A`, both the support's projections)
    /// on a field.
    pub fn realize_matrix(&self, field: &impl Field) -> DMatrix<Complex64> {
        self.compiled.realize(&self.compiled.values(field))
    }
}

/// `G[n_A, n_B] = Σ_{n_J} h[n_J, n_A, n_B] ℒ(g_{n_J}^{ι_J})` as a tensor with
/// labels `A ∪ B`.
pub fn realize(spec: &RandomTensorSpec, field: &impl Field) -> Result<Tensor> {
    let m = spec.realize_matrix(field);
    let c = &spec.compiled;
    let labels: Vec<IndexLabel> = spec.a_labels().into_iter().chain(spec.b_labels()).collect();
    let entries = (0..c.rows.len()).flat_map(|r| {
        let m = &m;
        (0..c.cols.len()).map(move |col| {
            let mut key = c.cols[col].clone();
            key.extend_from_slice(&c.rows[r]);
            (key, m[(r, col)])
        })
    });
    Tensor::from_flat(labels, spec.dim(), spec.truncation(), entries)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MomentEstimate {
    pub p: f64,
    /// `(mean of |G_i|^p)^{1/p}`.
    pub mean_p_norm: f64,
    /// Bootstrap standard error of `mean_p_norm`.
    pub stderr: f64,
    /// Samples entering the estimate.
    pub samples: usize,
    pub seed: u64,
    /// Samples dropped because their norm did not converge.
    pub flagged: usize,
}

/// Sum in a fixed binary tree over the slice index.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    match xs.len() {
        0 => 0.0,
        1 => xs[0],
        n if n <= 8 => xs.iter().sum(),
        n => pairwise_sum(&xs[..n / 2]) + pairwise_sum(&xs[n / 2..]),
    }
}

/// `E[X^p]^{1/p}` from samples of `X ≥ 0`, with a bootstrap standard error.
///
/// Powers are taken relative to the largest sample so `p` up to a few dozen
/// cannot overflow.
pub fn moment_estimate(norms: &[f64], p: f64, seed: u64, bootstrap: usize) -> MomentEstimate {
    let n = norms.len();
    let top = norms.iter().copied().fold(0.0, f64::max);
    let est = |xs: &mut dyn Iterator<Item = f64>| -> f64 {
        let v: Vec<f64> = xs.map(|x| (x / top).powf(p)).collect();
        top * (pairwise_sum(&v) / v.len() as f64).powf(1.0 / p)
    };
    if n == 0 || top == 0.0 {
        return MomentEstimate {
            p,
            mean_p_norm: 0.0,
            stderr: 0.0,
            samples: n,
            seed,
            flagged: 0,
        };
    }
    let mean_p_norm = est(&mut norms.iter().copied());
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, &[0xb0075, p.to_bits()]));
    let boots: Vec<f64> = (0..bootstrap)
        .map(|_| {
            let idx: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
            est(&mut idx.into_iter().map(|i| norms[i]))
        })
        .collect();
    let stderr = if boots.len() > 1 {
        let m = pairwise_sum(&boots) / boots.len() as f64;
        let dev: Vec<f64> = boots.iter().map(|b| (b - m).powi(2)).collect();
        (pairwise_sum(&dev) / (boots.len() - 1) as f64).sqrt()
    } else {
        0.0
    };
    MomentEstimate {
        p,
        mean_p_norm,
        stderr,
        samples: n,
        seed,
        flagged: 0,
    }
}

fn check_sampling(p: &[f64], n_samples: usize) -> Result<()> {
    if n_samples < 2 {
        return Err(Error::InvalidArgument(format!(
            "need at least 2 samples, got {n_samples}"
        )));
    }
    if let Some(bad) = p.iter().find(|&&p| p.is_nan() || p < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "moment order p = {bad} must be at least 1"
        )));
    }
    Ok(())
}

fn sample_norm_opts(opts: &EstimatorOptions, seed: u64, i: u64) -> NormOptions {
    NormOptions {
        seed: derive_seed(seed, &[0x9017, i]),
        ..opts.norm.clone()
    }
}

/// Per-sample `‖G_i‖_{n_A→n_B}`, in sample order. Failed samples are `None`.
pub fn sample_norms(spec: &RandomTensorSpec, n_samples: usize, seed: u64, opts: &EstimatorOptions) -> Vec<Option<f64>> {
    (0..n_samples as u64)
        .into_par_iter()
        .map(|i| {
            let m = spec.realize_matrix(&spec.g_field(seed, i));
            spectral_norm(&m, &sample_norm_opts(opts, seed, i))
                .ok()
                .map(|r| r.value)
        })
        .collect()
}

fn estimates_from(samples: &[Option<f64>], ps: &[f64], seed: u64, opts: &EstimatorOptions) -> Vec<MomentEstimate> {
    let ok: Vec<f64> = samples.iter().flatten().copied().collect();
    let flagged = samples.len() - ok.len();
    ps.iter()
        .map(|&p| MomentEstimate {
            flagged,
            ..moment_estimate(&ok, p, seed, opts.bootstrap)
        })
        .collect()
}

/// `E[‖G‖^p]^{1/p}` for several `p` from one set of samples.
pub fn moment_norms(
    spec: &RandomTensorSpec,
    ps: &[f64],
    n_samples: usize,
    seed: u64,
    opts: &EstimatorOptions,
) -> Result<Vec<MomentEstimate>> {
    check_sampling(ps, n_samples)?;
    Ok(estimates_from(
        &sample_norms(spec, n_samples, seed, opts),
        ps,
        seed,
        opts,
    ))
}

pub fn moment_norm(
    spec: &RandomTensorSpec,
    p: f64,
    n_samples: usize,
    seed: u64,
    opts: &EstimatorOptions,
) -> Result<MomentEstimate> {
    Ok(moment_norms(spec, &[p], n_samples, seed, opts)?.remove(0))
}

/// `max_{X⊍Y=J} ‖h‖_{n_A n_X → n_B n_Y}` and the maximizing partition (the
/// first one in enumeration order on ties).
pub fn rhs_bound(spec: &RandomTensorSpec, opts: &NormOptions) -> Result<(f64, Partition)> {
    let parts: Vec<Partition> = enumerate_partitions(&spec.j_labels(), DEFAULT_PARTITION_CAP)?
        .into_iter()
        .map(|pj| Partition {
            x_side: spec.a_labels().into_iter().chain(pj.x_side).collect(),
            y_side: spec.b_labels().into_iter().chain(pj.y_side).collect(),
        })
        .collect();
    let norms: Vec<f64> = parts
        .par_iter()
        .map(|p| tensor_norm(spec.h(), p, opts).map(|r| r.value))
        .collect::<Result<_>>()?;
    let mut best = 0;
    for (i, &v) in norms.iter().enumerate() {
        if v > norms[best] {
            best = i;
        }
    }
    Ok((norms[best], parts[best].clone()))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub lhs: MomentEstimate,
    pub rhs_max: f64,
    pub best_partition: Partition,
    /// `lhs` over the bound without its constant.
    pub ratio: f64,
    /// Standard error of `ratio` propagated from `lhs`.
    pub ratio_stderr: f64,
}

fn ratio_of(lhs: f64, scale: f64) -> f64 {
    if lhs == 0.0 {
        0.0
    } else {
        lhs / scale
    }
}

/// `p^{k/2} (log N)^{k/2}`.
pub fn bound_factor(p: f64, k: usize, truncation: u32) -> f64 {
    (p * (truncation as f64).ln()).powf(k as f64 / 2.0)
}

/// The main estimate for several `p` from one set of samples.
pub fn bound_experiments(
    spec: &RandomTensorSpec,
    ps: &[f64],
    n_samples: usize,
    seed: u64,
    opts: &EstimatorOptions,
) -> Result<Vec<BoundReport>> {
    let (rhs_max, best_partition) = rhs_bound(spec, &opts.norm)?;
    let lhs = moment_norms(spec, ps, n_samples, seed, opts)?;
    Ok(lhs
        .into_iter()
        .map(|lhs| {
            let scale = bound_factor(lhs.p, spec.order(), spec.truncation()) * rhs_max;
            BoundReport {
                ratio: ratio_of(lhs.mean_p_norm, scale),
                ratio_stderr: ratio_of(lhs.stderr, scale),
                lhs,
                rhs_max,
                best_partition: best_partition.clone(),
            }
        })
        .collect())
}

pub fn bound_experiment(
    spec: &RandomTensorSpec,
    p: f64,
    n_samples: usize,
    seed: u64,
    opts: &EstimatorOptions,
) -> Result<BoundReport> {
    Ok(bound_experiments(spec, &[p], n_samples, seed, opts)?.remove(0))
}

/// Both sides of the decoupling inequality
/// `E‖G‖^p^{1/p} ≤ (π/2) Σ_j E‖Σ h g̃_{n_j} ℒ(g_{J∖j})‖^p^{1/p}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecouplingReport {
    pub lhs: MomentEstimate,
    /// One estimate per `j`, without the `π/2`.
    pub terms: Vec<MomentEstimate>,
    pub rhs: f64,
    pub combined_stderr: f64,
    /// `rhs - lhs`.
    pub slack: f64,
}

pub fn decoupling_experiments(
    spec: &RandomTensorSpec,
    ps: &[f64],
    n_samples: usize,
    seed: u64,
    opts: &EstimatorOptions,
) -> Result<Vec<DecouplingReport>> {
    check_sampling(ps, n_samples)?;
    let k = spec.order();
    let c = &spec.compiled;
    // per sample: [lhs, term_1, ..., term_k]
    let rows: Vec<Vec<Option<f64>>> = (0..n_samples as u64)
        .into_par_iter()
        .map(|i| {
            let g_field = spec.g_field(seed, i);
            let g = c.values(&g_field);
            let gt = c.values(&g_field.with_stream(STREAM_G_TILDE));
            let nopts = sample_norm_opts(opts, seed, i);
            let norm = |m: DMatrix<Complex64>| spectral_norm(&m, &nopts).ok().map(|r| r.value);
            std::iter::once(norm(c.realize(&g)))
                .chain((0..k).map(|j| norm(c.decoupled(j, spec.signs[j], &g, &gt))))
                .collect()
        })
        .collect();
    let column = |col: usize| -> Vec<Option<f64>> { rows.iter().map(|r| r[col]).collect() };
    let lhs = estimates_from(&column(0), ps, seed, opts);
    let terms: Vec<Vec<MomentEstimate>> = (1..=k)
        .map(|col| estimates_from(&column(col), ps, derive_seed(seed, &[col as u64]), opts))
        .collect();
    Ok(lhs
        .into_iter()
        .enumerate()
        .map(|(pi, lhs)| {
            let terms: Vec<MomentEstimate> = terms.iter().map(|t| t[pi].clone()).collect();
            let rhs = FRAC_PI_2 * terms.iter().map(|t| t.mean_p_norm).sum::<f64>();
            let var = lhs.stderr.powi(2) + FRAC_PI_2.powi(2) * terms.iter().map(|t| t.stderr.powi(2)).sum::<f64>();
            DecouplingReport {
                slack: rhs - lhs.mean_p_norm,
                combined_stderr: var.sqrt(),
                rhs,
                lhs,
                terms,
            }
        })
        .collect())
}

pub fn decoupling_experiment(
    spec: &RandomTensorSpec,
    p: f64,
    n_samples: usize,
    seed: u64,
    opts: &EstimatorOptions,
) -> Result<DecouplingReport> {
    Ok(decoupling_experiments(spec, &[p], n_samples, seed, opts)?.remove(0))
}

/// The Gaussian case `k = 1`: `E‖Σ_n g_n h_n‖^p^{1/p}` against
/// `√(p log N) max{‖h‖_{n₀ n_A → n_B}, ‖h‖_{n_A → n₀ n_B}}`.
pub fn khintchine_experiment(
    spec: &RandomTensorSpec,
    p: f64,
    n_samples: usize,
    seed: u64,
    opts: &EstimatorOptions,
) -> Result<BoundReport> {
    if spec.order() != 1 {
        return Err(Error::InvalidArgument(format!(
            "the Gaussian case needs chaos order 1, got {}",
            spec.order()
        )));
    }
    bound_experiment(spec, p, n_samples, seed, opts)
}

/// The conditional Gaussian step of the induction for one decoupled factor.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InductionStep {
    pub j: usize,
    /// `E‖Σ h g̃_{n_j} ℒ(g_{J∖j})‖^p^{1/p}`.
    pub decoupled: MomentEstimate,
    /// `E_g[max{‖h^g‖_{n_j n_A → n_B}, ‖h^g‖_{n_A → n_j n_B}}^p]^{1/p}` for the
    /// conditional tensor `h^g = Σ_{n_{J∖j}} h ℒ(g_{J∖j})`.
    pub conditional_rhs: MomentEstimate,
    /// `decoupled / (√(p log N) · conditional_rhs)`.
    pub ratio: f64,
}

/// Applies the Gaussian case to each decoupled term conditionally on `g`.
pub fn induction_check(
    spec: &RandomTensorSpec,
    p: f64,
    n_samples: usize,
    seed: u64,
    opts: &EstimatorOptions,
) -> Result<Vec<InductionStep>> {
    check_sampling(&[p], n_samples)?;
    let k = spec.order();
    let c = &spec.compiled;
    let mut out = Vec::with_capacity(k);
    for j in 0..k {
        let sj = c.sites.len();
        let pairs: Vec<(Option<f64>, Option<f64>)> = (0..n_samples as u64)
            .into_par_iter()
            .map(|i| {
                let g_field = spec.g_field(seed, i);
                let g = c.values(&g_field);
                let gt = c.values(&g_field.with_stream(STREAM_G_TILDE));
                let nopts = sample_norm_opts(opts, seed, i);
                let dec = spectral_norm(&c.decoupled(j, spec.signs[j], &g, &gt), &nopts)
                    .ok()
                    .map(|r| r.value);
                // conditional tensor stacked over n_j: rows (n_j, n_B) or columns (n_j, n_A)
                let (nr, nc) = (c.rows.len(), c.cols.len());
                let mut tall = DMatrix::<Complex64>::zeros(sj * nr, nc);
                let mut wide = DMatrix::<Complex64>::zeros(nr, sj * nc);
                for grp in &c.groups {
                    let w = eval_profile(&grp.without[j], &g);
                    let s = grp.j_sites[j];
                    for &(r, col, v) in &grp.entries {
                        let x = v * w;
                        tall[(s * nr + r, col)] += x;
                        wide[(r, s * nc + col)] += x;
                    }
                }
                let rhs = match (spectral_norm(&tall, &nopts), spectral_norm(&wide, &nopts)) {
                    (Ok(a), Ok(b)) => Some(a.value.max(b.value)),
                    _ => None,
                };
                (dec, rhs)
            })
            .collect();
        let dec: Vec<Option<f64>> = pairs.iter().map(|x| x.0).collect();
        let rhs: Vec<Option<f64>> = pairs.iter().map(|x| x.1).collect();
        let decoupled = estimates_from(&dec, &[p], seed, opts).remove(0);
        let conditional_rhs = estimates_from(&rhs, &[p], derive_seed(seed, &[1]), opts).remove(0);
        let scale = (p * (spec.truncation() as f64).ln()).sqrt() * conditional_rhs.mean_p_norm;
        out.push(InductionStep {
            j: j + 1,
            ratio: ratio_of(decoupled.mean_p_norm, scale),
            decoupled,
            conditional_rhs,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::LatticePoint;

    fn lp(v: i32) -> LatticePoint {
        LatticePoint(vec![v])
    }

    /// `h[n1, a, b] = δ(n1 = a = b)` over `|n| ≤ n_max`.
    fn diagonal_k1(n_max: u32) -> RandomTensorSpec {
        let m = n_max as i32;
        let entries = (-m..=m).map(|n| (vec![lp(n), lp(n), lp(n)], Complex64::new(1.0, 0.0)));
        let h = Tensor::new(
            vec![IndexLabel::j(1), IndexLabel::a("a"), IndexLabel::b("b")],
            1,
            n_max,
            entries,
        )
        .unwrap();
        RandomTensorSpec::new(h, vec![Sign::Plus]).unwrap()
    }

    #[test]
    fn spec_validation() {
        let h = Tensor::empty(vec![IndexLabel::j(1), IndexLabel::a("a")], 1, 2).unwrap();
        assert!(RandomTensorSpec::new(h.clone(), vec![Sign::Plus, Sign::Minus]).is_err());
        assert!(RandomTensorSpec::new(h, vec![]).is_err());
        let h = Tensor::empty(vec![IndexLabel::new("j2", LabelGroup::J)], 1, 2).unwrap();
        assert!(RandomTensorSpec::new(h, vec![Sign::Plus]).is_err());
    }

    #[test]
    fn identity_coefficient_gives_field() {
        let spec = diagonal_k1(3);
        let field = GaussianField::complex(99, 0, 1);
        let g = realize(&spec, &field).unwrap();
        for n in -3..=3 {
            assert_eq!(g.get(&[lp(n), lp(n)]), field.sample(&[n]));
        }
        assert_eq!(g.nnz(), 7);
    }

    #[test]
    fn pairwise_sum_is_exact_on_integers() {
        let xs: Vec<f64> = (1..=1000).map(f64::from).collect();
        assert_eq!(pairwise_sum(&xs), 500_500.0);
        assert_eq!(pairwise_sum(&[]), 0.0);
    }

    #[test]
    fn moment_estimate_of_constant_samples() {
        let m = moment_estimate(&[2.0; 10], 4.0, 1, 100);
        assert!((m.mean_p_norm - 2.0).abs() < 1e-15);
        assert!(m.stderr < 1e-15);
        let z = moment_estimate(&[0.0; 10], 2.0, 1, 100);
        assert_eq!((z.mean_p_norm, z.stderr), (0.0, 0.0));
    }

    #[test]
    fn zero_tensor_has_zero_moments() {
        let h = Tensor::empty(vec![IndexLabel::j(1), IndexLabel::a("a"), IndexLabel::b("b")], 1, 4).unwrap();
        let spec = RandomTensorSpec::new(h, vec![Sign::Plus]).unwrap();
        let m = moment_norm(&spec, 2.0, 8, 3, &EstimatorOptions::default()).unwrap();
        assert_eq!((m.mean_p_norm, m.stderr), (0.0, 0.0));
    }

    #[test]
    fn sampling_arguments_are_checked() {
        let spec = diagonal_k1(2);
        let opts = EstimatorOptions::default();
        assert!(moment_norm(&spec, 2.0, 1, 0, &opts).is_err());
        assert!(moment_norm(&spec, 0.5, 10, 0, &opts).is_err());
        assert!(khintchine_experiment(&spec, 2.0, 10, 0, &opts).is_ok());
    }

    #[test]
    fn rhs_of_diagonal_is_one() {
        let (v, part) = rhs_bound(&diagonal_k1(4), &NormOptions::default()).unwrap();
        assert!((v - 1.0).abs() < 1e-12);
        assert_eq!(part.to_string(), "a j1->b");
    }

    #[test]
    fn replay_is_bit_identical() {
        let spec = diagonal_k1(4);
        let opts = EstimatorOptions::default();
        let a = moment_norm(&spec, 4.0, 64, 11, &opts).unwrap();
        let b = moment_norm(&spec, 4.0, 64, 11, &opts).unwrap();
        assert_eq!(a.mean_p_norm.to_bits(), b.mean_p_norm.to_bits());
        assert_eq!(a.stderr.to_bits(), b.stderr.to_bits());
    }
}
