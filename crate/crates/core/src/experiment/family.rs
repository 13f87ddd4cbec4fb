//! Synthetic coefficient tensors `h[n_J, n_A, n_B]`.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::tensor::{l1_ball, IndexLabel, LatticePoint, Tensor};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    /// i.i.d. complex Gaussian entries on a grid of sites.
    DenseGaussian,
    /// Like `dense-gaussian` with each entry kept with probability `density`.
    SparseGaussian,
    /// `h = 1` iff every label sits at the same point; maximal pairing.
    DiagonalPairing,
    /// Outer product of unit vectors; every flattening has norm one.
    RankOne,
    /// Rademacher entries on a grid of sites.
    RandomSign,
}

impl Family {
    pub const ALL: [Family; 5] = [
        Family::DenseGaussian,
        Family::SparseGaussian,
        Family::DiagonalPairing,
        Family::RankOne,
        Family::RandomSign,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Family::DenseGaussian => "dense-gaussian",
            Family::SparseGaussian => "sparse-gaussian",
            Family::DiagonalPairing => "diagonal-pairing",
            Family::RankOne => "rank-one",
            Family::RandomSign => "random-sign",
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Family::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| Error::UnknownFamily(s.to_string()))
    }
}

/// Shape of a generated tensor.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FamilyParams {
    /// Chaos order; labels `j1..jk`.
    pub k: usize,
    pub d: usize,
    #[serde(rename = "N")]
    pub n: u32,
    /// Number of input labels `a1, a2, ...`.
    pub a_labels: usize,
    /// Number of output labels `b1, b2, ...`.
    pub b_labels: usize,
    pub density: f64,
    /// Target number of stored entries.
    pub budget: usize,
    /// Largest matricization side the grid may produce.
    pub side_cap: usize,
}

impl FamilyParams {
    pub fn new(k: usize, d: usize, n: u32) -> Self {
        Self {
            k,
            d,
            n,
            a_labels: 1,
            b_labels: 1,
            density: 0.1,
            budget: 32768,
            side_cap: 4096,
        }
    }

    pub fn labels(&self) -> Vec<IndexLabel> {
        (1..=self.k)
            .map(IndexLabel::j)
            .chain((1..=self.a_labels).map(|i| IndexLabel::a(format!("a{i}"))))
            .chain((1..=self.b_labels).map(|i| IndexLabel::b(format!("b{i}"))))
            .collect()
    }

    /// Sites per label for a grid family holding about `entries` values.
    fn grid_side(&self, entries: f64) -> usize {
        let axes = self.labels().len() as f64;
        let ball = l1_ball(self.d, self.n).len();
        let by_budget = entries.powf(1.0 / axes).floor() as usize;
        let by_cap = (self.side_cap as f64).powf(1.0 / (axes - 1.0).max(1.0)).floor() as usize;
        by_budget.min(by_cap).min(ball).max(1)
    }
}

/// Deterministic tensor of the given family.
pub fn generate_family(family: Family, params: &FamilyParams, seed: u64) -> Result<Tensor> {
    if params.k == 0 || params.d == 0 || params.n == 0 {
        return Err(Error::InvalidArgument(format!(
            "family parameters need k, d, N >= 1 (got {}, {}, {})",
            params.k, params.d, params.n
        )));
    }
    if !(params.density > 0.0 && params.density <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "density {} outside (0, 1]",
            params.density
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let labels = params.labels();
    let arity = labels.len();
    let ball = l1_ball(params.d, params.n);

    let entries: Vec<(Vec<LatticePoint>, Complex64)> = match family {
        Family::DiagonalPairing => ball
            .iter()
            .map(|p| (vec![p.clone(); arity], Complex64::new(1.0, 0.0)))
            .collect(),
        Family::DenseGaussian | Family::RandomSign | Family::RankOne => {
            let sites = pick_sites(&ball, params.grid_side(params.budget as f64), &mut rng);
            match family {
                Family::DenseGaussian => grid(&sites, arity)
                    .map(|idx| (idx, complex_gaussian(&mut rng)))
                    .collect(),
                Family::RandomSign => grid(&sites, arity)
                    .map(|idx| {
                        let s = if rng.random::<bool>() { 1.0 } else { -1.0 };
                        (idx, Complex64::new(s, 0.0))
                    })
                    .collect(),
                _ => {
                    let factors: Vec<Vec<Complex64>> = (0..arity).map(|_| unit_vector(sites.len(), &mut rng)).collect();
                    grid_positions(sites.len(), arity)
                        .map(|pos| {
                            let v = pos.iter().enumerate().map(|(ax, &i)| factors[ax][i]).product();
                            (pos.iter().map(|&i| sites[i].clone()).collect(), v)
                        })
                        .collect()
                }
            }
        }
        Family::SparseGaussian => {
            let sites = pick_sites(&ball, params.grid_side(params.budget as f64 / params.density), &mut rng);
            let mut out = Vec::new();
            for idx in grid(&sites, arity) {
                if rng.random::<f64>() < params.density {
                    out.push((idx, complex_gaussian(&mut rng)));
                }
            }
            if out.is_empty() {
                out.push((vec![sites[0].clone(); arity], complex_gaussian(&mut rng)));
            }
            out
        }
    };
    Tensor::new(labels, params.d, params.n, entries)
}

/// [`generate_family`] looked up by name.
pub fn generate_family_by_name(name: &str, params: &FamilyParams, seed: u64) -> Result<Tensor> {
    generate_family(name.parse()?, params, seed)
}

/// `m` distinct sites of the ball in lexicographic order, shared by all labels
/// so that chaos labels can collide.
fn pick_sites(ball: &[LatticePoint], m: usize, rng: &mut ChaCha8Rng) -> Vec<LatticePoint> {
    let mut idx = sample(rng, ball.len(), m).into_vec();
    idx.sort_unstable();
    idx.into_iter().map(|i| ball[i].clone()).collect()
}

fn grid_positions(m: usize, arity: usize) -> impl Iterator<Item = Vec<usize>> {
    let total = m.pow(arity as u32);
    (0..total).map(move |mut c| {
        let mut pos = vec![0; arity];
        for slot in pos.iter_mut().rev() {
            *slot = c % m;
            c /= m;
        }
        pos
    })
}

fn grid(sites: &[LatticePoint], arity: usize) -> impl Iterator<Item = Vec<LatticePoint>> + '_ {
    grid_positions(sites.len(), arity).map(move |pos| pos.into_iter().map(|i| sites[i].clone()).collect())
}

fn complex_gaussian(rng: &mut ChaCha8Rng) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

fn unit_vector(m: usize, rng: &mut ChaCha8Rng) -> Vec<Complex64> {
    loop {
        let v: Vec<Complex64> = (0..m).map(|_| complex_gaussian(rng)).collect();
        let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm > 1e-12 {
            return v.into_iter().map(|z| z / norm).collect();
        }
    }
}
