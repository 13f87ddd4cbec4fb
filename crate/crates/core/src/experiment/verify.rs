//! Exact and randomized verification gates.
//!
//! Each check returns a [`Gate`]; the `verify-wick` and `verify-merging`
//! commands run the whole list and succeed only if every gate passes.

use std::f64::consts::FRAC_PI_2;

use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::norms::{merge, tensor_norm, NormOptions};
use crate::sampler::{derive_seed, GaussianField, STREAM_G, STREAM_G_TILDE};
use crate::tensor::{enumerate_partitions, IndexLabel, LabelGroup, LatticePoint, Partition, Tensor};
use crate::wick::{
    exponential_expectation, gaussian_expectation, hermite_poly, laguerre_poly, phi_derivative_check,
    renorm_factor_symbolic, renormalize_symbolic, wick_expectation, ChaosSpec, Poly, Sign, SitePoly,
};
use crate::Result;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Gate {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Gate {
    pub fn new(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            passed,
            detail: detail.into(),
        }
    }
}

impl std::fmt::Display for Gate {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let tag = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "{tag} {}: {}", self.name, self.detail)
    }
}

fn site(terms: &[((u32, u32), i64)]) -> SitePoly {
    SitePoly {
        terms: terms.iter().copied().collect(),
    }
}

/// The four single-site renormalizations `ℒ(σ, μ)` listed for `σ ≤ 4`.
pub fn check_renorm_table() -> Gate {
    let table: [((u32, i32), SitePoly, &str); 4] = [
        ((4, 4), site(&[((4, 0), 1)]), "g^4"),
        ((4, 2), site(&[((3, 1), 1), ((2, 0), -3)]), "g^3 conj(g) - 3 g^2"),
        (
            (4, 0),
            site(&[((2, 2), 1), ((1, 1), -4), ((0, 0), 2)]),
            "g^2 conj(g)^2 - 4 g conj(g) + 2",
        ),
        ((2, 0), site(&[((1, 1), 1), ((0, 0), -1)]), "g conj(g) - 1"),
    ];
    let mut bad = Vec::new();
    for ((sigma, mu), want, text) in &table {
        match renorm_factor_symbolic(*sigma, *mu) {
            Ok(got) if &got == want => {}
            other => bad.push(format!("({sigma},{mu}) expected {text}, got {other:?}")),
        }
    }
    Gate::new(
        "renormalization table",
        bad.is_empty(),
        if bad.is_empty() {
            format!("{} entries exact", table.len())
        } else {
            bad.join("; ")
        },
    )
}

/// Restricted growth strings of length `k` with at most `blocks` values:
/// every collision pattern of `k` points on `blocks` sites, up to relabeling.
pub fn collision_patterns(k: usize, blocks: usize) -> Vec<Vec<usize>> {
    fn rec(k: usize, blocks: usize, used: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for s in 0..(used + 1).min(blocks) {
            cur.push(s);
            rec(k, blocks, used.max(s + 1), cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    if k > 0 {
        rec(k, blocks, 0, &mut Vec::with_capacity(k), &mut out);
    }
    out
}

/// Every sign vector of length `k`.
pub fn sign_patterns(k: usize) -> impl Iterator<Item = Vec<Sign>> {
    (0u32..1 << k).map(move |m| {
        (0..k)
            .map(|i| if m >> i & 1 == 1 { Sign::Minus } else { Sign::Plus })
            .collect()
    })
}

/// `E[ℒ(g_{n_J}^{ι_J})] = 0` exactly for all specs of order `≤ max_k` on at
/// most `max_sites` distinct sites.
pub fn check_zero_expectation(max_k: usize, max_sites: usize) -> Gate {
    let mut cases = 0usize;
    let mut bad = Vec::new();
    for k in 1..=max_k {
        for pattern in collision_patterns(k, max_sites) {
            let points: Vec<LatticePoint> = pattern.iter().map(|&s| LatticePoint(vec![s as i32])).collect();
            for signs in sign_patterns(k) {
                cases += 1;
                let spec = ChaosSpec::new(points.clone(), signs.clone()).expect("non-empty spec");
                let ok = renormalize_symbolic(&spec)
                    .map(|p| wick_expectation(&p).is_zero())
                    .unwrap_or(false);
                if !ok && bad.len() < 5 {
                    bad.push(format!("{pattern:?} {signs:?}"));
                }
            }
        }
    }
    Gate::new(
        "zero expectation",
        bad.is_empty(),
        if bad.is_empty() {
            format!("{cases} specs (k <= {max_k}, <= {max_sites} sites) have exact mean 0")
        } else {
            format!("nonzero mean for {}", bad.join(", "))
        },
    )
}

/// The listed `L_0..L_4` (α = 0) and `H_0..H_4`.
pub fn check_listed_polynomials() -> Gate {
    let laguerre = [
        Poly::from_ints(&[1], 1),
        Poly::from_ints(&[1, -1], 1),
        Poly::from_ints(&[2, -4, 1], 2),
        Poly::from_ints(&[6, -18, 9, -1], 6),
        Poly::from_ints(&[24, -96, 72, -16, 1], 24),
    ];
    let hermite = [
        Poly::from_ints(&[1], 1),
        Poly::from_ints(&[0, 1], 1),
        Poly::from_ints(&[-1, 0, 1], 1),
        Poly::from_ints(&[0, -3, 0, 1], 1),
        Poly::from_ints(&[3, 0, -6, 0, 1], 1),
    ];
    let mut bad = Vec::new();
    for (k, want) in laguerre.iter().enumerate() {
        if &laguerre_poly(k, 0) != want {
            bad.push(format!("L_{k} = {}", laguerre_poly(k, 0)));
        }
    }
    for (n, want) in hermite.iter().enumerate() {
        if &hermite_poly(n) != want {
            bad.push(format!("H_{n} = {}", hermite_poly(n)));
        }
    }
    Gate::new(
        "listed polynomials",
        bad.is_empty(),
        if bad.is_empty() {
            "L_0..L_4 and H_0..H_4 exact".to_string()
        } else {
            bad.join("; ")
        },
    )
}

/// `d/dx L_m^α = -L_{m-1}^{α+1}` and `d/dx [x^α L_m^α] = (m+α) x^{α-1} L_m^{α-1}`
/// as polynomial identities for `m, α ≤ max`.
pub fn check_laguerre_derivatives(max: usize) -> Gate {
    let mut bad = Vec::new();
    let mut cases = 0;
    for m in 0..=max {
        for alpha in 0..=max as i64 {
            cases += 2;
            let d = laguerre_poly(m, alpha).derivative();
            let want = if m == 0 {
                Poly::zero()
            } else {
                -&laguerre_poly(m - 1, alpha + 1)
            };
            if d != want {
                bad.push(format!("first identity m={m} α={alpha}"));
            }

            let lhs = laguerre_poly(m, alpha).shift_up(alpha as usize).derivative();
            let inner = laguerre_poly(m, alpha - 1).scale(&BigRational::from_integer((m as i64 + alpha).into()));
            let rhs = if alpha >= 1 {
                Some(inner.shift_up(alpha as usize - 1))
            } else {
                inner.div_x()
            };
            if rhs.as_ref() != Some(&lhs) {
                bad.push(format!("second identity m={m} α={alpha}"));
            }
        }
    }
    Gate::new(
        "laguerre derivative identities",
        bad.is_empty(),
        if bad.is_empty() {
            format!("{cases} identities exact (m, α <= {max})")
        } else {
            bad.join("; ")
        },
    )
}

/// Orthogonality of `L_m` against the exponential weight and of `H_n` against
/// the Gaussian one, plus `H_n' = n H_{n-1}`.
pub fn check_orthogonality(max: usize) -> Gate {
    let mut bad = Vec::new();
    for m in 0..=max {
        for n in 0..=max {
            let want = if m == n {
                BigRational::one()
            } else {
                BigRational::zero()
            };
            if exponential_expectation(&(&laguerre_poly(m, 0) * &laguerre_poly(n, 0))) != want {
                bad.push(format!("<L_{m}, L_{n}>"));
            }
            let hh = gaussian_expectation(&(&hermite_poly(m) * &hermite_poly(n)));
            let want = if m == n {
                BigRational::from_integer((1..=m as u64).product::<u64>().into())
            } else {
                BigRational::zero()
            };
            if hh != want {
                bad.push(format!("<H_{m}, H_{n}>"));
            }
        }
        if m >= 1 {
            let want = hermite_poly(m - 1).scale(&BigRational::from_integer((m as i64).into()));
            if hermite_poly(m).derivative() != want {
                bad.push(format!("H_{m}' != {m} H_{}", m - 1));
            }
        }
    }
    Gate::new(
        "orthogonality",
        bad.is_empty(),
        if bad.is_empty() {
            format!("Laguerre and Hermite orthogonal up to degree {max}")
        } else {
            bad.join("; ")
        },
    )
}

/// Random spec for the derivative identity; draws from three sites so that
/// pairings and higher collisions are common.
pub fn random_chaos_spec(rng: &mut impl Rng, max_k: usize) -> ChaosSpec {
    let k = rng.random_range(1..=max_k);
    let points = (0..k).map(|_| LatticePoint(vec![rng.random_range(-1..=1)])).collect();
    let signs = (0..k)
        .map(|_| if rng.random::<bool>() { Sign::Plus } else { Sign::Minus })
        .collect();
    ChaosSpec::new(points, signs).expect("non-empty spec")
}

/// Finite-difference φ-derivative of the renormalized product against the
/// single-factor sum, on `cases` random `(spec, φ, seed)`.
pub fn check_phi_derivative(cases: usize, step: f64, tol: f64, seed: u64) -> Gate {
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, &[0x7068_6931]));
    let mut worst = 0.0f64;
    let mut pairings = 0;
    for _ in 0..cases {
        let spec = random_chaos_spec(&mut rng, 5);
        if has_pairing(&spec) {
            pairings += 1;
        }
        let phi = rng.random_range(0.05..FRAC_PI_2 - 0.05);
        let g = GaussianField::complex(rng.random(), STREAM_G, 1);
        let gt = g.with_stream(STREAM_G_TILDE);
        worst = worst.max(phi_derivative_check(&spec, &g, &gt, phi, step).relative_error);
    }
    Gate::new(
        "phi derivative identity",
        worst <= tol,
        format!("{cases} cases ({pairings} with pairings), max relative error {worst:.3e} (tol {tol:e})"),
    )
}

fn has_pairing(spec: &ChaosSpec) -> bool {
    (0..spec.order())
        .any(|i| (i + 1..spec.order()).any(|j| spec.points[i] == spec.points[j] && spec.signs[i] != spec.signs[j]))
}

/// Sparse tensor with `nnz` random complex entries (before deduplication).
pub fn random_tensor(rng: &mut impl Rng, labels: Vec<IndexLabel>, d: usize, n: u32, nnz: usize) -> Result<Tensor> {
    let ball = crate::tensor::l1_ball(d, n);
    let arity = labels.len();
    let entries: Vec<_> = (0..nnz)
        .map(|_| {
            let idx = (0..arity)
                .map(|_| ball[rng.random_range(0..ball.len())].clone())
                .collect();
            let v = Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
            (idx, v)
        })
        .collect();
    Tensor::new(labels, d, n, entries)
}

fn named(prefix: &str, count: usize, group: LabelGroup) -> Vec<IndexLabel> {
    (1..=count)
        .map(|i| IndexLabel::new(format!("{prefix}{i}"), group))
        .collect()
}

fn relative_gap(small: f64, large: f64) -> f64 {
    (large - small) / large.abs().max(small.abs()).max(f64::MIN_POSITIVE)
}

/// `‖merge(h1, h2)‖_{A1A2→B1B2} ≤ ‖h1‖_{A1→B1C} ‖h2‖_{A2C→B2}` on random pairs.
pub fn check_merging(cases: usize, rel_tol: f64, seed: u64) -> Result<Gate> {
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, &[0x6d65_7267]));
    let opts = NormOptions::default();
    let mut worst = f64::INFINITY;
    for _ in 0..cases {
        let d = rng.random_range(1..=2);
        let n = rng.random_range(1..=2);
        let a1 = named("x", rng.random_range(0..=1), LabelGroup::A);
        let b1 = named("y", rng.random_range(0..=2), LabelGroup::B);
        let a2 = named("u", rng.random_range(0..=2), LabelGroup::A);
        let b2 = named("v", rng.random_range(0..=1), LabelGroup::B);
        let c = named("c", rng.random_range(1..=2), LabelGroup::J);
        let l1: Vec<IndexLabel> = a1.iter().chain(&b1).chain(&c).cloned().collect();
        let l2: Vec<IndexLabel> = a2.iter().chain(&c).chain(&b2).cloned().collect();
        let nnz1 = rng.random_range(1..=20);
        let nnz2 = rng.random_range(1..=20);
        let h1 = random_tensor(&mut rng, l1, d, n, nnz1)?;
        let h2 = random_tensor(&mut rng, l2, d, n, nnz2)?;
        let shared: Vec<&str> = c.iter().map(|l| l.name.as_str()).collect();
        let m = merge(&h1, &h2, &shared)?;

        let lhs = tensor_norm(
            &m,
            &Partition::new(
                a1.iter().chain(&a2).cloned().collect(),
                b1.iter().chain(&b2).cloned().collect(),
            )?,
            &opts,
        )?
        .value;
        let n1 = tensor_norm(
            &h1,
            &Partition::new(a1.clone(), b1.iter().chain(&c).cloned().collect())?,
            &opts,
        )?
        .value;
        let n2 = tensor_norm(
            &h2,
            &Partition::new(a2.iter().chain(&c).cloned().collect(), b2.clone())?,
            &opts,
        )?
        .value;
        worst = worst.min(relative_gap(lhs, n1 * n2));
    }
    Ok(Gate::new(
        "merging estimate",
        worst >= -rel_tol,
        format!("{cases} random pairs, min relative slack {worst:.3e} (tol -{rel_tol:e})"),
    ))
}

/// `‖h‖_{X→Y} = ‖h‖_{Y→X}` and `‖h‖ = ‖h̄‖` over every partition of random
/// tensors with up to `max_labels` labels.
pub fn check_duality(cases: usize, max_labels: usize, rel_tol: f64, seed: u64) -> Result<Gate> {
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, &[0x6475_616c]));
    let opts = NormOptions::default();
    let mut worst = 0.0f64;
    let mut partitions = 0usize;
    for _ in 0..cases {
        let count = rng.random_range(1..=max_labels);
        let labels = named("l", count, LabelGroup::A);
        let d = rng.random_range(1..=2);
        let nnz = rng.random_range(1..=30);
        let h = random_tensor(&mut rng, labels.clone(), d, 2, nnz)?;
        let hc = h.conjugate();
        for p in enumerate_partitions(&labels, max_labels)? {
            partitions += 1;
            let a = tensor_norm(&h, &p, &opts)?.value;
            let b = tensor_norm(&h, &p.transposed(), &opts)?.value;
            let c = tensor_norm(&hc, &p, &opts)?.value;
            worst = worst.max(relative_gap(a, b).abs()).max(relative_gap(a, c).abs());
        }
    }
    Ok(Gate::new(
        "duality",
        worst <= rel_tol,
        format!("{cases} tensors, {partitions} partitions, max relative gap {worst:.3e} (tol {rel_tol:e})"),
    ))
}

pub fn verify_wick(cases: usize, step: f64, tol: f64, seed: u64) -> Vec<Gate> {
    vec![
        check_renorm_table(),
        check_zero_expectation(6, 3),
        check_listed_polynomials(),
        check_laguerre_derivatives(5),
        check_orthogonality(6),
        check_phi_derivative(cases, step, tol, seed),
    ]
}

pub fn verify_merging(cases: usize, rel_tol: f64, seed: u64) -> Vec<Gate> {
    let wrap = |name: &str, r: Result<Gate>| r.unwrap_or_else(|e| Gate::new(name, false, e.to_string()));
    vec![
        wrap("merging estimate", check_merging(cases, rel_tol, seed)),
        wrap("duality", check_duality(cases, 6, rel_tol, seed)),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn collision_patterns_are_set_partitions() {
        // Stirling numbers: S(4,1) + S(4,2) + S(4,3) = 1 + 7 + 6
        assert_eq!(collision_patterns(4, 3).len(), 14);
        assert_eq!(collision_patterns(3, 5).len(), 5);
        assert_eq!(collision_patterns(1, 3), vec![vec![0]]);
        assert!(collision_patterns(5, 2)
            .iter()
            .all(|p| p[0] == 0 && p.iter().all(|&s| s < 2)));
    }

    #[test]
    fn small_gates_pass() {
        assert!(check_renorm_table().passed);
        assert!(check_zero_expectation(4, 2).passed);
        assert!(check_listed_polynomials().passed);
        assert!(check_laguerre_derivatives(3).passed);
        assert!(check_orthogonality(3).passed);
        assert!(check_phi_derivative(10, 1e-5, 1e-6, 1).passed);
        assert!(check_merging(20, 1e-8, 1).unwrap().passed);
        assert!(check_duality(10, 4, 1e-8, 1).unwrap().passed);
    }
}
