//! Wick renormalization of Gaussian products.
//!
//! For complex Gaussians the product `Π_j g_{n_j}^{ι_j}` is renormalized site
//! by site. At a site appearing `σ` times with signed count `μ`, the factor is
//!
//! ```text
//! ℒ(σ, μ, g) = (-1)^m m! L_m^{|μ|}(|g|²) g^μ,    m = (σ - |μ|)/2,
//! ```
//!
//! with `g^μ = ḡ^{|μ|}` for negative `μ`. For real Gaussians the factor is the
//! probabilists' Hermite polynomial `H_σ(g)`.
//!
//! Everything here exists twice: exact (integer or rational coefficients, used
//! by the moment oracle) and numeric (used when sampling).

mod poly;

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

pub use poly::Poly;
use poly::{factorial, rat};

use crate::sampler::{interpolate, phi_derivative_field, Field};
use crate::tensor::LatticePoint;
use crate::{Error, Result};

/// `ι ∈ {+1, -1}`: `g^{+1} = g`, `g^{-1} = ḡ`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Sign {
    #[serde(rename = "+")]
    Plus,
    #[serde(rename = "-")]
    Minus,
}

impl Sign {
    pub fn value(self) -> i32 {
        match self {
            Sign::Plus => 1,
            Sign::Minus => -1,
        }
    }

    pub fn flip(self) -> Self {
        match self {
            Sign::Plus => Sign::Minus,
            Sign::Minus => Sign::Plus,
        }
    }

    /// `z^ι`: `z` itself or its conjugate.
    pub fn apply(self, z: Complex64) -> Complex64 {
        match self {
            Sign::Plus => z,
            Sign::Minus => z.conj(),
        }
    }

    /// `+ - + - ...`, the default sign pattern of the experiments.
    pub fn alternating(k: usize) -> Vec<Sign> {
        (0..k)
            .map(|i| if i % 2 == 0 { Sign::Plus } else { Sign::Minus })
            .collect()
    }
}

/// The factors `(g_{n_1}^{ι_1}, ..., g_{n_k}^{ι_k})` of a Gaussian product.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChaosSpec {
    pub points: Vec<LatticePoint>,
    pub signs: Vec<Sign>,
}

impl ChaosSpec {
    pub fn new(points: Vec<LatticePoint>, signs: Vec<Sign>) -> Result<Self> {
        if points.len() != signs.len() {
            return Err(Error::ChaosSpec(format!(
                "{} points but {} signs",
                points.len(),
                signs.len()
            )));
        }
        if points.is_empty() {
            return Err(Error::ChaosSpec("chaos order must be at least 1".into()));
        }
        if points.iter().any(|p| p.dim() != points[0].dim()) {
            return Err(Error::ChaosSpec("points of different dimension".into()));
        }
        Ok(Self { points, signs })
    }

    pub fn order(&self) -> usize {
        self.points.len()
    }

    /// The spec with factor `j` (0-based) removed. May be empty.
    pub fn without(&self, j: usize) -> (Vec<LatticePoint>, Vec<Sign>) {
        let mut points = self.points.clone();
        let mut signs = self.signs.clone();
        points.remove(j);
        signs.remove(j);
        (points, signs)
    }

    /// Every sign flipped.
    pub fn conjugated(&self) -> Self {
        Self {
            points: self.points.clone(),
            signs: self.signs.iter().map(|s| s.flip()).collect(),
        }
    }
}

/// Multiplicity `σ` and signed multiplicity `μ` of one lattice site.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SiteProfile {
    pub site: LatticePoint,
    pub sigma: u32,
    pub mu: i32,
}

impl SiteProfile {
    pub fn new(site: LatticePoint, sigma: u32, mu: i32) -> Result<Self> {
        check_profile(sigma, mu)?;
        Ok(Self { site, sigma, mu })
    }
}

fn check_profile(sigma: u32, mu: i32) -> Result<()> {
    if mu.unsigned_abs() > sigma || !(sigma - mu.unsigned_abs()).is_multiple_of(2) {
        return Err(Error::SiteProfile { sigma, mu });
    }
    Ok(())
}

/// Site profiles of a product, one per distinct site, in order of first
/// appearance. Sites not in the product are omitted (their factor is 1).
pub fn site_profiles(spec: &ChaosSpec) -> Vec<SiteProfile> {
    profiles_of(&spec.points, &spec.signs)
}

fn profiles_of(points: &[LatticePoint], signs: &[Sign]) -> Vec<SiteProfile> {
    let mut out: Vec<SiteProfile> = Vec::new();
    for (p, s) in points.iter().zip(signs) {
        match out.iter_mut().find(|sp| &sp.site == p) {
            Some(sp) => {
                sp.sigma += 1;
                sp.mu += s.value();
            }
            None => out.push(SiteProfile {
                site: p.clone(),
                sigma: 1,
                mu: s.value(),
            }),
        }
    }
    out
}

/// Generalized Laguerre polynomial `L_k^α` with exact coefficients, from
/// `L_0 = 1`, `L_1 = 1 + α - x` and the three-term recurrence.
///
/// Negative `α` is accepted; the recurrence stays polynomial.
pub fn laguerre_poly(k: usize, alpha: i64) -> Poly {
    let a = rat(alpha);
    let mut prev = Poly::one();
    if k == 0 {
        return prev;
    }
    let mut cur = Poly::from_coeffs(vec![rat(1) + &a, rat(-1)]);
    for m in 1..k {
        // L_{m+1} = ((2m + 1 + α - x) L_m - (m + α) L_{m-1}) / (m + 1)
        let lin = Poly::from_coeffs(vec![rat(2 * m as i64 + 1) + &a, rat(-1)]);
        let next =
            (&(&lin * &cur) - &prev.scale(&(rat(m as i64) + &a))).scale(&(BigRational::one() / rat(m as i64 + 1)));
        prev = std::mem::replace(&mut cur, next);
    }
    cur
}

/// `L_k^α(x)` in floating point by the same recurrence.
pub fn laguerre(k: usize, alpha: f64, x: f64) -> f64 {
    if k == 0 {
        return 1.0;
    }
    let (mut prev, mut cur) = (1.0, 1.0 + alpha - x);
    for m in 1..k {
        let m = m as f64;
        let next = ((2.0 * m + 1.0 + alpha - x) * cur - (m + alpha) * prev) / (m + 1.0);
        prev = cur;
        cur = next;
    }
    cur
}

/// Probabilists' Hermite polynomial `He_n`, exact, from
/// `H_{n+1} = x H_n - n H_{n-1}`.
pub fn hermite_poly(n: usize) -> Poly {
    let mut prev = Poly::one();
    if n == 0 {
        return prev;
    }
    let mut cur = Poly::x();
    for m in 1..n {
        let next = &(&Poly::x() * &cur) - &prev.scale(&rat(m as i64));
        prev = std::mem::replace(&mut cur, next);
    }
    cur
}

pub fn hermite(n: usize, x: f64) -> f64 {
    if n == 0 {
        return 1.0;
    }
    let (mut prev, mut cur) = (1.0, x);
    for m in 1..n {
        let next = x * cur - m as f64 * prev;
        prev = cur;
        cur = next;
    }
    cur
}

/// A polynomial in `g, ḡ` at one site, with integer coefficients keyed by the
/// exponent pair `(a, b)` of `g^a ḡ^b`.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SitePoly {
    pub terms: BTreeMap<(u32, u32), i64>,
}

impl SitePoly {
    pub fn one() -> Self {
        Self {
            terms: BTreeMap::from([((0, 0), 1)]),
        }
    }

    pub fn coeff(&self, a: u32, b: u32) -> i64 {
        self.terms.get(&(a, b)).copied().unwrap_or(0)
    }

    /// Largest `a + b` among the nonzero terms.
    pub fn degree(&self) -> Option<u32> {
        self.terms.keys().map(|(a, b)| a + b).max()
    }

    /// Swaps `g` and `ḡ`. Coefficients are real, so this is complex conjugation.
    pub fn conjugate(&self) -> Self {
        Self {
            terms: self.terms.iter().map(|(&(a, b), &c)| ((b, a), c)).collect(),
        }
    }

    pub fn eval(&self, g: Complex64) -> Complex64 {
        self.terms
            .iter()
            .map(|(&(a, b), &c)| c as f64 * g.powu(a) * g.conj().powu(b))
            .sum()
    }

    /// Wirtinger derivative `∂/∂g`.
    pub fn d_g(&self) -> Self {
        Self {
            terms: self
                .terms
                .iter()
                .filter(|((a, _), _)| *a > 0)
                .map(|(&(a, b), &c)| ((a - 1, b), c * a as i64))
                .collect(),
        }
    }

    /// `E[P(g, ḡ)]` for a standard complex Gaussian: `E[g^a ḡ^b] = δ_{ab} a!`.
    pub fn expectation(&self) -> BigInt {
        self.terms
            .iter()
            .filter(|((a, b), _)| a == b)
            .map(|(&(a, _), &c)| BigInt::from(c) * factorial(a as u64))
            .sum()
    }
}

/// Product over sites of single-site polynomials.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct WickPolynomial {
    pub factors: Vec<SiteFactor>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SiteFactor {
    pub site: LatticePoint,
    #[serde(with = "site_terms")]
    pub terms: SitePoly,
}

mod site_terms {
    use super::SitePoly;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(p: &SitePoly, s: S) -> Result<S::Ok, S::Error> {
        let v: Vec<(u32, u32, i64)> = p.terms.iter().map(|(&(a, b), &c)| (a, b, c)).collect();
        v.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<SitePoly, D::Error> {
        let v: Vec<(u32, u32, i64)> = Vec::deserialize(d)?;
        let mut p = SitePoly::default();
        for (a, b, c) in v {
            *p.terms.entry((a, b)).or_insert(0) += c;
        }
        p.terms.retain(|_, c| *c != 0);
        Ok(p)
    }
}

impl WickPolynomial {
    pub fn eval(&self, field: &impl Field) -> Complex64 {
        self.factors
            .iter()
            .map(|f| f.terms.eval(field.value(&f.site)))
            .product()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

/// Exact single-site renormalization `ℒ(σ, μ, ·)` as a polynomial in `g, ḡ`.
pub fn renorm_factor_symbolic(sigma: u32, mu: i32) -> Result<SitePoly> {
    check_profile(sigma, mu)?;
    let alpha = mu.unsigned_abs();
    let m = (sigma - alpha) / 2;
    let mut prefactor = rat(1) * BigRational::from_integer(factorial(m as u64));
    if m % 2 == 1 {
        prefactor = -prefactor;
    }
    let l = laguerre_poly(m as usize, alpha as i64).scale(&prefactor);
    let coeffs = l.to_i64_coeffs().ok_or(Error::CoefficientOverflow)?;
    let terms = coeffs
        .into_iter()
        .enumerate()
        .filter(|(_, c)| *c != 0)
        .map(|(i, c)| {
            let i = i as u32;
            let key = if mu >= 0 { (i + alpha, i) } else { (i, i + alpha) };
            (key, c)
        })
        .collect();
    Ok(SitePoly { terms })
}

/// Exact renormalization of the whole product.
pub fn renormalize_symbolic(spec: &ChaosSpec) -> Result<WickPolynomial> {
    let factors = site_profiles(spec)
        .into_iter()
        .map(|sp| {
            Ok(SiteFactor {
                terms: renorm_factor_symbolic(sp.sigma, sp.mu)?,
                site: sp.site,
            })
        })
        .collect::<Result<_>>()?;
    Ok(WickPolynomial { factors })
}

/// `E` of a product polynomial under independent standard complex Gaussians.
pub fn wick_expectation(poly: &WickPolynomial) -> BigRational {
    // factors are independent only if their sites are distinct
    let mut merged: Vec<(&LatticePoint, SitePoly)> = Vec::new();
    for f in &poly.factors {
        match merged.iter_mut().find(|(s, _)| *s == &f.site) {
            Some((_, p)) => *p = site_product(p, &f.terms),
            None => merged.push((&f.site, f.terms.clone())),
        }
    }
    let e: BigInt = merged.iter().map(|(_, p)| p.expectation()).product();
    BigRational::from_integer(e)
}

fn site_product(p: &SitePoly, q: &SitePoly) -> SitePoly {
    let mut out = SitePoly::default();
    for (&(a, b), &c) in &p.terms {
        for (&(a2, b2), &c2) in &q.terms {
            *out.terms.entry((a + a2, b + b2)).or_insert(0) += c * c2;
        }
    }
    out.terms.retain(|_, c| *c != 0);
    out
}

/// `E[P(|g|²)]` for a polynomial in `x = |g|² ~ Exp(1)`: `E[x^i] = i!`.
pub fn exponential_expectation(p: &Poly) -> BigRational {
    p.apply_moments(|i| BigRational::from_integer(factorial(i as u64)))
}

/// `E[P(X)]` for a standard real Gaussian: `E[X^{2i}] = (2i - 1)!!`, odd
/// moments vanish.
pub fn gaussian_expectation(p: &Poly) -> BigRational {
    p.apply_moments(|i| {
        if i % 2 == 1 {
            BigRational::zero()
        } else {
            let dfact: BigInt = (1..i as u64).step_by(2).map(BigInt::from).product();
            BigRational::from_integer(dfact)
        }
    })
}

/// Numeric `ℒ(σ, μ, g)`.
pub fn renorm_factor(sigma: u32, mu: i32, g: Complex64) -> Complex64 {
    debug_assert!(check_profile(sigma, mu).is_ok());
    let alpha = mu.unsigned_abs();
    let m = (sigma - alpha) / 2;
    let mut pre: f64 = (1..=m).map(f64::from).product();
    if m % 2 == 1 {
        pre = -pre;
    }
    let power = if mu >= 0 { g.powu(alpha) } else { g.conj().powu(alpha) };
    pre * laguerre(m as usize, alpha as f64, g.norm_sqr()) * power
}

fn renorm_points(points: &[LatticePoint], signs: &[Sign], field: &impl Field) -> Complex64 {
    profiles_of(points, signs)
        .iter()
        .map(|sp| renorm_factor(sp.sigma, sp.mu, field.value(&sp.site)))
        .product()
}

/// `ℒ(g_{n_J}^{ι_J})` evaluated on a field.
pub fn renorm_evaluate(spec: &ChaosSpec, field: &impl Field) -> Complex64 {
    renorm_points(&spec.points, &spec.signs, field)
}

/// Real-case renormalization `Π_n H_{σ(n)}(g_n)`; reads the real part of the
/// field.
pub fn hermite_renorm_evaluate(points: &[LatticePoint], field: &impl Field) -> f64 {
    let signs = vec![Sign::Plus; points.len()];
    profiles_of(points, &signs)
        .iter()
        .map(|sp| hermite(sp.sigma as usize, field.value(&sp.site).re))
        .product()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PhiDerivativeCheck {
    /// Central finite difference of `ℒ(g(φ))`.
    pub lhs: Complex64,
    /// `Σ_j ∂φ[g_{n_j}^{ι_j}(φ)] ℒ(g_{n_{J∖j}}^{ι_{J∖j}}(φ))`.
    pub rhs: Complex64,
    /// `|lhs - rhs|` over the scale `max(|rhs|, Σ_j |term_j|)`.
    pub relative_error: f64,
}

/// Compares the φ-derivative of the renormalized product along
/// `g(φ) = sin φ g + cos φ g̃` with the sum of single-factor derivatives.
///
/// The error is relative to the sum of the moduli of the individual terms so
/// that cancellation in the sum does not blow up the ratio.
pub fn phi_derivative_check(
    spec: &ChaosSpec,
    g: &impl Field,
    g_tilde: &impl Field,
    phi: f64,
    step: f64,
) -> PhiDerivativeCheck {
    let at = |phi: f64| renorm_evaluate(spec, &interpolate(g, g_tilde, phi));
    let lhs = (at(phi + step) - at(phi - step)) / (2.0 * step);

    let gp = interpolate(g, g_tilde, phi);
    let dg = phi_derivative_field(g, g_tilde, phi);
    let mut rhs = Complex64::zero();
    let mut scale = 0.0;
    for j in 0..spec.order() {
        let (pts, sgn) = spec.without(j);
        let term = spec.signs[j].apply(dg.value(&spec.points[j])) * renorm_points(&pts, &sgn, &gp);
        scale += term.norm();
        rhs += term;
    }
    let scale = scale.max(rhs.norm());
    let diff = (lhs - rhs).norm();
    PhiDerivativeCheck {
        lhs,
        rhs,
        relative_error: if scale > 0.0 { diff / scale } else { diff },
    }
}
