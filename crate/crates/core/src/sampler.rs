//! Counter-based Gaussian fields over `Z^d`.
//!
//! A [`GaussianField`] is a descriptor, not a generator: `sample(n)` hashes
//! `(master_seed, stream, n)` into two 64-bit words and feeds them to a
//! Box-Muller transform. The value at a site therefore never depends on call
//! order, which keeps parallel Monte Carlo reproducible.
//!
//! Complex samples use `g = (ξ₁ + iξ₂)/√2`, so `E|g|² = 1` and `|g|²` is
//! exponentially distributed with mean one.

use std::f64::consts::TAU;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Name recorded in result metadata for replay.
pub const TRANSFORM_NAME: &str = "splitmix64-chain/box-muller";

/// Stream of the primary field `g`.
pub const STREAM_G: u32 = 0;
/// Stream of the independent copy `g̃`.
pub const STREAM_G_TILDE: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FieldKind {
    Complex,
    Real,
}

/// Anything that assigns a complex value to each lattice site.
pub trait Field: Sync {
    fn value(&self, n: &[i32]) -> Complex64;
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GaussianField {
    pub master_seed: u64,
    pub stream: u32,
    pub kind: FieldKind,
    pub dim: usize,
}

impl GaussianField {
    pub fn complex(master_seed: u64, stream: u32, dim: usize) -> Self {
        Self {
            master_seed,
            stream,
            kind: FieldKind::Complex,
            dim,
        }
    }

    pub fn real(master_seed: u64, stream: u32, dim: usize) -> Self {
        Self {
            master_seed,
            stream,
            kind: FieldKind::Real,
            dim,
        }
    }

    /// The same family with another stream, e.g. `g̃` from `g`.
    pub fn with_stream(self, stream: u32) -> Self {
        Self { stream, ..self }
    }

    /// Standard Gaussian at `n`. Real fields return a zero imaginary part.
    pub fn sample(&self, n: &[i32]) -> Complex64 {
        debug_assert_eq!(n.len(), self.dim, "lattice point dimension");
        let (u1, u2) = self.words(n);
        // u in (0, 1], so ln u is finite
        let u = ((u1 >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64);
        let theta = TAU * ((u2 >> 11) as f64 * (1.0 / (1u64 << 53) as f64));
        match self.kind {
            FieldKind::Complex => Complex64::from_polar((-u.ln()).sqrt(), theta),
            FieldKind::Real => Complex64::new((-2.0 * u.ln()).sqrt() * theta.cos(), 0.0),
        }
    }

    pub fn sample_real(&self, n: &[i32]) -> f64 {
        self.sample(n).re
    }

    fn words(&self, n: &[i32]) -> (u64, u64) {
        let mut h = absorb(self.master_seed ^ 0x6a09_e667_f3bc_c908, self.stream as u64);
        h = absorb(h, n.len() as u64);
        for &c in n {
            h = absorb(h, zigzag(c));
        }
        (mix64(h ^ 0x243f_6a88_85a3_08d3), mix64(h ^ 0x1319_8a2e_0370_7344))
    }
}

impl Field for GaussianField {
    fn value(&self, n: &[i32]) -> Complex64 {
        self.sample(n)
    }
}

/// `g(φ) = sin(φ) g + cos(φ) g̃`.
#[derive(Clone, Copy, Debug)]
pub struct Interpolated<'a, F: Field, G: Field> {
    pub g: &'a F,
    pub g_tilde: &'a G,
    pub phi: f64,
}

impl<F: Field, G: Field> Field for Interpolated<'_, F, G> {
    fn value(&self, n: &[i32]) -> Complex64 {
        self.phi.sin() * self.g.value(n) + self.phi.cos() * self.g_tilde.value(n)
    }
}

/// `∂φ g(φ) = cos(φ) g − sin(φ) g̃`.
#[derive(Clone, Copy, Debug)]
pub struct PhiDerivative<'a, F: Field, G: Field> {
    pub g: &'a F,
    pub g_tilde: &'a G,
    pub phi: f64,
}

impl<F: Field, G: Field> Field for PhiDerivative<'_, F, G> {
    fn value(&self, n: &[i32]) -> Complex64 {
        self.phi.cos() * self.g.value(n) - self.phi.sin() * self.g_tilde.value(n)
    }
}

pub fn interpolate<'a, F: Field, G: Field>(g: &'a F, g_tilde: &'a G, phi: f64) -> Interpolated<'a, F, G> {
    Interpolated { g, g_tilde, phi }
}

pub fn phi_derivative_field<'a, F: Field, G: Field>(g: &'a F, g_tilde: &'a G, phi: f64) -> PhiDerivative<'a, F, G> {
    PhiDerivative { g, g_tilde, phi }
}

/// Master seed of Monte Carlo sample `index` within a run seeded by `seed`.
pub fn sample_seed(seed: u64, index: u64) -> u64 {
    absorb(absorb(seed, 0x5a4d_504c_4520_4944), index)
}

/// Derives a seed from a base seed and a sequence of words.
pub fn derive_seed(seed: u64, words: &[u64]) -> u64 {
    words.iter().fold(mix64(seed), |h, &w| absorb(h, w))
}

fn zigzag(c: i32) -> u64 {
    ((c << 1) ^ (c >> 31)) as u32 as u64
}

/// SplitMix64 finalizer.
pub(crate) fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn absorb(h: u64, word: u64) -> u64 {
    mix64(h.rotate_left(23) ^ mix64(word.wrapping_add(0x9e37_79b9_7f4a_7c15)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;
    use std::f64::consts::FRAC_PI_2;

    #[test]
    fn zigzag_is_injective_on_small_range() {
        let codes: HashSet<u64> = (-1000..=1000).map(zigzag).collect();
        assert_eq!(codes.len(), 2001);
        assert_eq!(zigzag(0), 0);
        assert_eq!(zigzag(-1), 1);
        assert_eq!(zigzag(1), 2);
    }

    #[test]
    fn deterministic_and_order_independent() {
        let f = GaussianField::complex(42, 0, 2);
        let a = f.sample(&[3, -1]);
        let _ = f.sample(&[0, 0]);
        assert_eq!(a, f.sample(&[3, -1]));
        assert_eq!(a, GaussianField::complex(42, 0, 2).sample(&[3, -1]));
        assert_ne!(a, f.with_stream(1).sample(&[3, -1]));
        assert_ne!(a, GaussianField::complex(43, 0, 2).sample(&[3, -1]));
    }

    #[test]
    fn dimension_is_part_of_the_key() {
        // [0] and [0, 0] must not collide
        let a = GaussianField::complex(1, 0, 1).sample(&[0]);
        let b = GaussianField::complex(1, 0, 2).sample(&[0, 0]);
        assert_ne!(a, b);
    }

    #[test]
    fn real_field_has_no_imaginary_part() {
        let f = GaussianField::real(9, 0, 1);
        assert!((0..100).all(|i| f.sample(&[i]).im == 0.0));
    }

    #[test]
    fn interpolation_endpoints() {
        let g = GaussianField::complex(5, STREAM_G, 1);
        let gt = g.with_stream(STREAM_G_TILDE);
        for n in -5..=5 {
            assert_eq!(interpolate(&g, &gt, 0.0).value(&[n]), gt.sample(&[n]));
            let top = interpolate(&g, &gt, FRAC_PI_2).value(&[n]);
            assert!((top - g.sample(&[n])).norm() <= 1e-15 * (1.0 + top.norm()));
            assert_eq!(phi_derivative_field(&g, &gt, 0.0).value(&[n]), g.sample(&[n]));
        }
    }

    #[test]
    fn derivative_matches_finite_difference() {
        let g = GaussianField::complex(11, STREAM_G, 1);
        let gt = g.with_stream(STREAM_G_TILDE);
        let (phi, h) = (0.7, 1e-6);
        for n in 0..20 {
            let fd =
                (interpolate(&g, &gt, phi + h).value(&[n]) - interpolate(&g, &gt, phi - h).value(&[n])) / (2.0 * h);
            let exact = phi_derivative_field(&g, &gt, phi).value(&[n]);
            assert!((fd - exact).norm() <= 1e-8, "{fd} vs {exact}");
        }
    }
}
