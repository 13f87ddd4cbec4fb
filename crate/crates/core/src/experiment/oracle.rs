//! Independent order-statistics oracle for the diagonal Gaussian case.
//!
//! For `X = Σ_n g_n e_n e_nᵀ` the operator norm is `max_n |g_n|`, so
//! `E‖X‖^p` can be sampled directly from `M` i.i.d. complex Gaussians. The
//! draws use a ChaCha stream and the `rand_distr` normal sampler, sharing
//! nothing with the counter-based field used by the estimator.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleEstimate {
    pub p: f64,
    /// `E[max_n |g_n|^p]^{1/p}`.
    pub value: f64,
    pub stderr: f64,
}

/// `max_{n<m} |g_n|` for `samples` independent draws.
pub fn max_modulus_samples(m: usize, samples: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..samples)
        .map(|_| {
            let mut best = 0.0f64;
            for _ in 0..m {
                let re: f64 = rng.sample(StandardNormal);
                let im: f64 = rng.sample(StandardNormal);
                best = best.max((re * re + im * im) / 2.0);
            }
            best.sqrt()
        })
        .collect()
}

/// Moment estimates with delta-method standard errors.
pub fn max_modulus_moments(m: usize, ps: &[f64], samples: usize, seed: u64) -> Vec<OracleEstimate> {
    let xs = max_modulus_samples(m, samples, seed);
    let n = xs.len() as f64;
    ps.iter()
        .map(|&p| {
            let ys: Vec<f64> = xs.iter().map(|x| x.powf(p)).collect();
            let mean = ys.iter().sum::<f64>() / n;
            let var = ys.iter().map(|y| (y - mean).powi(2)).sum::<f64>() / (n - 1.0);
            let value = mean.powf(1.0 / p);
            OracleEstimate {
                p,
                value,
                stderr: value / (p * mean) * (var / n).sqrt(),
            }
        })
        .collect()
}

/// `E[max_{n<m} |g_n|^p]` by quadrature of `p t^{p-1} (1 - (1 - e^{-t²})^m)`.
pub fn max_modulus_moment_quadrature(m: usize, p: f64) -> f64 {
    let tail = |t: f64| 1.0 - (1.0 - (-t * t).exp()).powi(m as i32);
    let upper = ((m as f64).ln() + 60.0).sqrt();
    let steps = 200_000;
    let h = upper / steps as f64;
    // Simpson on an even number of intervals
    let f = |t: f64| if t == 0.0 { 0.0 } else { p * t.powf(p - 1.0) * tail(t) };
    let mut s = f(0.0) + f(upper);
    for i in 1..steps {
        s += f(i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    s * h / 3.0
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_gaussian_second_moment() {
        assert!((max_modulus_moment_quadrature(1, 2.0) - 1.0).abs() < 1e-9);
        // E|g|^4 = 2
        assert!((max_modulus_moment_quadrature(1, 4.0) - 2.0).abs() < 1e-9);
    }

    #[test]
    fn monte_carlo_matches_quadrature() {
        for m in [1, 9, 33] {
            let est = max_modulus_moments(m, &[2.0], 40_000, 3)[0];
            let exact = max_modulus_moment_quadrature(m, 2.0).sqrt();
            assert!(
                (est.value - exact).abs() <= 4.0 * est.stderr,
                "m={m}: {est:?} vs {exact}"
            );
        }
    }
}
