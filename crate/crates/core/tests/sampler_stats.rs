use std::f64::consts::FRAC_PI_4;

use num_complex::Complex64;
use rayon::prelude::*;
use tensor_chaos::sampler::{interpolate, phi_derivative_field, Field, GaussianField, STREAM_G, STREAM_G_TILDE};

const SITES: i32 = 1_000_000;

fn draws(f: &impl Field) -> Vec<Complex64> {
    (0..SITES).map(|n| f.value(&[n])).collect()
}

fn mean(xs: impl Iterator<Item = Complex64>, n: usize) -> Complex64 {
    xs.sum::<Complex64>() / n as f64
}

#[test]
fn complex_field_first_and_second_moments() {
    let g = draws(&GaussianField::complex(2024, STREAM_G, 1));
    let n = g.len();
    let m = mean(g.iter().copied(), n);
    assert!(m.norm() <= 4.0 / (n as f64).sqrt(), "mean {m}");
    let second = g.iter().map(|z| z.norm_sqr()).sum::<f64>() / n as f64;
    assert!((second - 1.0).abs() <= 0.01, "E|g|^2 = {second}");
    // circular symmetry: E g^2 = 0
    let sq = mean(g.iter().map(|z| z * z), n);
    assert!(sq.norm() <= 0.01, "E g^2 = {sq}");
    // real and imaginary parts each carry half the variance
    let re2 = g.iter().map(|z| z.re * z.re).sum::<f64>() / n as f64;
    assert!((re2 - 0.5).abs() <= 0.005, "E Re(g)^2 = {re2}");
}

#[test]
fn modulus_squared_is_standard_exponential() {
    let g = draws(&GaussianField::complex(7, STREAM_G, 1));
    let n = g.len() as f64;
    for t in [0.5, 1.0, 2.0, 4.0] {
        let tail = g.iter().filter(|z| z.norm_sqr() > t).count() as f64 / n;
        assert!((tail - (-t).exp()).abs() <= 0.003, "P(|g|^2 > {t}) = {tail}");
    }
    // E|g|^4 = 2
    let fourth = g.iter().map(|z| z.norm_sqr().powi(2)).sum::<f64>() / n;
    assert!((fourth - 2.0).abs() <= 0.03, "E|g|^4 = {fourth}");
}

#[test]
fn real_field_moments() {
    let f = GaussianField::real(99, STREAM_G, 1);
    let xs: Vec<f64> = (0..SITES).map(|n| f.sample_real(&[n])).collect();
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    let v = xs.iter().map(|x| x * x).sum::<f64>() / n;
    let k4 = xs.iter().map(|x| x.powi(4)).sum::<f64>() / n;
    assert!(m.abs() <= 4.0 / n.sqrt(), "mean {m}");
    assert!((v - 1.0).abs() <= 0.01, "variance {v}");
    assert!((k4 - 3.0).abs() <= 0.05, "fourth moment {k4}");
}

#[test]
fn higher_dimensional_sites_are_standard() {
    let f = GaussianField::complex(5, STREAM_G, 3);
    let mut vals = Vec::new();
    for a in -50..50 {
        for b in -50..50 {
            for c in -50..50 {
                vals.push(f.sample(&[a, b, c]));
            }
        }
    }
    let n = vals.len();
    assert!(mean(vals.iter().copied(), n).norm() <= 4.0 / (n as f64).sqrt());
    let second = vals.iter().map(|z| z.norm_sqr()).sum::<f64>() / n as f64;
    assert!((second - 1.0).abs() <= 0.01);
}

#[test]
fn streams_are_uncorrelated() {
    let g = draws(&GaussianField::complex(31, STREAM_G, 1));
    let gt = draws(&GaussianField::complex(31, STREAM_G_TILDE, 1));
    let n = g.len();
    let cov = mean(g.iter().zip(&gt).map(|(a, b)| a * b.conj()), n);
    let pseudo = mean(g.iter().zip(&gt).map(|(a, b)| a * b), n);
    assert!(cov.norm() <= 0.01, "E g conj(g~) = {cov}");
    assert!(pseudo.norm() <= 0.01, "E g g~ = {pseudo}");
    // neighbouring sites of one stream are uncorrelated too
    let lag = mean(g.windows(2).map(|w| w[0] * w[1].conj()), n - 1);
    assert!(lag.norm() <= 0.01, "lag-1 covariance {lag}");
}

#[test]
fn interpolation_preserves_the_law() {
    let g = GaussianField::complex(77, STREAM_G, 1);
    let gt = g.with_stream(STREAM_G_TILDE);
    for phi in [FRAC_PI_4, 0.3, 1.2] {
        let gp = interpolate(&g, &gt, phi);
        let dg = phi_derivative_field(&g, &gt, phi);
        let a = draws(&gp);
        let b = draws(&dg);
        let n = a.len();
        let var_a = a.iter().map(|z| z.norm_sqr()).sum::<f64>() / n as f64;
        let var_b = b.iter().map(|z| z.norm_sqr()).sum::<f64>() / n as f64;
        assert!((var_a - 1.0).abs() <= 0.01, "φ={phi}: E|g(φ)|^2 = {var_a}");
        assert!((var_b - 1.0).abs() <= 0.01, "φ={phi}: E|∂g(φ)|^2 = {var_b}");
        // joint law equals that of (g, g̃): off-diagonal covariance vanishes
        let cross = mean(a.iter().zip(&b).map(|(x, y)| x * y.conj()), n);
        assert!(cross.norm() <= 0.01, "φ={phi}: cross covariance {cross}");
        let fourth = a.iter().map(|z| z.norm_sqr().powi(2)).sum::<f64>() / n as f64;
        assert!((fourth - 2.0).abs() <= 0.03, "φ={phi}: E|g(φ)|^4 = {fourth}");
    }
}

#[test]
fn parallel_sampling_matches_sequential() {
    let f = GaussianField::complex(3, STREAM_G, 2);
    let seq: Vec<Complex64> = (0..20_000).map(|i| f.sample(&[i % 137, i / 137])).collect();
    let par: Vec<Complex64> = (0..20_000)
        .into_par_iter()
        .rev()
        .map(|i| f.sample(&[i % 137, i / 137]))
        .collect();
    let par: Vec<Complex64> = par.into_iter().rev().collect();
    assert_eq!(seq, par);
}
