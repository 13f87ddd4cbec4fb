use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::Zero;
use tensor_chaos::sampler::GaussianField;
use tensor_chaos::tensor::LatticePoint;
use tensor_chaos::wick::{
    gaussian_expectation, hermite, hermite_poly, laguerre, laguerre_poly, renorm_evaluate, renorm_factor,
    renorm_factor_symbolic, renormalize_symbolic, wick_expectation, ChaosSpec, Poly, Sign, SiteFactor, SitePoly,
    WickPolynomial,
};

fn binom(n: i64, k: i64) -> i64 {
    if k < 0 || k > n {
        return 0;
    }
    (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
}

fn fact(n: i64) -> i64 {
    (1..=n).product()
}

fn r(n: i64, d: i64) -> BigRational {
    BigRational::new(n.into(), d.into())
}

/// Complex Hermite (Itô) polynomial `Σ_j (-1)^j j! C(a,j) C(b,j) g^{a-j} ḡ^{b-j}`.
fn ito_hermite(a: u32, b: u32) -> SitePoly {
    let mut p = SitePoly::default();
    for j in 0..=a.min(b) {
        let c = (-1i64).pow(j) * fact(j as i64) * binom(a as i64, j as i64) * binom(b as i64, j as i64);
        p.terms.insert((a - j, b - j), c);
    }
    p
}

#[test]
fn renormalization_equals_ito_hermite() {
    for a in 0..=8u32 {
        for b in 0..=8u32 {
            let got = renorm_factor_symbolic(a + b, a as i32 - b as i32).unwrap();
            assert_eq!(got, ito_hermite(a, b), "g^{a} conj(g)^{b}");
        }
    }
}

#[test]
fn complex_gaussian_moments() {
    for a in 0..=6u32 {
        for b in 0..=6u32 {
            let poly = WickPolynomial {
                factors: vec![SiteFactor {
                    site: LatticePoint(vec![0]),
                    terms: SitePoly {
                        terms: [((a, b), 1)].into(),
                    },
                }],
            };
            let want = if a == b {
                BigRational::from_integer(fact(a as i64).into())
            } else {
                BigRational::zero()
            };
            assert_eq!(wick_expectation(&poly), want, "E g^{a} conj(g)^{b}");
        }
    }
}

#[test]
fn real_gaussian_even_moments_are_double_factorials() {
    let mut x_pow = Poly::one();
    for n in 0..=12 {
        let want = if n % 2 == 1 {
            0
        } else {
            (1..n).step_by(2).product::<i64>()
        };
        assert_eq!(gaussian_expectation(&x_pow), r(want, 1), "E X^{n}");
        x_pow = x_pow.shift_up(1);
    }
}

#[test]
fn laguerre_explicit_formula() {
    // L_k^α(x) = Σ_i (-1)^i C(k+α, k-i) x^i / i!
    for k in 0..=8i64 {
        for alpha in 0..=6i64 {
            let want = Poly::from_coeffs(
                (0..=k)
                    .map(|i| r((-1i64).pow(i as u32) * binom(k + alpha, k - i), fact(i)))
                    .collect(),
            );
            assert_eq!(laguerre_poly(k as usize, alpha), want, "L_{k}^{alpha}");
        }
    }
}

#[test]
fn hermite_explicit_formula() {
    // H_n(x) = n! Σ_m (-1)^m x^{n-2m} / (m! (n-2m)! 2^m)
    for n in 0..=12i64 {
        let mut coeffs = vec![BigRational::zero(); n as usize + 1];
        for m in 0..=n / 2 {
            coeffs[(n - 2 * m) as usize] = r((-1i64).pow(m as u32) * fact(n), fact(m) * fact(n - 2 * m) * (1 << m));
        }
        assert_eq!(hermite_poly(n as usize), Poly::from_coeffs(coeffs), "H_{n}");
    }
}

#[test]
fn numeric_polynomials_match_exact_ones() {
    for n in 0..10 {
        for x in [-2.5, -0.3, 0.0, 1.1, 3.0] {
            let e = hermite_poly(n).eval_f64(x);
            assert!((hermite(n, x) - e).abs() <= 1e-10 * (1.0 + e.abs()));
        }
    }
    for k in 0..10 {
        for alpha in [0.0, 1.0, 3.0] {
            for x in [0.0, 0.7, 2.0, 6.0] {
                let e = laguerre_poly(k, alpha as i64).eval_f64(x);
                assert!((laguerre(k, alpha, x) - e).abs() <= 1e-10 * (1.0 + e.abs()));
            }
        }
    }
}

#[test]
fn numeric_factor_matches_ito_hermite() {
    let g = Complex64::new(0.8, -1.3);
    for a in 0..=6u32 {
        for b in 0..=6u32 {
            let want = ito_hermite(a, b).eval(g);
            let got = renorm_factor(a + b, a as i32 - b as i32, g);
            assert!(
                (got - want).norm() <= 1e-10 * (1.0 + want.norm()),
                "({a},{b}): {got} vs {want}"
            );
        }
    }
}

#[test]
fn evaluation_multiplies_site_factors() {
    let f = GaussianField::complex(12, 0, 1);
    let p = |i| LatticePoint(vec![i]);
    let spec = ChaosSpec::new(
        vec![p(0), p(2), p(0), p(2), p(2)],
        vec![Sign::Plus, Sign::Minus, Sign::Minus, Sign::Minus, Sign::Plus],
    )
    .unwrap();
    let (g0, g2) = (f.sample(&[0]), f.sample(&[2]));
    let want = ito_hermite(1, 1).eval(g0) * ito_hermite(1, 2).eval(g2);
    let got = renorm_evaluate(&spec, &f);
    assert!((got - want).norm() <= 1e-12 * (1.0 + want.norm()));
    let sym = renormalize_symbolic(&spec).unwrap().eval(&f);
    assert!((sym - want).norm() <= 1e-12 * (1.0 + want.norm()));
}

#[test]
fn renormalized_products_are_orthogonal_to_constants_and_each_other() {
    // E[ℒ(g^a ḡ^b) conj(ℒ(g^c ḡ^d))] = δ_{ac} δ_{bd} a! b!
    let conj = |p: &SitePoly| p.conjugate();
    for (a, b) in [(1, 0), (2, 1), (2, 2), (3, 1)] {
        for (c, d) in [(1, 0), (2, 1), (2, 2), (3, 1), (0, 0)] {
            let x = ito_hermite(a, b);
            let y = conj(&ito_hermite(c, d));
            let mut prod = SitePoly::default();
            for (&(i, j), &u) in &x.terms {
                for (&(k, l), &v) in &y.terms {
                    *prod.terms.entry((i + k, j + l)).or_insert(0) += u * v;
                }
            }
            let want = if (a, b) == (c, d) {
                BigInt::from(fact(a as i64) * fact(b as i64))
            } else {
                BigInt::zero()
            };
            assert_eq!(prod.expectation(), want, "({a},{b}) vs ({c},{d})");
        }
    }
}
