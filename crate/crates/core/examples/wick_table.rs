//! Prints the single-site Laguerre-type renormalizations and checks that a few
//! renormalized products have exact mean zero.

use tensor_chaos::tensor::LatticePoint;
use tensor_chaos::wick::{
    hermite_poly, laguerre_poly, renorm_factor_symbolic, renormalize_symbolic, wick_expectation, ChaosSpec, Sign,
    SitePoly,
};

fn power(var: &str, e: u32) -> String {
    match e {
        0 => String::new(),
        1 => var.to_string(),
        e => format!("{var}^{e}"),
    }
}

fn show(p: &SitePoly) -> String {
    let mut out = String::new();
    for (&(a, b), &c) in p.terms.iter().rev() {
        let mono = [power("g", a), power("gbar", b)].join(" ").trim().to_string();
        let sign = if c < 0 {
            " - "
        } else if out.is_empty() {
            ""
        } else {
            " + "
        };
        let mag = c.unsigned_abs();
        out.push_str(sign);
        out.push_str(&match (mag, mono.is_empty()) {
            (m, true) => m.to_string(),
            (1, false) => mono,
            (m, false) => format!("{m} {mono}"),
        });
    }
    out
}

fn main() -> tensor_chaos::Result<()> {
    println!("L(sigma, mu):");
    for sigma in 0..=4u32 {
        for mu in (-(sigma as i32)..=sigma as i32).rev().step_by(2) {
            println!("  ({sigma}, {mu:>2})  {}", show(&renorm_factor_symbolic(sigma, mu)?));
        }
    }

    println!("\nLaguerre L_k^(1):");
    for k in 0..=3 {
        println!("  L_{k} = {}", laguerre_poly(k, 1));
    }
    println!("Hermite H_n:");
    for n in 0..=4 {
        println!("  H_{n} = {}", hermite_poly(n));
    }

    let p = |v: i32| LatticePoint::new([v]);
    let specs = [
        (vec![p(0), p(0)], vec![Sign::Plus, Sign::Minus]),
        (
            vec![p(0), p(0), p(1), p(0)],
            vec![Sign::Plus, Sign::Minus, Sign::Plus, Sign::Minus],
        ),
        (vec![p(2), p(2), p(2)], vec![Sign::Plus, Sign::Plus, Sign::Minus]),
    ];
    println!("\nexact expectations:");
    for (points, signs) in specs {
        let spec = ChaosSpec::new(points, signs)?;
        let poly = renormalize_symbolic(&spec)?;
        println!("  {:?} -> {}", spec.signs, wick_expectation(&poly));
    }
    Ok(())
}
