//! The Gaussian case with the diagonal family A_n = e_n e_n^T, where the norm
//! of the sum is max |g_n|, against an independent order-statistics estimate.

use tensor_chaos::estimator::{khintchine_experiment, EstimatorOptions, RandomTensorSpec};
use tensor_chaos::experiment::{
    generate_family, max_modulus_moment_quadrature, max_modulus_moments, Family, FamilyParams,
};
use tensor_chaos::tensor::l1_ball;
use tensor_chaos::wick::Sign;

fn main() -> tensor_chaos::Result<()> {
    let opts = EstimatorOptions::default();
    let p = 4.0;
    println!(
        "{:>4} {:>10} {:>10} {:>10} {:>8}",
        "N", "lhs", "oracle", "quadrature", "ratio"
    );
    for n in [8, 16, 32, 64] {
        let h = generate_family(Family::DiagonalPairing, &FamilyParams::new(1, 1, n), 0)?;
        let spec = RandomTensorSpec::new(h, vec![Sign::Plus])?;
        let r = khintchine_experiment(&spec, p, 2048, 3, &opts)?;
        let m = l1_ball(1, n).len();
        let oracle = max_modulus_moments(m, &[p], 50_000, 9).remove(0);
        let quad = max_modulus_moment_quadrature(m, p).powf(1.0 / p);
        println!(
            "{n:>4} {:>10.4} {:>10.4} {:>10.4} {:>8.4}",
            r.lhs.mean_p_norm, oracle.value, quad, r.ratio
        );
    }
    Ok(())
}
