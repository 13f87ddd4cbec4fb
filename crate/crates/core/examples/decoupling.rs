//! Both sides of the decoupling inequality. For k = 1 the two sides differ by
//! exactly pi/2.

use std::f64::consts::FRAC_PI_2;

use tensor_chaos::estimator::{decoupling_experiment, EstimatorOptions, RandomTensorSpec};
use tensor_chaos::experiment::{generate_family, Family, FamilyParams};
use tensor_chaos::wick::Sign;

fn main() -> tensor_chaos::Result<()> {
    let opts = EstimatorOptions::default();
    for k in 1..=3 {
        let h = generate_family(Family::DiagonalPairing, &FamilyParams::new(k, 1, 8), 0)?;
        let spec = RandomTensorSpec::new(h, Sign::alternating(k))?;
        let r = decoupling_experiment(&spec, 2.0, 512, 17, &opts)?;
        println!(
            "k={k}: lhs {:.4} ± {:.4}, rhs {:.4}, slack {:.4} ± {:.4}, rhs/lhs {:.4} (pi/2 = {FRAC_PI_2:.4})",
            r.lhs.mean_p_norm,
            r.lhs.stderr,
            r.rhs,
            r.slack,
            r.combined_stderr,
            r.rhs / r.lhs.mean_p_norm
        );
    }
    Ok(())
}
