//! Monte Carlo moments of the renormalized random tensor against the maximal
//! flattening norm, for each built-in family at a single grid point.

use tensor_chaos::estimator::{bound_experiments, EstimatorOptions, RandomTensorSpec};
use tensor_chaos::experiment::{generate_family, Family, FamilyParams};
use tensor_chaos::wick::Sign;

fn main() -> tensor_chaos::Result<()> {
    let (k, n) = (2, 8);
    let opts = EstimatorOptions::default();
    println!(
        "{:<18} {:>4} {:>10} {:>10} {:>8}  best partition",
        "family", "p", "lhs", "rhs_max", "ratio"
    );
    for family in Family::ALL {
        let h = generate_family(family, &FamilyParams::new(k, 1, n), 1)?;
        let spec = RandomTensorSpec::new(h, Sign::alternating(k))?;
        for r in bound_experiments(&spec, &[2.0, 4.0], 256, 5, &opts)? {
            println!(
                "{:<18} {:>4} {:>10.4} {:>10.4} {:>8.4}  {}",
                family.name(),
                r.lhs.p,
                r.lhs.mean_p_norm,
                r.rhs_max,
                r.ratio,
                r.best_partition
            );
        }
    }
    Ok(())
}
