//! Realizes G_cd = sum_{a,b} h_abcd :g_a gbar_b: for a tensor with diagonal
//! mass and compares one entry against the explicit g_a gbar_b - delta_ab form.

use num_complex::Complex64;
use tensor_chaos::estimator::{realize, RandomTensorSpec};
use tensor_chaos::sampler::{Field, GaussianField, STREAM_G};
use tensor_chaos::tensor::{IndexLabel, LatticePoint, Tensor};
use tensor_chaos::wick::Sign;

fn main() -> tensor_chaos::Result<()> {
    let p = |v: i32| LatticePoint::new([v]);
    let labels = vec![
        IndexLabel::j(1),
        IndexLabel::j(2),
        IndexLabel::a("c"),
        IndexLabel::b("d"),
    ];
    let mut entries = Vec::new();
    for a in -2..=2 {
        entries.push((vec![p(a), p(a), p(0), p(0)], Complex64::new(1.0, 0.0)));
        entries.push((vec![p(a), p(-a), p(0), p(1)], Complex64::new(0.5, -0.5)));
    }
    let h = Tensor::new(labels, 1, 2, entries)?;
    let spec = RandomTensorSpec::new(h, vec![Sign::Plus, Sign::Minus])?;
    let field = GaussianField::complex(11, STREAM_G, 1);
    let g = realize(&spec, &field)?;

    let direct: Complex64 = (-2..=2).map(|a| field.value(&[a]).norm_sqr() - 1.0).sum::<f64>().into();
    let got = g.get(&[p(0), p(0)]);
    println!("G_00 realized {got:.12}");
    println!("G_00 direct   {direct:.12}");
    for (idx, v) in g.iter() {
        println!("  G{:?} = {v:.6}", idx.iter().map(|q| q.0[0]).collect::<Vec<_>>());
    }
    Ok(())
}
