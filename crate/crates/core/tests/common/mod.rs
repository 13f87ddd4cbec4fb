#![allow(dead_code)]

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use tensor_chaos::estimator::RandomTensorSpec;
use tensor_chaos::sampler::Field;
use tensor_chaos::tensor::{l1_ball, IndexLabel, LatticePoint, Tensor};
use tensor_chaos::wick::Sign;

/// Labels `j1 = a`, `j2 = b` (signs `+, -`), input `c`, output `d`.
pub fn pairing_labels() -> Vec<IndexLabel> {
    vec![
        IndexLabel::j(1),
        IndexLabel::j(2),
        IndexLabel::a("c"),
        IndexLabel::b("d"),
    ]
}

/// Random `h_{abcd}` on `|n| <= n_max` (d = 1) with extra mass on `a = b`.
pub fn random_pairing_tensor(rng: &mut impl Rng, n_max: u32, nnz: usize) -> Tensor {
    let m = n_max as i32;
    let mut pt = || LatticePoint(vec![rng.random_range(-m..=m)]);
    let mut entries = Vec::new();
    for i in 0..nnz {
        let a = pt();
        let b = if i % 3 == 0 { a.clone() } else { pt() };
        entries.push((vec![a, b, pt(), pt()], Complex64::new(0.0, 0.0)));
    }
    for e in &mut entries {
        e.1 = Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
    }
    Tensor::new(pairing_labels(), 1, n_max, entries).unwrap()
}

pub fn pairing_spec(h: Tensor) -> RandomTensorSpec {
    RandomTensorSpec::new(h, vec![Sign::Plus, Sign::Minus]).unwrap()
}

/// `Σ_{a,b} h_{abcd} (g_a ḡ_b - δ_{ab})` for one `(c, d)`.
pub fn pairing_direct(h: &Tensor, field: &impl Field, c: &LatticePoint, d: &LatticePoint) -> Complex64 {
    let ball = l1_ball(1, h.truncation());
    let mut s = Complex64::new(0.0, 0.0);
    for a in &ball {
        for b in &ball {
            let v = h.get(&[a.clone(), b.clone(), c.clone(), d.clone()]);
            if v == Complex64::new(0.0, 0.0) {
                continue;
            }
            let delta = if a == b { 1.0 } else { 0.0 };
            s += v * (field.value(a) * field.value(b).conj() - delta);
        }
    }
    s
}

pub fn svd_norm(m: &DMatrix<Complex64>) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.clone().svd(false, false).singular_values.max()
}
