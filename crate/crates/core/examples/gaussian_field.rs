//! The counter-based Gaussian field: values depend only on (seed, stream, site),
//! and the interpolation g(phi) = sin(phi) g + cos(phi) g~ stays standard.

use tensor_chaos::sampler::{interpolate, sample_seed, Field, GaussianField, STREAM_G, STREAM_G_TILDE};

fn main() {
    let g = GaussianField::complex(2024, STREAM_G, 2);
    let gt = g.with_stream(STREAM_G_TILDE);
    for n in [[0, 0], [1, -1], [3, 2]] {
        println!("g{n:?} = {:.5}   g~{n:?} = {:.5}", g.value(&n), gt.value(&n));
    }
    assert_eq!(
        g.value(&[1, -1]),
        GaussianField::complex(2024, STREAM_G, 2).value(&[1, -1])
    );

    let samples = 20_000;
    let (mut m2, mut m2phi, mut m4) = (0.0, 0.0, 0.0);
    for i in 0..samples {
        let g = GaussianField::complex(sample_seed(7, i), STREAM_G, 1);
        let gt = g.with_stream(STREAM_G_TILDE);
        let z = g.value(&[0]).norm_sqr();
        m2 += z;
        m4 += z * z;
        m2phi += interpolate(&g, &gt, 0.7).value(&[0]).norm_sqr();
    }
    let s = samples as f64;
    println!(
        "E|g|^2 = {:.4} (1), E|g|^4 = {:.4} (2), E|g(0.7)|^2 = {:.4} (1)",
        m2 / s,
        m4 / s,
        m2phi / s
    );
}
