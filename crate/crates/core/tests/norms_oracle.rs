use nalgebra::DMatrix;
use num_complex::Complex64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tensor_chaos::experiment::random_tensor;
use tensor_chaos::norms::{merge, spectral_norm, tensor_norm, NormMethod, NormOptions};
use tensor_chaos::tensor::{enumerate_partitions, l1_ball, IndexLabel, LabelGroup, LatticePoint, Partition, Tensor};

fn svd_norm(m: &DMatrix<Complex64>) -> f64 {
    m.clone().svd(false, false).singular_values.max()
}

fn random_matrix(rng: &mut impl Rng, r: usize, c: usize) -> DMatrix<Complex64> {
    DMatrix::from_fn(r, c, |_, _| {
        Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
    })
}

fn labels(names: &[&str]) -> Vec<IndexLabel> {
    names.iter().map(|n| IndexLabel::new(*n, LabelGroup::A)).collect()
}

#[test]
fn exact_path_matches_full_svd() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..200 {
        let m = random_matrix(&mut rng, 5, 7);
        let r = spectral_norm(&m, &NormOptions::default()).unwrap();
        assert_eq!(r.method, NormMethod::ExactSvd);
        let want = svd_norm(&m);
        assert!((r.value - want).abs() <= 1e-10 * want, "{} vs {want}", r.value);
    }
}

#[test]
fn power_iteration_matches_full_svd() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let opts = NormOptions {
        exact_max: 4,
        ..NormOptions::default()
    };
    for (r, c) in [(30, 40), (64, 9), (17, 120)] {
        let m = random_matrix(&mut rng, r, c);
        let got = spectral_norm(&m, &opts).unwrap();
        assert_eq!(got.method, NormMethod::PowerIteration);
        assert!(got.residual <= opts.tol);
        let want = svd_norm(&m);
        assert!(
            (got.value - want).abs() <= 1e-8 * want,
            "{r}x{c}: {} vs {want}",
            got.value
        );
    }
}

/// Matricization over the full boxes, not just the support's projections.
fn full_box_matrix(h: &Tensor, p: &Partition) -> DMatrix<Complex64> {
    let ball = l1_ball(h.dim(), h.truncation());
    let tuples = |k: usize| -> Vec<Vec<LatticePoint>> {
        let mut out = vec![Vec::new()];
        for _ in 0..k {
            out = out
                .into_iter()
                .flat_map(|t| {
                    ball.iter().map(move |b| {
                        let mut t = t.clone();
                        t.push(b.clone());
                        t
                    })
                })
                .collect();
        }
        out
    };
    let rows = tuples(p.y_side.len());
    let cols = tuples(p.x_side.len());
    DMatrix::from_fn(rows.len(), cols.len(), |r, c| {
        let idx: Vec<LatticePoint> = h
            .labels()
            .iter()
            .map(|l| {
                if let Some(i) = p.y_side.iter().position(|y| y == l) {
                    rows[r][i].clone()
                } else {
                    let i = p.x_side.iter().position(|x| x == l).unwrap();
                    cols[c][i].clone()
                }
            })
            .collect();
        h.get(&idx)
    })
}

#[test]
fn support_projection_does_not_change_the_norm() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..100 {
        let count = rng.random_range(1..=3);
        let names = ["x", "y", "z"];
        let nnz = rng.random_range(1..12);
        let h = random_tensor(&mut rng, labels(&names[..count]), 1, 2, nnz).unwrap();
        for p in enumerate_partitions(h.labels(), 12).unwrap() {
            let got = tensor_norm(&h, &p, &NormOptions::default()).unwrap().value;
            let want = svd_norm(&full_box_matrix(&h, &p));
            assert!((got - want).abs() <= 1e-10 * want.max(1.0), "{p}: {got} vs {want}");
        }
    }
}

#[test]
fn random_unit_vectors_never_exceed_the_norm() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let h = random_tensor(&mut rng, labels(&["a", "b", "c"]), 1, 2, 25).unwrap();
    let p = Partition::by_names(&h, &["a"], &["b", "c"]).unwrap();
    let norm = tensor_norm(&h, &p, &NormOptions::default()).unwrap().value;
    let m = full_box_matrix(&h, &p);
    let unit = |rng: &mut ChaCha8Rng, n: usize| {
        let v = DMatrix::from_fn(n, 1, |_, _| {
            Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
        });
        let s = v.norm();
        v / Complex64::new(s, 0.0)
    };
    let mut best = 0.0f64;
    let mut best_v = unit(&mut rng, m.ncols());
    for _ in 0..100_000 {
        let v = unit(&mut rng, m.ncols());
        let w = unit(&mut rng, m.nrows());
        let val = (w.transpose() * &m * &v)[(0, 0)].norm();
        assert!(val <= norm * (1.0 + 1e-12), "{val} > {norm}");
        if val > best {
            best = val;
            best_v = v;
        }
    }
    assert!(best > 0.2 * norm);
    // alternating maximization from the best trial approaches the supremum
    let mut v = best_v;
    for _ in 0..500 {
        let w = &m * &v;
        let w = w.clone() / Complex64::new(w.norm(), 0.0);
        let nv = m.adjoint() * &w;
        v = nv.clone() / Complex64::new(nv.norm(), 0.0);
    }
    let attained = (&m * &v).norm();
    assert!(attained <= norm * (1.0 + 1e-12));
    assert!(attained >= norm * (1.0 - 1e-8), "{attained} vs {norm}");
}

#[test]
fn merge_matches_direct_summation() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..50 {
        let h1 = random_tensor(&mut rng, labels(&["a", "c"]), 1, 2, 10).unwrap();
        let h2 = random_tensor(&mut rng, labels(&["c", "b"]), 1, 2, 10).unwrap();
        let m = merge(&h1, &h2, &["c"]).unwrap();
        let ball = l1_ball(1, 2);
        for a in &ball {
            for b in &ball {
                let want: Complex64 = ball
                    .iter()
                    .map(|c| h1.get(&[a.clone(), c.clone()]) * h2.get(&[c.clone(), b.clone()]))
                    .sum();
                let got = m.get(&[a.clone(), b.clone()]);
                assert!((got - want).norm() <= 1e-14, "{got} vs {want}");
            }
        }
    }
}

#[test]
fn merging_delta_tensors() {
    let pts: Vec<LatticePoint> = (-1..=1).map(|i| LatticePoint(vec![i])).collect();
    let delta = |x: &str, y: &str| {
        Tensor::new(
            labels(&[x, y]),
            1,
            1,
            pts.iter()
                .map(|p| (vec![p.clone(), p.clone()], Complex64::new(1.0, 0.0))),
        )
        .unwrap()
    };
    let m = merge(&delta("a", "c"), &delta("c", "b"), &["c"]).unwrap();
    assert_eq!(m, delta("a", "b"));
    let full = merge(&delta("a", "c"), &delta("b", "c"), &["a", "c"]);
    assert!(full.is_err(), "label a is not in both tensors");
    let empty = Tensor::empty(labels(&["c", "b"]), 1, 1).unwrap();
    assert!(merge(&delta("a", "c"), &empty, &["c"]).unwrap().is_empty());
}

fn tensor_strategy(names: &'static [&'static str]) -> impl Strategy<Value = Tensor> {
    let k = names.len();
    prop::collection::vec((prop::collection::vec(-2i32..=2, k), -1.0..1.0f64, -1.0..1.0f64), 1..16).prop_map(
        move |entries| {
            let e = entries.into_iter().map(|(c, re, im)| {
                (
                    c.into_iter().map(|x| LatticePoint(vec![x])).collect(),
                    Complex64::new(re, im),
                )
            });
            Tensor::new(labels(names), 1, 2, e).unwrap()
        },
    )
}

fn norm(h: &Tensor, x: &[&str], y: &[&str]) -> f64 {
    tensor_norm(h, &Partition::by_names(h, x, y).unwrap(), &NormOptions::default())
        .unwrap()
        .value
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn duality_and_conjugation(h in tensor_strategy(&["a", "b", "c", "d"])) {
        let hc = h.conjugate();
        for p in enumerate_partitions(h.labels(), 12).unwrap() {
            let o = NormOptions::default();
            let n = tensor_norm(&h, &p, &o).unwrap().value;
            let t = tensor_norm(&h, &p.transposed(), &o).unwrap().value;
            let c = tensor_norm(&hc, &p, &o).unwrap().value;
            prop_assert!((n - t).abs() <= 1e-8 * n.max(1.0));
            prop_assert!((n - c).abs() <= 1e-10 * n.max(1.0));
        }
    }

    #[test]
    fn homogeneity(h in tensor_strategy(&["a", "b", "c"]), re in -3.0..3.0f64, im in -3.0..3.0f64) {
        let lambda = Complex64::new(re, im);
        let n = norm(&h, &["a"], &["b", "c"]);
        let s = norm(&h.scale(lambda), &["a"], &["b", "c"]);
        prop_assert!((s - lambda.norm() * n).abs() <= 1e-10 * (1.0 + s));
    }

    #[test]
    fn merging_estimate(h1 in tensor_strategy(&["a1", "b1", "c"]), h2 in tensor_strategy(&["a2", "c", "b2"])) {
        let m = merge(&h1, &h2, &["c"]).unwrap();
        let lhs = if m.is_empty() { 0.0 } else { norm(&m, &["a1", "a2"], &["b1", "b2"]) };
        let rhs = norm(&h1, &["a1"], &["b1", "c"]) * norm(&h2, &["a2", "c"], &["b2"]);
        prop_assert!(lhs <= rhs * (1.0 + 1e-8), "{} > {}", lhs, rhs);
    }

    #[test]
    fn outer_product_norm_factorizes(h1 in tensor_strategy(&["a1", "b1"]), h2 in tensor_strategy(&["a2", "b2"])) {
        let m = merge(&h1, &h2, &[]).unwrap();
        let lhs = norm(&m, &["a1", "a2"], &["b1", "b2"]);
        let rhs = norm(&h1, &["a1"], &["b1"]) * norm(&h2, &["a2"], &["b2"]);
        prop_assert!((lhs - rhs).abs() <= 1e-9 * rhs.max(1.0));
    }

    #[test]
    fn flattening_bounded_by_frobenius(h in tensor_strategy(&["a", "b", "c"])) {
        let f = h.frobenius_sq().sqrt();
        for p in enumerate_partitions(h.labels(), 12).unwrap() {
            let n = tensor_norm(&h, &p, &NormOptions::default()).unwrap().value;
            prop_assert!(n <= f * (1.0 + 1e-12));
        }
    }
}
