//! Flattening norms of tensors.
//!
//! `‖h‖_{X→Y}` is the operator norm of `h` viewed as a map from `ℓ²` over the
//! `X` labels to `ℓ²` over the `Y` labels. We compute it on the dense
//! matricization restricted to the support's projections; zero rows and
//! columns do not change the largest singular value.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::tensor::{IndexLabel, Partition, Tensor};
use crate::{Error, Result};

#[derive(Clone, Debug)]
pub struct NormOptions {
    /// Relative stopping tolerance of the power iteration.
    pub tol: f64,
    /// Use the exact eigen-decomposition when the smaller side is at most this.
    pub exact_max: usize,
    pub max_iter: usize,
    /// Largest allowed side of a dense matricization.
    pub dense_cap: usize,
    /// Seed of the power iteration start vector.
    pub seed: u64,
}

impl Default for NormOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            exact_max: 512,
            max_iter: 10_000,
            dense_cap: 4096,
            seed: 0x5eed,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormMethod {
    ExactSvd,
    PowerIteration,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormResult {
    pub value: f64,
    pub method: NormMethod,
    pub iterations: usize,
    pub residual: f64,
}

/// Dense view of a tensor under a partition: rows enumerate the output
/// (`y_side`) multi-indices, columns the input (`x_side`) ones, both sorted
/// lexicographically in the tensor's label order.
#[derive(Clone, Debug)]
pub struct Matricization {
    pub row_labels: Vec<IndexLabel>,
    pub col_labels: Vec<IndexLabel>,
    pub rows: Vec<Vec<i32>>,
    pub cols: Vec<Vec<i32>>,
    pub matrix: DMatrix<Complex64>,
}

/// Flattens `h` with `p.x_side` as columns and `p.y_side` as rows.
///
/// `p` must split exactly the labels of `h`.
pub fn matricize(h: &Tensor, p: &Partition, dense_cap: usize) -> Result<Matricization> {
    p.check_covers(h.labels())?;
    let axes = |side: &[IndexLabel]| -> Result<Vec<usize>> {
        let mut ax: Vec<usize> = side.iter().map(|l| h.axis_of(&l.name)).collect::<Result<_>>()?;
        ax.sort_unstable();
        Ok(ax)
    };
    let row_axes = axes(&p.y_side)?;
    let col_axes = axes(&p.x_side)?;
    let project = |key: &[i32], ax: &[usize]| -> Vec<i32> {
        ax.iter().flat_map(|&a| h.axis_coords(key, a).iter().copied()).collect()
    };

    let mut row_set = BTreeSet::new();
    let mut col_set = BTreeSet::new();
    for (key, _) in h.iter_flat() {
        row_set.insert(project(key, &row_axes));
        col_set.insert(project(key, &col_axes));
    }
    for size in [row_set.len(), col_set.len()] {
        if size > dense_cap {
            return Err(Error::DenseCap { size, cap: dense_cap });
        }
    }
    let rows: Vec<Vec<i32>> = row_set.into_iter().collect();
    let cols: Vec<Vec<i32>> = col_set.into_iter().collect();
    let row_pos: HashMap<&[i32], usize> = rows.iter().enumerate().map(|(i, r)| (r.as_slice(), i)).collect();
    let col_pos: HashMap<&[i32], usize> = cols.iter().enumerate().map(|(i, c)| (c.as_slice(), i)).collect();

    let mut matrix = DMatrix::zeros(rows.len(), cols.len());
    for (key, v) in h.iter_flat() {
        let r = row_pos[project(key, &row_axes).as_slice()];
        let c = col_pos[project(key, &col_axes).as_slice()];
        matrix[(r, c)] = v;
    }
    let labels_of = |ax: &[usize]| ax.iter().map(|&a| h.labels()[a].clone()).collect();
    Ok(Matricization {
        row_labels: labels_of(&row_axes),
        col_labels: labels_of(&col_axes),
        rows,
        cols,
        matrix,
    })
}

/// Largest singular value of a matricization.
pub fn operator_norm(m: &Matricization, opts: &NormOptions) -> Result<NormResult> {
    spectral_norm(&m.matrix, opts)
}

/// Largest singular value of a dense complex matrix.
///
/// Exact (Hermitian eigenvalues of the smaller Gram matrix) when
/// `min(rows, cols) <= opts.exact_max`, otherwise power iteration on the Gram
/// operator. The zero matrix, including the empty one, has norm 0.
pub fn spectral_norm(a: &DMatrix<Complex64>, opts: &NormOptions) -> Result<NormResult> {
    if opts.tol.is_nan() || opts.tol <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "norm tolerance {} must be positive",
            opts.tol
        )));
    }
    let exact = |value| NormResult {
        value,
        method: NormMethod::ExactSvd,
        iterations: 0,
        residual: 0.0,
    };
    if a.is_empty() || a.iter().all(|z| z.re == 0.0 && z.im == 0.0) {
        return Ok(exact(0.0));
    }
    let (r, c) = a.shape();
    if r.min(c) == 1 {
        return Ok(exact(a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()));
    }
    if r.min(c) <= opts.exact_max {
        let gram = if c <= r { a.adjoint() * a } else { a * a.adjoint() };
        let top = gram.symmetric_eigenvalues().iter().copied().fold(0.0f64, f64::max);
        return Ok(exact(top.max(0.0).sqrt()));
    }
    power_iteration(a, opts)
}

fn power_iteration(a: &DMatrix<Complex64>, opts: &NormOptions) -> Result<NormResult> {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let n = a.ncols();
    let mut v = nalgebra::DVector::from_fn(n, |_, _| {
        Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
    });
    v /= Complex64::from(v.norm());
    let mut sigma = 0.0f64;
    let mut residual = f64::INFINITY;
    for it in 1..=opts.max_iter {
        let av = a * &v;
        let next_sigma = av.norm();
        let mut w = a.adjoint() * av;
        let wn = w.norm();
        if wn == 0.0 {
            return Ok(NormResult {
                value: 0.0,
                method: NormMethod::PowerIteration,
                iterations: it,
                residual: 0.0,
            });
        }
        w /= Complex64::from(wn);
        residual = (next_sigma - sigma).abs() / next_sigma;
        sigma = next_sigma;
        v = w;
        if residual <= opts.tol {
            return Ok(NormResult {
                value: sigma,
                method: NormMethod::PowerIteration,
                iterations: it,
                residual,
            });
        }
    }
    Err(Error::NoConvergence {
        iterations: opts.max_iter,
        residual,
    })
}

/// `‖h‖_{X→Y}` for the partition `p`.
pub fn tensor_norm(h: &Tensor, p: &Partition, opts: &NormOptions) -> Result<NormResult> {
    operator_norm(&matricize(h, p, opts.dense_cap)?, opts)
}

/// Contracts `h1` and `h2` over the labels named in `shared`.
///
/// The result carries `h1`'s remaining labels followed by `h2`'s, with the
/// larger of the two truncations. Non-shared labels must be disjoint.
pub fn merge(h1: &Tensor, h2: &Tensor, shared: &[&str]) -> Result<Tensor> {
    if h1.dim() != h2.dim() {
        return Err(Error::Shape(format!(
            "lattice dimensions {} and {} differ",
            h1.dim(),
            h2.dim()
        )));
    }
    let shared_set: HashSet<&str> = shared.iter().copied().collect();
    if shared_set.len() != shared.len() {
        return Err(Error::DuplicateLabel("repeated shared label".into()));
    }
    let c1: Vec<usize> = shared.iter().map(|n| h1.axis_of(n)).collect::<Result<_>>()?;
    let c2: Vec<usize> = shared.iter().map(|n| h2.axis_of(n)).collect::<Result<_>>()?;
    let rest = |h: &Tensor| -> Vec<usize> {
        (0..h.labels().len())
            .filter(|&i| !shared_set.contains(h.labels()[i].name.as_str()))
            .collect()
    };
    let r1 = rest(h1);
    let r2 = rest(h2);
    let names1: HashSet<&str> = r1.iter().map(|&i| h1.labels()[i].name.as_str()).collect();
    if let Some(&i) = r2.iter().find(|&&i| names1.contains(h2.labels()[i].name.as_str())) {
        return Err(Error::DuplicateLabel(h2.labels()[i].name.clone()));
    }

    let gather = |h: &Tensor, key: &[i32], ax: &[usize]| -> Vec<i32> {
        ax.iter().flat_map(|&a| h.axis_coords(key, a).iter().copied()).collect()
    };
    let mut by_shared: HashMap<Vec<i32>, Vec<(Vec<i32>, Complex64)>> = HashMap::new();
    for (key, v) in h2.iter_flat() {
        by_shared
            .entry(gather(h2, key, &c2))
            .or_default()
            .push((gather(h2, key, &r2), v));
    }
    let mut out: BTreeMap<Vec<i32>, Complex64> = BTreeMap::new();
    for (key, v1) in h1.iter_flat() {
        let Some(matches) = by_shared.get(&gather(h1, key, &c1)) else {
            continue;
        };
        let left = gather(h1, key, &r1);
        for (right, v2) in matches {
            let mut k = left.clone();
            k.extend_from_slice(right);
            *out.entry(k).or_default() += v1 * v2;
        }
    }
    let labels = r1
        .iter()
        .map(|&i| h1.labels()[i].clone())
        .chain(r2.iter().map(|&i| h2.labels()[i].clone()))
        .collect();
    Tensor::from_flat(labels, h1.dim(), h1.truncation().max(h2.truncation()), out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::LatticePoint;
    use approx::assert_relative_eq;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn p(v: i32) -> LatticePoint {
        LatticePoint(vec![v])
    }

    fn delta(a: &str, b: &str, n: u32) -> Tensor {
        let entries = (-(n as i32)..=n as i32).map(|i| (vec![p(i), p(i)], c(1.0)));
        Tensor::new(vec![IndexLabel::a(a), IndexLabel::b(b)], 1, n, entries).unwrap()
    }

    #[test]
    fn diagonal_matricizes_to_identity() {
        let h = delta("a", "b", 1);
        let part = Partition::by_names(&h, &["a"], &["b"]).unwrap();
        let m = matricize(&h, &part, 4096).unwrap();
        assert_eq!(m.matrix, DMatrix::identity(3, 3).map(c));
        assert_relative_eq!(
            tensor_norm(&h, &part, &NormOptions::default()).unwrap().value,
            1.0,
            epsilon = 1e-14
        );
    }

    #[test]
    fn single_entry_is_one_by_one() {
        let v = Complex64::new(3.0, -4.0);
        let h = Tensor::new(
            vec![IndexLabel::a("a"), IndexLabel::b("b")],
            1,
            2,
            [(vec![p(2), p(-1)], v)],
        )
        .unwrap();
        let part = Partition::by_names(&h, &["a"], &["b"]).unwrap();
        let m = matricize(&h, &part, 16).unwrap();
        assert_eq!(m.matrix.shape(), (1, 1));
        assert_eq!(m.matrix[(0, 0)], v);
        assert_relative_eq!(operator_norm(&m, &NormOptions::default()).unwrap().value, 5.0);
    }

    #[test]
    fn transposed_partition_transposes_matrix() {
        let h = Tensor::new(
            vec![IndexLabel::a("a"), IndexLabel::b("b")],
            1,
            1,
            [
                (vec![p(0), p(1)], Complex64::new(1.0, 1.0)),
                (vec![p(-1), p(1)], c(2.0)),
            ],
        )
        .unwrap();
        let part = Partition::by_names(&h, &["a"], &["b"]).unwrap();
        let m = matricize(&h, &part, 16).unwrap();
        let t = matricize(&h, &part.transposed(), 16).unwrap();
        assert_eq!(m.matrix.transpose(), t.matrix);
    }

    #[test]
    fn small_matrices() {
        let opts = NormOptions::default();
        assert_relative_eq!(
            spectral_norm(&DMatrix::identity(3, 3).map(c), &opts).unwrap().value,
            1.0,
            epsilon = 1e-14
        );
        let m = DMatrix::from_row_slice(2, 2, &[c(0.0), c(2.0), c(0.0), c(0.0)]);
        assert_relative_eq!(spectral_norm(&m, &opts).unwrap().value, 2.0, epsilon = 1e-14);
        let z = DMatrix::<Complex64>::zeros(4, 3);
        let r = spectral_norm(&z, &opts).unwrap();
        assert_eq!((r.value, r.method), (0.0, NormMethod::ExactSvd));
    }

    #[test]
    fn power_iteration_agrees_with_exact_path() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let a = DMatrix::from_fn(40, 30, |_, _| {
            Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
        });
        let exact = spectral_norm(&a, &NormOptions::default()).unwrap();
        let pi = spectral_norm(
            &a,
            &NormOptions {
                exact_max: 4,
                tol: 1e-13,
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(pi.method, NormMethod::PowerIteration);
        assert!(pi.residual <= 1e-13);
        assert_relative_eq!(pi.value, exact.value, max_relative = 1e-8);
    }

    #[test]
    fn power_iteration_reports_non_convergence() {
        // equal top singular values in orthogonal directions still converge in value,
        // so starve the iteration instead
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = DMatrix::from_fn(20, 20, |_, _| c(rng.random::<f64>()));
        let err = spectral_norm(
            &a,
            &NormOptions {
                exact_max: 1,
                tol: 1e-300,
                max_iter: 3,
                ..Default::default()
            },
        )
        .unwrap_err();
        assert!(matches!(err, Error::NoConvergence { iterations: 3, .. }));
    }

    #[test]
    fn dense_cap() {
        let h = delta("a", "b", 10);
        let part = Partition::by_names(&h, &["a"], &["b"]).unwrap();
        assert!(matches!(
            matricize(&h, &part, 5),
            Err(Error::DenseCap { size: 21, cap: 5 })
        ));
    }

    #[test]
    fn merge_of_deltas_over_shared_label() {
        // sum_c delta(a,c) delta(c,b) = delta(a,b)
        let h1 = delta("a", "c", 1);
        let h2 = delta("c", "b", 1);
        let m = merge(&h1, &h2, &["c"]).unwrap();
        assert_eq!(m, delta("a", "b", 1));
        // full contraction: sum_{a,b} delta(a,b) delta(a,b) = 3
        let s = merge(&delta("a", "b", 1), &delta("a", "b", 1), &["a", "b"]).unwrap();
        assert!(s.labels().is_empty());
        assert_eq!(s.get(&[]), c(3.0));
    }

    #[test]
    fn merge_without_shared_is_outer_product() {
        let u = Tensor::new(
            vec![IndexLabel::a("a")],
            1,
            1,
            [(vec![p(0)], c(2.0)), (vec![p(1)], c(3.0))],
        )
        .unwrap();
        let v = Tensor::new(vec![IndexLabel::b("b")], 1, 2, [(vec![p(-2)], Complex64::i())]).unwrap();
        let o = merge(&u, &v, &[]).unwrap();
        assert_eq!(o.truncation(), 2);
        assert_eq!(o.nnz(), 2);
        assert_eq!(o.get(&[p(1), p(-2)]), Complex64::new(0.0, 3.0));
    }

    #[test]
    fn merge_with_empty_is_empty() {
        let e = Tensor::empty(vec![IndexLabel::a("a"), IndexLabel::b("c")], 1, 1).unwrap();
        assert!(merge(&e, &delta("c", "b", 1), &["c"]).unwrap().is_empty());
    }

    #[test]
    fn merge_rejects_overlap() {
        let err = merge(&delta("a", "c", 1), &delta("a", "c", 1), &["c"]).unwrap_err();
        assert!(matches!(err, Error::DuplicateLabel(_)));
        assert!(merge(&delta("a", "c", 1), &delta("c", "b", 1), &["zz"]).is_err());
    }
}
