//! Labeled sparse tensors over truncated `Z^d` lattices.
//!
//! A [`Tensor`] maps a tuple of lattice points, one per [`IndexLabel`], to a
//! complex value. Entries are stored sparsely under a canonical key: the
//! coordinates of every label concatenated in label order. Every stored point
//! satisfies `|n|_1 <= N`, and exact zeros are never stored.

use std::collections::{BTreeMap, HashSet};
use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Default upper bound on the number of labels handed to
/// [`enumerate_partitions`].
pub const DEFAULT_PARTITION_CAP: usize = 12;

/// Role of an index label in the random tensor `h[n_J, n_A, n_B]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum LabelGroup {
    /// Contracted against the Gaussian product.
    J,
    /// Input side of the random operator.
    A,
    /// Output side of the random operator.
    B,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct IndexLabel {
    pub name: String,
    pub group: LabelGroup,
}

impl IndexLabel {
    pub fn new(name: impl Into<String>, group: LabelGroup) -> Self {
        Self {
            name: name.into(),
            group,
        }
    }

    /// The `i`-th chaos label, named `j{i}` (1-based).
    pub fn j(i: usize) -> Self {
        Self::new(format!("j{i}"), LabelGroup::J)
    }

    pub fn a(name: impl Into<String>) -> Self {
        Self::new(name, LabelGroup::A)
    }

    pub fn b(name: impl Into<String>) -> Self {
        Self::new(name, LabelGroup::B)
    }
}

impl fmt::Display for IndexLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name)
    }
}

/// A point of `Z^d`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LatticePoint(pub Vec<i32>);

impl LatticePoint {
    pub fn new(coords: impl Into<Vec<i32>>) -> Self {
        Self(coords.into())
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn l1(&self) -> u64 {
        l1(&self.0)
    }

    pub fn coords(&self) -> &[i32] {
        &self.0
    }
}

impl From<Vec<i32>> for LatticePoint {
    fn from(v: Vec<i32>) -> Self {
        Self(v)
    }
}

impl std::ops::Deref for LatticePoint {
    type Target = [i32];

    fn deref(&self) -> &[i32] {
        &self.0
    }
}

pub(crate) fn l1(coords: &[i32]) -> u64 {
    coords.iter().map(|c| c.unsigned_abs() as u64).sum()
}

/// One lattice point per label, in the owning tensor's label order.
pub type MultiIndex = Vec<LatticePoint>;

/// All points of `Z^d` with `|n|_1 <= n_max`, in lexicographic order.
pub fn l1_ball(d: usize, n_max: u32) -> Vec<LatticePoint> {
    fn rec(d: usize, budget: i64, prefix: &mut Vec<i32>, out: &mut Vec<LatticePoint>) {
        if prefix.len() == d {
            out.push(LatticePoint(prefix.clone()));
            return;
        }
        for c in -budget..=budget {
            prefix.push(c as i32);
            rec(d, budget - c.abs(), prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    rec(d, n_max as i64, &mut Vec::with_capacity(d), &mut out);
    out
}

/// Sparse complex tensor over labeled lattice axes.
///
/// Immutable once built; every constructor goes through the support and
/// canonical-form checks of [`Tensor::new`].
#[derive(Clone, Debug, PartialEq)]
pub struct Tensor {
    labels: Vec<IndexLabel>,
    dim: usize,
    truncation: u32,
    entries: BTreeMap<Vec<i32>, Complex64>,
}

impl Tensor {
    /// Builds a tensor from `(multi-index, value)` pairs.
    ///
    /// Repeated multi-indices are summed. Entries that end up exactly zero are
    /// dropped. Fails on duplicate labels, wrong arity or dimension, and on any
    /// point outside the l1 ball of radius `truncation`.
    pub fn new<I>(labels: Vec<IndexLabel>, dim: usize, truncation: u32, entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = (MultiIndex, Complex64)>,
    {
        let mut t = Self::empty(labels, dim, truncation)?;
        for (index, value) in entries {
            if index.len() != t.labels.len() {
                return Err(Error::Shape(format!(
                    "multi-index has {} points, tensor has {} labels",
                    index.len(),
                    t.labels.len()
                )));
            }
            let mut key = Vec::with_capacity(dim * index.len());
            for (label, point) in t.labels.iter().zip(&index) {
                t.check_point(label, point)?;
                key.extend_from_slice(point);
            }
            *t.entries.entry(key).or_insert(Complex64::new(0.0, 0.0)) += value;
        }
        t.entries.retain(|_, v| *v != Complex64::new(0.0, 0.0));
        Ok(t)
    }

    /// A tensor with no stored entries.
    pub fn empty(labels: Vec<IndexLabel>, dim: usize, truncation: u32) -> Result<Self> {
        let mut seen = HashSet::new();
        for l in &labels {
            if !seen.insert(l.name.as_str()) {
                return Err(Error::DuplicateLabel(l.name.clone()));
            }
        }
        if dim == 0 {
            return Err(Error::Shape("lattice dimension must be positive".into()));
        }
        Ok(Self {
            labels,
            dim,
            truncation,
            entries: BTreeMap::new(),
        })
    }

    /// Builds from canonical flat keys; used by operations that already
    /// produce validated coordinates.
    pub(crate) fn from_flat<I>(labels: Vec<IndexLabel>, dim: usize, truncation: u32, entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = (Vec<i32>, Complex64)>,
    {
        let mut t = Self::empty(labels, dim, truncation)?;
        let arity = t.labels.len() * dim;
        for (key, value) in entries {
            if key.len() != arity {
                return Err(Error::Shape(format!(
                    "flat key of length {} (expected {arity})",
                    key.len()
                )));
            }
            for (axis, label) in t.labels.iter().enumerate() {
                let p = &key[axis * dim..(axis + 1) * dim];
                if l1(p) > truncation as u64 {
                    return Err(Error::SupportBound {
                        label: label.name.clone(),
                        point: p.to_vec(),
                        truncation,
                    });
                }
            }
            *t.entries.entry(key).or_insert(Complex64::new(0.0, 0.0)) += value;
        }
        t.entries.retain(|_, v| *v != Complex64::new(0.0, 0.0));
        Ok(t)
    }

    fn check_point(&self, label: &IndexLabel, point: &LatticePoint) -> Result<()> {
        if point.dim() != self.dim {
            return Err(Error::Shape(format!(
                "point {:?} for `{}` has dimension {}, expected {}",
                point.0,
                label.name,
                point.dim(),
                self.dim
            )));
        }
        if point.l1() > self.truncation as u64 {
            return Err(Error::SupportBound {
                label: label.name.clone(),
                point: point.0.clone(),
                truncation: self.truncation,
            });
        }
        Ok(())
    }

    pub fn labels(&self) -> &[IndexLabel] {
        &self.labels
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn truncation(&self) -> u32 {
        self.truncation
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn axis_of(&self, name: &str) -> Result<usize> {
        self.labels
            .iter()
            .position(|l| l.name == name)
            .ok_or_else(|| Error::UnknownLabel(name.to_string()))
    }

    /// Entries as `(flat key, value)` in canonical order.
    pub fn iter_flat(&self) -> impl Iterator<Item = (&[i32], Complex64)> + '_ {
        self.entries.iter().map(|(k, v)| (k.as_slice(), *v))
    }

    /// Entries as `(multi-index, value)` in canonical order.
    pub fn iter(&self) -> impl Iterator<Item = (MultiIndex, Complex64)> + '_ {
        let d = self.dim;
        self.entries
            .iter()
            .map(move |(k, v)| (k.chunks(d).map(|c| LatticePoint(c.to_vec())).collect(), *v))
    }

    /// Coordinates of axis `axis` inside a flat key.
    pub fn axis_coords<'k>(&self, key: &'k [i32], axis: usize) -> &'k [i32] {
        &key[axis * self.dim..(axis + 1) * self.dim]
    }

    pub fn get(&self, index: &[LatticePoint]) -> Complex64 {
        let key: Vec<i32> = index.iter().flat_map(|p| p.0.iter().copied()).collect();
        self.entries.get(&key).copied().unwrap_or_default()
    }

    /// Entrywise complex conjugate.
    pub fn conjugate(&self) -> Tensor {
        Tensor {
            labels: self.labels.clone(),
            dim: self.dim,
            truncation: self.truncation,
            entries: self.entries.iter().map(|(k, v)| (k.clone(), v.conj())).collect(),
        }
    }

    /// Multiplies every entry by `factor`.
    pub fn scale(&self, factor: Complex64) -> Tensor {
        let mut out = self.clone();
        for v in out.entries.values_mut() {
            *v *= factor;
        }
        out.entries.retain(|_, v| *v != Complex64::new(0.0, 0.0));
        out
    }

    /// Sum of squared moduli (the Hilbert-Schmidt norm squared).
    pub fn frobenius_sq(&self) -> f64 {
        self.entries.values().map(|v| v.norm_sqr()).sum()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(&TensorFile::from(self))?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let file: TensorFile = serde_json::from_str(s)?;
        file.into_tensor()
    }
}

/// On-disk tensor layout: `{labels, d, N, entries: [[coords...], re, im]}`.
///
/// `coords` is the canonical flat key (all labels' coordinates concatenated
/// in label order) and entries are written in canonical key order.
#[derive(Serialize, Deserialize)]
struct TensorFile {
    labels: Vec<IndexLabel>,
    d: usize,
    #[serde(rename = "N")]
    n: u32,
    entries: Vec<(Vec<i32>, f64, f64)>,
}

impl From<&Tensor> for TensorFile {
    fn from(t: &Tensor) -> Self {
        TensorFile {
            labels: t.labels.clone(),
            d: t.dim,
            n: t.truncation,
            entries: t.entries.iter().map(|(k, v)| (k.clone(), v.re, v.im)).collect(),
        }
    }
}

impl TensorFile {
    fn into_tensor(self) -> Result<Tensor> {
        Tensor::from_flat(
            self.labels,
            self.d,
            self.n,
            self.entries.into_iter().map(|(k, re, im)| (k, Complex64::new(re, im))),
        )
    }
}

impl Serialize for Tensor {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        TensorFile::from(self).serialize(s)
    }
}

impl<'de> Deserialize<'de> for Tensor {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        TensorFile::deserialize(d)?
            .into_tensor()
            .map_err(serde::de::Error::custom)
    }
}

/// An ordered split `X ⊍ Y` of a label set. `x_side` labels index the input
/// (columns) of a matricization, `y_side` labels the output (rows).
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Partition {
    pub x_side: Vec<IndexLabel>,
    pub y_side: Vec<IndexLabel>,
}

impl Partition {
    pub fn new(x_side: Vec<IndexLabel>, y_side: Vec<IndexLabel>) -> Result<Self> {
        let xs: HashSet<&str> = x_side.iter().map(|l| l.name.as_str()).collect();
        if xs.len() != x_side.len() {
            return Err(Error::BadPartition("repeated label on the input side".into()));
        }
        let mut ys = HashSet::new();
        for l in &y_side {
            if xs.contains(l.name.as_str()) || !ys.insert(l.name.as_str()) {
                return Err(Error::BadPartition(format!("label `{}` appears twice", l.name)));
            }
        }
        Ok(Self { x_side, y_side })
    }

    /// Splits `t`'s labels by name.
    pub fn by_names(t: &Tensor, x: &[&str], y: &[&str]) -> Result<Self> {
        let find = |n: &&str| t.axis_of(n).map(|i| t.labels()[i].clone());
        let p = Self::new(
            x.iter().map(find).collect::<Result<_>>()?,
            y.iter().map(find).collect::<Result<_>>()?,
        )?;
        p.check_covers(t.labels())?;
        Ok(p)
    }

    /// The partition with input and output sides exchanged.
    pub fn transposed(&self) -> Self {
        Self {
            x_side: self.y_side.clone(),
            y_side: self.x_side.clone(),
        }
    }

    /// Verifies that the two sides cover exactly `labels`.
    pub fn check_covers(&self, labels: &[IndexLabel]) -> Result<()> {
        let all: HashSet<&str> = labels.iter().map(|l| l.name.as_str()).collect();
        let mine: HashSet<&str> = self
            .x_side
            .iter()
            .chain(&self.y_side)
            .map(|l| l.name.as_str())
            .collect();
        if mine.len() != self.x_side.len() + self.y_side.len() {
            return Err(Error::BadPartition("sides overlap".into()));
        }
        if mine != all {
            return Err(Error::BadPartition(format!(
                "{self} does not cover {{{}}}",
                labels.iter().map(|l| l.name.as_str()).collect::<Vec<_>>().join(",")
            )));
        }
        Ok(())
    }
}

impl fmt::Display for Partition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let side = |s: &[IndexLabel]| s.iter().map(|l| l.name.as_str()).collect::<Vec<_>>().join(" ");
        write!(f, "{}->{}", side(&self.x_side), side(&self.y_side))
    }
}

/// All `2^n` ordered partitions of `labels`.
///
/// Partition `m` puts label `i` on the output side iff bit `i` of `m` is set,
/// so the first partition has everything on the input side.
pub fn enumerate_partitions(labels: &[IndexLabel], cap: usize) -> Result<Vec<Partition>> {
    if labels.len() > cap {
        return Err(Error::PartitionCap {
            count: labels.len(),
            cap,
        });
    }
    let mut seen = HashSet::new();
    for l in labels {
        if !seen.insert(l.name.as_str()) {
            return Err(Error::DuplicateLabel(l.name.clone()));
        }
    }
    Ok((0u64..1 << labels.len())
        .map(|mask| {
            let (mut x, mut y) = (Vec::new(), Vec::new());
            for (i, l) in labels.iter().enumerate() {
                if mask >> i & 1 == 1 {
                    y.push(l.clone());
                } else {
                    x.push(l.clone());
                }
            }
            Partition { x_side: x, y_side: y }
        })
        .collect())
}
