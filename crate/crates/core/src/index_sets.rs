//! Frequency index sets on Z^d.
//!
//! An [`IndexSet`] stores its frequencies in one flat buffer, sorted
//! lexicographically and free of duplicates, so the position of a frequency
//! in the set is a stable coefficient index across runs.

use std::cmp::Ordering;
use std::f64::consts::PI;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Upper bound on the number of frequencies `hyperbolic_cross` will produce.
pub const DEFAULT_SIZE_CAP: usize = 5_000_000;

/// How an index set was constructed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Provenance {
    HyperbolicCross { gamma: f64, radius: f64 },
    Explicit,
}

/// A finite, lexicographically ordered set of d-dimensional integer frequencies.
#[derive(Debug, Clone, PartialEq)]
pub struct IndexSet {
    dim: usize,
    data: Vec<i64>,
    provenance: Provenance,
}

/// Mixed smoothness order `s > 1/2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SmoothnessWeight(f64);

impl SmoothnessWeight {
    pub fn new(s: f64) -> Result<Self> {
        if !(s.is_finite() && s > 0.5) {
            return Err(invalid(format!("smoothness must be finite and > 1/2, got {s}")));
        }
        Ok(Self(s))
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl IndexSet {
    /// Builds a set from arbitrary frequencies. Input order does not matter;
    /// duplicates are rejected.
    pub fn from_frequencies<V: AsRef<[i64]>>(dim: usize, freqs: &[V]) -> Result<Self> {
        if dim == 0 {
            return Err(invalid("dimension must be at least 1"));
        }
        let mut rows: Vec<&[i64]> = Vec::with_capacity(freqs.len());
        for f in freqs {
            let f = f.as_ref();
            if f.len() != dim {
                return Err(Error::DimensionMismatch { expected: dim, got: f.len() });
            }
            rows.push(f);
        }
        rows.sort_unstable();
        if rows.windows(2).any(|w| w[0] == w[1]) {
            return Err(invalid("duplicate frequency vector"));
        }
        let data = rows.concat();
        Ok(Self { dim, data, provenance: Provenance::Explicit })
    }

    /// Builds a set from a flat buffer that is already sorted and duplicate free.
    fn from_sorted_flat(dim: usize, data: Vec<i64>, provenance: Provenance) -> Self {
        debug_assert_eq!(data.len() % dim, 0);
        Self { dim, data, provenance }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.data.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    /// The `i`-th frequency in lexicographic order.
    pub fn get(&self, i: usize) -> &[i64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn iter(&self) -> impl ExactSizeIterator<Item = &[i64]> + '_ {
        self.data.chunks_exact(self.dim)
    }

    /// Position of `k` in the set, by binary search.
    pub fn position(&self, k: &[i64]) -> Option<usize> {
        if k.len() != self.dim {
            return None;
        }
        let (mut lo, mut hi) = (0usize, self.len());
        while lo < hi {
            let mid = (lo + hi) / 2;
            match self.get(mid).cmp(k) {
                Ordering::Less => lo = mid + 1,
                Ordering::Greater => hi = mid,
                Ordering::Equal => return Some(mid),
            }
        }
        None
    }

    pub fn contains(&self, k: &[i64]) -> bool {
        self.position(k).is_some()
    }

    pub fn is_subset_of(&self, other: &IndexSet) -> bool {
        self.dim == other.dim && self.iter().all(|k| other.contains(k))
    }

    /// Frequencies of `self` that are not in `other`.
    pub fn difference(&self, other: &IndexSet) -> IndexSet {
        let mut data = Vec::new();
        for k in self.iter().filter(|k| !other.contains(k)) {
            data.extend_from_slice(k);
        }
        IndexSet::from_sorted_flat(self.dim, data, Provenance::Explicit)
    }

    /// Largest `|k_j|` over all frequencies and coordinates.
    pub fn max_abs(&self) -> i64 {
        self.data.iter().map(|k| k.abs()).max().unwrap_or(0)
    }

    /// Line-oriented text: header `d=<int> count=<int>` then one frequency per line.
    pub fn to_text(&self) -> String {
        let mut out = String::with_capacity(16 + self.data.len() * 3);
        let _ = writeln!(out, "d={} count={}", self.dim, self.len());
        for k in self.iter() {
            let mut first = true;
            for c in k {
                if !first {
                    out.push(' ');
                }
                first = false;
                let _ = write!(out, "{c}");
            }
            out.push('\n');
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let header = lines.next().ok_or_else(|| Error::Parse("empty input".into()))?;
        let mut dim = None;
        let mut count = None;
        for tok in header.split_whitespace() {
            if let Some(v) = tok.strip_prefix("d=") {
                dim = v.parse::<usize>().ok();
            } else if let Some(v) = tok.strip_prefix("count=") {
                count = v.parse::<usize>().ok();
            }
        }
        let (dim, count) = match (dim, count) {
            (Some(d), Some(c)) if d > 0 => (d, c),
            _ => return Err(Error::Parse(format!("bad header {header:?}"))),
        };
        let mut freqs = Vec::with_capacity(count);
        for line in lines.filter(|l| !l.trim().is_empty()) {
            let k = line
                .split_whitespace()
                .map(|t| t.parse::<i64>().map_err(|e| Error::Parse(format!("{t:?}: {e}"))))
                .collect::<Result<Vec<_>>>()?;
            freqs.push(k);
        }
        if freqs.len() != count {
            return Err(Error::Parse(format!("header says {count} frequencies, found {}", freqs.len())));
        }
        Self::from_frequencies(dim, &freqs)
    }
}

fn cross_factor(k: i64, gamma: f64) -> f64 {
    (k.unsigned_abs() as f64 / gamma).max(1.0)
}

/// Membership test for the hyperbolic cross `prod_j max(1, |k_j|/gamma) <= radius`.
///
/// The product is accumulated left to right, the same order used by
/// [`hyperbolic_cross`], so both agree bit for bit on boundary cases.
pub fn in_hyperbolic_cross(k: &[i64], gamma: f64, radius: f64) -> bool {
    let mut prod = 1.0;
    for &kj in k {
        prod *= cross_factor(kj, gamma);
        if prod > radius {
            return false;
        }
    }
    true
}

/// Hyperbolic cross `{k in Z^d : prod_j max(1, |k_j|/gamma) <= radius}`.
pub fn hyperbolic_cross(d: usize, gamma: f64, radius: f64) -> Result<IndexSet> {
    hyperbolic_cross_capped(d, gamma, radius, DEFAULT_SIZE_CAP)
}

pub fn hyperbolic_cross_capped(d: usize, gamma: f64, radius: f64, cap: usize) -> Result<IndexSet> {
    if d == 0 {
        return Err(invalid("dimension must be at least 1"));
    }
    if !(gamma.is_finite() && gamma > 0.0) {
        return Err(invalid(format!("gamma must be finite and positive, got {gamma}")));
    }
    if !(radius.is_finite() && radius > 1.0) {
        return Err(invalid(format!("radius must be finite and > 1, got {radius}")));
    }
    let mut data = Vec::new();
    let mut prefix = vec![0i64; d];
    descend(0, 1.0, gamma, radius, cap, &mut prefix, &mut data)?;
    Ok(IndexSet::from_sorted_flat(d, data, Provenance::HyperbolicCross { gamma, radius }))
}

// Coordinate-wise descent with a running product; emits frequencies in
// lexicographic order because each coordinate is visited in ascending order.
fn descend(
    j: usize,
    prod: f64,
    gamma: f64,
    radius: f64,
    cap: usize,
    prefix: &mut [i64],
    out: &mut Vec<i64>,
) -> Result<()> {
    let d = prefix.len();
    if j == d {
        if out.len() / d >= cap {
            return Err(Error::SizeCapExceeded { cap });
        }
        out.extend_from_slice(prefix);
        return Ok(());
    }
    let mut kmax = 0i64;
    while prod * cross_factor(kmax + 1, gamma) <= radius {
        kmax += 1;
    }
    for k in -kmax..=kmax {
        prefix[j] = k;
        descend(j + 1, prod * cross_factor(k, gamma), gamma, radius, cap, prefix, out)?;
    }
    Ok(())
}

fn univariate_weight_sq(k: i64, s: SmoothnessWeight) -> f64 {
    1.0 + (2.0 * PI * k.unsigned_abs() as f64).powf(2.0 * s.value())
}

/// `prod_j (1 + (2 pi |k_j|)^{2s})^{1/2}`.
pub fn weight_mix(k: &[i64], s: SmoothnessWeight) -> f64 {
    k.iter().map(|&kj| univariate_weight_sq(kj, s)).product::<f64>().sqrt()
}

/// Eigenvalue `lambda_k = weight_mix(k, s)^{-2}` of the mixed Sobolev embedding.
pub fn eigenvalue(k: &[i64], s: SmoothnessWeight) -> f64 {
    1.0 / k.iter().map(|&kj| univariate_weight_sq(kj, s)).product::<f64>()
}

/// The `m` frequencies of `parent` with the largest eigenvalues. Ties go to
/// the lexicographically smaller frequency. The result keeps lexicographic order.
pub fn select_largest_eigenvalues(parent: &IndexSet, m: usize, s: SmoothnessWeight) -> Result<IndexSet> {
    if m > parent.len() {
        return Err(invalid(format!("cannot select {m} of {} frequencies", parent.len())));
    }
    let lambdas: Vec<f64> = parent.iter().map(|k| eigenvalue(k, s)).collect();
    let mut order: Vec<usize> = (0..parent.len()).collect();
    // stable sort keeps lexicographic order among ties
    order.sort_by(|&a, &b| lambdas[b].total_cmp(&lambdas[a]));
    let mut chosen = order[..m].to_vec();
    chosen.sort_unstable();
    let mut data = Vec::with_capacity(m * parent.dim);
    for i in chosen {
        data.extend_from_slice(parent.get(i));
    }
    Ok(IndexSet::from_sorted_flat(parent.dim, data, Provenance::Explicit))
}
