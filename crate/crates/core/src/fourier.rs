//! Realizations of the system matrix `L = (exp(2 pi i <k, x_i>))_{i, k}`.
//!
//! On lattice nodes every column is a single residue `<k, z> mod M`, so the
//! product with `L` is a scatter into a length-`M` buffer followed by one
//! FFT, and a row mask simply gathers the requested nodes afterwards. Arbitrary
//! points fall back to a dense operator.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{invalid, Error, Result};
use crate::index_sets::IndexSet;
use crate::lattice::{PointOrigin, Rank1Lattice, SamplePlan};
use crate::linalg::{self, CMatrix};

/// Dense operators materialize their matrix up to this many bytes and
/// evaluate rows on the fly beyond it.
pub const DENSE_MATERIALIZE_BYTES: usize = 1 << 30;

#[derive(Clone)]
struct LatticeFft {
    lattice: Rank1Lattice,
    residues: Vec<usize>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

#[derive(Clone)]
struct Dense {
    dim: usize,
    points: Vec<f64>,
    matrix: Option<Vec<Complex64>>,
}

#[derive(Clone)]
enum Kind {
    LatticeFft(LatticeFft),
    Dense(Dense),
}

/// Which backend an operator uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum OperatorKind {
    LatticeFft,
    Dense,
}

/// The matrix `L` for an index set and a point set, optionally restricted to
/// an ordered list of rows `J` (repeats allowed).
#[derive(Clone)]
pub struct SystemOperator {
    freqs: Arc<IndexSet>,
    kind: Kind,
    mask: Option<Vec<usize>>,
}

impl std::fmt::Debug for SystemOperator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SystemOperator")
            .field("kind", &self.kind())
            .field("rows", &self.rows())
            .field("cols", &self.cols())
            .finish()
    }
}

// Table of exp(2 pi i k x_j) for |k| <= kmax, one block per coordinate.
fn power_table(x: &[f64], kmax: i64, table: &mut Vec<Complex64>) {
    let width = (2 * kmax + 1) as usize;
    table.clear();
    table.resize(x.len() * width, Complex64::new(0.0, 0.0));
    for (j, &xj) in x.iter().enumerate() {
        let block = &mut table[j * width..(j + 1) * width];
        for k in -kmax..=kmax {
            block[(k + kmax) as usize] = Complex64::from_polar(1.0, 2.0 * PI * k as f64 * xj);
        }
    }
}

fn dense_row(freqs: &IndexSet, x: &[f64], table: &mut Vec<Complex64>, row: &mut [Complex64]) {
    let kmax = freqs.max_abs();
    let width = (2 * kmax + 1) as usize;
    power_table(x, kmax, table);
    for (out, k) in row.iter_mut().zip(freqs.iter()) {
        let mut e = Complex64::new(1.0, 0.0);
        for (j, &kj) in k.iter().enumerate() {
            e *= table[j * width + (kj + kmax) as usize];
        }
        *out = e;
    }
}

impl SystemOperator {
    /// FFT-backed operator on all `M` nodes of `lattice`.
    pub fn lattice(lattice: &Rank1Lattice, freqs: Arc<IndexSet>) -> Result<Self> {
        if lattice.dim() != freqs.dim() {
            return Err(Error::DimensionMismatch { expected: lattice.dim(), got: freqs.dim() });
        }
        let m = usize::try_from(lattice.size()).map_err(|_| invalid("lattice too large for this platform"))?;
        let residues = freqs.iter().map(|k| lattice.residue(k) as usize).collect();
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(m);
        let inverse = planner.plan_fft_inverse(m);
        Ok(Self {
            freqs,
            kind: Kind::LatticeFft(LatticeFft { lattice: lattice.clone(), residues, forward, inverse }),
            mask: None,
        })
    }

    /// Dense operator on arbitrary points (flat, row major).
    pub fn dense(dim: usize, points: Vec<f64>, freqs: Arc<IndexSet>) -> Result<Self> {
        Self::dense_with_budget(dim, points, freqs, DENSE_MATERIALIZE_BYTES)
    }

    pub fn dense_with_budget(dim: usize, points: Vec<f64>, freqs: Arc<IndexSet>, budget_bytes: usize) -> Result<Self> {
        if dim != freqs.dim() {
            return Err(Error::DimensionMismatch { expected: freqs.dim(), got: dim });
        }
        if !points.len().is_multiple_of(dim) {
            return Err(invalid("point buffer length is not a multiple of the dimension"));
        }
        let rows = points.len() / dim;
        let bytes = rows
            .saturating_mul(freqs.len())
            .saturating_mul(std::mem::size_of::<Complex64>());
        let matrix = (bytes <= budget_bytes).then(|| {
            let n = freqs.len();
            let mut m = vec![Complex64::new(0.0, 0.0); rows * n];
            let mut table = Vec::new();
            for i in 0..rows {
                dense_row(&freqs, &points[i * dim..(i + 1) * dim], &mut table, &mut m[i * n..(i + 1) * n]);
            }
            m
        });
        Ok(Self { freqs, kind: Kind::Dense(Dense { dim, points, matrix }), mask: None })
    }

    /// The natural operator for a sample plan: lattice FFT for lattice
    /// nodes (masked to the plan's nodes), dense otherwise.
    pub fn for_plan(plan: &SamplePlan, freqs: Arc<IndexSet>) -> Result<Self> {
        match plan.origin() {
            PointOrigin::Lattice { lattice, nodes } => {
                let op = Self::lattice(lattice, freqs)?;
                let full = nodes.len() as u64 == lattice.size() && nodes.iter().enumerate().all(|(i, &n)| n == i as u64);
                if full {
                    Ok(op)
                } else {
                    op.with_mask(nodes.iter().map(|&n| n as usize).collect())
                }
            }
            PointOrigin::Free { points } => Self::dense(plan.dim(), points.clone(), freqs),
        }
    }

    /// Restricts to rows `mask` of the unmasked operator.
    pub fn with_mask(mut self, mask: Vec<usize>) -> Result<Self> {
        let parent = self.parent_rows();
        if let Some(&bad) = mask.iter().find(|&&j| j >= parent) {
            return Err(invalid(format!("row {bad} outside operator with {parent} rows")));
        }
        self.mask = Some(mask);
        Ok(self)
    }

    pub fn freqs(&self) -> &Arc<IndexSet> {
        &self.freqs
    }

    pub fn kind(&self) -> OperatorKind {
        match self.kind {
            Kind::LatticeFft(_) => OperatorKind::LatticeFft,
            Kind::Dense(_) => OperatorKind::Dense,
        }
    }

    pub fn mask(&self) -> Option<&[usize]> {
        self.mask.as_deref()
    }

    fn parent_rows(&self) -> usize {
        match &self.kind {
            Kind::LatticeFft(l) => l.residues_len_m(),
            Kind::Dense(d) => d.points.len() / d.dim,
        }
    }

    pub fn rows(&self) -> usize {
        self.mask.as_ref().map_or_else(|| self.parent_rows(), Vec::len)
    }

    pub fn cols(&self) -> usize {
        self.freqs.len()
    }

    fn check_cols(&self, a: &[Complex64]) -> Result<()> {
        if a.len() != self.cols() {
            return Err(Error::DimensionMismatch { expected: self.cols(), got: a.len() });
        }
        Ok(())
    }

    fn check_rows(&self, f: &[Complex64]) -> Result<()> {
        if f.len() != self.rows() {
            return Err(Error::DimensionMismatch { expected: self.rows(), got: f.len() });
        }
        Ok(())
    }

    /// `L a`: entry `i` is `sum_k a_k exp(2 pi i <k, x_i>)`.
    pub fn forward(&self, a: &[Complex64]) -> Result<Vec<Complex64>> {
        self.check_cols(a)?;
        let zero = Complex64::new(0.0, 0.0);
        match &self.kind {
            Kind::LatticeFft(l) => {
                let m = l.residues_len_m();
                let mut buf = vec![zero; m];
                for (&r, &ak) in l.residues.iter().zip(a) {
                    buf[r] += ak;
                }
                l.inverse.process(&mut buf);
                Ok(match &self.mask {
                    Some(mask) => mask.iter().map(|&j| buf[j]).collect(),
                    None => buf,
                })
            }
            Kind::Dense(d) => {
                let rows: Vec<usize> = match &self.mask {
                    Some(mask) => mask.clone(),
                    None => (0..d.points.len() / d.dim).collect(),
                };
                let n = self.cols();
                let mut out = vec![zero; rows.len()];
                let mut row = vec![zero; n];
                let mut table = Vec::new();
                for (o, &i) in out.iter_mut().zip(&rows) {
                    let r: &[Complex64] = match &d.matrix {
                        Some(mat) => &mat[i * n..(i + 1) * n],
                        None => {
                            dense_row(&self.freqs, &d.points[i * d.dim..(i + 1) * d.dim], &mut table, &mut row);
                            &row
                        }
                    };
                    *o = r.iter().zip(a).map(|(e, x)| e * x).sum();
                }
                Ok(out)
            }
        }
    }

    /// `L^H f`: entry `k` is `sum_i conj(exp(2 pi i <k, x_i>)) f_i`.
    pub fn adjoint(&self, f: &[Complex64]) -> Result<Vec<Complex64>> {
        self.check_rows(f)?;
        let zero = Complex64::new(0.0, 0.0);
        match &self.kind {
            Kind::LatticeFft(l) => {
                let m = l.residues_len_m();
                let mut buf = match &self.mask {
                    Some(mask) => {
                        let mut b = vec![zero; m];
                        for (&j, &fj) in mask.iter().zip(f) {
                            b[j] += fj;
                        }
                        b
                    }
                    None => f.to_vec(),
                };
                l.forward.process(&mut buf);
                Ok(l.residues.iter().map(|&r| buf[r]).collect())
            }
            Kind::Dense(d) => {
                let rows: Vec<usize> = match &self.mask {
                    Some(mask) => mask.clone(),
                    None => (0..d.points.len() / d.dim).collect(),
                };
                let n = self.cols();
                let mut out = vec![zero; n];
                let mut row = vec![zero; n];
                let mut table = Vec::new();
                for (&fi, &i) in f.iter().zip(&rows) {
                    let r: &[Complex64] = match &d.matrix {
                        Some(mat) => &mat[i * n..(i + 1) * n],
                        None => {
                            dense_row(&self.freqs, &d.points[i * d.dim..(i + 1) * d.dim], &mut table, &mut row);
                            &row
                        }
                    };
                    for (o, e) in out.iter_mut().zip(r) {
                        *o += e.conj() * fi;
                    }
                }
                Ok(out)
            }
        }
    }

    /// `L^H W L a` for row weights `W`.
    pub fn apply_normal(&self, weights: &[f64], a: &[Complex64]) -> Result<Vec<Complex64>> {
        if weights.len() != self.rows() {
            return Err(Error::DimensionMismatch { expected: self.rows(), got: weights.len() });
        }
        if weights.iter().any(|w| !(*w >= 0.0)) {
            return Err(invalid("weights must be nonnegative"));
        }
        let mut v = self.forward(a)?;
        for (x, &w) in v.iter_mut().zip(weights) {
            *x *= w;
        }
        self.adjoint(&v)
    }

    /// The rows of `L` as a dense matrix (rows x |I|).
    pub fn dense_matrix(&self) -> CMatrix {
        let n = self.cols();
        let rows = self.rows();
        let mut out = CMatrix::zeros(rows, n);
        match &self.kind {
            Kind::LatticeFft(l) => {
                let m = l.residues_len_m() as u64;
                for i in 0..rows {
                    let node = self.mask.as_ref().map_or(i, |mask| mask[i]) as u64;
                    for (c, &r) in l.residues.iter().enumerate() {
                        let t = ((node as u128 * r as u128) % m as u128) as f64 / m as f64;
                        out[(i, c)] = Complex64::from_polar(1.0, 2.0 * PI * t);
                    }
                }
            }
            Kind::Dense(d) => {
                let mut row = vec![Complex64::new(0.0, 0.0); n];
                let mut table = Vec::new();
                for i in 0..rows {
                    let p = self.mask.as_ref().map_or(i, |mask| mask[i]);
                    dense_row(&self.freqs, &d.points[p * d.dim..(p + 1) * d.dim], &mut table, &mut row);
                    for (c, e) in row.iter().enumerate() {
                        out[(i, c)] = *e;
                    }
                }
            }
        }
        out
    }

    /// `L^H W L` as a dense Hermitian matrix.
    ///
    /// On lattices entry `(k, l)` only depends on `(<l - k, z>) mod M`, so one
    /// length-`M` FFT of the node weights gives every entry.
    pub fn gram(&self, weights: &[f64]) -> Result<CMatrix> {
        if weights.len() != self.rows() {
            return Err(Error::DimensionMismatch { expected: self.rows(), got: weights.len() });
        }
        let n = self.cols();
        match &self.kind {
            Kind::LatticeFft(l) => {
                let m = l.residues_len_m();
                let mut h = vec![Complex64::new(0.0, 0.0); m];
                match &self.mask {
                    Some(mask) => {
                        for (&j, &w) in mask.iter().zip(weights) {
                            h[j] += w;
                        }
                    }
                    None => {
                        for (x, &w) in h.iter_mut().zip(weights) {
                            x.re = w;
                        }
                    }
                }
                l.inverse.process(&mut h);
                let mut g = CMatrix::zeros(n, n);
                for (a, &ra) in l.residues.iter().enumerate() {
                    for (b, &rb) in l.residues.iter().enumerate() {
                        g[(a, b)] = h[(rb + m - ra) % m];
                    }
                }
                linalg::hermitize(&mut g);
                Ok(g)
            }
            Kind::Dense(_) => {
                let mut rows = self.dense_matrix();
                for (i, &w) in weights.iter().enumerate() {
                    let s = w.sqrt();
                    rows.row_mut(i).iter_mut().for_each(|z| *z *= s);
                }
                Ok(linalg::gram(&rows))
            }
        }
    }
}

impl LatticeFft {
    fn residues_len_m(&self) -> usize {
        self.lattice.size() as usize
    }
}
