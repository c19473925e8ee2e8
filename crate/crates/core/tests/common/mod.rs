//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use std::f64::consts::PI;

use mz_subsample::{Complex64, IndexSet, SamplePlan};
use nalgebra::DMatrix;

/// `exp(2 pi i k.x)` evaluated term by term, one row per point.
pub fn exp_matrix(dim: usize, points: &[f64], freqs: &IndexSet) -> DMatrix<Complex64> {
    let rows = points.len() / dim;
    DMatrix::from_fn(rows, freqs.len(), |i, j| {
        let x = &points[i * dim..(i + 1) * dim];
        let phase: f64 = freqs.get(j).iter().zip(x).map(|(&k, &xj)| k as f64 * xj).sum();
        Complex64::from_polar(1.0, 2.0 * PI * phase)
    })
}

/// Extreme eigenvalues of `L^H W L` for the plan's points and weights.
pub fn frame_bounds(plan: &SamplePlan, freqs: &IndexSet) -> (f64, f64) {
    let mut l = exp_matrix(plan.dim(), &plan.points_flat(), freqs);
    for (i, &w) in plan.weights().iter().enumerate() {
        let s = w.sqrt();
        l.row_mut(i).iter_mut().for_each(|z| *z *= s);
    }
    let g = l.adjoint() * &l;
    let ev = g.symmetric_eigenvalues();
    (ev.min(), ev.max())
}

pub fn max_abs_diff(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

pub fn max_abs(a: &[Complex64]) -> f64 {
    a.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub fn norm(a: &[Complex64]) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn median(v: &mut [f64]) -> f64 {
    v.sort_by(|a, b| a.total_cmp(b));
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}
