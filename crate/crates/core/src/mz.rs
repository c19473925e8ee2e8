//! Marcinkiewicz-Zygmund constants of weighted point sets.
//!
//! For points `x_i`, weights `w_i` and frequencies `I`, the constants are the
//! extreme eigenvalues of the Hermitian matrix `L^H W L`. Exponentials are
//! orthonormal for the normalized Lebesgue measure, so `||f||^2 = ||a||^2`.

use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::fourier::{OperatorKind, SystemOperator};
use crate::index_sets::IndexSet;
use crate::lattice::SamplePlan;
use crate::linalg::{self, CMatrix};
use crate::rng;

/// Largest `|I|` for which the Gram matrix is assembled and diagonalized.
pub const DENSE_CAP: usize = 4096;

/// Default absolute tolerance on Gram entries.
pub const DEFAULT_TOL: f64 = 1e-8;

/// Lower and upper MZ (frame) constants, `0 <= lower <= upper`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralBounds {
    pub lower: f64,
    pub upper: f64,
}

impl SpectralBounds {
    pub fn new(lower: f64, upper: f64) -> Result<Self> {
        if !(lower >= 0.0 && upper >= lower && upper.is_finite()) {
            return Err(invalid(format!("invalid spectral bounds ({lower}, {upper})")));
        }
        Ok(Self { lower, upper })
    }

    /// `upper / lower`, infinite when `lower = 0`.
    pub fn ratio(&self) -> f64 {
        if self.lower > 0.0 {
            self.upper / self.lower
        } else {
            f64::INFINITY
        }
    }
}

fn check_cap(n: usize) -> Result<()> {
    if n > DENSE_CAP {
        return Err(Error::DenseCapExceeded(format!(
            "|I| = {n} exceeds the dense cap {DENSE_CAP}; use estimate_bounds_iterative"
        )));
    }
    Ok(())
}

/// Extreme eigenvalues of a Hermitian positive semidefinite matrix.
pub fn bounds_of_gram(gram: &CMatrix) -> SpectralBounds {
    let vals = linalg::hermitian_eigenvalues(gram);
    match (vals.first(), vals.last()) {
        (Some(&lo), Some(&hi)) => {
            let upper = hi.max(0.0);
            SpectralBounds { lower: lo.clamp(0.0, upper), upper }
        }
        _ => SpectralBounds { lower: 0.0, upper: 0.0 },
    }
}

/// Constants of the rows of `op` weighted by `weights`.
pub fn operator_constants(op: &SystemOperator, weights: &[f64]) -> Result<SpectralBounds> {
    check_cap(op.cols())?;
    Ok(bounds_of_gram(&op.gram(weights)?))
}

/// `A = sigma_min(W^{1/2} L)^2` and `B = sigma_max(W^{1/2} L)^2`.
pub fn mz_constants(plan: &SamplePlan, freqs: &IndexSet) -> Result<SpectralBounds> {
    check_cap(freqs.len())?;
    let op = SystemOperator::for_plan(plan, Arc::new(freqs.clone()))?;
    operator_constants(&op, plan.weights())
}

/// Result of the matrix-free estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundsEstimate {
    pub bounds: SpectralBounds,
    pub iterations: usize,
    pub converged: bool,
}

/// Lanczos with full reorthogonalization on `L^H W L`.
///
/// Ritz values are interior to the spectrum, and each extreme Ritz pair has an
/// eigenvalue within its residual norm, so the reported interval is widened
/// by those residuals. `converged` is false when the residuals did not reach
/// `tol` relative to the upper constant within `max_iterations` steps.
pub fn estimate_bounds_iterative(
    op: &SystemOperator,
    weights: &[f64],
    tol: f64,
    max_iterations: usize,
) -> Result<BoundsEstimate> {
    if !(tol > 0.0) {
        return Err(invalid("tolerance must be positive"));
    }
    let n = op.cols();
    if n == 0 {
        return Ok(BoundsEstimate { bounds: SpectralBounds { lower: 0.0, upper: 0.0 }, iterations: 0, converged: true });
    }
    let steps = max_iterations.clamp(1, n);
    let mut rng = rng::stream(n as u64, &[rng::stage::LANCZOS_START]);
    let mut q: Vec<Complex64> = (0..n).map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect();
    let q_norm = linalg::norm(&q);
    q.iter_mut().for_each(|z| *z /= q_norm);

    let mut basis: Vec<Vec<Complex64>> = vec![q];
    let mut alpha: Vec<f64> = Vec::new();
    let mut beta: Vec<f64> = Vec::new();
    let mut result = None;
    for j in 0..steps {
        let mut v = op.apply_normal(weights, &basis[j])?;
        alpha.push(linalg::dot(&basis[j], &v).re);
        // two passes of classical Gram-Schmidt against the whole basis
        for _ in 0..2 {
            for b in &basis {
                let c = linalg::dot(b, &v);
                v.iter_mut().zip(b).for_each(|(x, y)| *x -= c * y);
            }
        }
        let next = linalg::norm(&v);
        let (lo, hi, r_lo, r_hi) = ritz_extremes(&alpha, &beta, next);
        let scale = hi.abs().max(f64::MIN_POSITIVE);
        let exhausted = next <= 1e-13 * scale || j + 1 == n;
        let converged = exhausted || (r_lo <= tol * scale && r_hi <= tol * scale);
        if converged || j + 1 == steps {
            let upper = (hi + r_hi).max(0.0);
            let lower = (lo - r_lo).clamp(0.0, upper);
            result = Some(BoundsEstimate { bounds: SpectralBounds { lower, upper }, iterations: j + 1, converged });
            break;
        }
        v.iter_mut().for_each(|z| *z /= next);
        beta.push(next);
        basis.push(v);
    }
    Ok(result.expect("loop always produces a result"))
}

// Extreme eigenvalues of the Lanczos tridiagonal and their residual norms.
fn ritz_extremes(alpha: &[f64], beta: &[f64], next: f64) -> (f64, f64, f64, f64) {
    let m = alpha.len();
    let mut t = DMatrix::<f64>::zeros(m, m);
    for i in 0..m {
        t[(i, i)] = alpha[i];
        if i + 1 < m {
            t[(i, i + 1)] = beta[i];
            t[(i + 1, i)] = beta[i];
        }
    }
    let eig = t.symmetric_eigen();
    let (mut imin, mut imax) = (0, 0);
    for i in 0..m {
        if eig.eigenvalues[i] < eig.eigenvalues[imin] {
            imin = i;
        }
        if eig.eigenvalues[i] > eig.eigenvalues[imax] {
            imax = i;
        }
    }
    let res = |i: usize| (next * eig.eigenvectors[(m - 1, i)]).abs();
    (eig.eigenvalues[imin], eig.eigenvalues[imax], res(imin), res(imax))
}

fn exactness_of_gram(gram: &CMatrix, tol: f64) -> Option<f64> {
    let n = gram.nrows();
    if n == 0 {
        return None;
    }
    let a = (0..n).map(|i| gram[(i, i)].re).sum::<f64>() / n as f64;
    let dev = (0..n)
        .flat_map(|i| (0..n).map(move |j| (i, j)))
        .map(|(i, j)| {
            let target = if i == j { a } else { 0.0 };
            (gram[(i, j)] - target).norm()
        })
        .fold(0.0, f64::max);
    (dev <= tol && a > 0.0).then_some(a)
}

/// `Some(A)` when `L^H W L = A * Id` up to `tol` in max norm.
pub fn quadrature_exactness(plan: &SamplePlan, freqs: &IndexSet, tol: f64) -> Result<Option<f64>> {
    if !(tol > 0.0) {
        return Err(invalid("tolerance must be positive"));
    }
    check_cap(freqs.len())?;
    let op = SystemOperator::for_plan(plan, Arc::new(freqs.clone()))?;
    Ok(exactness_of_gram(&op.gram(plan.weights())?, tol))
}

/// Diagnostic summary of a weighted point set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MzReport {
    pub points: usize,
    pub frequencies: usize,
    pub lower: f64,
    pub upper: f64,
    pub ratio: f64,
    pub exact: bool,
    pub exact_constant: Option<f64>,
    pub method: String,
    pub converged: bool,
    pub operator: OperatorKind,
}

impl MzReport {
    pub fn to_text(&self) -> String {
        format!(
            "points={} frequencies={} A={:.12e} B={:.12e} B/A={:.6e} exact={} method={} converged={}\n",
            self.points, self.frequencies, self.lower, self.upper, self.ratio, self.exact, self.method, self.converged
        )
    }
}

/// Dense audit when `|I| <= DENSE_CAP`, Lanczos estimate otherwise.
pub fn mz_report(plan: &SamplePlan, freqs: &IndexSet, tol: f64) -> Result<MzReport> {
    let op = SystemOperator::for_plan(plan, Arc::new(freqs.clone()))?;
    let base = |bounds: SpectralBounds, exact: Option<f64>, method: &str, converged: bool| MzReport {
        points: plan.len(),
        frequencies: freqs.len(),
        lower: bounds.lower,
        upper: bounds.upper,
        ratio: bounds.ratio(),
        exact: exact.is_some(),
        exact_constant: exact,
        method: method.to_string(),
        converged,
        operator: op.kind(),
    };
    if freqs.len() <= DENSE_CAP {
        let gram = op.gram(plan.weights())?;
        Ok(base(bounds_of_gram(&gram), exactness_of_gram(&gram, tol), "dense", true))
    } else {
        let est = estimate_bounds_iterative(&op, plan.weights(), tol, 300)?;
        Ok(base(est.bounds, None, "lanczos", est.converged))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::index_sets::hyperbolic_cross;
    use crate::lattice::{lattice_points, search_generator, Rank1Lattice, SearchSchedule};

    #[test]
    fn reconstructing_lattice_is_exact() {
        let freqs = hyperbolic_cross(2, 1.0, 6.0).unwrap();
        let lat = search_generator(&freqs, 11, &SearchSchedule::default()).unwrap();
        let plan = lattice_points(&lat);
        let b = mz_constants(&plan, &freqs).unwrap();
        assert!((b.lower - 1.0).abs() < 1e-10 && (b.upper - 1.0).abs() < 1e-10);
        let a = quadrature_exactness(&plan, &freqs, DEFAULT_TOL).unwrap().unwrap();
        assert!((a - 1.0).abs() < 1e-12);
        let scaled = plan.with_weights_unchecked(plan.weights().iter().map(|w| 2.5 * w).collect());
        let a = quadrature_exactness(&scaled, &freqs, DEFAULT_TOL).unwrap().unwrap();
        assert!((a - 2.5).abs() < 1e-12);
    }

    #[test]
    fn zero_weights_and_two_point_rule() {
        let freqs = IndexSet::from_frequencies(1, &[[0], [1]]).unwrap();
        let plan = SamplePlan::new(1, vec![0.0, 0.5], vec![0.5, 0.5]).unwrap();
        let b = mz_constants(&plan, &freqs).unwrap();
        assert!((b.lower - 1.0).abs() < 1e-14 && (b.upper - 1.0).abs() < 1e-14);
        let zero = plan.with_weights_unchecked(vec![0.0, 0.0]);
        let b = mz_constants(&zero, &freqs).unwrap();
        assert_eq!((b.lower, b.upper), (0.0, 0.0));
        assert_eq!(quadrature_exactness(&zero, &freqs, DEFAULT_TOL).unwrap(), None);
    }

    #[test]
    fn colliding_lattice_is_not_exact() {
        let freqs = IndexSet::from_frequencies(1, &[[-1], [0], [1]]).unwrap();
        let lat = Rank1Lattice::new(&[1], 2).unwrap();
        let plan = lattice_points(&lat);
        assert_eq!(quadrature_exactness(&plan, &freqs, DEFAULT_TOL).unwrap(), None);
        let op = SystemOperator::for_plan(&plan, Arc::new(freqs.clone())).unwrap();
        let g = op.gram(plan.weights()).unwrap();
        // -1 and 1 share residue 1 modulo 2
        assert!((g[(0, 2)] - Complex64::new(1.0, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn lanczos_matches_dense() {
        let freqs = Arc::new(hyperbolic_cross(3, 0.5, 16.0).unwrap());
        let lat = search_generator(&freqs, 2, &SearchSchedule::default()).unwrap();
        let mut r = rng::stream(3, &[]);
        let m = lat.size() as usize;
        let mask: Vec<usize> = (0..3 * freqs.len()).map(|_| r.random_range(0..m)).collect();
        let weights = vec![1.0 / mask.len() as f64; mask.len()];
        let op = SystemOperator::lattice(&lat, freqs.clone()).unwrap().with_mask(mask).unwrap();
        let dense = operator_constants(&op, &weights).unwrap();
        let tol = 1e-6;
        let est = estimate_bounds_iterative(&op, &weights, tol, 1000).unwrap();
        assert!(est.converged);
        assert!(est.bounds.upper >= dense.upper * (1.0 - tol));
        assert!(est.bounds.lower <= dense.lower * (1.0 + tol));
        assert!((est.bounds.upper - dense.upper).abs() <= 2.0 * tol * dense.upper);
        assert!((est.bounds.lower - dense.lower).abs() <= 2.0 * tol * dense.upper);

        let full = SystemOperator::lattice(&lat, freqs.clone()).unwrap();
        let est = estimate_bounds_iterative(&full, &vec![1.0 / m as f64; m], tol, 50).unwrap();
        assert!((est.bounds.lower - 1.0).abs() < tol && (est.bounds.upper - 1.0).abs() < tol);
    }

    #[test]
    fn lanczos_detects_rank_deficiency() {
        let freqs = Arc::new(hyperbolic_cross(2, 1.0, 4.0).unwrap());
        let lat = search_generator(&freqs, 5, &SearchSchedule::default()).unwrap();
        let mask: Vec<usize> = (0..freqs.len() / 2).collect();
        let op = SystemOperator::lattice(&lat, freqs.clone()).unwrap().with_mask(mask.clone()).unwrap();
        let est = estimate_bounds_iterative(&op, &vec![1.0; mask.len()], 1e-8, 1000).unwrap();
        assert!(est.bounds.lower <= 1e-8);
    }

    #[test]
    fn report_json() {
        let freqs = hyperbolic_cross(2, 1.0, 3.0).unwrap();
        let lat = search_generator(&freqs, 1, &SearchSchedule::default()).unwrap();
        let rep = mz_report(&lattice_points(&lat), &freqs, DEFAULT_TOL).unwrap();
        assert!(rep.exact);
        let back: MzReport = serde_json::from_str(&serde_json::to_string(&rep).unwrap()).unwrap();
        assert_eq!(back, rep);
        assert!(rep.to_text().contains("exact=true"));
    }
}
