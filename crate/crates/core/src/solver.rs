//! Weighted least squares `min_a ||W^{1/2} (L a - f)||`.

use std::sync::Arc;
use std::time::Instant;

use nalgebra::linalg::Cholesky;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::fourier::{OperatorKind, SystemOperator};
use crate::index_sets::IndexSet;
use crate::lattice::SamplePlan;
use crate::linalg;
use crate::mz::{SpectralBounds, DENSE_CAP};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverMode {
    DirectNormal,
    IterativeNormal,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub max_iterations: usize,
    /// Stop once the normal-equation residual drops below this fraction of
    /// its initial value.
    pub residual_tolerance: f64,
    pub mode: SolverMode,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self { max_iterations: 10, residual_tolerance: 1e-12, mode: SolverMode::IterativeNormal }
    }
}

impl SolverConfig {
    pub fn direct() -> Self {
        Self { mode: SolverMode::DirectNormal, ..Self::default() }
    }

    pub fn iterative(max_iterations: usize) -> Self {
        Self { max_iterations, ..Self::default() }
    }

    fn validate(&self) -> Result<()> {
        if self.max_iterations == 0 {
            return Err(invalid("max_iterations must be at least 1"));
        }
        if !(self.residual_tolerance >= 0.0) {
            return Err(invalid("residual_tolerance must be nonnegative"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub mode: SolverMode,
    pub operator: OperatorKind,
    pub iterations: usize,
    pub converged: bool,
    /// `||W^{1/2} (L a - f)||`.
    pub residual: f64,
    /// `||L^H W (f - L a)|| / ||L^H W f||`.
    pub normal_residual: f64,
    pub condition_estimate: Option<f64>,
    pub wall_time_s: f64,
    pub warning: Option<String>,
}

impl Diagnostics {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }
}

fn weighted_residual(op: &SystemOperator, weights: &[f64], a: &[Complex64], f: &[Complex64]) -> Result<f64> {
    let la = op.forward(a)?;
    Ok(la
        .iter()
        .zip(f)
        .zip(weights)
        .map(|((x, y), w)| w * (x - y).norm_sqr())
        .sum::<f64>()
        .sqrt())
}

fn weighted(weights: &[f64], v: &[Complex64]) -> Vec<Complex64> {
    v.iter().zip(weights).map(|(z, &w)| z * w).collect()
}

fn solve_direct(op: &SystemOperator, weights: &[f64], rhs: &[Complex64]) -> Result<(Vec<Complex64>, Option<String>)> {
    let n = op.cols();
    if n > DENSE_CAP {
        return Err(Error::DenseCapExceeded(format!("direct solve with |I| = {n} > {DENSE_CAP}")));
    }
    let gram = op.gram(weights)?;
    let b = linalg::to_dvector(rhs);
    let scale = (0..n).map(|i| gram[(i, i)].re).fold(0.0, f64::max);
    if let Some(ch) = Cholesky::new(gram.clone()) {
        // pivots this small mean the matrix is singular to working precision
        let pivot = (0..n).map(|i| ch.l_dirty()[(i, i)].re.powi(2)).fold(f64::INFINITY, f64::min);
        if pivot > scale * n as f64 * f64::EPSILON {
            return Ok((ch.solve(&b).iter().copied().collect(), None));
        }
    }
    // least-norm solution through the eigendecomposition
    let (vals, q) = linalg::hermitian_eigen(&gram);
    let top = vals.last().copied().unwrap_or(0.0).max(0.0);
    let cut = top * n as f64 * f64::EPSILON;
    if top == 0.0 {
        return Err(Error::Singular);
    }
    let qb = q.adjoint() * b;
    let scaled = qb
        .iter()
        .zip(&vals)
        .map(|(z, &v)| if v > cut { z / v } else { Complex64::new(0.0, 0.0) })
        .collect::<Vec<_>>();
    let x = &q * linalg::to_dvector(&scaled);
    Ok((x.iter().copied().collect(), Some("normal matrix not positive definite; returned least-norm solution".into())))
}

/// Solves the weighted least-squares problem on `op`.
///
/// The iterative mode is CGLS started from zero: conjugate gradients on the
/// normal equations with one forward and one adjoint application per step.
pub fn least_squares(
    op: &SystemOperator,
    weights: &[f64],
    samples: &[Complex64],
    cfg: &SolverConfig,
    bounds: Option<SpectralBounds>,
) -> Result<(Vec<Complex64>, Diagnostics)> {
    cfg.validate()?;
    let start = Instant::now();
    if samples.len() != op.rows() {
        return Err(Error::DimensionMismatch { expected: op.rows(), got: samples.len() });
    }
    if weights.len() != op.rows() {
        return Err(Error::DimensionMismatch { expected: op.rows(), got: weights.len() });
    }
    if weights.iter().any(|w| !(*w >= 0.0)) {
        return Err(invalid("weights must be nonnegative"));
    }
    let n = op.cols();
    let rhs = op.adjoint(&weighted(weights, samples))?;
    let rhs_norm = linalg::norm(&rhs);
    let zero = Complex64::new(0.0, 0.0);

    let (a, iterations, warning) = match cfg.mode {
        SolverMode::DirectNormal => {
            if rhs_norm == 0.0 {
                (vec![zero; n], 0, None)
            } else {
                let (a, w) = solve_direct(op, weights, &rhs)?;
                (a, 1, w)
            }
        }
        SolverMode::IterativeNormal => {
            let mut x = vec![zero; n];
            let mut r = samples.to_vec();
            let mut s = rhs.clone();
            let mut p = s.clone();
            let mut gamma = rhs_norm * rhs_norm;
            let mut it = 0;
            while it < cfg.max_iterations && gamma.sqrt() > cfg.residual_tolerance * rhs_norm {
                let q = op.forward(&p)?;
                let qwq: f64 = q.iter().zip(weights).map(|(z, &w)| w * z.norm_sqr()).sum();
                if !(qwq > 0.0) {
                    break;
                }
                let alpha = gamma / qwq;
                x.iter_mut().zip(&p).for_each(|(xi, pi)| *xi += pi * alpha);
                r.iter_mut().zip(&q).for_each(|(ri, qi)| *ri -= qi * alpha);
                s = op.adjoint(&weighted(weights, &r))?;
                let next = linalg::norm(&s).powi(2);
                let beta = next / gamma;
                gamma = next;
                p.iter_mut().zip(&s).for_each(|(pi, si)| *pi = si + *pi * beta);
                it += 1;
            }
            (x, it, None)
        }
    };

    let normal = {
        let na = op.apply_normal(weights, &a)?;
        let diff: Vec<Complex64> = rhs.iter().zip(&na).map(|(x, y)| x - y).collect();
        if rhs_norm > 0.0 {
            linalg::norm(&diff) / rhs_norm
        } else {
            0.0
        }
    };
    let residual = weighted_residual(op, weights, &a, samples)?;
    let converged = match cfg.mode {
        SolverMode::DirectNormal => true,
        SolverMode::IterativeNormal => normal <= cfg.residual_tolerance.max(1e-14),
    };
    let diagnostics = Diagnostics {
        mode: cfg.mode,
        operator: op.kind(),
        iterations,
        converged,
        residual,
        normal_residual: normal,
        condition_estimate: bounds.map(|b| b.ratio()),
        wall_time_s: start.elapsed().as_secs_f64(),
        warning,
    };
    Ok((a, diagnostics))
}

/// Least squares on a plan's points with its weights, using the lattice FFT
/// operator whenever the plan lives on a lattice.
pub fn reconstruct(
    plan: &SamplePlan,
    freqs: Arc<IndexSet>,
    samples: &[Complex64],
    cfg: &SolverConfig,
) -> Result<(Vec<Complex64>, Diagnostics)> {
    let op = SystemOperator::for_plan(plan, freqs)?;
    least_squares(&op, plan.weights(), samples, cfg, plan.bounds)
}
