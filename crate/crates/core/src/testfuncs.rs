//! The kink test function and the truncation/aliasing error split.
//!
//! The univariate factor is `g(x) = c * max(1/5 - (x - 1/2)^2, 0)` with
//! `c = 5^{3/4} * 15 / (4 sqrt 3)`, which makes `||g||_2 = 1`. Substituting
//! `y = x - 1/2` and integrating by parts twice gives
//!
//! ```text
//! g_hat(k) = c (-1)^k 4 (sin(w a) - w a cos(w a)) / w^3,   w = 2 pi k, a = 1/sqrt 5
//! g_hat(0) = c (4/3) a^3
//! ```
//!
//! so the coefficients decay like `|k|^{-2}`.

use std::f64::consts::PI;
use std::fmt::Write as _;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::index_sets::IndexSet;

/// Reference Fourier coefficients of a function with known norm.
pub trait SpectralData {
    fn dim(&self) -> usize;
    fn coefficient(&self, k: &[i64]) -> Complex64;
    fn norm_sq(&self) -> f64;

    fn coefficients(&self, freqs: &IndexSet) -> Vec<Complex64> {
        freqs.iter().map(|k| self.coefficient(k)).collect()
    }
}

fn half_width() -> f64 {
    1.0 / 5f64.sqrt()
}

/// `5^{3/4} * 15 / (4 sqrt 3)`.
pub fn kink_constant() -> f64 {
    5f64.powf(0.75) * 15.0 / (4.0 * 3f64.sqrt())
}

pub fn kink_eval_1d(x: f64) -> f64 {
    let y = x - 0.5;
    kink_constant() * (0.2 - y * y).max(0.0)
}

pub fn kink_coeff_1d(k: i64) -> f64 {
    let c = kink_constant();
    let a = half_width();
    if k == 0 {
        return c * 4.0 / 3.0 * a.powi(3);
    }
    let w = 2.0 * PI * k.unsigned_abs() as f64;
    let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
    sign * c * 4.0 * ((w * a).sin() - w * a * (w * a).cos()) / w.powi(3)
}

/// Tensor product of `d` univariate kinks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Kink {
    dim: usize,
}

impl Kink {
    pub fn new(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(invalid("dimension must be at least 1"));
        }
        Ok(Self { dim })
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        x.iter().map(|&xj| kink_eval_1d(xj)).product()
    }

    /// Values at the points of a flat, row-major buffer.
    pub fn eval_many(&self, points: &[f64]) -> Vec<Complex64> {
        points.chunks_exact(self.dim).map(|p| Complex64::new(self.eval(p), 0.0)).collect()
    }
}

impl SpectralData for Kink {
    fn dim(&self) -> usize {
        self.dim
    }

    fn coefficient(&self, k: &[i64]) -> Complex64 {
        Complex64::new(k.iter().map(|&kj| kink_coeff_1d(kj)).product(), 0.0)
    }

    fn norm_sq(&self) -> f64 {
        1.0
    }

    fn coefficients(&self, freqs: &IndexSet) -> Vec<Complex64> {
        let kmax = freqs.max_abs();
        let table: Vec<f64> = (0..=kmax).map(kink_coeff_1d).collect();
        freqs
            .iter()
            .map(|k| Complex64::new(k.iter().map(|&kj| table[kj.unsigned_abs() as usize]).product(), 0.0))
            .collect()
    }
}

/// Univariate coefficients for `-kmax..=kmax` as CSV `k,value`.
pub fn coefficient_csv(kmax: i64) -> String {
    let mut s = String::from("k,value\n");
    for k in -kmax..=kmax {
        let _ = writeln!(s, "{k},{:.16e}", kink_coeff_1d(k));
    }
    s
}

const SLACK: f64 = 1e-12;

/// `||f||^2 - sum_{k in I} |f_hat_k|^2`, clamped at zero.
pub fn truncation_error_sq(reference: &dyn SpectralData, freqs: &IndexSet) -> Result<f64> {
    if freqs.dim() != reference.dim() && !freqs.is_empty() {
        return Err(Error::DimensionMismatch { expected: reference.dim(), got: freqs.dim() });
    }
    let captured: f64 = reference.coefficients(freqs).iter().map(|z| z.norm_sqr()).sum();
    let norm_sq = reference.norm_sq();
    let t = norm_sq - captured;
    if t < -SLACK * norm_sq.max(1.0) {
        return Err(invalid(format!("reference data inconsistent: captured energy {captured} exceeds {norm_sq}")));
    }
    Ok(t.max(0.0))
}

/// `sum_{k in I} |f_hat_k - g_k|^2`.
pub fn aliasing_error_sq(exact: &[Complex64], computed: &[Complex64]) -> Result<f64> {
    if exact.len() != computed.len() {
        return Err(Error::DimensionMismatch { expected: exact.len(), got: computed.len() });
    }
    Ok(exact.iter().zip(computed).map(|(x, y)| (x - y).norm_sqr()).sum())
}

/// Error norms (not squared) of one reconstruction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorSplit {
    pub truncation: f64,
    pub aliasing: f64,
    pub total: f64,
}

pub fn error_split(reference: &dyn SpectralData, freqs: &IndexSet, computed: &[Complex64]) -> Result<ErrorSplit> {
    let trunc = truncation_error_sq(reference, freqs)?;
    let alias = aliasing_error_sq(&reference.coefficients(freqs), computed)?;
    Ok(ErrorSplit { truncation: trunc.sqrt(), aliasing: alias.sqrt(), total: (trunc + alias).sqrt() })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn point_values() {
        let c = kink_constant();
        assert!((kink_eval_1d(0.5) - c / 5.0).abs() < 1e-15);
        assert!((c / 5.0 - 1.447_865_231_610_34).abs() < 1e-13);
        let k5 = Kink::new(5).unwrap();
        assert!((k5.eval(&[0.5; 5]) - 6.362_689_006_100_11).abs() < 1e-12);
        assert_eq!(k5.eval(&[0.0, 0.5, 0.5, 0.5, 0.5]), 0.0);
        assert!(k5.eval(&[0.1, 0.2, 0.3, 0.9, 0.7]) >= 0.0);
    }

    #[test]
    fn coefficient_values() {
        assert!((kink_coeff_1d(0) - 5f64.powf(0.25) / 3f64.sqrt()).abs() < 1e-15);
        assert!((kink_coeff_1d(0) - 0.863_340_021_370_450).abs() < 1e-14);
        for k in 1..50 {
            assert_eq!(kink_coeff_1d(k), kink_coeff_1d(-k));
        }
    }

    #[test]
    fn coefficients_decay_like_inverse_square() {
        // |sin t - t cos t| <= 1 + t gives k^2 |g_hat(k)| <= c/(2 pi^3) + c a / pi^2
        let (c, a) = (kink_constant(), half_width());
        let bound = c / (2.0 * PI.powi(3)) + c * a / (PI * PI);
        let scaled: Vec<f64> = (1..=2000).map(|k| (k * k) as f64 * kink_coeff_1d(k).abs()).collect();
        assert!(scaled.iter().all(|&s| s <= bound));
        // not k^{-3}: k^3 |g_hat(k)| keeps growing
        let tail = scaled[1000..].iter().enumerate().map(|(i, s)| s * (i + 1001) as f64).fold(0.0, f64::max);
        let head = scaled[..100].iter().enumerate().map(|(i, s)| s * (i + 1) as f64).fold(0.0, f64::max);
        assert!(tail > 5.0 * head);
    }

    #[test]
    fn truncation_examples() {
        let kink = Kink::new(1).unwrap();
        let empty = IndexSet::from_frequencies::<[i64; 1]>(1, &[]).unwrap();
        assert_eq!(truncation_error_sq(&kink, &empty).unwrap(), 1.0);
        let zero = IndexSet::from_frequencies(1, &[[0]]).unwrap();
        let t = truncation_error_sq(&kink, &zero).unwrap();
        assert!((t - (1.0 - 5f64.sqrt() / 3.0)).abs() < 1e-15);
        assert!((t - 0.254_644_007_500_070).abs() < 1e-14);
    }

    #[test]
    fn error_split_is_orthogonal() {
        let kink = Kink::new(2).unwrap();
        let freqs = crate::index_sets::hyperbolic_cross(2, 0.5, 8.0).unwrap();
        let exact = kink.coefficients(&freqs);
        let split = error_split(&kink, &freqs, &exact).unwrap();
        assert_eq!(split.aliasing, 0.0);
        assert_eq!(split.total, split.truncation);
        assert!(aliasing_error_sq(&exact, &exact[1..]).is_err());
        let csv = coefficient_csv(2);
        assert_eq!(csv.lines().count(), 6);
    }
}
