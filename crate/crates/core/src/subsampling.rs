//! Two-stage reduction of a weighted point set.
//!
//! Stage one draws `n` points i.i.d. from a discrete density and reweights
//! them by `w_i / (n rho_i)`. Stage two sparsifies the stage-one rows with a
//! barrier greedy: either with free weights `s_i` ([`bss_subsample`]) or with
//! unit weights on distinct rows ([`plain_bss_subsample`]). Both greedy
//! variants run on whitened rows, so they only see a tight frame, and every
//! output is checked against its guaranteed constants before it is returned.

use std::fmt::Write as _;
use std::sync::Arc;

use nalgebra::linalg::Cholesky;
use num_complex::Complex64;
use rand::distr::Distribution;
use rand_distr::weighted::WeightedAliasIndex;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::fourier::SystemOperator;
use crate::index_sets::{eigenvalue, IndexSet, SmoothnessWeight};
use crate::lattice::{PointOrigin, SamplePlan};
use crate::linalg::{self, CMatrix};
use crate::mz::{self, SpectralBounds};
use crate::rng;

/// Discrete sampling density over the points of a parent plan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityWeights {
    pub rho: Vec<f64>,
}

/// Density mixing the Christoffel function of `freqs`, the eigenvalue
/// weighted tail over `mz_freqs \ freqs` and the plan weights.
///
/// With exponentials `|eta_k| = 1`, so both `N_I(x) = |I|` and
/// `T(x) = sum_{k in tail} lambda_k` are constant in `x`. An empty tail drops
/// the middle term and rescales the other two by `3/2`.
pub fn density_weights(
    plan: &SamplePlan,
    freqs: &IndexSet,
    mz_freqs: &IndexSet,
    s: SmoothnessWeight,
) -> Result<DensityWeights> {
    if freqs.dim() != mz_freqs.dim() || freqs.dim() != plan.dim() {
        return Err(Error::DimensionMismatch { expected: plan.dim(), got: freqs.dim() });
    }
    if !freqs.is_subset_of(mz_freqs) {
        return Err(invalid("the frequency set must be contained in the MZ frequency set"));
    }
    let w = plan.weights();
    let total: f64 = w.iter().sum();
    if !(total > 0.0) {
        return Err(Error::ZeroWeights);
    }
    let christoffel = freqs.len() as f64;
    let tail: f64 = mz_freqs.difference(freqs).iter().map(|k| eigenvalue(k, s)).sum();
    let christoffel_total = christoffel * total;
    let tail_total = tail * total;
    let rho = w
        .iter()
        .map(|&wi| {
            let first = wi * christoffel / christoffel_total;
            let third = wi / total;
            if tail > 0.0 {
                (first + wi * tail / tail_total + third) / 3.0
            } else {
                (first + third) / 2.0
            }
        })
        .collect();
    Ok(DensityWeights { rho })
}

/// `ceil(12 B / (A C) * |I| * (ln |I| + t))`.
pub fn random_subsample_size(bounds: SpectralBounds, c: f64, card: usize, t: f64) -> Result<usize> {
    if !(bounds.lower > 0.0) {
        return Err(invalid("lower MZ constant must be positive"));
    }
    if !(c > 0.0 && c <= 1.0) || !(t > 0.0) || card == 0 {
        return Err(invalid("need 0 < C <= 1, t > 0 and |I| >= 1"));
    }
    let n = 12.0 * bounds.upper / (bounds.lower * c) * card as f64 * ((card as f64).ln() + t);
    Ok(n.ceil().max(1.0) as usize)
}

/// `ceil(|I| ln |I|)`, at least one.
pub fn experiment_subsample_size(card: usize) -> usize {
    let n = card as f64 * (card as f64).ln();
    (n.ceil() as usize).max(1)
}

/// How a selection was produced.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Stage {
    Random { n: usize, seed: u64 },
    BssWeighted { b: f64 },
    PlainBss { b: f64 },
}

impl Stage {
    pub fn tag(&self) -> &'static str {
        match self {
            Stage::Random { .. } => "random",
            Stage::BssWeighted { .. } => "bss_weighted",
            Stage::PlainBss { .. } => "plain_bss",
        }
    }
}

/// Rows of a parent plan (repeats allowed) with new weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubsampleSelection {
    pub indices: Vec<usize>,
    pub reweights: Vec<f64>,
    pub stage: Stage,
    /// Barrier weights `s_i` of the weighted variant.
    pub s: Option<Vec<f64>>,
}

impl SubsampleSelection {
    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    /// The selected points of `parent` carrying the reweights.
    pub fn plan(&self, parent: &SamplePlan) -> Result<SamplePlan> {
        if let Some(&bad) = self.indices.iter().find(|&&i| i >= parent.len()) {
            return Err(invalid(format!("index {bad} outside parent of size {}", parent.len())));
        }
        match parent.origin() {
            PointOrigin::Lattice { lattice, nodes } => {
                let sel = self.indices.iter().map(|&i| nodes[i]).collect();
                SamplePlan::on_lattice(lattice.clone(), sel, self.reweights.clone())
            }
            PointOrigin::Free { points } => {
                let d = parent.dim();
                let sel = self.indices.iter().flat_map(|&i| points[i * d..(i + 1) * d].iter().copied()).collect();
                SamplePlan::new(d, sel, self.reweights.clone())
            }
        }
    }

    /// CSV with columns `index,reweight,stage,s`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("index,reweight,stage,s\n");
        for (j, (&i, &w)) in self.indices.iter().zip(&self.reweights).enumerate() {
            let s = self.s.as_ref().map(|s| format!("{:.16e}", s[j])).unwrap_or_default();
            let _ = writeln!(out, "{i},{w:.16e},{},{s}", self.stage.tag());
        }
        out
    }

    /// Seed and parameters as JSON.
    pub fn sidecar_json(&self) -> Result<String> {
        #[derive(Serialize)]
        struct Sidecar<'a> {
            stage: &'a Stage,
            count: usize,
        }
        Ok(serde_json::to_string_pretty(&Sidecar { stage: &self.stage, count: self.len() })?)
    }
}

/// `n` i.i.d. draws from `rho` with reweights `w_i / (n rho_i)`.
pub fn random_subsample(plan: &SamplePlan, rho: &DensityWeights, n: usize, seed: u64) -> Result<SubsampleSelection> {
    if n == 0 {
        return Err(invalid("sample size must be positive"));
    }
    if rho.rho.len() != plan.len() {
        return Err(Error::DimensionMismatch { expected: plan.len(), got: rho.rho.len() });
    }
    let alias = WeightedAliasIndex::new(rho.rho.clone()).map_err(|e| invalid(format!("density: {e}")))?;
    let mut r = rng::stream(seed, &[rng::stage::RANDOM_SUBSAMPLE]);
    let indices: Vec<usize> = (0..n).map(|_| alias.sample(&mut r)).collect();
    let w = plan.weights();
    let reweights = indices
        .iter()
        .map(|&i| {
            let p = rho.rho[i];
            if p > 0.0 {
                w[i] / (n as f64 * p)
            } else {
                0.0
            }
        })
        .collect();
    Ok(SubsampleSelection { indices, reweights, stage: Stage::Random { n, seed }, s: None })
}

/// `3B/(2A) + 1/2 + sqrt((3B/(2A) + 1/2)^2 - 1)`.
pub fn kappa(a: f64, b: f64) -> f64 {
    let x = 1.5 * b / a + 0.5;
    x + (x * x - 1.0).sqrt()
}

/// Upper constant guaranteed by the weighted variant.
pub fn bss_upper_bound(bounds: SpectralBounds, b: f64) -> f64 {
    let k = kappa(bounds.lower, bounds.upper);
    let sb = b.sqrt();
    1.5 * bounds.upper * (sb + 1.0).powi(2) / ((sb - 1.0) * (sb - k))
}

/// Lower constant guaranteed by the unweighted variant.
pub fn plain_bss_lower_bound(lower: f64, b: f64) -> f64 {
    (b - 1.0).powi(3) / (178.0 * (b + 1.0).powi(2)) * lower
}

/// Largest dense row block (bytes) either greedy will assemble.
pub const BSS_MAX_BYTES: usize = 1 << 30;

/// Rows `sqrt(reweight_i) * (exp(2 pi i <k, x_i>))_k` of a selection.
pub fn selection_rows(parent: &SamplePlan, freqs: &Arc<IndexSet>, sel: &SubsampleSelection) -> Result<CMatrix> {
    let bytes = sel.len().saturating_mul(freqs.len()).saturating_mul(16);
    if bytes > BSS_MAX_BYTES {
        return Err(Error::DenseCapExceeded(format!(
            "{} x {} rows exceed the {BSS_MAX_BYTES} byte cap",
            sel.len(),
            freqs.len()
        )));
    }
    let plan = sel.plan(parent)?;
    let op = SystemOperator::for_plan(&plan, freqs.clone())?;
    let mut rows = op.dense_matrix();
    for (i, &w) in sel.reweights.iter().enumerate() {
        let s = w.sqrt();
        rows.row_mut(i).iter_mut().for_each(|z| *z *= s);
    }
    Ok(rows)
}

// Rows times the inverse adjoint Cholesky factor of their Gram matrix, so
// that the result is a tight frame with bound one. Row `i` counts `mult[i]`
// times in the Gram matrix.
fn whiten(rows: &CMatrix, mult: &[f64]) -> Result<CMatrix> {
    let d = rows.ncols();
    let mut scaled = rows.clone();
    for (i, &c) in mult.iter().enumerate() {
        scaled.row_mut(i).iter_mut().for_each(|z| *z *= c.sqrt());
    }
    let gram = linalg::gram(&scaled);
    let chol = Cholesky::new(gram).ok_or_else(|| Error::CertificateFailed("stage-one system is rank deficient".into()))?;
    let l_inv = chol
        .l()
        .solve_lower_triangular(&CMatrix::identity(d, d))
        .ok_or(Error::Singular)?;
    Ok(linalg::matmul(rows, &l_inv.adjoint()))
}

// Row-wise quadratic forms r_i X r_i^H for X = Q diag(f) Q^H, given Y = R Q.
fn forms(y: &CMatrix, f: &[f64]) -> Vec<f64> {
    (0..y.nrows())
        .map(|i| y.row(i).iter().zip(f).map(|(z, &fj)| z.norm_sqr() * fj).sum())
        .collect()
}

/// Weighted barrier greedy on whitened rows (rank-one updates `t v v^H`).
///
/// Returns the multiplicities `s_i` after `ceil(b d)` steps, scaled so that
/// the smallest eigenvalue of `sum s_i v_i v_i^H` is one.
fn weighted_barrier(v: &CMatrix, b: f64) -> Result<Vec<f64>> {
    let (m, d) = (v.nrows(), v.ncols());
    let df = d as f64;
    let sb = b.sqrt();
    let (delta_l, eps_l) = (1.0, 1.0 / sb);
    let (delta_u, eps_u) = ((sb + 1.0) / (sb - 1.0), (sb - 1.0) / (b + sb));
    let mut l = -df / eps_l;
    let mut u = df / eps_u;
    let steps = (b * df).ceil() as usize;
    let mut s = vec![0.0; m];
    let mut a = CMatrix::zeros(d, d);
    for _ in 0..steps {
        let (mu, q) = linalg::hermitian_eigen(&a);
        let (l1, u1) = (l + delta_l, u + delta_u);
        let y = linalg::matmul(v, &q);
        let phi = |f: &dyn Fn(f64) -> f64| mu.iter().map(|&x| f(x)).sum::<f64>();
        let du = phi(&|x| 1.0 / (u - x)) - phi(&|x| 1.0 / (u1 - x));
        let dl = phi(&|x| 1.0 / (x - l1)) - phi(&|x| 1.0 / (x - l));
        let up1 = forms(&y, &mu.iter().map(|&x| 1.0 / (u1 - x)).collect::<Vec<_>>());
        let up2 = forms(&y, &mu.iter().map(|&x| (u1 - x).powi(-2)).collect::<Vec<_>>());
        let lo1 = forms(&y, &mu.iter().map(|&x| 1.0 / (x - l1)).collect::<Vec<_>>());
        let lo2 = forms(&y, &mu.iter().map(|&x| (x - l1).powi(-2)).collect::<Vec<_>>());
        let mut best: Option<(usize, f64, f64)> = None;
        for i in 0..m {
            let uu = up2[i] / du + up1[i];
            let ll = lo2[i] / dl - lo1[i];
            if uu > 0.0 && uu <= ll && best.is_none_or(|(_, bu, bl)| ll - uu > bl - bu) {
                best = Some((i, uu, ll));
            }
        }
        let (i, uu, ll) = best.ok_or_else(|| Error::CertificateFailed("barrier step found no admissible row".into()))?;
        let t = 2.0 / (uu + ll);
        s[i] += t;
        let row = v.row(i);
        for c in 0..d {
            for r in 0..d {
                a[(r, c)] += row[r].conj() * row[c] * t;
            }
        }
        l = l1;
        u = u1;
    }
    linalg::hermitize(&mut a);
    let lo = linalg::hermitian_eigenvalues(&a)[0];
    if !(lo > 0.0) {
        return Err(Error::CertificateFailed("barrier output is singular".into()));
    }
    s.iter_mut().for_each(|x| *x /= lo);
    Ok(s)
}

/// Settings of the unweighted greedy.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct PlainBssConfig {
    /// Steps between exact refreshes of the barrier resolvent. `None`
    /// refreshes every `ceil(|I|/8)` steps, applying Sherman-Morrison
    /// updates in between.
    pub refresh_interval: Option<usize>,
}

fn row_major(x: &CMatrix) -> Vec<Complex64> {
    x.transpose().as_slice().to_vec()
}

/// Unweighted lower-barrier greedy on whitened rows: picks `r` distinct rows.
fn plain_barrier(v: &CMatrix, r: usize, cfg: PlainBssConfig) -> Result<Vec<usize>> {
    let (m, d) = (v.nrows(), v.ncols());
    if r >= m {
        return Ok((0..m).collect());
    }
    let interval = cfg.refresh_interval.unwrap_or(d.div_ceil(8)).max(1);
    let mf = m as f64;
    let offset = ((r * d) as f64).sqrt() / mf;
    let norms: Vec<f64> = (0..m).map(|i| v.row(i).norm_squared()).collect();
    let mut taken = vec![false; m];
    let mut chosen = Vec::with_capacity(r);
    let mut a = CMatrix::zeros(d, d);
    let mut barrier = f64::NEG_INFINITY;
    // X = (A - l I)^{-1} (row major), q_i = v_i X v_i^H, nsq_i = |v_i X|^2
    let vr = row_major(v);
    let mut x = vec![Complex64::new(0.0, 0.0); d * d];
    let mut q = vec![0.0; m];
    let mut nsq = vec![0.0; m];
    let mut u = vec![Complex64::new(0.0, 0.0); d];
    let mut w = vec![Complex64::new(0.0, 0.0); d];
    while chosen.len() < r {
        if chosen.len() % interval == 0 {
            let target = (chosen.len() as f64 - ((r * d) as f64).sqrt()) / mf;
            let candidate = if barrier.is_finite() { target.max(barrier) } else { target.min(-offset) };
            let mut shifted = a.clone();
            for c in [candidate, barrier] {
                if !c.is_finite() {
                    continue;
                }
                for k in 0..d {
                    shifted[(k, k)] = a[(k, k)] - c;
                }
                if let Some(ch) = Cholesky::new(shifted.clone()) {
                    let inv = ch.inverse();
                    let p = linalg::matmul(v, &inv);
                    x = row_major(&inv);
                    for i in 0..m {
                        nsq[i] = p.row(i).norm_squared();
                        q[i] = p.row(i).iter().zip(&vr[i * d..(i + 1) * d]).map(|(a, b)| (a * b.conj()).re).sum();
                    }
                    barrier = c;
                    break;
                }
            }
        }
        let mut best: Option<(usize, f64)> = None;
        for i in 0..m {
            if taken[i] || norms[i] == 0.0 {
                continue;
            }
            let drop = nsq[i] / (1.0 + q[i]);
            if best.is_none_or(|(_, bd)| drop > bd) {
                best = Some((i, drop));
            }
        }
        let Some((i, _)) = best else { break };
        taken[i] = true;
        chosen.push(i);
        let row = &vr[i * d..(i + 1) * d];
        for c in 0..d {
            for k in 0..d {
                a[(k, c)] += row[k].conj() * row[c];
            }
        }
        // X <- X - u u^H / c with u = X v_i^H; the forms follow from w = X u
        for k in 0..d {
            u[k] = x[k * d..(k + 1) * d].iter().zip(row).map(|(a, b)| a * b.conj()).sum();
        }
        for k in 0..d {
            w[k] = x[k * d..(k + 1) * d].iter().zip(&u).map(|(a, b)| a * b).sum();
        }
        let c = 1.0 + q[i];
        let usq: f64 = u.iter().map(|z| z.norm_sqr()).sum();
        for j in 0..m {
            let vj = &vr[j * d..(j + 1) * d];
            let (mut aj, mut bj) = (Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0));
            for k in 0..d {
                aj += vj[k] * u[k];
                bj += vj[k] * w[k];
            }
            let a2 = aj.norm_sqr();
            q[j] -= a2 / c;
            nsq[j] += -2.0 * (bj * aj.conj()).re / c + a2 * usq / (c * c);
        }
        for k in 0..d {
            for l in 0..d {
                x[k * d + l] -= u[k] * u[l].conj() / c;
            }
        }
    }
    Ok(chosen)
}

fn check_selection_input(freqs: &IndexSet, stage1: &SubsampleSelection) -> Result<()> {
    if !matches!(stage1.stage, Stage::Random { .. }) {
        return Err(invalid("sparsification expects a random stage-one selection"));
    }
    if freqs.is_empty() {
        return Err(invalid("empty frequency set"));
    }
    Ok(())
}

/// Weighted sparsification of a stage-one selection.
///
/// `bounds` are the MZ constants of the parent plan; `b` must exceed
/// `kappa(A, B)^2`. The result satisfies `A/2` from below and
/// [`bss_upper_bound`] from above, checked by a dense eigensolve.
pub fn bss_subsample(
    parent: &SamplePlan,
    freqs: &Arc<IndexSet>,
    stage1: &SubsampleSelection,
    b: f64,
    bounds: SpectralBounds,
) -> Result<SubsampleSelection> {
    check_selection_input(freqs, stage1)?;
    let k = kappa(bounds.lower, bounds.upper);
    if !(b > k * k) {
        return Err(invalid(format!("b = {b} must exceed kappa^2 = {}", k * k)));
    }
    // repeated draws give identical rows; the greedy only needs one of each
    let mut count = std::collections::HashMap::new();
    for &i in &stage1.indices {
        *count.entry(i).or_insert(0.0) += 1.0;
    }
    let mut seen = std::collections::HashSet::new();
    let first: Vec<usize> = (0..stage1.len()).filter(|&i| seen.insert(stage1.indices[i])).collect();
    let mult: Vec<f64> = first.iter().map(|&i| count[&stage1.indices[i]]).collect();
    let distinct = SubsampleSelection {
        indices: first.iter().map(|&i| stage1.indices[i]).collect(),
        reweights: first.iter().map(|&i| stage1.reweights[i]).collect(),
        ..stage1.clone()
    };
    let rows = selection_rows(parent, freqs, &distinct)?;
    let v = whiten(&rows, &mult)?;
    let s = weighted_barrier(&v, b)?;
    let keep: Vec<usize> = (0..s.len()).filter(|&i| s[i] > 0.0).collect();
    let out = SubsampleSelection {
        indices: keep.iter().map(|&i| distinct.indices[i]).collect(),
        reweights: keep.iter().map(|&i| distinct.reweights[i] * s[i]).collect(),
        stage: Stage::BssWeighted { b },
        s: Some(keep.iter().map(|&i| s[i]).collect()),
    };
    let cap = (b * freqs.len() as f64).ceil() as usize;
    if out.len() > cap {
        return Err(Error::CertificateFailed(format!("{} rows exceed ceil(b|I|) = {cap}", out.len())));
    }
    let got = selection_bounds(parent, freqs, &out)?;
    let (lo, hi) = (bounds.lower / 2.0, bss_upper_bound(bounds, b));
    if got.lower < lo * (1.0 - 1e-9) || got.upper > hi * (1.0 + 1e-9) {
        return Err(Error::CertificateFailed(format!(
            "weighted output bounds ({}, {}) outside ({lo}, {hi})",
            got.lower, got.upper
        )));
    }
    Ok(out)
}

/// Unweighted sparsification of a stage-one selection to at most
/// `ceil(b |I|)` distinct rows with reweights `w_i / (|I| rho_i)`.
pub fn plain_bss_subsample(
    parent: &SamplePlan,
    freqs: &Arc<IndexSet>,
    stage1: &SubsampleSelection,
    b: f64,
    lower: f64,
    cfg: PlainBssConfig,
) -> Result<SubsampleSelection> {
    check_selection_input(freqs, stage1)?;
    let card = freqs.len();
    if !(b > 1.0 + 1.0 / card as f64) {
        return Err(invalid(format!("b = {b} must exceed 1 + 1/|I|")));
    }
    let Stage::Random { n, .. } = stage1.stage else { unreachable!() };
    let rows = selection_rows(parent, freqs, stage1)?;
    let v = whiten(&rows, &vec![1.0; rows.nrows()])?;
    let r = (b * card as f64).ceil() as usize;
    let mut picked = plain_barrier(&v, r, cfg)?;
    picked.sort_unstable();
    let scale = n as f64 / card as f64;
    let out = SubsampleSelection {
        indices: picked.iter().map(|&i| stage1.indices[i]).collect(),
        reweights: picked.iter().map(|&i| stage1.reweights[i] * scale).collect(),
        stage: Stage::PlainBss { b },
        s: None,
    };
    let got = selection_bounds(parent, freqs, &out)?;
    let want = plain_bss_lower_bound(lower, b);
    if got.lower < want {
        return Err(Error::CertificateFailed(format!("plain output lower constant {} below {want}", got.lower)));
    }
    Ok(out)
}

/// MZ constants of a selection, by dense eigensolve.
pub fn selection_bounds(parent: &SamplePlan, freqs: &Arc<IndexSet>, sel: &SubsampleSelection) -> Result<SpectralBounds> {
    let plan = sel.plan(parent)?;
    let op = SystemOperator::for_plan(&plan, freqs.clone())?;
    mz::operator_constants(&op, plan.weights())
}
