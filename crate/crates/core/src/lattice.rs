//! Rank-1 lattices, sample plans, and reconstructing generator search.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::index_sets::IndexSet;
use crate::mz::SpectralBounds;
use crate::rng;

/// Rank-1 lattice `{(i z mod M) / M : i = 0, ..., M-1}`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Rank1Lattice {
    generator: Vec<u64>,
    size: u64,
}

impl Rank1Lattice {
    /// Generator components are reduced modulo `size`.
    pub fn new(generator: &[i64], size: u64) -> Result<Self> {
        if size == 0 {
            return Err(invalid("lattice size must be at least 1"));
        }
        if generator.is_empty() {
            return Err(invalid("lattice dimension must be at least 1"));
        }
        let generator = generator
            .iter()
            .map(|&z| (z as i128).rem_euclid(size as i128) as u64)
            .collect();
        Ok(Self { generator, size })
    }

    pub fn dim(&self) -> usize {
        self.generator.len()
    }

    pub fn size(&self) -> u64 {
        self.size
    }

    pub fn generator(&self) -> &[u64] {
        &self.generator
    }

    /// `<k, z> mod M`, in exact 128-bit arithmetic.
    pub fn residue(&self, k: &[i64]) -> u64 {
        let m = self.size as i128;
        let mut acc: i128 = 0;
        for (&kj, &zj) in k.iter().zip(&self.generator) {
            // |kj * zj| < 2^63 * 2^64, and acc stays in [0, m)
            acc = (acc + (kj as i128) * (zj as i128)).rem_euclid(m);
        }
        acc as u64
    }

    /// Integer numerators `i z_j mod M` of node `i`.
    pub fn node_numerators(&self, i: u64) -> impl Iterator<Item = u64> + '_ {
        let m = self.size as u128;
        self.generator.iter().map(move |&z| ((i as u128 * z as u128) % m) as u64)
    }

    pub fn node_into(&self, i: u64, out: &mut [f64]) {
        let m = self.size as f64;
        for (o, num) in out.iter_mut().zip(self.node_numerators(i)) {
            *o = num as f64 / m;
        }
    }

    /// Single line `d M z_1 ... z_d`.
    pub fn to_text(&self) -> String {
        let mut s = format!("{} {}", self.dim(), self.size);
        for z in &self.generator {
            let _ = write!(s, " {z}");
        }
        s.push('\n');
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let nums = text
            .split_whitespace()
            .map(|t| t.parse::<u64>().map_err(|e| Error::Parse(format!("{t:?}: {e}"))))
            .collect::<Result<Vec<_>>>()?;
        let (d, m) = match nums.as_slice() {
            [d, m, ..] => (*d as usize, *m),
            _ => return Err(Error::Parse("expected `d M z_1 ... z_d`".into())),
        };
        if nums.len() != d + 2 {
            return Err(Error::Parse(format!("expected {} generator entries, found {}", d, nums.len() - 2)));
        }
        let z: Vec<i64> = nums[2..]
            .iter()
            .map(|&v| i64::try_from(v).map_err(|_| Error::Parse(format!("generator entry {v} out of range"))))
            .collect::<Result<_>>()?;
        Self::new(&z, m)
    }
}

/// Where the points of a [`SamplePlan`] come from.
#[derive(Debug, Clone, PartialEq)]
pub enum PointOrigin {
    /// Arbitrary points stored explicitly.
    Free { points: Vec<f64> },
    /// Nodes of a rank-1 lattice, referenced by node number (repeats allowed).
    Lattice { lattice: Rank1Lattice, nodes: Vec<u64> },
}

/// Points in `[0,1)^d` with nonnegative weights.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplePlan {
    dim: usize,
    origin: PointOrigin,
    weights: Vec<f64>,
    stable_for: Option<Arc<IndexSet>>,
    pub bounds: Option<SpectralBounds>,
}

fn check_weights(weights: &[f64]) -> Result<()> {
    if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
        return Err(invalid("weights must be finite and nonnegative"));
    }
    if !weights.iter().any(|&w| w > 0.0) {
        return Err(Error::ZeroWeights);
    }
    Ok(())
}

impl SamplePlan {
    /// Explicit points (flat, row major) with weights.
    pub fn new(dim: usize, points: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(invalid("dimension must be at least 1"));
        }
        if points.len() != dim * weights.len() {
            return Err(Error::DimensionMismatch { expected: dim * weights.len(), got: points.len() });
        }
        check_weights(&weights)?;
        Ok(Self { dim, origin: PointOrigin::Free { points }, weights, stable_for: None, bounds: None })
    }

    /// A weighted selection of lattice nodes.
    pub fn on_lattice(lattice: Rank1Lattice, nodes: Vec<u64>, weights: Vec<f64>) -> Result<Self> {
        if nodes.len() != weights.len() {
            return Err(Error::DimensionMismatch { expected: nodes.len(), got: weights.len() });
        }
        if let Some(&bad) = nodes.iter().find(|&&n| n >= lattice.size()) {
            return Err(invalid(format!("node {bad} outside lattice of size {}", lattice.size())));
        }
        check_weights(&weights)?;
        Ok(Self {
            dim: lattice.dim(),
            origin: PointOrigin::Lattice { lattice, nodes },
            weights,
            stable_for: None,
            bounds: None,
        })
    }

    /// Like [`SamplePlan::new`] but allows all-zero weights; used for
    /// diagnostics on degenerate plans.
    #[cfg(test)]
    pub(crate) fn with_weights_unchecked(&self, weights: Vec<f64>) -> Self {
        Self { weights, bounds: None, ..self.clone() }
    }

    pub fn with_stable_for(mut self, freqs: Arc<IndexSet>) -> Self {
        self.stable_for = Some(freqs);
        self
    }

    pub fn stable_for(&self) -> Option<&Arc<IndexSet>> {
        self.stable_for.as_ref()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn origin(&self) -> &PointOrigin {
        &self.origin
    }

    pub fn lattice(&self) -> Option<(&Rank1Lattice, &[u64])> {
        match &self.origin {
            PointOrigin::Lattice { lattice, nodes } => Some((lattice, nodes)),
            PointOrigin::Free { .. } => None,
        }
    }

    pub fn point_into(&self, i: usize, out: &mut [f64]) {
        match &self.origin {
            PointOrigin::Free { points } => out.copy_from_slice(&points[i * self.dim..(i + 1) * self.dim]),
            PointOrigin::Lattice { lattice, nodes } => lattice.node_into(nodes[i], out),
        }
    }

    pub fn point(&self, i: usize) -> Vec<f64> {
        let mut p = vec![0.0; self.dim];
        self.point_into(i, &mut p);
        p
    }

    /// All points, flat and row major.
    pub fn points_flat(&self) -> Vec<f64> {
        match &self.origin {
            PointOrigin::Free { points } => points.clone(),
            PointOrigin::Lattice { .. } => {
                let mut out = vec![0.0; self.len() * self.dim];
                for (i, chunk) in out.chunks_exact_mut(self.dim).enumerate() {
                    self.point_into(i, chunk);
                }
                out
            }
        }
    }

    /// CSV with header `x_1,...,x_d,weight`, 17 significant digits per value.
    pub fn to_csv(&self) -> String {
        let mut s = String::new();
        for j in 1..=self.dim {
            let _ = write!(s, "x_{j},");
        }
        s.push_str("weight\n");
        let mut p = vec![0.0; self.dim];
        for i in 0..self.len() {
            self.point_into(i, &mut p);
            for x in &p {
                let _ = write!(s, "{x:.16e},");
            }
            let _ = writeln!(s, "{:.16e}", self.weights[i]);
        }
        s
    }

    /// Parses [`SamplePlan::to_csv`] output into a plan with explicit points.
    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let header = lines.next().ok_or_else(|| Error::Parse("empty csv".into()))?;
        let cols = header.split(',').count();
        if cols < 2 {
            return Err(Error::Parse("csv needs at least one coordinate and a weight".into()));
        }
        let dim = cols - 1;
        let mut points = Vec::new();
        let mut weights = Vec::new();
        for line in lines.filter(|l| !l.is_empty()) {
            let vals = line
                .split(',')
                .map(|t| t.trim().parse::<f64>().map_err(|e| Error::Parse(format!("{t:?}: {e}"))))
                .collect::<Result<Vec<_>>>()?;
            if vals.len() != cols {
                return Err(Error::Parse(format!("expected {cols} columns, found {}", vals.len())));
            }
            points.extend_from_slice(&vals[..dim]);
            weights.push(vals[dim]);
        }
        Self::new(dim, points, weights)
    }
}

/// All `M` lattice nodes with equal weights `1/M`.
pub fn lattice_points(lattice: &Rank1Lattice) -> SamplePlan {
    let m = lattice.size();
    let w = 1.0 / m as f64;
    SamplePlan::on_lattice(lattice.clone(), (0..m).collect(), vec![w; m as usize])
        .expect("nodes are in range and weights positive")
}

/// Whether `k -> <k, z> mod M` is injective on `freqs`, i.e. whether the
/// lattice integrates every product of two exponentials from `freqs` exactly.
pub fn is_reconstructing(lattice: &Rank1Lattice, freqs: &IndexSet) -> Result<bool> {
    if freqs.dim() != lattice.dim() {
        return Err(Error::DimensionMismatch { expected: lattice.dim(), got: freqs.dim() });
    }
    if freqs.is_empty() {
        return Err(invalid("index set is empty"));
    }
    if (lattice.size() as u128) < freqs.len() as u128 {
        return Ok(false);
    }
    let mut seen = HashSet::with_capacity(freqs.len());
    Ok(freqs.iter().all(|k| seen.insert(lattice.residue(k))))
}

/// Strategy for the lattice sizes tried by [`search_generator`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SearchSchedule {
    /// First size tried; defaults to the next prime `>= 2|I|`.
    pub start: Option<u64>,
    /// Largest size tried before giving up.
    pub ceiling: u64,
    /// Random candidates tried per component before moving to a larger size.
    pub trials_per_component: usize,
}

impl Default for SearchSchedule {
    fn default() -> Self {
        Self { start: None, ceiling: 1 << 40, trials_per_component: 64 }
    }
}

fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

fn pow_mod(mut a: u64, mut e: u64, m: u64) -> u64 {
    let mut r = 1 % m;
    a %= m;
    while e > 0 {
        if e & 1 == 1 {
            r = mul_mod(r, a, m);
        }
        a = mul_mod(a, a, m);
        e >>= 1;
    }
    r
}

/// Deterministic Miller-Rabin for 64-bit integers.
pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    const BASES: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];
    for p in BASES {
        if n.is_multiple_of(p) {
            return n == p;
        }
    }
    let s = (n - 1).trailing_zeros();
    let d = (n - 1) >> s;
    'outer: for a in BASES {
        let mut x = pow_mod(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mul_mod(x, x, n);
            if x == n - 1 {
                continue 'outer;
            }
        }
        return false;
    }
    true
}

pub fn next_prime(n: u64) -> u64 {
    let mut c = n.max(2);
    while !is_prime(c) {
        c += 1;
    }
    c
}

/// Searches a reconstructing rank-1 lattice for `freqs`.
///
/// Component-by-component: the generator is built one coordinate at a time,
/// each coordinate drawn at random until `k -> <k, z> mod M` is injective on
/// the projection of `freqs` onto the coordinates chosen so far. When a
/// coordinate exhausts its trial budget the size `M` moves to the next prime
/// above `2M`. The result depends only on `seed`.
pub fn search_generator(freqs: &IndexSet, seed: u64, schedule: &SearchSchedule) -> Result<Rank1Lattice> {
    if freqs.is_empty() {
        return Err(invalid("index set is empty"));
    }
    let d = freqs.dim();
    if freqs.len() == 1 {
        return Rank1Lattice::new(&vec![0; d], 1);
    }
    let n = freqs.len();
    // group boundaries of equal prefixes, per prefix length; the set is
    // lexicographically sorted so equal prefixes are contiguous
    let mut reps: Vec<Vec<usize>> = Vec::with_capacity(d);
    for j in 0..d {
        let mut r = vec![0usize];
        for i in 1..n {
            if freqs.get(i)[..=j] != freqs.get(i - 1)[..=j] {
                r.push(i);
            }
        }
        reps.push(r);
    }

    let mut m = next_prime(schedule.start.unwrap_or(2 * n as u64).max(n as u64));
    let mut seen: HashSet<u64> = HashSet::with_capacity(n);
    while m <= schedule.ceiling {
        let mut rng = rng::stream(seed, &[rng::stage::GENERATOR_SEARCH, m]);
        let mut z = vec![0u64; d];
        let mut partial = vec![0u64; n];
        let mut ok = true;
        for j in 0..d {
            let mut found = None;
            for trial in 0..schedule.trials_per_component {
                let cand = if j == 0 && trial == 0 { 1 } else { rng.random_range(1..m) };
                seen.clear();
                let injective = reps[j].iter().all(|&i| {
                    let kj = freqs.get(i)[j] as i128;
                    let r = (partial[i] as i128 + kj * cand as i128).rem_euclid(m as i128) as u64;
                    seen.insert(r)
                });
                if injective {
                    found = Some(cand);
                    break;
                }
            }
            match found {
                Some(c) => {
                    z[j] = c;
                    for (i, p) in partial.iter_mut().enumerate() {
                        let kj = freqs.get(i)[j] as i128;
                        *p = (*p as i128 + kj * c as i128).rem_euclid(m as i128) as u64;
                    }
                }
                None => {
                    ok = false;
                    break;
                }
            }
        }
        if ok {
            let z: Vec<i64> = z.iter().map(|&c| c as i64).collect();
            return Rank1Lattice::new(&z, m);
        }
        m = next_prime(m.saturating_mul(2));
    }
    Err(Error::GeneratorSearchFailed { ceiling: schedule.ceiling, trials: schedule.trials_per_component })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::index_sets::hyperbolic_cross;
    use num_complex::Complex64;
    use std::f64::consts::PI;

    // Direct evaluation of (1/M) sum_i exp(2 pi i <k - l, x_i>) for all pairs.
    fn character_sum_oracle(lat: &Rank1Lattice, freqs: &IndexSet) -> bool {
        let m = lat.size();
        let d = lat.dim();
        let mut x = vec![0.0; d];
        for a in 0..freqs.len() {
            for b in 0..freqs.len() {
                let diff: Vec<i64> = freqs.get(a).iter().zip(freqs.get(b)).map(|(p, q)| p - q).collect();
                let mut s = Complex64::new(0.0, 0.0);
                for i in 0..m {
                    lat.node_into(i, &mut x);
                    let phase: f64 = diff.iter().zip(&x).map(|(&k, &xi)| k as f64 * xi).sum();
                    s += Complex64::from_polar(1.0, 2.0 * PI * phase);
                }
                s /= m as f64;
                let target = if a == b { 1.0 } else { 0.0 };
                if (s - target).norm() > 1e-8 {
                    return false;
                }
            }
        }
        true
    }

    #[test]
    fn nodes_and_weights() {
        let lat = Rank1Lattice::new(&[1], 4).unwrap();
        let plan = lattice_points(&lat);
        assert_eq!(plan.points_flat(), vec![0.0, 0.25, 0.5, 0.75]);
        assert!(plan.weights().iter().all(|&w| w == 0.25));

        let lat = Rank1Lattice::new(&[1, 3], 5).unwrap();
        assert_eq!(lattice_points(&lat).point(2), vec![0.4, 0.2]);
        let total: f64 = lattice_points(&Rank1Lattice::new(&[1, 7, 11], 97).unwrap()).weights().iter().sum();
        assert!((total - 1.0).abs() < 1e-14);
    }

    #[test]
    fn generator_is_reduced() {
        let lat = Rank1Lattice::new(&[-1, 12], 5).unwrap();
        assert_eq!(lat.generator(), &[4, 2]);
        assert_eq!(lat.residue(&[-3, 1]), ((-3 * 4 + 2) as i64).rem_euclid(5) as u64);
    }

    #[test]
    fn residue_does_not_overflow() {
        let lat = Rank1Lattice::new(&[i64::MAX, i64::MAX], u64::MAX).unwrap();
        let r = lat.residue(&[i64::MAX, i64::MIN]);
        let expected = ((i64::MAX as i128) * (i64::MAX as i128) + (i64::MIN as i128) * (i64::MAX as i128))
            .rem_euclid(u64::MAX as i128) as u64;
        assert_eq!(r, expected);
    }

    #[test]
    fn reconstructing_examples() {
        let i3 = IndexSet::from_frequencies(1, &[[-1], [0], [1]]).unwrap();
        let lat3 = Rank1Lattice::new(&[1], 3).unwrap();
        let lat2 = Rank1Lattice::new(&[1], 2).unwrap();
        assert!(is_reconstructing(&lat3, &i3).unwrap());
        assert!(character_sum_oracle(&lat3, &i3));
        assert!(!is_reconstructing(&lat2, &i3).unwrap());
        assert!(!character_sum_oracle(&lat2, &i3));

        let zero = IndexSet::from_frequencies(2, &[[0, 0]]).unwrap();
        assert!(is_reconstructing(&Rank1Lattice::new(&[3, 5], 7).unwrap(), &zero).unwrap());
        assert!(is_reconstructing(&lat2, &zero).is_err());
    }

    #[test]
    fn search_examples() {
        let zero = IndexSet::from_frequencies(3, &[[0, 0, 0]]).unwrap();
        let lat = search_generator(&zero, 1, &SearchSchedule::default()).unwrap();
        assert_eq!(lat.size(), 1);
        assert_eq!(lat.generator(), &[0, 0, 0]);

        let interval = hyperbolic_cross(1, 1.0, 2.0).unwrap();
        let lat = search_generator(&interval, 5, &SearchSchedule::default()).unwrap();
        assert!(lat.size() >= 5);
        assert!(is_reconstructing(&lat, &interval).unwrap());

        let hc = hyperbolic_cross(2, 1.0, 4.0).unwrap();
        let lat = search_generator(&hc, 11, &SearchSchedule::default()).unwrap();
        assert!(is_reconstructing(&lat, &hc).unwrap());
        assert!(character_sum_oracle(&lat, &hc));
    }

    #[test]
    fn search_is_deterministic() {
        let hc = hyperbolic_cross(3, 0.5, 8.0).unwrap();
        let a = search_generator(&hc, 42, &SearchSchedule::default()).unwrap();
        let b = search_generator(&hc, 42, &SearchSchedule::default()).unwrap();
        assert_eq!(a, b);
        assert!(is_reconstructing(&a, &hc).unwrap());
    }

    #[test]
    fn search_ceiling_is_reported() {
        let hc = hyperbolic_cross(2, 1.0, 8.0).unwrap();
        let sched = SearchSchedule { start: Some(3), ceiling: 40, trials_per_component: 2 };
        assert!(matches!(search_generator(&hc, 0, &sched), Err(Error::GeneratorSearchFailed { .. })));
    }

    #[test]
    fn primes() {
        let small: Vec<u64> = (0..40).filter(|&n| is_prime(n)).collect();
        assert_eq!(small, vec![2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37]);
        assert!(is_prime(1_000_000_007));
        assert!(!is_prime(1_000_000_007 * 3));
        assert_eq!(next_prime(24), 29);
    }

    #[test]
    fn text_and_csv_formats() {
        let lat = Rank1Lattice::new(&[1, 33, 578], 1009).unwrap();
        let text = lat.to_text();
        assert_eq!(text, "3 1009 1 33 578\n");
        assert_eq!(Rank1Lattice::from_text(&text).unwrap(), lat);
        assert!(Rank1Lattice::from_text("3 1009 1 33").is_err());

        let plan = lattice_points(&Rank1Lattice::new(&[1, 3], 7).unwrap());
        let csv = plan.to_csv();
        assert!(csv.starts_with("x_1,x_2,weight\n"));
        let back = SamplePlan::from_csv(&csv).unwrap();
        assert_eq!(back.points_flat(), plan.points_flat());
        assert_eq!(back.weights(), plan.weights());
    }

    #[test]
    fn plan_validation() {
        assert!(matches!(SamplePlan::new(1, vec![0.0], vec![0.0]), Err(Error::ZeroWeights)));
        assert!(SamplePlan::new(1, vec![0.0], vec![-1.0]).is_err());
        assert!(SamplePlan::new(2, vec![0.0], vec![1.0]).is_err());
        let lat = Rank1Lattice::new(&[1], 4).unwrap();
        assert!(SamplePlan::on_lattice(lat, vec![4], vec![1.0]).is_err());
    }
}
