//! Kink-function reconstruction experiments on hyperbolic crosses.
//!
//! For every radius the frequency set is the full hyperbolic cross and one
//! reconstructing lattice is searched (or loaded from the cache). Each
//! strategy then samples the kink, reconstructs its coefficients and records
//! the truncation/aliasing split together with timings.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::fourier::SystemOperator;
use crate::index_sets::{hyperbolic_cross_capped, IndexSet, SmoothnessWeight, DEFAULT_SIZE_CAP};
use crate::lattice::{lattice_points, next_prime, search_generator, Rank1Lattice, SamplePlan, SearchSchedule};
use crate::rng;
use crate::solver::{least_squares, SolverConfig};
use crate::subsampling::{
    density_weights, experiment_subsample_size, plain_bss_subsample, random_subsample, PlainBssConfig, BSS_MAX_BYTES,
};
use crate::testfuncs::{error_split, Kink, SpectralData};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    Full,
    RandomSub,
    BssSub,
    ContinuousRandom,
}

impl Strategy {
    pub const ALL: [Strategy; 4] = [Strategy::Full, Strategy::RandomSub, Strategy::BssSub, Strategy::ContinuousRandom];

    pub fn name(self) -> &'static str {
        match self {
            Strategy::Full => "full",
            Strategy::RandomSub => "random_sub",
            Strategy::BssSub => "bss_sub",
            Strategy::ContinuousRandom => "continuous_random",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|x| x.name() == s)
            .ok_or_else(|| invalid(format!("unknown strategy {s:?}")))
    }

    fn tag(self) -> u64 {
        self as u64 + 1
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub d: usize,
    pub s: f64,
    pub gamma: f64,
    pub radii: Vec<f64>,
    pub strategies: Vec<Strategy>,
    pub b: f64,
    pub seed: u64,
    pub repetitions: usize,
    pub memory_cap_bytes: u64,
    pub max_iterations: usize,
    /// Smallest `M/|I|` tried by the lattice search. `None` starts at the
    /// next prime after `2|I|`, which gives compact lattices.
    pub lattice_oversampling: Option<f64>,
    pub output_dir: Option<PathBuf>,
    /// Directory for cached lattices; defaults to `output_dir/lattices`.
    pub lattice_cache: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            d: 5,
            s: 1.5,
            gamma: 0.5,
            radii: vec![2.0, 4.0, 8.0, 16.0, 32.0],
            strategies: vec![Strategy::Full, Strategy::RandomSub, Strategy::ContinuousRandom],
            b: 2.0,
            seed: 0,
            repetitions: 10,
            memory_cap_bytes: 4 << 30,
            max_iterations: 10,
            lattice_oversampling: None,
            output_dir: None,
            lattice_cache: None,
        }
    }
}

impl ExperimentConfig {
    /// Two-dimensional desk preset with `|I|` up to about a thousand.
    pub fn preset_d2() -> Self {
        Self { d: 2, radii: vec![2.0, 4.0, 8.0, 16.0, 32.0, 64.0, 128.0], ..Self::default() }
    }

    /// Five-dimensional desk preset with `|I|` up to a few thousand.
    pub fn preset_d5() -> Self {
        Self::default()
    }

    pub fn validate(&self) -> Result<()> {
        if self.d == 0 {
            return Err(invalid("d must be at least 1"));
        }
        SmoothnessWeight::new(self.s)?;
        if !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return Err(invalid("gamma must be positive"));
        }
        if self.radii.is_empty() || self.radii.iter().any(|r| !(*r > 1.0 && r.is_finite())) {
            return Err(invalid("radii must be finite and greater than 1"));
        }
        if self.radii.windows(2).any(|w| w[0] > w[1]) {
            return Err(invalid("radii must be sorted"));
        }
        if self.strategies.is_empty() {
            return Err(invalid("no strategy selected"));
        }
        if self.repetitions == 0 {
            return Err(invalid("repetitions must be at least 1"));
        }
        if self.max_iterations == 0 {
            return Err(invalid("max_iterations must be at least 1"));
        }
        if self.lattice_oversampling.is_some_and(|f| !(f >= 1.0 && f.is_finite())) {
            return Err(invalid("lattice_oversampling must be at least 1"));
        }
        Ok(())
    }

    fn cache_dir(&self) -> Option<PathBuf> {
        self.lattice_cache.clone().or_else(|| self.output_dir.as_ref().map(|d| d.join("lattices")))
    }
}

/// One (radius, strategy, repetition) measurement.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub radius: f64,
    pub strategy: Strategy,
    pub repetition: usize,
    pub frequencies: usize,
    pub points: usize,
    pub truncation: f64,
    pub aliasing: f64,
    pub total: f64,
    pub iterations: usize,
    pub seed: u64,
    pub time_setup_s: f64,
    pub time_subsample_s: f64,
    pub time_solve_s: f64,
    pub time_bss_s: f64,
    pub skipped: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatticeInfo {
    pub radius: f64,
    pub frequencies: usize,
    pub size: u64,
    pub generator: Vec<u64>,
    pub oversampling: f64,
    pub cached: bool,
    pub time_search_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssertionResult {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub experiment: String,
    pub config: ExperimentConfig,
    pub lattices: Vec<LatticeInfo>,
    pub rows: Vec<ReportRow>,
    pub assertions: Vec<AssertionResult>,
}

impl ExperimentReport {
    pub fn passed(&self) -> bool {
        self.assertions.iter().all(|a| a.passed)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

fn lattice_seed(cfg: &ExperimentConfig, radius: f64) -> u64 {
    rng::derive_seed(cfg.seed, &[cfg.d as u64, cfg.gamma.to_bits(), radius.to_bits()])
}

/// Searches a reconstructing lattice for `freqs`, reusing the on-disk cache
/// keyed by `(d, gamma, R, seed, oversampling)` when one is configured.
pub fn lattice_for(cfg: &ExperimentConfig, radius: f64, freqs: &IndexSet) -> Result<(Rank1Lattice, bool)> {
    let over = cfg.lattice_oversampling.map(|f| format!("_o{f}")).unwrap_or_default();
    let file = cfg
        .cache_dir()
        .map(|dir| dir.join(format!("lattice_d{}_g{}_r{}_s{}{over}.txt", cfg.d, cfg.gamma, radius, cfg.seed)));
    if let Some(path) = &file {
        if let Ok(text) = fs::read_to_string(path) {
            let lat = Rank1Lattice::from_text(&text)?;
            if crate::lattice::is_reconstructing(&lat, freqs)? {
                return Ok((lat, true));
            }
        }
    }
    let schedule = SearchSchedule {
        start: cfg.lattice_oversampling.map(|f| next_prime((f * freqs.len() as f64).ceil() as u64)),
        ..SearchSchedule::default()
    };
    let lat = search_generator(freqs, lattice_seed(cfg, radius), &schedule)?;
    if let Some(path) = &file {
        if let Some(dir) = path.parent() {
            fs::create_dir_all(dir)?;
        }
        fs::write(path, lat.to_text())?;
    }
    Ok((lat, false))
}

struct Outcome {
    points: usize,
    coeffs: Vec<Complex64>,
    iterations: usize,
    setup: f64,
    subsample: f64,
    solve: f64,
    bss: f64,
}

struct Instance<'a> {
    cfg: &'a ExperimentConfig,
    freqs: Arc<IndexSet>,
    lattice: &'a Rank1Lattice,
    parent: &'a SamplePlan,
    kink: &'a Kink,
}

fn secs(t: Instant) -> f64 {
    t.elapsed().as_secs_f64()
}

fn memory_estimate(strategy: Strategy, card: usize, m: u64) -> u64 {
    let c = 16u64;
    let card = card as u64;
    let n = experiment_subsample_size(card as usize) as u64;
    match strategy {
        Strategy::Full => 4 * m * c,
        Strategy::RandomSub => 3 * m * c + 2 * n * c,
        Strategy::BssSub => 3 * m * c + 4 * n * card * c,
        Strategy::ContinuousRandom => n * card * c,
    }
}

impl Instance<'_> {
    fn lattice_values(&self, nodes: impl Iterator<Item = u64>) -> Vec<Complex64> {
        let mut p = vec![0.0; self.cfg.d];
        nodes
            .map(|i| {
                self.lattice.node_into(i, &mut p);
                Complex64::new(self.kink.eval(&p), 0.0)
            })
            .collect()
    }

    fn solver(&self) -> SolverConfig {
        SolverConfig::iterative(self.cfg.max_iterations)
    }

    fn stage_one(&self, seed: u64) -> Result<(crate::subsampling::SubsampleSelection, f64)> {
        let t = Instant::now();
        let rho = density_weights(self.parent, &self.freqs, &self.freqs, SmoothnessWeight::new(self.cfg.s)?)?;
        let n = experiment_subsample_size(self.freqs.len());
        let sel = random_subsample(self.parent, &rho, n, seed)?;
        Ok((sel, secs(t)))
    }

    fn run(&self, strategy: Strategy, seed: u64) -> Result<Outcome> {
        match strategy {
            Strategy::Full => {
                let t = Instant::now();
                let op = SystemOperator::lattice(self.lattice, self.freqs.clone())?;
                let f = self.lattice_values(0..self.lattice.size());
                let setup = secs(t);
                let t = Instant::now();
                let m = self.lattice.size() as f64;
                let coeffs = op.adjoint(&f)?.into_iter().map(|z| z / m).collect();
                Ok(Outcome { points: f.len(), coeffs, iterations: 0, setup, subsample: 0.0, solve: secs(t), bss: 0.0 })
            }
            Strategy::RandomSub => {
                let (sel, subsample) = self.stage_one(seed)?;
                let t = Instant::now();
                let plan = sel.plan(self.parent)?;
                let op = SystemOperator::for_plan(&plan, self.freqs.clone())?;
                let f = self.lattice_values(plan.lattice().expect("lattice plan").1.iter().copied());
                let setup = secs(t);
                let t = Instant::now();
                let (coeffs, diag) = least_squares(&op, plan.weights(), &f, &self.solver(), None)?;
                Ok(Outcome { points: f.len(), coeffs, iterations: diag.iterations, setup, subsample, solve: secs(t), bss: 0.0 })
            }
            Strategy::BssSub => {
                let (sel, subsample) = self.stage_one(seed)?;
                let t = Instant::now();
                let out = plain_bss_subsample(self.parent, &self.freqs, &sel, self.cfg.b, 1.0, PlainBssConfig::default())?;
                let bss = secs(t);
                let t = Instant::now();
                let plan = out.plan(self.parent)?;
                let op = SystemOperator::for_plan(&plan, self.freqs.clone())?;
                let f = self.lattice_values(plan.lattice().expect("lattice plan").1.iter().copied());
                let setup = secs(t);
                let t = Instant::now();
                let (coeffs, diag) = least_squares(&op, plan.weights(), &f, &self.solver(), None)?;
                Ok(Outcome { points: f.len(), coeffs, iterations: diag.iterations, setup, subsample, solve: secs(t), bss })
            }
            Strategy::ContinuousRandom => {
                let t = Instant::now();
                let n = experiment_subsample_size(self.freqs.len());
                let mut r = rng::stream(seed, &[rng::stage::CONTINUOUS_POINTS]);
                let points: Vec<f64> = (0..n * self.cfg.d).map(|_| r.random::<f64>()).collect();
                let subsample = secs(t);
                let t = Instant::now();
                let f = self.kink.eval_many(&points);
                let op = SystemOperator::dense(self.cfg.d, points, self.freqs.clone())?;
                let setup = secs(t);
                let t = Instant::now();
                let w = vec![1.0 / n as f64; n];
                let (coeffs, diag) = least_squares(&op, &w, &f, &self.solver(), None)?;
                Ok(Outcome { points: n, coeffs, iterations: diag.iterations, setup, subsample, solve: secs(t), bss: 0.0 })
            }
        }
    }
}

fn run(cfg: &ExperimentConfig, name: &str) -> Result<ExperimentReport> {
    cfg.validate()?;
    let kink = Kink::new(cfg.d)?;
    let mut lattices = Vec::new();
    let mut rows = Vec::new();
    for (ri, &radius) in cfg.radii.iter().enumerate() {
        let freqs = Arc::new(hyperbolic_cross_capped(cfg.d, cfg.gamma, radius, DEFAULT_SIZE_CAP)?);
        let t = Instant::now();
        let (lattice, cached) = lattice_for(cfg, radius, &freqs)?;
        lattices.push(LatticeInfo {
            radius,
            frequencies: freqs.len(),
            size: lattice.size(),
            generator: lattice.generator().to_vec(),
            oversampling: lattice.size() as f64 / freqs.len() as f64,
            cached,
            time_search_s: secs(t),
        });
        let parent = lattice_points(&lattice);
        let exact = kink.coefficients(&freqs);
        let truncation_sq = crate::testfuncs::truncation_error_sq(&kink, &freqs)?;
        let inst = Instance { cfg, freqs: freqs.clone(), lattice: &lattice, parent: &parent, kink: &kink };
        for &strategy in &cfg.strategies {
            let need = memory_estimate(strategy, freqs.len(), lattice.size());
            let bss_rows = experiment_subsample_size(freqs.len()) * freqs.len() * 16;
            for rep in 0..cfg.repetitions {
                let seed = rng::derive_seed(cfg.seed, &[ri as u64, strategy.tag(), rep as u64]);
                let mut row = ReportRow {
                    radius,
                    strategy,
                    repetition: rep,
                    frequencies: freqs.len(),
                    points: 0,
                    truncation: truncation_sq.sqrt(),
                    aliasing: f64::NAN,
                    total: f64::NAN,
                    iterations: 0,
                    seed,
                    time_setup_s: 0.0,
                    time_subsample_s: 0.0,
                    time_solve_s: 0.0,
                    time_bss_s: 0.0,
                    skipped: None,
                };
                if need > cfg.memory_cap_bytes {
                    row.skipped = Some(format!("memory cap: needs about {need} bytes"));
                } else if strategy == Strategy::BssSub && bss_rows > BSS_MAX_BYTES {
                    row.skipped = Some(format!("bss size cap: {bss_rows} bytes of dense rows"));
                } else {
                    match inst.run(strategy, seed) {
                        Ok(out) => {
                            let split = error_split(&kink, &freqs, &out.coeffs)?;
                            debug_assert!((split.truncation.powi(2) - truncation_sq).abs() <= 1e-15);
                            row.points = out.points;
                            row.aliasing = split.aliasing;
                            row.total = split.total;
                            row.iterations = out.iterations;
                            row.time_setup_s = out.setup;
                            row.time_subsample_s = out.subsample;
                            row.time_solve_s = out.solve;
                            row.time_bss_s = out.bss;
                        }
                        Err(Error::CertificateFailed(msg)) => row.skipped = Some(format!("certificate failed: {msg}")),
                        Err(e) => return Err(e),
                    }
                }
                rows.push(row);
            }
        }
        drop(exact);
    }
    let assertions = check(cfg, &rows);
    Ok(ExperimentReport { experiment: name.to_string(), config: cfg.clone(), lattices, rows, assertions })
}

fn check(cfg: &ExperimentConfig, rows: &[ReportRow]) -> Vec<AssertionResult> {
    let done: Vec<&ReportRow> = rows.iter().filter(|r| r.skipped.is_none()).collect();
    let mut out = Vec::new();
    let alias_bad: Vec<String> = done
        .iter()
        .filter(|r| !(r.aliasing <= r.truncation))
        .map(|r| format!("{} R={} rep={}", r.strategy.name(), r.radius, r.repetition))
        .collect();
    out.push(AssertionResult {
        name: "aliasing_below_truncation".into(),
        passed: alias_bad.is_empty(),
        detail: if alias_bad.is_empty() { format!("{} rows", done.len()) } else { alias_bad.join("; ") },
    });
    let count_bad: Vec<String> = done
        .iter()
        .filter(|r| {
            let n = experiment_subsample_size(r.frequencies);
            match r.strategy {
                Strategy::Full => false,
                Strategy::RandomSub | Strategy::ContinuousRandom => r.points != n,
                Strategy::BssSub => r.points > (cfg.b * r.frequencies as f64).ceil() as usize,
            }
        })
        .map(|r| format!("{} R={} rep={} points={}", r.strategy.name(), r.radius, r.repetition, r.points))
        .collect();
    out.push(AssertionResult {
        name: "point_counts".into(),
        passed: count_bad.is_empty(),
        detail: count_bad.join("; "),
    });
    let split_bad = done
        .iter()
        .filter(|r| {
            let lhs = r.total * r.total;
            let rhs = r.truncation * r.truncation + r.aliasing * r.aliasing;
            (lhs - rhs).abs() > 1e-10 * rhs.max(f64::MIN_POSITIVE)
        })
        .count();
    out.push(AssertionResult {
        name: "orthogonal_split".into(),
        passed: split_bad == 0,
        detail: format!("{split_bad} violations"),
    });
    let cert: Vec<String> = rows
        .iter()
        .filter(|r| r.skipped.as_deref().is_some_and(|s| s.starts_with("certificate")))
        .map(|r| format!("{} R={} rep={}", r.strategy.name(), r.radius, r.repetition))
        .collect();
    out.push(AssertionResult { name: "certificates".into(), passed: cert.is_empty(), detail: cert.join("; ") });
    out
}

/// Experiment 1: full lattice, random subsample and continuous points.
pub fn run_experiment_1(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    run(cfg, "exp1")
}

/// Experiment 2: adds the unweighted sparsification of the random subsample.
pub fn run_experiment_2(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    if !cfg.strategies.contains(&Strategy::BssSub) {
        return Err(invalid("experiment 2 needs the bss_sub strategy"));
    }
    for &radius in &cfg.radii {
        let card = hyperbolic_cross_capped(cfg.d, cfg.gamma, radius, DEFAULT_SIZE_CAP)?.len();
        if !(cfg.b > 1.0 + 1.0 / card as f64) {
            return Err(invalid(format!("b = {} must exceed 1 + 1/|I| = {}", cfg.b, 1.0 + 1.0 / card as f64)));
        }
    }
    run(cfg, "exp2")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReportFormat {
    Csv,
    Json,
}

#[derive(Default)]
struct Stats {
    min: f64,
    max: f64,
    sum: f64,
    count: usize,
}

impl Stats {
    fn push(&mut self, x: f64) {
        if self.count == 0 {
            self.min = x;
            self.max = x;
        } else {
            self.min = self.min.min(x);
            self.max = self.max.max(x);
        }
        self.sum += x;
        self.count += 1;
    }

    fn avg(&self) -> f64 {
        self.sum / self.count as f64
    }
}

type Key = (Strategy, usize);

fn groups(report: &ExperimentReport) -> BTreeMap<Key, Vec<&ReportRow>> {
    let mut map: BTreeMap<Key, Vec<&ReportRow>> = BTreeMap::new();
    for r in report.rows.iter().filter(|r| r.skipped.is_none()) {
        let ri = report.config.radii.iter().position(|&x| x == r.radius).unwrap_or(usize::MAX);
        map.entry((r.strategy, ri)).or_default().push(r);
    }
    map
}

fn stats<'a>(rows: &[&'a ReportRow], f: impl Fn(&'a ReportRow) -> f64) -> Stats {
    let mut s = Stats::default();
    rows.iter().for_each(|r| s.push(f(r)));
    s
}

fn e(x: f64) -> String {
    format!("{x:.16e}")
}

/// The four figure panels plus a per-row table, keyed by file name.
///
/// Only `time_vs_frequencies.csv` holds timings.
pub fn report_csvs(report: &ExperimentReport) -> Vec<(&'static str, String)> {
    let g = groups(report);
    let mut errors = String::from(
        "strategy,radius,frequencies,truncation,aliasing_min,aliasing_avg,aliasing_max,total_min,total_avg,total_max,repetitions\n",
    );
    let mut points = String::from("strategy,radius,frequencies,points_min,points_avg,points_max\n");
    let mut err_pts = String::from("strategy,radius,points_avg,total_min,total_avg,total_max\n");
    let mut times = String::from(
        "strategy,radius,frequencies,setup_avg,subsample_avg,solve_min,solve_avg,solve_max,bss_min,bss_avg,bss_max\n",
    );
    for ((strategy, _), rows) in &g {
        let r0 = rows[0];
        let (name, radius, card) = (strategy.name(), r0.radius, r0.frequencies);
        let al = stats(rows, |r| r.aliasing);
        let to = stats(rows, |r| r.total);
        let pt = stats(rows, |r| r.points as f64);
        let _ = writeln!(
            errors,
            "{name},{radius},{card},{},{},{},{},{},{},{},{}",
            e(r0.truncation),
            e(al.min),
            e(al.avg()),
            e(al.max),
            e(to.min),
            e(to.avg()),
            e(to.max),
            rows.len()
        );
        let _ = writeln!(points, "{name},{radius},{card},{},{},{}", pt.min, e(pt.avg()), pt.max);
        let _ = writeln!(err_pts, "{name},{radius},{},{},{},{}", e(pt.avg()), e(to.min), e(to.avg()), e(to.max));
        let su = stats(rows, |r| r.time_setup_s);
        let sb = stats(rows, |r| r.time_subsample_s);
        let so = stats(rows, |r| r.time_solve_s);
        let bs = stats(rows, |r| r.time_bss_s);
        let _ = writeln!(
            times,
            "{name},{radius},{card},{},{},{},{},{},{},{},{}",
            e(su.avg()),
            e(sb.avg()),
            e(so.min),
            e(so.avg()),
            e(so.max),
            e(bs.min),
            e(bs.avg()),
            e(bs.max)
        );
    }
    let mut all = String::from("strategy,radius,repetition,frequencies,points,truncation,aliasing,total,iterations,seed,status\n");
    for r in &report.rows {
        let status = r.skipped.as_deref().map(|s| s.replace(',', ";")).unwrap_or_else(|| "ok".into());
        let _ = writeln!(
            all,
            "{},{},{},{},{},{},{},{},{},{},{}",
            r.strategy.name(),
            r.radius,
            r.repetition,
            r.frequencies,
            r.points,
            e(r.truncation),
            e(r.aliasing),
            e(r.total),
            r.iterations,
            r.seed,
            status
        );
    }
    vec![
        ("errors_vs_frequencies.csv", errors),
        ("points_vs_frequencies.csv", points),
        ("error_vs_points.csv", err_pts),
        ("time_vs_frequencies.csv", times),
        ("rows.csv", all),
    ]
}

/// Writes the report into `dir`; returns the written paths.
pub fn emit_report(report: &ExperimentReport, dir: &Path, formats: &[ReportFormat]) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    for format in formats {
        match format {
            ReportFormat::Csv => {
                for (name, body) in report_csvs(report) {
                    let path = dir.join(name);
                    fs::write(&path, body)?;
                    written.push(path);
                }
            }
            ReportFormat::Json => {
                let path = dir.join("report.json");
                fs::write(&path, report.to_json()?)?;
                written.push(path);
            }
        }
    }
    Ok(written)
}
