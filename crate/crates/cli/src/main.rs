use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use mz_subsample::experiments::{
    emit_report, run_experiment_1, run_experiment_2, ExperimentConfig, ExperimentReport, ReportFormat, Strategy,
};
use mz_subsample::lattice::{is_reconstructing, lattice_points, search_generator, Rank1Lattice, SamplePlan, SearchSchedule};
use mz_subsample::mz::{mz_report, DEFAULT_TOL};
use mz_subsample::{hyperbolic_cross, IndexSet};

#[derive(Parser)]
#[command(name = "mzsub", about = "Subsampled rank-1 lattice reconstruction experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Full lattice vs random subsample vs continuous random points.
    Exp1(ExpArgs),
    /// Experiment 1 plus unweighted sparsification of the random subsample.
    Exp2(ExpArgs),
    /// Search a reconstructing lattice for a hyperbolic cross.
    LatticeSearch(SearchArgs),
    /// MZ constants and exactness of a lattice or a point file.
    MzAudit(AuditArgs),
}

#[derive(Args)]
struct ExpArgs {
    /// JSON config; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Start from a preset (d2 or d5).
    #[arg(long)]
    preset: Option<String>,
    #[arg(long)]
    d: Option<usize>,
    #[arg(long)]
    s: Option<f64>,
    #[arg(long)]
    gamma: Option<f64>,
    /// Comma separated radii, e.g. 2,4,8.
    #[arg(long, value_delimiter = ',')]
    radii: Option<Vec<f64>>,
    /// Comma separated subset of full,random_sub,bss_sub,continuous_random.
    #[arg(long, value_delimiter = ',')]
    strategies: Option<Vec<String>>,
    #[arg(long)]
    b: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    reps: Option<usize>,
    /// Memory cap in bytes.
    #[arg(long)]
    mem_cap: Option<u64>,
    #[arg(long)]
    max_iterations: Option<usize>,
    /// Start the lattice search at M >= this factor times |I|.
    #[arg(long)]
    lattice_oversampling: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Comma separated output formats (csv, json).
    #[arg(long, value_delimiter = ',', default_value = "csv,json")]
    format: Vec<String>,
}

#[derive(Args)]
struct SearchArgs {
    #[arg(long)]
    d: usize,
    #[arg(long, default_value_t = 0.5)]
    gamma: f64,
    #[arg(long)]
    radius: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Write the lattice (`d M z_1 .. z_d`) here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct AuditArgs {
    /// Lattice file as written by lattice-search.
    #[arg(long, conflicts_with = "plan")]
    lattice: Option<PathBuf>,
    /// Point CSV with columns x_1..x_d,weight.
    #[arg(long)]
    plan: Option<PathBuf>,
    /// Index set file; otherwise the cross given by --gamma/--radius.
    #[arg(long)]
    freqs: Option<PathBuf>,
    #[arg(long, default_value_t = 0.5)]
    gamma: f64,
    #[arg(long)]
    radius: Option<f64>,
    #[arg(long, default_value_t = DEFAULT_TOL)]
    tol: f64,
    #[arg(long)]
    json: bool,
}

fn build_config(args: &ExpArgs, exp2: bool) -> Result<ExperimentConfig> {
    let mut cfg = match (&args.config, args.preset.as_deref()) {
        (Some(path), _) => {
            let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?
        }
        (None, Some("d2")) => ExperimentConfig::preset_d2(),
        (None, Some("d5")) | (None, None) => ExperimentConfig::preset_d5(),
        (None, Some(other)) => bail!("unknown preset {other:?}"),
    };
    if exp2 && args.config.is_none() && args.strategies.is_none() {
        cfg.strategies = Strategy::ALL.to_vec();
    }
    if let Some(v) = args.d {
        cfg.d = v;
    }
    if let Some(v) = args.s {
        cfg.s = v;
    }
    if let Some(v) = args.gamma {
        cfg.gamma = v;
    }
    if let Some(v) = &args.radii {
        cfg.radii = v.clone();
    }
    if let Some(v) = &args.strategies {
        cfg.strategies = v.iter().map(|s| Strategy::parse(s.trim())).collect::<Result<_, _>>()?;
    }
    if let Some(v) = args.b {
        cfg.b = v;
    }
    if let Some(v) = args.seed {
        cfg.seed = v;
    }
    if let Some(v) = args.reps {
        cfg.repetitions = v;
    }
    if let Some(v) = args.mem_cap {
        cfg.memory_cap_bytes = v;
    }
    if let Some(v) = args.max_iterations {
        cfg.max_iterations = v;
    }
    if let Some(v) = args.lattice_oversampling {
        cfg.lattice_oversampling = Some(v);
    }
    if let Some(v) = &args.out {
        cfg.output_dir = Some(v.clone());
    }
    Ok(cfg)
}

fn formats(names: &[String]) -> Result<Vec<ReportFormat>> {
    names
        .iter()
        .map(|s| match s.trim() {
            "csv" => Ok(ReportFormat::Csv),
            "json" => Ok(ReportFormat::Json),
            other => bail!("unknown format {other:?}"),
        })
        .collect()
}

fn summarize(report: &ExperimentReport) {
    for l in &report.lattices {
        eprintln!("R={} |I|={} M={} M/|I|={:.1}", l.radius, l.frequencies, l.size, l.oversampling);
    }
    for a in &report.assertions {
        let mark = if a.passed { "PASS" } else { "FAIL" };
        eprintln!("{mark} {} {}", a.name, a.detail);
    }
}

fn run_exp(args: &ExpArgs, exp2: bool) -> Result<bool> {
    let cfg = build_config(args, exp2)?;
    let fmts = formats(&args.format)?;
    let report = if exp2 { run_experiment_2(&cfg)? } else { run_experiment_1(&cfg)? };
    summarize(&report);
    match &cfg.output_dir {
        Some(dir) => {
            for p in emit_report(&report, dir, &fmts)? {
                eprintln!("wrote {}", p.display());
            }
        }
        None => println!("{}", report.to_json()?),
    }
    Ok(report.passed())
}

fn lattice_search(args: &SearchArgs) -> Result<bool> {
    let freqs = hyperbolic_cross(args.d, args.gamma, args.radius)?;
    let lat = search_generator(&freqs, args.seed, &SearchSchedule::default())?;
    eprintln!("|I|={} M={} M/|I|={:.2}", freqs.len(), lat.size(), lat.size() as f64 / freqs.len() as f64);
    match &args.out {
        Some(path) => fs::write(path, lat.to_text())?,
        None => print!("{}", lat.to_text()),
    }
    Ok(true)
}

fn mz_audit(args: &AuditArgs) -> Result<bool> {
    let (plan, lattice): (SamplePlan, Option<Rank1Lattice>) = match (&args.lattice, &args.plan) {
        (Some(path), _) => {
            let lat = Rank1Lattice::from_text(&fs::read_to_string(path)?)?;
            (lattice_points(&lat), Some(lat))
        }
        (None, Some(path)) => (SamplePlan::from_csv(&fs::read_to_string(path)?)?, None),
        (None, None) => bail!("pass --lattice or --plan"),
    };
    let freqs = match (&args.freqs, args.radius) {
        (Some(path), _) => IndexSet::from_text(&fs::read_to_string(path)?)?,
        (None, Some(r)) => hyperbolic_cross(plan.dim(), args.gamma, r)?,
        (None, None) => bail!("pass --freqs or --radius"),
    };
    let report = mz_report(&plan, &freqs, args.tol)?;
    if args.json {
        println!("{}", serde_json::to_string_pretty(&report)?);
    } else {
        print!("{}", report.to_text());
    }
    let ok = match lattice {
        Some(lat) => !is_reconstructing(&lat, &freqs)? || report.exact,
        None => true,
    };
    Ok(ok && report.lower > 0.0)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Exp1(a) => run_exp(a, false),
        Command::Exp2(a) => run_exp(a, true),
        Command::LatticeSearch(a) => lattice_search(a),
        Command::MzAudit(a) => mz_audit(a),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
