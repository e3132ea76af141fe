//! `cygshell`: reproducible lattice-count experiments on Cygan–Korányi shells.
//!
//! Exit codes: 0 ok, 1 self-test or cross-check failure, 2 usage or precondition, 3 resource.

mod config;
mod experiment;
mod output;
mod selftest;

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use cygshell::numeric::gaussian_moment;
use cygshell::spectra::{rational_to_f64, DEFAULT_QUAD_POINTS};
use cygshell::stats::mixture_cdf;
use cygshell::{
    build_r2, construction_moment, count_ball_brute, count_ball_fast, density_eval, density_moment, omega_diagnostics,
    DensitySpec, RadiusPoint, SampleMode,
};
use serde::Serialize;

use config::{omega_from_arg, read_gap_spec, ExperimentConfig};
use output::{fmt_f64, to_json, write_json};

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Resource(String),
    Failed(Vec<String>),
}

impl From<cygshell::Error> for CliError {
    fn from(e: cygshell::Error) -> Self {
        match e {
            cygshell::Error::Resource(_) => Self::Resource(e.to_string()),
            _ => Self::Usage(e.to_string()),
        }
    }
}

#[derive(Parser)]
#[command(name = "cygshell", version, about = "Lattice points in shrinking Cygan–Korányi shells")]
struct Cli {
    /// Worker threads; defaults to the machine's parallelism.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the number of lattice points in the ball of radius x.
    Count(CountArgs),
    /// Sample the normalised error over [X, 2X] and write CSV/JSON artifacts.
    Sample(ExperimentArgs),
    /// Sample and print the JSON summary with empirical and predicted moments.
    Moments(ExperimentArgs),
    /// Compare exact errors with the truncated Voronoï-type expansion.
    Expand(ExperimentArgs),
    /// Evaluate the limiting Gaussian-mixture density of a construction.
    Density(DensityArgs),
    /// Regularity diagnostics of a gap width on [X, 2X].
    Diagnose(DiagnoseArgs),
    /// Run the built-in fixture suite.
    Selftest,
}

#[derive(Clone, Copy, ValueEnum)]
enum Method {
    Fast,
    Brute,
}

#[derive(Args)]
struct CountArgs {
    /// Radius as a reduced or unreduced fraction `k/Q`.
    #[arg(long)]
    x: String,
    #[arg(long, value_enum, default_value = "fast")]
    method: Method,
    /// Run both methods and fail unless they agree.
    #[arg(long)]
    both: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Exact,
    Fast,
}

#[derive(Args)]
struct ExperimentArgs {
    /// ExperimentConfig JSON; flags given alongside override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// `inv_log`, `inv_loglog`, `exp_neg_sqrt_log`, or a gap-width JSON file.
    #[arg(long)]
    omega: Option<String>,
    #[arg(long = "X", value_name = "X")]
    big_x: Option<f64>,
    #[arg(long)]
    samples: Option<usize>,
    /// Denominator of the sampling rationals.
    #[arg(long = "Q", value_name = "Q")]
    q: Option<u64>,
    #[arg(long, value_enum)]
    mode: Option<ModeArg>,
    #[arg(long)]
    j_max: Option<u32>,
    /// Grid-offset seed.
    #[arg(long)]
    seed: Option<u32>,
    /// Artifact directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct DensityArgs {
    /// Gap-width JSON of kind `product` or `sum`.
    #[arg(long)]
    spec: PathBuf,
    #[arg(long, required = true, allow_negative_numbers = true, num_args = 1..)]
    alpha: Vec<f64>,
    /// Gauss–Legendre points per torus axis.
    #[arg(long, default_value_t = DEFAULT_QUAD_POINTS)]
    quad: usize,
    /// Also print the mixture CDF at each α.
    #[arg(long)]
    cdf: bool,
    /// Print exact and quadrature moments up to this order as JSON.
    #[arg(long)]
    j_max: Option<u32>,
}

#[derive(Args)]
struct DiagnoseArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    omega: Option<String>,
    #[arg(long = "X", value_name = "X")]
    big_x: Option<f64>,
    #[arg(long, default_value_t = 10_000)]
    scan: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

impl ExperimentArgs {
    fn resolve(&self, threads: Option<usize>) -> Result<ExperimentConfig, CliError> {
        let mut cfg = match &self.config {
            Some(path) => ExperimentConfig::load(path)?,
            None => {
                let missing = |flag: &str| CliError::Usage(format!("{flag} is required without --config"));
                let big_x = self.big_x.ok_or_else(|| missing("--X"))?;
                let samples = self.samples.ok_or_else(|| missing("--samples"))?;
                ExperimentConfig::new(omega_from_arg("inv_log")?, big_x, samples)
            }
        };
        if let Some(o) = &self.omega {
            cfg.omega = omega_from_arg(o)?;
        }
        if let Some(v) = self.big_x {
            cfg.big_x = v;
        }
        if let Some(v) = self.samples {
            cfg.samples = v;
        }
        if let Some(v) = self.q {
            cfg.q = v;
        }
        if let Some(m) = self.mode {
            cfg.mode = match m {
                ModeArg::Exact => SampleMode::Exact,
                ModeArg::Fast => SampleMode::Fast,
            };
        }
        if let Some(v) = self.j_max {
            cfg.j_max = v;
        }
        if let Some(v) = self.seed {
            cfg.seed = v;
        }
        if self.out.is_some() {
            cfg.out.clone_from(&self.out);
        }
        if threads.is_some() {
            cfg.threads = threads;
        }
        cfg.validate()?;
        init_threads(cfg.threads)?;
        Ok(cfg)
    }
}

fn init_threads(threads: Option<usize>) -> Result<(), CliError> {
    match threads {
        Some(0) => Err(CliError::Usage("--threads must be ≥ 1".into())),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Resource(format!("cannot start {n} worker threads: {e}"))),
        None => Ok(()),
    }
}

fn cmd_count(args: &CountArgs) -> Result<(), CliError> {
    let x = RadiusPoint::parse(&args.x)?;
    let fast = || -> Result<u64, CliError> {
        let r2 = build_r2((x.value() * x.value()).floor() as u64 + 1)?;
        Ok(count_ball_fast(x, &r2)?)
    };
    let n = if args.both {
        let (a, b) = (fast()?, count_ball_brute(x)?);
        if a != b {
            eprintln!("N({x}): fast {a}, brute {b}");
            return Err(CliError::Failed(vec!["count methods disagree".into()]));
        }
        a
    } else {
        match args.method {
            Method::Fast => fast()?,
            Method::Brute => count_ball_brute(x)?,
        }
    };
    println!("{n}");
    Ok(())
}

fn cmd_sample(args: &ExperimentArgs, threads: Option<usize>, print_only: bool) -> Result<(), CliError> {
    let cfg = args.resolve(threads)?;
    let run = experiment::run_sampling(&cfg)?;
    match (&cfg.out, print_only) {
        (Some(dir), _) => experiment::write_sample_artifacts(dir, &cfg, &run)?,
        (None, false) => experiment::write_sample_artifacts(&PathBuf::from("cygshell-out"), &cfg, &run)?,
        (None, true) => {}
    }
    print!("{}", to_json(&run.summary));
    Ok(())
}

fn cmd_expand(args: &ExperimentArgs, threads: Option<usize>) -> Result<(), CliError> {
    let cfg = args.resolve(threads)?;
    let (points, summary) = experiment::run_expansion(&cfg)?;
    if let Some(dir) = &cfg.out {
        experiment::write_expansion_artifacts(dir, &cfg, &points, &summary)?;
    }
    print!("{}", to_json(&summary));
    Ok(())
}

#[derive(Serialize)]
struct MomentReport {
    /// `∫Φ^j` as an exact rational.
    construction: String,
    /// `∫α^j 𝒫` from the exact construction moment.
    moment: f64,
    /// `∫α^j 𝒫` by quadrature of the mixture density.
    quadrature: f64,
}

#[derive(Serialize)]
struct DensityReport {
    norm2: f64,
    moments: BTreeMap<u32, MomentReport>,
}

fn cmd_density(args: &DensityArgs) -> Result<(), CliError> {
    let spec = DensitySpec::from_gap_spec(&read_gap_spec(&args.spec)?, args.quad)?;
    for &a in &args.alpha {
        let p = density_eval(&spec, a)?;
        if args.cdf {
            println!("{} {}", fmt_f64(p), fmt_f64(mixture_cdf(&spec, a)?));
        } else {
            println!("{}", fmt_f64(p));
        }
    }
    if let Some(j_max) = args.j_max {
        if j_max > config::MAX_J {
            return Err(CliError::Usage(format!("--j-max {j_max} exceeds {}", config::MAX_J)));
        }
        let mut moments = BTreeMap::new();
        for j in 0..=j_max {
            let exact = construction_moment(&spec, j)?;
            let moment = if j % 2 == 1 {
                0.0
            } else {
                gaussian_moment(j) as f64 * rational_to_f64(&exact) / spec.norm2()?.powi(j as i32)
            };
            let quadrature = density_moment(&spec, j)?;
            moments.insert(j, MomentReport { construction: exact.to_string(), moment, quadrature });
        }
        print!("{}", to_json(&DensityReport { norm2: spec.norm2()?, moments }));
    }
    Ok(())
}

fn cmd_diagnose(args: &DiagnoseArgs, threads: Option<usize>) -> Result<(), CliError> {
    init_threads(threads)?;
    let (mut omega, mut big_x) = (None, args.big_x);
    if let Some(path) = &args.config {
        let cfg = ExperimentConfig::load(path)?;
        omega = Some(cfg.omega);
        big_x = big_x.or(Some(cfg.big_x));
    }
    if let Some(o) = &args.omega {
        omega = Some(omega_from_arg(o)?);
    }
    let spec = match omega {
        Some(s) => s,
        None => omega_from_arg("inv_log")?,
    };
    let big_x = big_x.ok_or_else(|| CliError::Usage("--X is required without --config".into()))?;
    let omega = cygshell::GapWidth::from_spec(&spec)?;
    let diag = omega_diagnostics(&omega, big_x, args.scan)?;
    if let Some(dir) = &args.out {
        std::fs::create_dir_all(dir)
            .map_err(|e| CliError::Resource(format!("cannot create {}: {e}", dir.display())))?;
        write_json(&dir.join("diagnostics.json"), &diag)?;
    }
    print!("{}", to_json(&diag));
    Ok(())
}

fn run(cli: Cli) -> Result<(), CliError> {
    let threads = cli.threads;
    match &cli.command {
        Command::Count(a) => cmd_count(a),
        Command::Sample(a) => cmd_sample(a, threads, false),
        Command::Moments(a) => cmd_sample(a, threads, true),
        Command::Expand(a) => cmd_expand(a, threads),
        Command::Density(a) => cmd_density(a),
        Command::Diagnose(a) => cmd_diagnose(a, threads),
        Command::Selftest => {
            let failed = selftest::run();
            if failed.is_empty() {
                Ok(())
            } else {
                Err(CliError::Failed(failed.into_iter().map(String::from).collect()))
            }
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Failed(names)) => {
            eprintln!("failed: {}", names.join(", "));
            ExitCode::from(1)
        }
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Resource(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(3)
        }
    }
}
