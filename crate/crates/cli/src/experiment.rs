use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use cygshell::numeric::median;
use cygshell::spectra::DEFAULT_QUAD_POINTS;
use cygshell::stats::{fast_cutoff, ks_normal, sample_shells, SampleGrid};
use cygshell::voronoi::{expansion_point, ExpansionPoint};
use cygshell::{
    build_r2, ks_distance, mixture_cdf, predicted_moment, sample_errors, DensitySpec, EmpiricalDistribution, GapWidth,
    MomentModel, R2Table, SampleMode, ShellSample,
};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::ExperimentConfig;
use crate::output::{fmt_f64, write_csv, write_json};
use crate::CliError;

/// JSON summary of one sampling run.
#[derive(Debug, Serialize)]
pub struct Summary {
    #[serde(rename = "X")]
    pub big_x: f64,
    #[serde(rename = "S")]
    pub samples: usize,
    #[serde(rename = "Q")]
    pub q: u64,
    pub mode: SampleMode,
    pub phase: f64,
    pub omega: String,
    pub sigma2: f64,
    pub mean: f64,
    pub moments: BTreeMap<u32, f64>,
    #[serde(skip_serializing_if = "BTreeMap::is_empty")]
    pub predicted_moments: BTreeMap<u32, f64>,
    pub ks_normal: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ks_mixture: Option<f64>,
}

pub struct SampleRun {
    pub grid: SampleGrid,
    pub omega: GapWidth,
    /// Exact mode only.
    pub shells: Option<Vec<ShellSample>>,
    pub dist: EmpiricalDistribution,
    pub summary: Summary,
}

fn table_for(cfg: &ExperimentConfig, grid: &SampleGrid) -> Result<R2Table, CliError> {
    let need = match cfg.mode {
        SampleMode::Exact => grid.r2_requirement(),
        SampleMode::Fast => fast_cutoff(cfg.big_x),
    };
    Ok(build_r2(need)?)
}

/// Limiting density when the gap width is a construction over independent frequencies.
fn limit_density(cfg: &ExperimentConfig) -> Result<Option<DensitySpec>, CliError> {
    if cfg.omega.mode().is_none() {
        return Ok(None);
    }
    let density = DensitySpec::from_gap_spec(&cfg.omega, DEFAULT_QUAD_POINTS)?;
    if !density.independent {
        eprintln!("note: frequencies are not independent over ℤ; no limiting density is reported");
        return Ok(None);
    }
    density.mixture()?;
    Ok(Some(density))
}

pub fn run_sampling(cfg: &ExperimentConfig) -> Result<SampleRun, CliError> {
    let omega = cfg.gap_width()?;
    let grid = cfg.grid()?;
    let r2 = table_for(cfg, &grid)?;
    let (shells, raw) = match cfg.mode {
        SampleMode::Exact => {
            let shells = sample_shells(&omega, &grid, &r2)?;
            let raw = shells.iter().map(|s| s.normalized).collect();
            (Some(shells), raw)
        }
        SampleMode::Fast => (None, sample_errors(&omega, &grid, &r2, SampleMode::Fast)?),
    };
    let dist = EmpiricalDistribution::new(raw, cfg.j_max)?;
    let density = limit_density(cfg)?;
    let model = match (&density, cfg.omega.mode()) {
        (Some(d), _) => Some(MomentModel::Construction(d)),
        (None, None) => Some(MomentModel::SlowlyVarying),
        (None, Some(_)) => None,
    };
    let mut predicted_moments = BTreeMap::new();
    if let Some(model) = model {
        for j in 0..=cfg.j_max {
            predicted_moments.insert(j, predicted_moment(model, j)?);
        }
    }
    let ks_mixture = density.as_ref().map(|d| ks_distance(&dist, |a| mixture_cdf(d, a).unwrap_or(f64::NAN)));
    let summary = Summary {
        big_x: cfg.big_x,
        samples: cfg.samples,
        q: cfg.q,
        mode: cfg.mode,
        phase: grid.phase,
        omega: omega.name().to_string(),
        sigma2: dist.sigma * dist.sigma,
        mean: dist.mean,
        moments: dist.moments.clone(),
        predicted_moments,
        ks_normal: ks_normal(&dist),
        ks_mixture,
    };
    Ok(SampleRun { grid, omega, shells, dist, summary })
}

/// `samples.csv`, `distribution.csv`, `histogram.csv`, `summary.json` and `config.json` under `dir`.
pub fn write_sample_artifacts(dir: &Path, cfg: &ExperimentConfig, run: &SampleRun) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::Resource(format!("cannot create {}: {e}", dir.display())))?;
    let rows: Vec<Vec<String>> = match &run.shells {
        Some(shells) => shells
            .iter()
            .map(|s| {
                vec![
                    fmt_f64(s.x),
                    fmt_f64(s.omega_x),
                    s.shell_count.to_string(),
                    fmt_f64(s.error),
                    fmt_f64(s.normalized),
                ]
            })
            .collect(),
        None => run
            .grid
            .points
            .iter()
            .zip(&run.dist.raw)
            .map(|(p, &v)| {
                let x = p.value();
                vec![fmt_f64(x), fmt_f64(run.omega.eval(x)), String::new(), String::new(), fmt_f64(v)]
            })
            .collect(),
    };
    write_csv(&dir.join("samples.csv"), &["x", "omega_x", "shell_count", "error", "normalized"], rows)?;
    let sorted = run.dist.normalized.iter().map(|&v| vec![fmt_f64(v)]).collect();
    write_csv(&dir.join("distribution.csv"), &["normalized"], sorted)?;
    let h = &run.dist.histogram;
    let bins = h
        .counts
        .iter()
        .enumerate()
        .map(|(i, c)| vec![fmt_f64(h.edges[i]), fmt_f64(h.edges[i + 1]), c.to_string()])
        .collect();
    write_csv(&dir.join("histogram.csv"), &["left", "right", "count"], bins)?;
    write_json(&dir.join("summary.json"), &run.summary)?;
    write_json(&dir.join("config.json"), cfg)
}

#[derive(Debug, Serialize)]
pub struct ExpansionSummary {
    #[serde(rename = "X")]
    pub big_x: f64,
    #[serde(rename = "S")]
    pub samples: usize,
    pub cutoff: u64,
    /// `0.5·X^{−0.9}`.
    pub bound: f64,
    pub within_bound: usize,
    pub median_abs_residual: f64,
    pub max_abs_residual: f64,
}

pub fn run_expansion(cfg: &ExperimentConfig) -> Result<(Vec<ExpansionPoint>, ExpansionSummary), CliError> {
    let omega = cfg.gap_width()?;
    let grid = cfg.grid()?;
    let r2 = build_r2(grid.r2_requirement())?;
    let points = grid
        .points
        .par_iter()
        .map(|&x| expansion_point(x, cfg.big_x, &omega, &r2))
        .collect::<cygshell::Result<Vec<_>>>()?;
    let abs: Vec<f64> = points.iter().map(|p| p.residual.abs()).collect();
    let bound = 0.5 * cfg.big_x.powf(-0.9);
    let summary = ExpansionSummary {
        big_x: cfg.big_x,
        samples: cfg.samples,
        cutoff: (cfg.big_x * cfg.big_x).floor() as u64,
        bound,
        within_bound: abs.iter().filter(|&&r| r <= bound).count(),
        median_abs_residual: median(&abs),
        max_abs_residual: abs.iter().copied().fold(0.0, f64::max),
    };
    Ok((points, summary))
}

pub fn write_expansion_artifacts(
    dir: &Path,
    cfg: &ExperimentConfig,
    points: &[ExpansionPoint],
    summary: &ExpansionSummary,
) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::Resource(format!("cannot create {}: {e}", dir.display())))?;
    let rows = points
        .iter()
        .map(|p| {
            vec![
                fmt_f64(p.sample.x),
                fmt_f64(p.sample.omega_x),
                fmt_f64(p.sample.normalized),
                fmt_f64(p.main),
                fmt_f64(p.sawtooth),
                fmt_f64(p.rhs),
                fmt_f64(p.residual),
            ]
        })
        .collect();
    write_csv(
        &dir.join("expansion.csv"),
        &["x", "omega_x", "normalized", "main", "sawtooth", "rhs", "residual"],
        rows,
    )?;
    write_json(&dir.join("expansion.json"), summary)?;
    write_json(&dir.join("config.json"), cfg)
}
