//! Sampling `Ê(x; ω)` over `[X, 2X]`, the variance `σ²` and the moments `𝓜_j`,
//! empirical distributions, and Kolmogorov–Smirnov distances.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::arith::R2Table;
use crate::counting::{shell_sample, RadiusPoint, ShellSample};
use crate::error::{Error, Result};
use crate::gapwidth::GapWidth;
use crate::numeric::{cmean, csum, normal_cdf};
use crate::spectra::DensitySpec;
use crate::voronoi::{main_series_at, midpoint_grid};

/// `(3 − √5)/2`: the default offset of the first grid point inside its cell.
pub const GOLDEN_PHASE: f64 = 0.381_966_011_250_105_1;
/// `(√5 − 1)/2`: increment of the in-cell offsets from one cell to the next.
pub const GOLDEN_STEP: f64 = 0.618_033_988_749_894_9;
pub const DEFAULT_Q: u64 = 64;
pub const HISTOGRAM_BINS: usize = 61;
pub const HISTOGRAM_RANGE: f64 = 6.0;
/// Fast mode truncates the main series at `max(FAST_MIN_CUTOFF, X)`.
pub const FAST_MIN_CUTOFF: u64 = 10_000;

/// Grid offset for seed `s`: the fractional part of `(s + 1)·GOLDEN_PHASE`.
pub fn seed_phase(seed: u32) -> f64 {
    (f64::from(seed + 1) * GOLDEN_PHASE).fract()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SampleMode {
    /// Exact shell counts.
    #[default]
    Exact,
    /// Truncated main series only.
    Fast,
}

/// One radius per cell of `[X, 2X]`: `X(1 + (i + uᵢ)/S)` with `uᵢ = {phase + i·GOLDEN_STEP}`,
/// snapped to multiples of `1/Q`.
///
/// Varying the in-cell offset keeps the grid from resonating with the period-1
/// components of `Ê` when `X/S` is a simple rational.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SampleGrid {
    #[serde(rename = "X")]
    pub big_x: f64,
    pub samples: usize,
    pub q: u64,
    pub phase: f64,
    pub points: Vec<RadiusPoint>,
}

impl SampleGrid {
    pub fn new(big_x: f64, samples: usize, q: u64) -> Result<Self> {
        Self::with_phase(big_x, samples, q, GOLDEN_PHASE)
    }

    pub fn with_phase(big_x: f64, samples: usize, q: u64, phase: f64) -> Result<Self> {
        if !(big_x.is_finite() && big_x > 0.0) || samples == 0 || q == 0 {
            return Err(Error::Precondition(format!("invalid grid X = {big_x}, S = {samples}, Q = {q}")));
        }
        if !(0.0..1.0).contains(&phase) {
            return Err(Error::Precondition(format!("grid phase {phase} outside [0, 1)")));
        }
        let points = (0..samples)
            .map(|i| {
                let u = (phase + i as f64 * GOLDEN_STEP).fract();
                RadiusPoint::nearest(big_x * (1.0 + (i as f64 + u) / samples as f64), q)
            })
            .collect::<Result<Vec<_>>>()?;
        let inside = points.iter().all(|p| big_x < p.value() && p.value() < 2.0 * big_x);
        let increasing = points.windows(2).all(|w| w[0].k < w[1].k);
        if !inside || !increasing {
            return Err(Error::Precondition(format!(
                "S = {samples} points do not fit strictly inside ({big_x}, {}) on denominator {q}",
                2.0 * big_x
            )));
        }
        Ok(Self { big_x, samples, q, phase, points })
    }

    /// Largest `m` any exact shell sample on this grid needs from the `r₂` table.
    pub fn r2_requirement(&self) -> u64 {
        let top = 2.0 * self.big_x + 1.0;
        (top * top).ceil() as u64
    }
}

/// Fast-mode truncation point.
pub fn fast_cutoff(big_x: f64) -> u64 {
    FAST_MIN_CUTOFF.max(big_x.ceil() as u64)
}

/// Exact shell samples at every grid point, in grid order.
pub fn sample_shells(omega: &GapWidth, grid: &SampleGrid, r2: &R2Table) -> Result<Vec<ShellSample>> {
    r2.require(grid.r2_requirement())?;
    grid.points.par_iter().map(|&x| shell_sample(x, omega, r2)).collect()
}

/// `Ê(xᵢ; ω)` for each grid point.
pub fn sample_errors(omega: &GapWidth, grid: &SampleGrid, r2: &R2Table, mode: SampleMode) -> Result<Vec<f64>> {
    match mode {
        SampleMode::Exact => Ok(sample_shells(omega, grid, r2)?.into_iter().map(|s| s.normalized).collect()),
        SampleMode::Fast => {
            let cutoff = fast_cutoff(grid.big_x);
            r2.require(cutoff)?;
            grid.points
                .par_iter()
                .map(|p| {
                    let x = p.value();
                    main_series_at(x, omega.eval(x), r2, cutoff)
                })
                .collect()
        }
    }
}

/// Uncentred `(1/S) Σ Êᵢ²`.
pub fn variance_sigma2(samples: &[f64]) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::Precondition("variance of an empty sample".into()));
    }
    Ok(csum(samples.iter().map(|v| v * v)) / samples.len() as f64)
}

/// Midpoint-grid average of `(ω log ω)^j` over `[X, 2X]`.
pub fn m_j(omega: &GapWidth, big_x: f64, samples: usize, j: u32) -> Result<f64> {
    if samples == 0 {
        return Err(Error::Precondition("at least one grid sample is required".into()));
    }
    let values = midpoint_grid(big_x, samples)
        .into_iter()
        .map(|x| {
            let w = omega.eval(x);
            if !(w > 0.0 && w < 1.0) {
                return Err(Error::Domain(format!("ω({x}) = {w} outside (0, 1)")));
            }
            Ok((w * w.ln()).powi(j as i32))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(cmean(&values))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Histogram {
    pub edges: Vec<f64>,
    pub counts: Vec<u64>,
}

impl Histogram {
    /// Equal bins on `[−range, range]`; values outside land in the end bins.
    pub fn build(values: &[f64], bins: usize, range: f64) -> Self {
        let width = 2.0 * range / bins as f64;
        let edges = (0..=bins).map(|i| -range + width * i as f64).collect();
        let mut counts = vec![0u64; bins];
        for &v in values {
            let i = ((v + range) / width).floor().clamp(0.0, (bins - 1) as f64) as usize;
            counts[i] += 1;
        }
        Self { edges, counts }
    }
}

/// Sampled distribution of `Ê/σ`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EmpiricalDistribution {
    pub raw: Vec<f64>,
    /// Uncentred root mean square of `raw`.
    pub sigma: f64,
    /// Sample mean of `raw`, reported separately from `σ`.
    pub mean: f64,
    /// Sorted `raw/σ`.
    pub normalized: Vec<f64>,
    pub moments: BTreeMap<u32, f64>,
    pub histogram: Histogram,
}

impl EmpiricalDistribution {
    pub fn new(raw: Vec<f64>, j_max: u32) -> Result<Self> {
        let sigma = variance_sigma2(&raw)?.sqrt();
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::Domain(format!("σ = {sigma} cannot normalise the sample")));
        }
        let mean = cmean(&raw);
        let mut normalized: Vec<f64> = raw.iter().map(|v| v / sigma).collect();
        normalized.sort_by(f64::total_cmp);
        let histogram = Histogram::build(&normalized, HISTOGRAM_BINS, HISTOGRAM_RANGE);
        let mut dist = Self { raw, sigma, mean, normalized, moments: BTreeMap::new(), histogram };
        dist.moments = empirical_moments(&dist, j_max);
        Ok(dist)
    }

    pub fn len(&self) -> usize {
        self.normalized.len()
    }

    pub fn is_empty(&self) -> bool {
        self.normalized.is_empty()
    }
}

/// Sample moments of `Ê/σ` for `0 ≤ j ≤ j_max`.
pub fn empirical_moments(dist: &EmpiricalDistribution, j_max: u32) -> BTreeMap<u32, f64> {
    (0..=j_max)
        .map(|j| {
            let m = csum(dist.normalized.iter().map(|v| v.powi(j as i32))) / dist.len() as f64;
            (j, m)
        })
        .collect()
}

/// `sup_x |F_n(x) − F(x)|` over the sorted normalized sample.
pub fn ks_distance(dist: &EmpiricalDistribution, cdf: impl Fn(f64) -> f64) -> f64 {
    let n = dist.len() as f64;
    dist.normalized
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            let f = cdf(v);
            ((i as f64 + 1.0) / n - f).max(f - i as f64 / n)
        })
        .fold(0.0, f64::max)
}

/// Kolmogorov–Smirnov distance to the standard normal.
pub fn ks_normal(dist: &EmpiricalDistribution) -> f64 {
    ks_distance(dist, normal_cdf)
}

/// `∫_{−∞}^α 𝒫`, the weighted average of per-node normal CDFs.
pub fn mixture_cdf(spec: &DensitySpec, alpha: f64) -> Result<f64> {
    let mix = spec.mixture()?;
    Ok(csum(mix.sigmas.iter().zip(&mix.weights).map(|(&s, &w)| w * normal_cdf(alpha / s))))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::build_r2;
    use crate::gapwidth::{make_slowly_varying, SlowKind};
    use crate::spectra::{CombineMode, DEFAULT_QUAD_POINTS};
    use num_complex::Complex64;
    use statrs::distribution::{ContinuousCDF, Normal};

    fn dist(raw: Vec<f64>) -> EmpiricalDistribution {
        EmpiricalDistribution::new(raw, 8).unwrap()
    }

    #[test]
    fn grid_invariants() {
        let g = SampleGrid::new(100.0, 100, 64).unwrap();
        assert_eq!(g.points.len(), 100);
        assert!(g.points.windows(2).all(|w| w[0].value() < w[1].value()));
        assert!(g.points.iter().all(|p| p.value() > 100.0 && p.value() < 200.0));
        assert!(SampleGrid::new(10.0, 1000, 1).is_err());
        assert!(SampleGrid::with_phase(10.0, 10, 64, 1.0).is_err());
        assert!((seed_phase(0) - 0.381_966).abs() < 1e-6);
        assert!((seed_phase(1) - 0.763_932).abs() < 1e-6);
        assert!((seed_phase(2) - 0.145_898).abs() < 1e-6);
    }

    #[test]
    fn variance_fixtures() {
        assert_eq!(variance_sigma2(&[3.0; 7]).unwrap(), 9.0);
        assert_eq!(variance_sigma2(&[1.0, -1.0, 1.0, -1.0]).unwrap(), 1.0);
        assert!(variance_sigma2(&[]).is_err());
    }

    #[test]
    fn moments_of_gap_width() {
        let w = make_slowly_varying(SlowKind::InvLog);
        assert_eq!(m_j(&w, 1e3, 500, 0).unwrap(), 1.0);
        for j in [2, 4, 6, 8] {
            let m = m_j(&w, 1e3, 500, j).unwrap();
            assert!(m > 0.0);
            assert!(m >= m_j(&w, 1e3, 500, 2).unwrap().powi(j as i32 / 2) * (1.0 - 1e-12));
        }
        let ratio = m_j(&w, 1e6, 2000, 4).unwrap() / m_j(&w, 1e6, 2000, 2).unwrap().powi(2);
        assert!((0.9..=1.1).contains(&ratio));
        let wide = GapWidth::constant(1.5).unwrap();
        assert!(matches!(m_j(&wide, 10.0, 10, 2), Err(Error::Domain(_))));
    }

    #[test]
    fn empirical_distribution_self_normalizes() {
        let raw: Vec<f64> = (0..997).map(|i| ((i * 7919) % 1000) as f64 / 250.0 - 1.7).collect();
        let d = dist(raw);
        assert!((d.moments[&2] - 1.0).abs() < 1e-12);
        assert_eq!(d.moments[&0], 1.0);
        assert_eq!(d.histogram.counts.iter().sum::<u64>(), 997);
        assert_eq!(d.histogram.counts.len(), HISTOGRAM_BINS);
        assert!(d.normalized.windows(2).all(|w| w[0] <= w[1]));
        assert!(EmpiricalDistribution::new(vec![0.0; 4], 4).is_err());
    }

    #[test]
    fn ks_of_normal_quantiles() {
        let n = 1000;
        let normal = Normal::new(0.0, 1.0).unwrap();
        let quantiles: Vec<f64> = (0..n).map(|i| normal.inverse_cdf((i as f64 + 0.5) / n as f64)).collect();
        let mut d = dist(quantiles.clone());
        // Keep the exact quantiles rather than their self-normalised version.
        d.normalized = quantiles;
        let ks = ks_normal(&d);
        assert!(ks <= 1.0 / (2.0 * n as f64) + 1e-6, "{ks}");
    }

    #[test]
    fn mixture_cdf_properties() {
        let flat =
            DensitySpec::from_polys(CombineMode::Product, &[vec![Complex64::new(1.0, 0.0)]], DEFAULT_QUAD_POINTS)
                .unwrap();
        assert!((mixture_cdf(&flat, 1.96).unwrap() - 0.975_00).abs() < 1e-5);
        let one_plus_z = DensitySpec::from_polys(
            CombineMode::Product,
            &[vec![Complex64::new(1.0, 0.0), Complex64::new(1.0, 0.0)]],
            DEFAULT_QUAD_POINTS,
        )
        .unwrap();
        for s in [&flat, &one_plus_z] {
            assert_eq!(mixture_cdf(s, 0.0).unwrap(), 0.5);
            let mut prev = 0.0;
            for i in -50..=50 {
                let v = mixture_cdf(s, i as f64 / 10.0).unwrap();
                assert!(v >= prev);
                prev = v;
            }
            assert!(mixture_cdf(s, -40.0).unwrap() < 1e-12);
            assert!(mixture_cdf(s, 40.0).unwrap() > 1.0 - 1e-12);
        }
    }

    #[test]
    fn exact_and_fast_modes_agree_roughly() {
        let w = make_slowly_varying(SlowKind::InvLog);
        let grid = SampleGrid::new(100.0, 50, DEFAULT_Q).unwrap();
        let r2 = build_r2(grid.r2_requirement().max(FAST_MIN_CUTOFF)).unwrap();
        let exact = sample_errors(&w, &grid, &r2, SampleMode::Exact).unwrap();
        let fast = sample_errors(&w, &grid, &r2, SampleMode::Fast).unwrap();
        assert_eq!(exact.len(), 50);
        assert!(exact.iter().chain(&fast).all(|v| v.is_finite()));
        let mad = exact.iter().zip(&fast).map(|(a, b)| (a - b).abs()).sum::<f64>() / 50.0;
        assert!(mad <= 0.1, "mean absolute difference {mad}");
    }

    #[test]
    fn sampling_is_deterministic() {
        let w = make_slowly_varying(SlowKind::InvLog);
        let grid = SampleGrid::new(50.0, 40, DEFAULT_Q).unwrap();
        let r2 = build_r2(grid.r2_requirement()).unwrap();
        let a = sample_errors(&w, &grid, &r2, SampleMode::Exact).unwrap();
        let b = sample_errors(&w, &grid, &r2, SampleMode::Exact).unwrap();
        assert_eq!(a, b);
        let small = build_r2(100).unwrap();
        assert!(matches!(sample_errors(&w, &grid, &small, SampleMode::Exact), Err(Error::Precondition(_))));
    }
}
