//! Exact Fourier algebra for `φ = |p(e^{2πit})|²`, the torus moments of the
//! product and sum constructions, the limits `𝓛_j`, and the Gaussian-mixture
//! limiting densities evaluated by tensor Gauss–Legendre quadrature.

use std::num::NonZeroUsize;
use std::sync::OnceLock;

use gauss_quad::GaussLegendre;
use num_bigint::BigInt;
use num_complex::{Complex, Complex64};
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gapwidth::{AlmostPeriodicGap, GapSpec};
use crate::numeric::{gaussian_moment, normal_pdf, CompensatedSum};

pub type ExactComplex = Complex<BigRational>;

/// Largest `j·d` accepted by the Laurent-power routines.
pub const SPAN_LIMIT: usize = 10_000;
/// Work budget (`states × vectors × j`) of the constrained frequency sum.
pub const FREQUENCY_WORK_LIMIT: usize = 5_000_000;
/// Nodes per axis must be at least this many.
pub const MIN_QUAD_POINTS: usize = 16;
pub const DEFAULT_QUAD_POINTS: usize = 64;
pub const MAX_AXES: usize = 4;
/// A mixture scale `Φ(t)` below this at a node is singular.
pub const SINGULAR_FLOOR: f64 = 1e-9;
/// Normalisation integrals are cut at this many widest-component standard deviations.
pub const TAIL_SIGMAS: f64 = 12.0;
const PANEL_NODES: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CombineMode {
    Product,
    Sum,
}

pub fn rational_to_f64(q: &BigRational) -> f64 {
    q.to_f64().unwrap_or(f64::NAN)
}

fn exact_from_f64(v: f64) -> Result<BigRational> {
    BigRational::from_float(v).ok_or_else(|| Error::Construction(format!("coefficient {v} is not finite")))
}

fn czero() -> ExactComplex {
    Complex::new(BigRational::zero(), BigRational::zero())
}

/// Laurent coefficients of `φ(t) = Σ_{|m| ≤ d} a_m e^{2πimt}`, stored for `m = −d..=d`.
#[derive(Debug, Clone, PartialEq)]
pub struct TrigPolyModulus {
    coeffs: Vec<ExactComplex>,
    float: Vec<Complex64>,
}

impl TrigPolyModulus {
    pub fn degree(&self) -> usize {
        self.coeffs.len() / 2
    }

    /// Exact `a_m` (zero outside `[−d, d]`).
    pub fn coeff(&self, m: i64) -> ExactComplex {
        let d = self.degree() as i64;
        if m.abs() > d {
            czero()
        } else {
            self.coeffs[(m + d) as usize].clone()
        }
    }

    pub fn coeffs(&self) -> &[ExactComplex] {
        &self.coeffs
    }

    /// `(m, a_m)` in floating point for `m = −d..=d`.
    pub fn float_terms(&self) -> impl Iterator<Item = (i64, Complex64)> + '_ {
        let d = self.degree() as i64;
        self.float.iter().enumerate().map(move |(i, &c)| (i as i64 - d, c))
    }

    /// `φ(t)`, using `a_{−m} = conj(a_m)`.
    pub fn eval(&self, t: f64) -> f64 {
        let d = self.degree();
        let mut acc = self.float[d].re;
        for m in 1..=d {
            let z = Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * (m as f64 * t).rem_euclid(1.0));
            acc += 2.0 * (self.float[d + m] * z).re;
        }
        acc
    }
}

/// `a_m = Σ_k c_{k+m} conj(c_k)` from the coefficients of `p` (constant term first).
///
/// Every finite `f64` is a dyadic rational, so the result is exact for any input.
pub fn phi_from_poly(coeffs: &[Complex64]) -> Result<TrigPolyModulus> {
    let first = coeffs.iter().position(|c| c.norm_sqr() != 0.0);
    let last = coeffs.iter().rposition(|c| c.norm_sqr() != 0.0);
    let (Some(first), Some(last)) = (first, last) else {
        return Err(Error::Construction("polynomial has no nonzero coefficient".into()));
    };
    // |z^s q(z)| = |q(z)| on the circle: leading zeros do not matter.
    let c = coeffs[first..=last]
        .iter()
        .map(|z| Ok(Complex::new(exact_from_f64(z.re)?, exact_from_f64(z.im)?)))
        .collect::<Result<Vec<ExactComplex>>>()?;
    let d = c.len() - 1;
    let mut coeffs = vec![czero(); 2 * d + 1];
    for m in 0..=d {
        let mut a = czero();
        for k in 0..=(d - m) {
            a += c[k + m].clone() * c[k].conj();
        }
        coeffs[d - m] = a.conj();
        coeffs[d + m] = a;
    }
    let float = coeffs.iter().map(|z| Complex64::new(rational_to_f64(&z.re), rational_to_f64(&z.im))).collect();
    Ok(TrigPolyModulus { coeffs, float })
}

/// Product of two centred Laurent coefficient vectors.
fn laurent_mul(a: &[ExactComplex], b: &[ExactComplex]) -> Vec<ExactComplex> {
    let mut out = vec![czero(); a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        if x.is_zero() {
            continue;
        }
        for (k, y) in b.iter().enumerate() {
            out[i + k] = out[i + k].clone() + x.clone() * y.clone();
        }
    }
    out
}

fn laurent_pow(a: &[ExactComplex], e: u32) -> Vec<ExactComplex> {
    let mut acc = vec![Complex::new(BigRational::one(), BigRational::zero())];
    for _ in 0..e {
        acc = laurent_mul(&acc, a);
    }
    acc
}

/// `∫₀¹ φ(t)^j dt`, the constant coefficient of `φ^j`, exactly.
pub fn phi_moment(phi: &TrigPolyModulus, j: u32) -> Result<BigRational> {
    let span = j as usize * phi.degree();
    if span > SPAN_LIMIT {
        return Err(Error::Limit(format!("coefficient span j·d = {span} exceeds {SPAN_LIMIT}")));
    }
    let hi = laurent_pow(phi.coeffs(), j.div_ceil(2));
    let lo = laurent_pow(phi.coeffs(), j / 2);
    // Both vectors are centred; pair index i of `hi` with the mirrored index of `lo`.
    let (ch, cl) = (hi.len() / 2, lo.len() / 2);
    let mut ct = czero();
    for (i, h) in hi.iter().enumerate() {
        let m = i as i64 - ch as i64;
        let idx = cl as i64 - m;
        if (0..lo.len() as i64).contains(&idx) {
            ct += h.clone() * lo[idx as usize].clone();
        }
    }
    debug_assert!(ct.im.is_zero());
    Ok(ct.re)
}

/// Mixture of centred normals `Σ w_i N(0, σ_i²)` with `Σ w_i = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct Mixture {
    pub sigmas: Vec<f64>,
    pub weights: Vec<f64>,
    pub sigma_min: f64,
    pub sigma_max: f64,
}

impl Mixture {
    pub fn pdf(&self, alpha: f64) -> f64 {
        let mut acc = CompensatedSum::new();
        for (&s, &w) in self.sigmas.iter().zip(&self.weights) {
            acc.add(w * normal_pdf(alpha, s));
        }
        acc.value()
    }
}

/// Limiting density of the product (`𝒫_Φ×`) or sum (`𝒫_Θ+`) construction.
#[derive(Debug)]
pub struct DensitySpec {
    pub mode: CombineMode,
    pub phis: Vec<TrigPolyModulus>,
    pub quad_points: usize,
    /// Frequency vectors may be compared as integer vectors.
    pub independent: bool,
    norm2: OnceLock<f64>,
    mixture: OnceLock<Result<Mixture>>,
}

impl Clone for DensitySpec {
    fn clone(&self) -> Self {
        Self {
            mode: self.mode,
            phis: self.phis.clone(),
            quad_points: self.quad_points,
            independent: self.independent,
            norm2: self.norm2.clone(),
            mixture: OnceLock::new(),
        }
    }
}

impl DensitySpec {
    /// Spec over independent frequencies.
    pub fn new(mode: CombineMode, phis: Vec<TrigPolyModulus>, quad_points: usize) -> Result<Self> {
        if quad_points < MIN_QUAD_POINTS {
            return Err(Error::Construction(format!("quad_points = {quad_points} < {MIN_QUAD_POINTS}")));
        }
        if phis.is_empty() || phis.len() > MAX_AXES {
            return Err(Error::Construction(format!(
                "need 1..={MAX_AXES} factors for tensor quadrature, got {}",
                phis.len()
            )));
        }
        Ok(Self { mode, phis, quad_points, independent: true, norm2: OnceLock::new(), mixture: OnceLock::new() })
    }

    pub fn from_polys(mode: CombineMode, polys: &[Vec<Complex64>], quad_points: usize) -> Result<Self> {
        let phis = polys.iter().map(|p| phi_from_poly(p)).collect::<Result<Vec<_>>>()?;
        Self::new(mode, phis, quad_points)
    }

    pub fn from_almost_periodic(ap: &AlmostPeriodicGap, quad_points: usize) -> Result<Self> {
        ap.validate()?;
        let mut spec = Self::from_polys(ap.mode, &ap.polys, quad_points)?;
        spec.independent = ap.lambdas_independent();
        Ok(spec)
    }

    pub fn from_gap_spec(spec: &GapSpec, quad_points: usize) -> Result<Self> {
        Self::from_almost_periodic(&spec.almost_periodic()?, quad_points)
    }

    /// `‖Φ‖₂` (or `‖Θ‖₂`), from the exact second moment.
    pub fn norm2(&self) -> Result<f64> {
        if let Some(&v) = self.norm2.get() {
            return Ok(v);
        }
        let v = rational_to_f64(&construction_moment(self, 2)?).sqrt();
        Ok(*self.norm2.get_or_init(|| v))
    }

    /// Components `σ(t) = Φ(t)/‖Φ‖₂` weighted by the tensor Gauss–Legendre rule on `[0, 1)ⁿ`.
    pub fn mixture(&self) -> Result<&Mixture> {
        self.mixture.get_or_init(|| self.build_mixture()).as_ref().map_err(Clone::clone)
    }

    fn build_mixture(&self) -> Result<Mixture> {
        let norm = self.norm2()?;
        let rule = GaussLegendre::new(NonZeroUsize::new(self.quad_points).expect("quad_points ≥ 16"));
        let nodes: Vec<(f64, f64)> =
            rule.as_node_weight_pairs().iter().map(|&(x, w)| (0.5 * (x + 1.0), 0.5 * w)).collect();
        let values: Vec<Vec<f64>> =
            self.phis.iter().map(|phi| nodes.iter().map(|&(t, _)| phi.eval(t)).collect()).collect();
        let n = self.phis.len();
        let q = nodes.len();
        let total = q.pow(n as u32);
        let mut sigmas = Vec::with_capacity(total);
        let mut weights = Vec::with_capacity(total);
        let mut idx = vec![0usize; n];
        for _ in 0..total {
            let mut w = 1.0;
            let mut phi = match self.mode {
                CombineMode::Product => 1.0,
                CombineMode::Sum => 0.0,
            };
            for (axis, &i) in idx.iter().enumerate() {
                w *= nodes[i].1;
                match self.mode {
                    CombineMode::Product => phi *= values[axis][i],
                    CombineMode::Sum => phi += values[axis][i],
                }
            }
            if !(phi >= SINGULAR_FLOOR) {
                return Err(Error::SingularMixture { node: idx.iter().map(|&i| nodes[i].0).collect(), value: phi });
            }
            sigmas.push(phi / norm);
            weights.push(w);
            for slot in idx.iter_mut() {
                *slot += 1;
                if *slot < q {
                    break;
                }
                *slot = 0;
            }
        }
        let sigma_min = sigmas.iter().copied().fold(f64::INFINITY, f64::min);
        let sigma_max = sigmas.iter().copied().fold(0.0, f64::max);
        Ok(Mixture { sigmas, weights, sigma_min, sigma_max })
    }
}

/// `∫_{[0,1)ⁿ} Φ^j` (product) or `∫ Θ^j` (sum), exactly.
pub fn construction_moment(spec: &DensitySpec, j: u32) -> Result<BigRational> {
    match spec.mode {
        CombineMode::Product => {
            let mut acc = BigRational::one();
            for phi in &spec.phis {
                acc *= phi_moment(phi, j)?;
            }
            Ok(acc)
        }
        CombineMode::Sum => {
            // Torus coordinates are independent: binomially compose the per-axis moment sequences.
            let mut acc: Vec<BigRational> =
                (0..=j).map(|k| if k == 0 { BigRational::one() } else { BigRational::zero() }).collect();
            for phi in &spec.phis {
                let own = (0..=j).map(|k| phi_moment(phi, k)).collect::<Result<Vec<_>>>()?;
                let mut next = vec![BigRational::zero(); j as usize + 1];
                for (total, slot) in next.iter_mut().enumerate() {
                    let row = binomial_row(total as u32);
                    for k in 0..=total {
                        *slot += BigRational::from_integer(row[k].clone()) * &acc[k] * &own[total - k];
                    }
                }
                acc = next;
            }
            Ok(acc.pop().expect("j + 1 entries"))
        }
    }
}

fn binomial_row(n: u32) -> Vec<BigInt> {
    let mut row = vec![BigInt::one()];
    for k in 0..n {
        let next = &row[k as usize] * BigInt::from(n - k) / BigInt::from(k + 1);
        row.push(next);
    }
    row
}

/// Integer frequency vector `(m₁, …, m_n)` standing for `Σ m_ℓ λ_ℓ`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FrequencyVector(pub Vec<i64>);

impl FrequencyVector {
    pub fn neg(&self) -> Self {
        Self(self.0.iter().map(|m| -m).collect())
    }

    /// Joint coefficient `Π_ℓ a_{m_ℓ, ℓ}`.
    pub fn coefficient(&self, phis: &[TrigPolyModulus]) -> ExactComplex {
        self.0
            .iter()
            .zip(phis)
            .fold(Complex::new(BigRational::one(), BigRational::zero()), |acc, (&m, phi)| acc * phi.coeff(m))
    }
}

/// Every frequency vector with `|m_ℓ| ≤ d_ℓ`, in lexicographic order.
pub fn frequency_set(phis: &[TrigPolyModulus]) -> Vec<FrequencyVector> {
    let mut out = vec![FrequencyVector(Vec::new())];
    for phi in phis {
        let d = phi.degree() as i64;
        out = out
            .into_iter()
            .flat_map(|v| {
                (-d..=d).map(move |m| {
                    let mut w = v.0.clone();
                    w.push(m);
                    FrequencyVector(w)
                })
            })
            .collect();
    }
    out
}

/// `Σ_{𝔣₁+…+𝔣_j = 0} Π 𝔞_{𝔣_i}` over the frequency set of a product construction.
///
/// Runs a dynamic programme over partial vector sums, independent of the
/// per-axis moments used by [`construction_moment`].
pub fn constrained_frequency_sum(spec: &DensitySpec, j: u32) -> Result<BigRational> {
    if spec.mode != CombineMode::Product {
        return Err(Error::Unsupported("frequency sums are defined for the product construction".into()));
    }
    if !spec.independent {
        return Err(Error::Unsupported("frequencies dependent over ℤ have no rational representation here".into()));
    }
    if j % 2 == 1 {
        return Err(Error::Domain(format!("j = {j} must be even")));
    }
    let vectors = frequency_set(&spec.phis);
    let weights: Vec<ExactComplex> = vectors.iter().map(|v| v.coefficient(&spec.phis)).collect();
    let radii: Vec<i64> = spec.phis.iter().map(|p| j as i64 * p.degree() as i64).collect();
    let dims: Vec<usize> = radii.iter().map(|&r| (2 * r + 1) as usize).collect();
    let states: usize = dims.iter().product();
    let work = states.saturating_mul(vectors.len()).saturating_mul(j as usize);
    if work > FREQUENCY_WORK_LIMIT {
        return Err(Error::Limit(format!("frequency enumeration work {work} exceeds {FREQUENCY_WORK_LIMIT}")));
    }
    let index = |v: &[i64]| -> usize {
        let mut idx = 0usize;
        for ((&m, &r), &dim) in v.iter().zip(&radii).zip(&dims) {
            idx = idx * dim + (m + r) as usize;
        }
        idx
    };
    let decode = |mut idx: usize| -> Vec<i64> {
        let mut v = vec![0i64; dims.len()];
        for axis in (0..dims.len()).rev() {
            v[axis] = (idx % dims[axis]) as i64 - radii[axis];
            idx /= dims[axis];
        }
        v
    };
    let origin = index(&vec![0; dims.len()]);
    let mut table: Vec<ExactComplex> = vec![czero(); states];
    table[origin] = Complex::new(BigRational::one(), BigRational::zero());
    for step in 1..=j as i64 {
        // After `step` terms a partial sum must stay within reach of zero.
        let reach: Vec<i64> = spec.phis.iter().map(|p| (j as i64 - step) * p.degree() as i64).collect();
        let mut next = vec![czero(); states];
        for (s, value) in table.iter().enumerate() {
            if value.is_zero() {
                continue;
            }
            let base = decode(s);
            for (v, w) in vectors.iter().zip(&weights) {
                let sum: Vec<i64> = base.iter().zip(&v.0).map(|(a, b)| a + b).collect();
                if sum.iter().zip(&reach).any(|(s, r)| s.abs() > *r) {
                    continue;
                }
                let t = index(&sum);
                next[t] = next[t].clone() + value.clone() * w.clone();
            }
        }
        table = next;
    }
    let total = table.swap_remove(origin);
    if !total.im.is_zero() {
        return Err(Error::Construction("frequency sum has a nonzero imaginary part".into()));
    }
    Ok(total.re)
}

/// `𝓛_j = ‖·‖_j^j / ‖·‖₂^j`, exactly.
pub fn l_j(spec: &DensitySpec, j: u32) -> Result<BigRational> {
    if j < 2 || j % 2 == 1 {
        return Err(Error::Domain(format!("𝓛_j needs even j ≥ 2, got {j}")));
    }
    let m2 = construction_moment(spec, 2)?;
    let mj = construction_moment(spec, j)?;
    let mut denom = BigRational::one();
    for _ in 0..j / 2 {
        denom *= &m2;
    }
    Ok(mj / denom)
}

/// Source of the limits `𝓛_j`.
#[derive(Debug, Clone, Copy)]
pub enum MomentModel<'a> {
    /// `𝓛_j = 1`.
    SlowlyVarying,
    Construction(&'a DensitySpec),
}

/// `j!/(2^{j/2}(j/2)!)·𝓛_j` for even `j`, `0` for odd `j`.
pub fn predicted_moment(model: MomentModel<'_>, j: u32) -> Result<f64> {
    if j % 2 == 1 {
        return Ok(0.0);
    }
    let g = gaussian_moment(j) as f64;
    match model {
        MomentModel::SlowlyVarying => Ok(g),
        MomentModel::Construction(_) if j == 0 => Ok(1.0),
        MomentModel::Construction(spec) => Ok(g * rational_to_f64(&l_j(spec, j)?)),
    }
}

/// Limiting density at `α`.
pub fn density_eval(spec: &DensitySpec, alpha: f64) -> Result<f64> {
    Ok(spec.mixture()?.pdf(alpha))
}

/// `∫ α^j 𝒫(α) dα` by Gauss–Legendre panels that refine geometrically towards 0.
pub fn density_moment(spec: &DensitySpec, j: u32) -> Result<f64> {
    let mix = spec.mixture()?;
    let limit = TAIL_SIGMAS * mix.sigma_max;
    let mut edges = vec![0.0, mix.sigma_min.min(limit)];
    while *edges.last().expect("nonempty") < limit {
        let next = (2.0 * edges.last().expect("nonempty")).min(limit);
        edges.push(next);
    }
    let rule = GaussLegendre::new(NonZeroUsize::new(PANEL_NODES).expect("nonzero"));
    let mut acc = CompensatedSum::new();
    for w in edges.windows(2) {
        let (a, b) = (w[0], w[1]);
        if b <= a {
            continue;
        }
        let half = 0.5 * (b - a);
        for &(x, wt) in rule.as_node_weight_pairs() {
            let alpha = a + half * (x + 1.0);
            let p = mix.pdf(alpha);
            // ±α enter symmetrically; odd powers cancel exactly.
            let up = alpha.powi(j as i32) * p;
            let down = (-alpha).powi(j as i32) * p;
            acc.add(half * wt * up);
            acc.add(half * wt * down);
        }
    }
    Ok(acc.value())
}
