//! The Voronoï-type expansion of `Ê(x; ω)`, exact detection of vanishing
//! `Σ eᵢ√mᵢ`, and the diagonal sum that drives the moment asymptotics.

use std::collections::BTreeMap;
use std::f64::consts::{PI, SQRT_2};

use serde::Serialize;

use crate::arith::{squarefree_core, FactorSieve, R2Table};
use crate::counting::{shell_sample_with_sawtooth, RadiusPoint, ShellSample};
use crate::error::{Error, Result};
use crate::gapwidth::GapWidth;
use crate::numeric::{cmean, sin_pi, CompensatedSum};

/// Largest `Y` accepted by [`diagonal_sum`].
pub const DIAGONAL_MAX_Y: u64 = 400;
/// Largest even `j` accepted by [`diagonal_sum`].
pub const DIAGONAL_MAX_J: u32 = 8;

/// One summand of the main series: `r₂(m)/m · sin(π√m ω) · sin(π√m (2x + ω))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExpansionTerm {
    pub m: u64,
    pub amplitude: f64,
}

impl ExpansionTerm {
    pub fn new(m: u64, r2: u32) -> Self {
        Self { m, amplitude: f64::from(r2) / m as f64 }
    }

    #[inline]
    pub fn value(&self, x: f64, omega: f64) -> f64 {
        let root = (self.m as f64).sqrt();
        self.amplitude * sin_pi(root * omega) * sin_pi(root * (2.0 * x + omega))
    }
}

/// `(2^{3/2}/π) Σ_{1 ≤ m ≤ cutoff} r₂(m)/m · sin(π√m ω) · sin(π√m (2x + ω))` at a given `ω = ω(x)`.
pub fn main_series_at(x: f64, omega: f64, r2: &R2Table, cutoff: u64) -> Result<f64> {
    r2.require(cutoff)?;
    let mut acc = CompensatedSum::new();
    for &(m, r) in r2.nonzero_upto(cutoff) {
        if m == 0 {
            continue;
        }
        acc.add(ExpansionTerm::new(u64::from(m), r).value(x, omega));
    }
    Ok(2.0 * SQRT_2 / PI * acc.value())
}

/// Main series of the expansion for `X < x < 2X`.
pub fn main_series(x: f64, big_x: f64, omega: &GapWidth, r2: &R2Table, cutoff: u64) -> Result<f64> {
    if !(big_x < x && x < 2.0 * big_x) {
        return Err(Error::Precondition(format!("x = {x} outside ({big_x}, {})", 2.0 * big_x)));
    }
    main_series_at(x, omega.eval(x), r2, cutoff)
}

/// Exact shell data next to the truncated expansion at one radius.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExpansionPoint {
    pub sample: ShellSample,
    /// `Ξ_ψ(x; ω)`.
    pub sawtooth: f64,
    pub main: f64,
    /// `main − 2x⁻² Ξ_ψ`.
    pub rhs: f64,
    /// `Ê − rhs`.
    pub residual: f64,
}

/// Evaluates both sides of the expansion with cutoff `⌊X²⌋`, using the effective
/// (grid-rounded) gap width on both sides.
pub fn expansion_point(x: RadiusPoint, big_x: f64, omega: &GapWidth, r2: &R2Table) -> Result<ExpansionPoint> {
    let xv = x.value();
    if !(big_x < xv && xv < 2.0 * big_x) {
        return Err(Error::Precondition(format!("x = {xv} outside ({big_x}, {})", 2.0 * big_x)));
    }
    let cutoff = (big_x * big_x).floor() as u64;
    let (sample, sawtooth) = shell_sample_with_sawtooth(x, omega, r2)?;
    let main = main_series_at(xv, sample.omega_x, r2, cutoff)?;
    let rhs = main - 2.0 * sawtooth / (xv * xv);
    let residual = sample.normalized - rhs;
    Ok(ExpansionPoint { sample, sawtooth, main, rhs, residual })
}

/// Right-hand side `main − 2x⁻² Ξ_ψ` of the expansion.
pub fn expansion_rhs(x: RadiusPoint, big_x: f64, omega: &GapWidth, r2: &R2Table) -> Result<f64> {
    expansion_point(x, big_x, omega, r2).map(|p| p.rhs)
}

/// A candidate relation `Σ eᵢ√mᵢ = 0`, grouped by square-free core.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ZeroRelation {
    pub signs: Vec<i8>,
    pub ms: Vec<u64>,
    /// core → `Σ eᵢkᵢ` over the terms `mᵢ = core·kᵢ²`.
    pub grouped: BTreeMap<u64, i64>,
}

impl ZeroRelation {
    pub fn new(signs: &[i8], ms: &[u64]) -> Result<Self> {
        if signs.len() != ms.len() {
            return Err(Error::Precondition(format!("{} signs for {} terms", signs.len(), ms.len())));
        }
        let mut grouped = BTreeMap::new();
        for (&e, &m) in signs.iter().zip(ms) {
            if e != 1 && e != -1 {
                return Err(Error::Domain(format!("sign {e} is not ±1")));
            }
            let d = squarefree_core(m)?;
            *grouped.entry(d.core).or_insert(0) += i64::from(e) * d.k as i64;
        }
        Ok(Self { signs: signs.to_vec(), ms: ms.to_vec(), grouped })
    }

    /// Square roots of distinct square-free integers are linearly independent over ℚ.
    pub fn holds(&self) -> bool {
        self.grouped.values().all(|&s| s == 0)
    }
}

/// Exact decision of `Σ eᵢ√mᵢ = 0`.
pub fn sum_sqrt_is_zero(signs: &[i8], ms: &[u64]) -> Result<bool> {
    if signs.len() != ms.len() {
        return Err(Error::Precondition(format!("{} signs for {} terms", signs.len(), ms.len())));
    }
    let mut stack = [(0u64, 0i64); 8];
    let mut heap = Vec::new();
    let terms: &mut [(u64, i64)] = if ms.len() <= stack.len() {
        &mut stack[..ms.len()]
    } else {
        heap.resize(ms.len(), (0, 0));
        &mut heap
    };
    for ((&e, &m), slot) in signs.iter().zip(ms).zip(terms.iter_mut()) {
        if e != 1 && e != -1 {
            return Err(Error::Domain(format!("sign {e} is not ±1")));
        }
        let d = squarefree_core(m)?;
        *slot = (d.core, i64::from(e) * d.k as i64);
    }
    terms.sort_unstable_by_key(|t| t.0);
    Ok(terms.chunk_by(|a, b| a.0 == b.0).all(|g| g.iter().map(|t| t.1).sum::<i64>() == 0))
}

/// Midpoints `X(1 + (i + ½)/S)` of `S` equal cells of `[X, 2X]`.
pub fn midpoint_grid(big_x: f64, samples: usize) -> Vec<f64> {
    (0..samples).map(|i| big_x * (1.0 + (i as f64 + 0.5) / samples as f64)).collect()
}

/// `(core, [(k, r₂(m)/m)])` for every square-free core.
type CoreGroups = Vec<(u64, Vec<(u64, f64)>)>;

/// Elements `m = core·k² ≤ Y` with `r₂(m) > 0`, grouped by core.
fn cores_upto(y: u64, r2: &R2Table, sieve: &FactorSieve) -> Result<CoreGroups> {
    let mut by_core: BTreeMap<u64, Vec<(u64, f64)>> = BTreeMap::new();
    for &(m, r) in r2.nonzero_upto(y) {
        if m == 0 {
            continue;
        }
        let d = sieve.squarefree_core(u64::from(m))?;
        by_core.entry(d.core).or_default().push((d.k, f64::from(r) / f64::from(m)));
    }
    Ok(by_core.into_iter().collect())
}

/// Truncated product of two power series in `t`.
fn series_mul(a: &[f64], b: &[f64]) -> Vec<f64> {
    let n = a.len();
    let mut out = vec![0.0; n];
    for (i, &x) in a.iter().enumerate() {
        if x == 0.0 {
            continue;
        }
        for (k, &y) in b.iter().enumerate().take(n - i) {
            out[i + k] += x * y;
        }
    }
    out
}

/// `Σ over j-tuples of signed terms (eᵢ, mᵢ ≤ Y) with Σ eᵢ√mᵢ = 0` of `Π eᵢ r₂(mᵢ)/mᵢ sin(π√mᵢ ω)`.
///
/// With `G_c(z) = Σ_k v(ck²)(z^k − z^{−k})` per core `c`, the sum is the joint constant term of
/// `(Σ_c G_c)^j`, i.e. `j! [t^j] Π_c Σ_ℓ CT(G_c^ℓ) t^ℓ/ℓ!`.
#[allow(clippy::needless_range_loop)]
fn diagonal_tuple_sum(cores: &[(u64, Vec<(u64, f64)>)], omega: f64, j: usize) -> f64 {
    let mut total = vec![0.0; j + 1];
    total[0] = 1.0;
    for (core, terms) in cores {
        let kmax = terms.last().map_or(0, |t| t.0) as usize;
        // Laurent coefficients at offset kmax.
        let mut g = vec![0.0; 2 * kmax + 1];
        let root = (*core as f64).sqrt();
        for &(k, amp) in terms {
            let v = amp * sin_pi(root * k as f64 * omega);
            g[kmax + k as usize] += v;
            g[kmax - k as usize] -= v;
        }
        let mut egf = vec![0.0; j + 1];
        egf[0] = 1.0;
        let mut power = vec![1.0];
        let mut factorial = 1.0;
        for l in 1..=j {
            let mut next = vec![0.0; power.len() + g.len() - 1];
            for (i, &p) in power.iter().enumerate() {
                if p == 0.0 {
                    continue;
                }
                for (k, &q) in g.iter().enumerate() {
                    next[i + k] += p * q;
                }
            }
            power = next;
            factorial *= l as f64;
            // G_c is antisymmetric under z ↦ 1/z, so odd powers have zero constant term.
            if l % 2 == 0 {
                egf[l] = power[power.len() / 2] / factorial;
            }
        }
        total = series_mul(&total, &egf);
    }
    let j_factorial: f64 = (1..=j).map(|v| v as f64).product();
    j_factorial * total[j]
}

/// `(−1)^{j/2}(√2/π)^j` times the grid average over `[X, 2X]` of the zero-relation tuple sum.
pub fn diagonal_sum(omega: &GapWidth, big_x: f64, j: u32, y: u64, samples: usize, r2: &R2Table) -> Result<f64> {
    if j == 0 || j % 2 == 1 || j > DIAGONAL_MAX_J {
        return Err(Error::Limit(format!("diagonal sums implemented for even 2 ≤ j ≤ {DIAGONAL_MAX_J}, got {j}")));
    }
    if y > DIAGONAL_MAX_Y {
        return Err(Error::Limit(format!("Y = {y} exceeds {DIAGONAL_MAX_Y}")));
    }
    if samples == 0 {
        return Err(Error::Precondition("at least one grid sample is required".into()));
    }
    r2.require(y)?;
    let sieve = FactorSieve::new(y.max(1))?;
    let cores = cores_upto(y, r2, &sieve)?;
    let values: Vec<f64> = midpoint_grid(big_x, samples)
        .into_iter()
        .map(|x| diagonal_tuple_sum(&cores, omega.eval(x), j as usize))
        .collect();
    let sign = if (j / 2).is_multiple_of(2) { 1.0 } else { -1.0 };
    Ok(sign * (SQRT_2 / PI).powi(j as i32) * cmean(&values))
}

/// `2^{2j} j!/(j/2)!`, the constant relating the diagonal sum to `𝓜_j`.
pub fn diagonal_constant(j: u32) -> f64 {
    let fact = |n: u32| (1..=n).map(f64::from).product::<f64>();
    2f64.powi(2 * j as i32) * fact(j) / fact(j / 2)
}

/// Both sides of the square-free regrouping at `j = 2` for one value of `ω`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RegroupingCheck {
    /// `Σ_{m ≤ Y square-free} 𝒫(x; m, 2, √(Y/m))`, enumerated literally.
    pub grouped: f64,
    /// `−2 Σ_{n ≤ Y} r₂²(n)/n² sin²(π√n ω)`.
    pub direct: f64,
}

impl RegroupingCheck {
    pub fn relative_gap(&self) -> f64 {
        (self.grouped - self.direct).abs() / self.direct.abs().max(f64::MIN_POSITIVE)
    }
}

pub fn regrouping_check(omega: f64, y: u64, r2: &R2Table) -> Result<RegroupingCheck> {
    r2.require(y)?;
    let sieve = FactorSieve::new(y.max(1))?;
    let mut grouped = CompensatedSum::new();
    for m in 1..=y {
        if sieve.mobius(m)? == 0 {
            continue;
        }
        let kmax = ((y / m) as f64).sqrt().floor() as u64;
        let root = (m as f64).sqrt();
        let term = |k: u64| {
            let n = m * k * k;
            let r = f64::from(r2.get(n).expect("n ≤ Y"));
            r / n as f64 * sin_pi(root * k as f64 * omega)
        };
        for e1 in [-1i64, 1] {
            for e2 in [-1i64, 1] {
                for k1 in 1..=kmax {
                    for k2 in 1..=kmax {
                        if e1 * k1 as i64 + e2 * k2 as i64 == 0 {
                            grouped.add((e1 * e2) as f64 * term(k1) * term(k2));
                        }
                    }
                }
            }
        }
    }
    let mut direct = CompensatedSum::new();
    for n in 1..=y {
        let r = f64::from(r2.get(n).expect("n ≤ Y"));
        let s = sin_pi((n as f64).sqrt() * omega);
        direct.add(r * r / (n * n) as f64 * s * s);
    }
    Ok(RegroupingCheck { grouped: grouped.value(), direct: -2.0 * direct.value() })
}

/// `Σ_{1 ≤ n ≤ y} r₂²(n) / (4y log y)`.
pub fn r2_squared_partial_sum_check(y: u64, r2: &R2Table) -> Result<f64> {
    if y < 2 {
        return Err(Error::Domain(format!("y = {y} must be ≥ 2")));
    }
    r2.require(y)?;
    let sum: u64 = r2.values()[1..=y as usize].iter().map(|&v| u64::from(v) * u64::from(v)).sum();
    Ok(sum as f64 / (4.0 * y as f64 * (y as f64).ln()))
}
