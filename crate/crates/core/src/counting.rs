//! Exact lattice counts in Cygan–Korányi balls `δ_x 𝓑 = {(a,b,c) : (a²+b²)² + c² ≤ x⁴}`
//! and shells, their error terms, and the exact sawtooth sum `Ξ_ψ`.
//!
//! Radii are rationals `k/Q`. The kernel computes `F = ⌊x⁴⌋` and `{x⁴}` once per
//! radius in big-integer arithmetic; every slice `m = a² + b²` then needs only
//! `⌊√(F − m²)⌋`, which equals `⌊√(x⁴ − m²)⌋` because `F − m²` is an integer.

use std::f64::consts::PI;

use num_bigint::BigUint;
use num_traits::{ToPrimitive, Zero};
use serde::Serialize;

use crate::arith::{isqrt_u64, R2Table};
use crate::error::{Error, Result};
use crate::gapwidth::GapWidth;
use crate::numeric::CompensatedSum;

/// Outer radii are rounded to multiples of `1/(Q·2^REFINE_BITS)`.
pub const REFINE_BITS: u32 = 16;

/// `⌊x⁴⌋` must stay below this so that every `m² ≤ x⁴` and every count fits in 64 bits.
pub const QUARTIC_CAP: u64 = 1 << 60;

/// Largest radius accepted by [`count_ball_brute`].
pub const BRUTE_MAX_RADIUS: f64 = 60.0;

/// Euclidean volume `π²/2` of the unit Cygan–Korányi ball.
pub fn ball_volume() -> f64 {
    PI * PI / 2.0
}

/// `vol(𝓑)·((x+ω)⁴ − x⁴)` expanded as `Σ_{j=1..4} C(4,j) x^{4−j} ω^j`.
pub fn shell_volume(x: f64, omega: f64) -> f64 {
    let poly = omega * (4.0 * x * x * x + omega * (6.0 * x * x + omega * (4.0 * x + omega)));
    ball_volume() * poly
}

/// A positive rational radius `k/Q`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct RadiusPoint {
    pub k: u64,
    pub q: u64,
}

impl RadiusPoint {
    pub fn new(k: u64, q: u64) -> Result<Self> {
        if k == 0 || q == 0 {
            return Err(Error::Domain(format!("radius {k}/{q} must have k, Q ≥ 1")));
        }
        Ok(Self { k, q })
    }

    /// `round(v·Q)/Q`.
    pub fn nearest(v: f64, q: u64) -> Result<Self> {
        let k = (v * q as f64).round();
        if !(k >= 1.0 && k < 2f64.powi(63)) {
            return Err(Error::Domain(format!("cannot represent radius {v} with denominator {q}")));
        }
        Self::new(k as u64, q)
    }

    /// Parses `"k/Q"` or a bare integer `"k"`.
    pub fn parse(s: &str) -> Result<Self> {
        let bad = || Error::Domain(format!("malformed radius {s:?}; expected k/Q"));
        let (k, q) = match s.split_once('/') {
            Some((k, q)) => (k.trim().parse().map_err(|_| bad())?, q.trim().parse().map_err(|_| bad())?),
            None => (s.trim().parse().map_err(|_| bad())?, 1),
        };
        Self::new(k, q)
    }

    pub fn value(&self) -> f64 {
        self.k as f64 / self.q as f64
    }

    /// `x + δ/(Q·2^REFINE_BITS)` on the refined denominator.
    fn refined_plus(&self, delta: u64) -> Result<Self> {
        let scale = 1u64 << REFINE_BITS;
        let overflow = || Error::Range(format!("refined radius of {}/{} overflows", self.k, self.q));
        let k = self.k.checked_mul(scale).and_then(|k| k.checked_add(delta)).ok_or_else(overflow)?;
        let q = self.q.checked_mul(scale).ok_or_else(overflow)?;
        Self::new(k, q)
    }
}

impl std::fmt::Display for RadiusPoint {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}/{}", self.k, self.q)
    }
}

/// `x⁴ = floor + frac` with `floor < QUARTIC_CAP`.
#[derive(Debug, Clone, Copy)]
struct Quartic {
    floor: u64,
    frac: f64,
}

impl Quartic {
    fn of(x: RadiusPoint) -> Result<Self> {
        let k4 = BigUint::from(x.k).pow(4);
        let q4 = BigUint::from(x.q).pow(4);
        let floor = (&k4 / &q4)
            .to_u64()
            .filter(|&f| f < QUARTIC_CAP)
            .ok_or_else(|| Error::Range(format!("radius {x} too large: ⌊x⁴⌋ must stay below 2^60")))?;
        let rem = &k4 % &q4;
        let frac = if rem.is_zero() {
            0.0
        } else {
            // rem < q4, so the ratio is in (0, 1) even after rounding both to f64.
            (rem.to_f64().unwrap_or(f64::MAX) / q4.to_f64().unwrap_or(f64::MAX)).min(1.0 - f64::EPSILON)
        };
        Ok(Self { floor, frac })
    }

    /// `⌊x²⌋ = ⌊√⌊x⁴⌋⌋`.
    fn m_max(&self) -> u64 {
        isqrt_u64(self.floor)
    }
}

/// `ψ(√(D + frac))` with `D` a nonnegative integer and `s = ⌊√D⌋`; exactly `−½` at integer arguments.
#[inline]
fn psi_of_sqrt(d: u64, s: u64, frac: f64) -> f64 {
    let rem = d - s * s;
    if rem == 0 && frac == 0.0 {
        return -0.5;
    }
    let t = (d as f64 + frac).sqrt();
    (rem as f64 + frac) / (t + s as f64) - 0.5
}

/// `(N(x), Σ_{m ≤ x²} r₂(m) ψ(√(x⁴ − m²)))`; the ψ-sum is skipped (0) unless requested.
fn ball_sums(x: RadiusPoint, r2: &R2Table, with_psi: bool) -> Result<(u64, f64)> {
    let quartic = Quartic::of(x)?;
    let m_max = quartic.m_max();
    r2.require(m_max)?;
    let mut count: u128 = 0;
    let mut psi = CompensatedSum::new();
    for &(m, r) in r2.nonzero_upto(m_max) {
        let m = u64::from(m);
        let d = quartic.floor - m * m;
        let s = isqrt_u64(d);
        count += u128::from(r) * u128::from(2 * s + 1);
        if with_psi {
            psi.add(f64::from(r) * psi_of_sqrt(d, s, quartic.frac));
        }
    }
    let count = u64::try_from(count).map_err(|_| Error::Range(format!("count at {x} exceeds 64 bits")))?;
    Ok((count, psi.value()))
}

/// `N(x)` as `Σ_{m ≤ x²} r₂(m)(2⌊√(x⁴ − m²)⌋ + 1)`.
pub fn count_ball_fast(x: RadiusPoint, r2: &R2Table) -> Result<u64> {
    ball_sums(x, r2, false).map(|(n, _)| n)
}

/// `Σ_{m ≤ x²} r₂(m) ψ(√(x⁴ − m²))` for a single ball.
pub fn ball_sawtooth_sum(x: RadiusPoint, r2: &R2Table) -> Result<f64> {
    ball_sums(x, r2, true).map(|(_, s)| s)
}

/// `N(x)` by exhaustive enumeration of `(a, b, c)` with `Q⁴((a²+b²)² + c²) ≤ k⁴`.
pub fn count_ball_brute(x: RadiusPoint) -> Result<u64> {
    if x.value() > BRUTE_MAX_RADIUS {
        return Err(Error::Limit(format!("brute force limited to x ≤ {BRUTE_MAX_RADIUS}, got {x}")));
    }
    let overflow = || Error::Range(format!("brute-force comparison at {x} overflows 128 bits"));
    let k4 = u128::from(x.k).checked_pow(4).ok_or_else(overflow)?;
    let q4 = u128::from(x.q).checked_pow(4).ok_or_else(overflow)?;
    let ab = (x.value().ceil() as i64) + 1;
    let cb = (x.value() * x.value()).ceil() as i64 + 1;
    let mut count = 0u64;
    for a in -ab..=ab {
        for b in -ab..=ab {
            let n = (a * a + b * b) as u128;
            for c in -cb..=cb {
                let lhs = (n * n + (c * c) as u128).checked_mul(q4).ok_or_else(overflow)?;
                if lhs <= k4 {
                    count += 1;
                }
            }
        }
    }
    Ok(count)
}

/// Exact shell count and error terms at one radius.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ShellSample {
    pub x: f64,
    /// Effective gap width `x_hi − x` after rounding `x + ω(x)` to the refined grid.
    pub omega_x: f64,
    pub n_inner: u64,
    pub n_outer: u64,
    pub shell_count: u64,
    pub error: f64,
    pub normalized: f64,
}

impl ShellSample {
    /// `𝓔` recomputed from the stored fields.
    pub fn recomputed_error(&self) -> f64 {
        self.shell_count as f64 - shell_volume(self.x, self.omega_x)
    }
}

/// Outer radius `x + ω(x)` rounded to the nearest multiple of `1/(Q·2^REFINE_BITS)`.
pub fn outer_radius(x: RadiusPoint, omega: f64) -> Result<RadiusPoint> {
    if !(omega.is_finite() && omega >= 0.0) {
        return Err(Error::Domain(format!("gap width ω({x}) = {omega} must be finite and ≥ 0")));
    }
    let scaled = (omega * x.q as f64 * f64::from(1u32 << REFINE_BITS)).round();
    if scaled >= 2f64.powi(62) {
        return Err(Error::Range(format!("gap width {omega} too large at {x}")));
    }
    x.refined_plus(scaled as u64)
}

fn shell_parts(x: RadiusPoint, omega: &GapWidth, r2: &R2Table, with_psi: bool) -> Result<(ShellSample, f64)> {
    let xv = x.value();
    let w = omega.eval(xv);
    if !(w > 0.0) {
        return Err(Error::Domain(format!("ω({xv}) = {w} is not positive")));
    }
    let hi = outer_radius(x, w)?;
    let (n_outer, psi_outer) = ball_sums(hi, r2, with_psi)?;
    let (n_inner, psi_inner) = ball_sums(x, r2, with_psi)?;
    let omega_x = hi.value() - xv;
    let shell_count = n_outer - n_inner;
    let error = shell_count as f64 - shell_volume(xv, omega_x);
    let sample = ShellSample { x: xv, omega_x, n_inner, n_outer, shell_count, error, normalized: error / (xv * xv) };
    Ok((sample, psi_outer - psi_inner))
}

/// `N(x; ω)`, `𝓔(x; ω)` and `Ê(x; ω) = 𝓔/x²` with the outer radius on the refined grid.
pub fn shell_sample(x: RadiusPoint, omega: &GapWidth, r2: &R2Table) -> Result<ShellSample> {
    shell_parts(x, omega, r2, false).map(|(s, _)| s)
}

/// Shell sample together with `Ξ_ψ(x; ω)`, sharing one pass over each ball.
pub fn shell_sample_with_sawtooth(x: RadiusPoint, omega: &GapWidth, r2: &R2Table) -> Result<(ShellSample, f64)> {
    shell_parts(x, omega, r2, true)
}

/// `Ξ_ψ(x; ω)`: the difference of the ψ-sums of the outer and inner balls.
///
/// `ω(x) = 0` is allowed and yields exactly 0.
pub fn sawtooth_shell_sum(x: RadiusPoint, omega: &GapWidth, r2: &R2Table) -> Result<f64> {
    let hi = outer_radius(x, omega.eval(x.value()))?;
    if hi.value() == x.value() {
        return Ok(0.0);
    }
    Ok(ball_sawtooth_sum(hi, r2)? - ball_sawtooth_sum(x, r2)?)
}
