//! Gap-width functions `ω` with analytic first and second derivatives, the
//! built-in slowly varying families, the almost-periodic product/sum
//! constructions, and numerical regularity diagnostics.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{gaussian_moment, ls_slope};
use crate::spectra::{phi_from_poly, CombineMode};
use crate::stats;

/// Lower end of the domain on which every built-in gap width is positive and below 1.
pub const DEFAULT_X_MIN: f64 = 3.0;

/// Grid size for the no-roots-on-the-unit-circle surrogate check.
pub const CIRCLE_GRID: usize = 4096;
/// `|p|²` must exceed this on the surrogate grid.
pub const CIRCLE_FLOOR: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SlowKind {
    /// `1 / log log x`
    InvLoglog,
    /// `1 / log x`
    InvLog,
    /// `exp(−√log x)`
    ExpNegSqrtLog,
}

impl SlowKind {
    pub fn name(self) -> &'static str {
        match self {
            SlowKind::InvLoglog => "inv_loglog",
            SlowKind::InvLog => "inv_log",
            SlowKind::ExpNegSqrtLog => "exp_neg_sqrt_log",
        }
    }

    fn eval(self, x: f64) -> f64 {
        let l = x.ln();
        match self {
            SlowKind::InvLoglog => 1.0 / l.ln(),
            SlowKind::InvLog => 1.0 / l,
            SlowKind::ExpNegSqrtLog => (-l.sqrt()).exp(),
        }
    }

    fn d1(self, x: f64) -> f64 {
        let l = x.ln();
        match self {
            SlowKind::InvLoglog => {
                let ll = l.ln();
                -1.0 / (x * l * ll * ll)
            }
            SlowKind::InvLog => -1.0 / (x * l * l),
            SlowKind::ExpNegSqrtLog => {
                let r = l.sqrt();
                -(-r).exp() / (2.0 * r * x)
            }
        }
    }

    fn d2(self, x: f64) -> f64 {
        let l = x.ln();
        let x2 = x * x;
        match self {
            SlowKind::InvLoglog => {
                let ll = l.ln();
                (2.0 / ll + l + 1.0) / (ll * ll * x2 * l * l)
            }
            SlowKind::InvLog => (l + 2.0) / (x2 * l * l * l),
            SlowKind::ExpNegSqrtLog => {
                let r = l.sqrt();
                (-r).exp() * (1.0 + 1.0 / r + 2.0 * r) / (4.0 * r * r * x2)
            }
        }
    }
}

/// Parameters of the almost-periodic constructions
/// `ω(x) = F(λ₁ (log x)^A, …, λ_n (log x)^A) · (log x)^{−A}` where `F` is the
/// product (or sum) of `φ_ℓ(t) = |p_ℓ(e^{2πit})|²`.
#[derive(Debug, Clone, PartialEq)]
pub struct AlmostPeriodicGap {
    /// Coefficients of each `p_ℓ`, constant term first.
    pub polys: Vec<Vec<Complex64>>,
    pub lambdas: Vec<f64>,
    /// Caller's assertion that the `λ_ℓ` are linearly independent over ℤ.
    pub independent: bool,
    pub a_exp: u32,
    pub mode: CombineMode,
    /// Skip the no-roots-on-the-circle check (e.g. `p = 1 + z`).
    pub allow_circle_roots: bool,
}

impl AlmostPeriodicGap {
    /// Minimum of `|p(e^{2πit})|²` over the surrogate grid.
    pub fn circle_minimum(poly: &[Complex64]) -> f64 {
        (0..CIRCLE_GRID)
            .map(|i| poly_on_circle(poly, i as f64 / CIRCLE_GRID as f64).norm_sqr())
            .fold(f64::INFINITY, f64::min)
    }

    pub fn validate(&self) -> Result<()> {
        if self.a_exp < 2 {
            return Err(Error::Construction(format!("exponent A = {} must be ≥ 2", self.a_exp)));
        }
        if self.polys.is_empty() {
            return Err(Error::Construction("at least one polynomial is required".into()));
        }
        if self.polys.len() != self.lambdas.len() {
            return Err(Error::Construction(format!(
                "{} polynomials but {} frequencies",
                self.polys.len(),
                self.lambdas.len()
            )));
        }
        if self.lambdas.iter().any(|l| !l.is_finite()) {
            return Err(Error::Construction("frequencies must be finite".into()));
        }
        for (i, p) in self.polys.iter().enumerate() {
            if p.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
                return Err(Error::Construction(format!("polynomial {i} has non-finite coefficients")));
            }
            if p.iter().all(|c| c.norm_sqr() == 0.0) {
                return Err(Error::Construction(format!("polynomial {i} is identically zero")));
            }
            if !self.allow_circle_roots {
                let min = Self::circle_minimum(p);
                if min <= CIRCLE_FLOOR {
                    return Err(Error::Construction(format!(
                        "polynomial {i} (numerically) vanishes on the unit circle: min |p|² = {min:e}"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Whether frequency-vector sums may be tested as integer vectors.
    pub fn lambdas_independent(&self) -> bool {
        self.independent || (self.lambdas.len() == 1 && self.lambdas[0] != 0.0)
    }
}

fn poly_on_circle(poly: &[Complex64], t: f64) -> Complex64 {
    let z = Complex64::from_polar(1.0, 2.0 * PI * t);
    poly.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, &c| acc * z + c)
}

/// `e^{2πi θ}` with `θ` reduced modulo 1.
fn cis_turns(theta: f64) -> Complex64 {
    Complex64::from_polar(1.0, 2.0 * PI * theta.rem_euclid(1.0))
}

#[derive(Debug, Clone)]
struct CompiledAlmostPeriodic {
    spec: AlmostPeriodicGap,
    /// Fourier representation `Σ 𝔞_f e^{2πi f t}` of the inner trigonometric polynomial.
    terms: Vec<(f64, Complex64)>,
}

impl CompiledAlmostPeriodic {
    fn new(spec: AlmostPeriodicGap) -> Result<Self> {
        spec.validate()?;
        let phis = spec.polys.iter().map(|p| phi_from_poly(p)).collect::<Result<Vec<_>>>()?;
        let mut terms = Vec::new();
        match spec.mode {
            CombineMode::Sum => {
                for (phi, &lam) in phis.iter().zip(&spec.lambdas) {
                    for (m, c) in phi.float_terms() {
                        terms.push((m as f64 * lam, c));
                    }
                }
            }
            CombineMode::Product => {
                terms.push((0.0, Complex64::new(1.0, 0.0)));
                for (phi, &lam) in phis.iter().zip(&spec.lambdas) {
                    let mut next = Vec::with_capacity(terms.len() * (2 * phi.degree() + 1));
                    for &(f, a) in &terms {
                        for (m, c) in phi.float_terms() {
                            next.push((f + m as f64 * lam, a * c));
                        }
                    }
                    terms = next;
                }
            }
        }
        Ok(Self { spec, terms })
    }

    fn inner_direct(&self, t: f64) -> f64 {
        let vals = self
            .spec
            .polys
            .iter()
            .zip(&self.spec.lambdas)
            .map(|(p, &lam)| poly_on_circle(p, (lam * t).rem_euclid(1.0)).norm_sqr());
        match self.spec.mode {
            CombineMode::Product => vals.product(),
            CombineMode::Sum => vals.sum(),
        }
    }

    fn eval(&self, x: f64) -> f64 {
        let u = x.ln();
        let ua = u.powi(self.spec.a_exp as i32);
        self.inner_direct(ua) / ua
    }

    fn eval_fourier(&self, x: f64) -> Complex64 {
        let u = x.ln();
        let ua = u.powi(self.spec.a_exp as i32);
        let s: Complex64 = self.terms.iter().map(|&(f, a)| a * cis_turns(f * ua)).sum();
        s / ua
    }

    fn d1_complex(&self, x: f64) -> Complex64 {
        let a = f64::from(self.spec.a_exp);
        let u = x.ln();
        let ua = u.powi(self.spec.a_exp as i32);
        let s: Complex64 =
            self.terms.iter().map(|&(f, c)| (Complex64::new(-1.0, 2.0 * PI * f * ua)) * c * cis_turns(f * ua)).sum();
        s * (a / (x * ua * u))
    }

    fn d2_complex(&self, x: f64) -> Complex64 {
        let a = f64::from(self.spec.a_exp);
        let u = x.ln();
        let ua = u.powi(self.spec.a_exp as i32);
        let s: Complex64 = self
            .terms
            .iter()
            .map(|&(f, c)| {
                let w = 2.0 * PI * f;
                let h = Complex64::new(-1.0, w * ua);
                (h * (a + 1.0 + u) + a * w * w * ua * ua) * c * cis_turns(f * ua)
            })
            .sum();
        s * (-a / (x * x * ua * u * u))
    }
}

#[derive(Debug, Clone)]
enum Shape {
    Slow(SlowKind),
    AlmostPeriodic(Box<CompiledAlmostPeriodic>),
    /// Degenerate constant width (tests and exactly representable shells).
    Constant(f64),
}

/// An evaluatable gap width `ω` with first and second derivatives.
#[derive(Debug, Clone)]
pub struct GapWidth {
    name: String,
    shape: Shape,
    x_min: f64,
}

impl GapWidth {
    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn x_min(&self) -> f64 {
        self.x_min
    }

    pub fn eval(&self, x: f64) -> f64 {
        match &self.shape {
            Shape::Slow(k) => k.eval(x),
            Shape::AlmostPeriodic(ap) => ap.eval(x),
            Shape::Constant(c) => *c,
        }
    }

    pub fn d1(&self, x: f64) -> f64 {
        match &self.shape {
            Shape::Slow(k) => k.d1(x),
            Shape::AlmostPeriodic(ap) => ap.d1_complex(x).re,
            Shape::Constant(_) => 0.0,
        }
    }

    pub fn d2(&self, x: f64) -> f64 {
        match &self.shape {
            Shape::Slow(k) => k.d2(x),
            Shape::AlmostPeriodic(ap) => ap.d2_complex(x).re,
            Shape::Constant(_) => 0.0,
        }
    }

    /// `ω(x)` from the Fourier representation (complex; the imaginary part is round-off).
    /// `None` unless `ω` is an almost-periodic construction.
    pub fn eval_fourier(&self, x: f64) -> Option<Complex64> {
        match &self.shape {
            Shape::AlmostPeriodic(ap) => Some(ap.eval_fourier(x)),
            _ => None,
        }
    }

    /// Complex `(ω′, ω″)` from the Fourier representation, for almost-periodic widths.
    pub fn derivatives_fourier(&self, x: f64) -> Option<(Complex64, Complex64)> {
        match &self.shape {
            Shape::AlmostPeriodic(ap) => Some((ap.d1_complex(x), ap.d2_complex(x))),
            _ => None,
        }
    }

    pub fn almost_periodic(&self) -> Option<&AlmostPeriodicGap> {
        match &self.shape {
            Shape::AlmostPeriodic(ap) => Some(&ap.spec),
            _ => None,
        }
    }

    pub fn is_slowly_varying(&self) -> bool {
        matches!(self.shape, Shape::Slow(_))
    }

    /// Constant width `c ≥ 0`. `c = 0` is allowed as a degenerate test case.
    pub fn constant(c: f64) -> Result<Self> {
        if !(c.is_finite() && c >= 0.0) {
            return Err(Error::Construction(format!("constant width must be finite and ≥ 0, got {c}")));
        }
        Ok(Self { name: format!("const({c})"), shape: Shape::Constant(c), x_min: 0.0 })
    }

    pub fn from_spec(spec: &GapSpec) -> Result<Self> {
        match spec.kind {
            GapKind::InvLog => Ok(make_slowly_varying(SlowKind::InvLog)),
            GapKind::InvLoglog => Ok(make_slowly_varying(SlowKind::InvLoglog)),
            GapKind::ExpNegSqrtLog => Ok(make_slowly_varying(SlowKind::ExpNegSqrtLog)),
            GapKind::Product | GapKind::Sum => make_almost_periodic(spec.almost_periodic()?),
        }
    }
}

pub fn make_slowly_varying(kind: SlowKind) -> GapWidth {
    GapWidth { name: kind.name().to_string(), shape: Shape::Slow(kind), x_min: DEFAULT_X_MIN }
}

pub fn make_almost_periodic(spec: AlmostPeriodicGap) -> Result<GapWidth> {
    let name = match spec.mode {
        CombineMode::Product => "omega_product",
        CombineMode::Sum => "omega_sum",
    };
    let compiled = CompiledAlmostPeriodic::new(spec)?;
    Ok(GapWidth { name: name.to_string(), shape: Shape::AlmostPeriodic(Box::new(compiled)), x_min: DEFAULT_X_MIN })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GapKind {
    InvLog,
    InvLoglog,
    ExpNegSqrtLog,
    Product,
    Sum,
}

impl GapKind {
    pub fn parse(name: &str) -> Option<Self> {
        match name {
            "inv_log" => Some(Self::InvLog),
            "inv_loglog" => Some(Self::InvLoglog),
            "exp_neg_sqrt_log" => Some(Self::ExpNegSqrtLog),
            "product" => Some(Self::Product),
            "sum" => Some(Self::Sum),
            _ => None,
        }
    }
}

/// JSON description of a gap width, shared with density construction.
///
/// `{"kind": ..., "polys": [[[re, im], ...], ...], "lambdas": [...], "independent": bool, "A": int}`
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapSpec {
    pub kind: GapKind,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub polys: Vec<Vec<[f64; 2]>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub lambdas: Vec<f64>,
    #[serde(default)]
    pub independent: bool,
    #[serde(rename = "A", default, skip_serializing_if = "Option::is_none")]
    pub a_exp: Option<u32>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub allow_circle_roots: bool,
}

impl GapSpec {
    pub fn slowly_varying(kind: SlowKind) -> Self {
        let kind = match kind {
            SlowKind::InvLog => GapKind::InvLog,
            SlowKind::InvLoglog => GapKind::InvLoglog,
            SlowKind::ExpNegSqrtLog => GapKind::ExpNegSqrtLog,
        };
        Self {
            kind,
            polys: Vec::new(),
            lambdas: Vec::new(),
            independent: false,
            a_exp: None,
            allow_circle_roots: false,
        }
    }

    pub fn mode(&self) -> Option<CombineMode> {
        match self.kind {
            GapKind::Product => Some(CombineMode::Product),
            GapKind::Sum => Some(CombineMode::Sum),
            _ => None,
        }
    }

    pub fn almost_periodic(&self) -> Result<AlmostPeriodicGap> {
        let mode = self.mode().ok_or_else(|| {
            Error::Construction(format!("kind {:?} is not an almost-periodic construction", self.kind))
        })?;
        let a_exp =
            self.a_exp.ok_or_else(|| Error::Construction("almost-periodic spec needs an exponent \"A\"".into()))?;
        let polys = self.polys.iter().map(|p| p.iter().map(|&[re, im]| Complex64::new(re, im)).collect()).collect();
        let spec = AlmostPeriodicGap {
            polys,
            lambdas: self.lambdas.clone(),
            independent: self.independent,
            a_exp,
            mode,
            allow_circle_roots: self.allow_circle_roots,
        };
        Ok(spec)
    }
}

/// Numerical regularity diagnostics of a gap width on `[X, 2X]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OmegaDiagnostics {
    #[serde(rename = "X")]
    pub x: f64,
    /// Sign changes of `ω′` on the scan grid.
    pub u_count: u64,
    /// Sign changes of `ω″` on the scan grid.
    pub v_count: u64,
    pub max_omega: f64,
    /// `u_count · max ω / √X`.
    pub cond3a_ratio: f64,
    pub m2: f64,
    /// Fitted slope of `log 𝓜₂` against `log X` over `X, 2X, 4X, 8X`.
    pub tau_estimate: f64,
    /// `𝓜_j / 𝓜₂^{j/2}` for even `j ∈ {2, …, 8}`.
    pub lj_estimates: BTreeMap<u32, f64>,
    /// Partial sums of `𝔪_j^{−1/j}` over even `j = 2, 4, …, 40`, with `𝔪_j` from the estimated ratios.
    pub carleman_partial_sums: Vec<f64>,
    /// `true` when `ω > 0` and `|ω′| < 1/2` held at every scan point.
    pub conditions_1_2_sampled: bool,
}

fn sign_changes(values: &[f64]) -> u64 {
    let mut count = 0;
    let mut prev = 0.0f64;
    for &v in values {
        if v == 0.0 {
            continue;
        }
        if prev != 0.0 && (v > 0.0) != (prev > 0.0) {
            count += 1;
        }
        prev = v;
    }
    count
}

/// Scan `ω` on `[X, 2X]` and report sampled regularity diagnostics.
pub fn omega_diagnostics(omega: &GapWidth, x: f64, scan_points: usize) -> Result<OmegaDiagnostics> {
    if !(x >= omega.x_min()) {
        return Err(Error::Precondition(format!("X = {x} below x_min = {}", omega.x_min())));
    }
    if scan_points < 1000 {
        return Err(Error::Precondition(format!("scan_points = {scan_points} < 1000")));
    }
    let n = scan_points;
    let mut d1s = Vec::with_capacity(n);
    let mut d2s = Vec::with_capacity(n);
    let mut max_omega = f64::NEG_INFINITY;
    let mut cond12 = true;
    for i in 0..n {
        let xi = x + x * i as f64 / (n - 1) as f64;
        let w = omega.eval(xi);
        let a = omega.d1(xi);
        let b = omega.d2(xi);
        for (what, v) in [("omega", w), ("omega'", a), ("omega''", b)] {
            if !v.is_finite() {
                return Err(Error::Diagnostic { what, x: xi });
            }
        }
        cond12 &= w > 0.0 && a.abs() < 0.5;
        max_omega = max_omega.max(w);
        d1s.push(a);
        d2s.push(b);
    }
    let u_count = sign_changes(&d1s);
    let v_count = sign_changes(&d2s);

    let m2 = stats::m_j(omega, x, n, 2)?;
    let mut lj_estimates = BTreeMap::new();
    let mut carleman = Vec::new();
    let mut partial = 0.0;
    for j in (2..=40u32).step_by(2) {
        let ratio = stats::m_j(omega, x, n, j)? / m2.powi(j as i32 / 2);
        if j <= 8 {
            lj_estimates.insert(j, ratio);
        }
        let moment = gaussian_moment(j) as f64 * ratio;
        partial += moment.powf(-1.0 / f64::from(j));
        carleman.push(partial);
    }

    let xs: Vec<f64> = (0..4).map(|k| (x * f64::from(1 << k)).ln()).collect();
    let ys = (0..4).map(|k| stats::m_j(omega, x * f64::from(1 << k), n, 2).map(f64::ln)).collect::<Result<Vec<_>>>()?;
    let tau_estimate = ls_slope(&xs, &ys);

    Ok(OmegaDiagnostics {
        x,
        u_count,
        v_count,
        max_omega,
        cond3a_ratio: u_count as f64 * max_omega / x.sqrt(),
        m2,
        tau_estimate,
        lj_estimates,
        carleman_partial_sums: carleman,
        conditions_1_2_sampled: cond12,
    })
}
