//! Exact lattice-point counts in shrinking Cygan–Korányi spherical shells of
//! the Heisenberg group, the Voronoï-type expansion of their normalised error,
//! and the moment and distribution statistics of that error.
//!
//! Gap widths `ω` are either slowly varying (Gaussian limit) or almost-periodic
//! products/sums of `|p(e^{2πit})|²` (Gaussian-mixture limits).

// `!(a > b)` is deliberate throughout: NaN must fail every guard.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod arith;
pub mod counting;
pub mod error;
pub mod gapwidth;
pub mod numeric;
pub mod spectra;
pub mod stats;
pub mod voronoi;

pub use arith::{build_r2, isqrt, mobius, squarefree_core, CoreDecomposition, R2Table};
pub use counting::{
    ball_volume, count_ball_brute, count_ball_fast, sawtooth_shell_sum, shell_sample, RadiusPoint, ShellSample,
};
pub use error::{Error, Result};
pub use gapwidth::{
    make_almost_periodic, make_slowly_varying, omega_diagnostics, AlmostPeriodicGap, GapKind, GapSpec, GapWidth,
    OmegaDiagnostics, SlowKind,
};
pub use spectra::{
    constrained_frequency_sum, construction_moment, density_eval, density_moment, l_j, phi_from_poly, phi_moment,
    predicted_moment, CombineMode, DensitySpec, FrequencyVector, MomentModel, TrigPolyModulus,
};
pub use stats::{
    empirical_moments, ks_distance, m_j, mixture_cdf, sample_errors, variance_sigma2, EmpiricalDistribution,
    SampleGrid, SampleMode,
};
pub use voronoi::{
    diagonal_sum, expansion_rhs, main_series, r2_squared_partial_sum_check, sum_sqrt_is_zero, ExpansionTerm,
    ZeroRelation,
};
