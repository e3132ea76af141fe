use std::f64::consts::PI;

use cygshell::counting::shell_volume;
use cygshell::numeric::gaussian_moment;
use cygshell::spectra::{rational_to_f64, DEFAULT_QUAD_POINTS};
use cygshell::voronoi::{diagonal_constant, regrouping_check};
use cygshell::{
    ball_volume, build_r2, count_ball_brute, count_ball_fast, density_eval, density_moment, isqrt, mobius,
    phi_from_poly, phi_moment, predicted_moment, shell_sample, sum_sqrt_is_zero, CombineMode, DensitySpec, GapWidth,
    MomentModel, RadiusPoint,
};
use num_complex::Complex64;

type Check = Result<(), String>;

fn expect(ok: bool, detail: impl FnOnce() -> String) -> Check {
    if ok {
        Ok(())
    } else {
        Err(detail())
    }
}

fn err(e: cygshell::Error) -> String {
    e.to_string()
}

fn count_fixtures() -> Check {
    let r2 = build_r2(16).map_err(err)?;
    for (x, want) in [("1/1", 7), ("1/2", 1), ("2/1", 69)] {
        let x = RadiusPoint::parse(x).map_err(err)?;
        let fast = count_ball_fast(x, &r2).map_err(err)?;
        let brute = count_ball_brute(x).map_err(err)?;
        expect(fast == want && brute == want, || format!("N({x}): fast {fast}, brute {brute}, want {want}"))?;
    }
    Ok(())
}

fn count_methods_agree() -> Check {
    let r2 = build_r2(900).map_err(err)?;
    for k in 1..=150 {
        let x = RadiusPoint::new(k, 7).map_err(err)?;
        let fast = count_ball_fast(x, &r2).map_err(err)?;
        let brute = count_ball_brute(x).map_err(err)?;
        expect(fast == brute, || format!("N({x}): fast {fast} ≠ brute {brute}"))?;
    }
    Ok(())
}

fn volume() -> Check {
    let v = ball_volume();
    expect((v - PI * PI / 2.0).abs() < 1e-15, || format!("vol = {v}"))
}

fn r2_values() -> Check {
    let r2 = build_r2(100).map_err(err)?;
    for (m, want) in [(0, 1), (1, 4), (2, 4), (3, 0), (5, 8), (9, 4), (25, 12), (65, 16), (99, 0)] {
        let got = r2.get(m).unwrap_or(u32::MAX);
        expect(got == want, || format!("r2({m}) = {got}, want {want}"))?;
    }
    Ok(())
}

fn mobius_values() -> Check {
    for (m, want) in [(1, 1), (2, -1), (6, 1), (12, 0), (30, -1), (49, 0)] {
        let got = mobius(m).map_err(err)?;
        expect(got == want, || format!("μ({m}) = {got}, want {want}"))?;
    }
    Ok(())
}

fn integer_roots() -> Check {
    let top = u128::from(u64::MAX);
    expect(isqrt(u128::MAX) == top && isqrt(top * top - 1) == top - 1, || "isqrt at the top of u128".into())
}

fn shell_invariants() -> Check {
    let r2 = build_r2(2500).map_err(err)?;
    let omega = GapWidth::constant(0.25).map_err(err)?;
    for k in [640u64, 1000, 1601, 2900] {
        let x = RadiusPoint::new(k, 64).map_err(err)?;
        let s = shell_sample(x, &omega, &r2).map_err(err)?;
        let vol = shell_volume(s.x, s.omega_x);
        let ok = s.shell_count == s.n_outer - s.n_inner
            && (s.error - (s.shell_count as f64 - vol)).abs() < 1e-6
            && (s.normalized - s.error / (s.x * s.x)).abs() < 1e-12;
        expect(ok, || format!("inconsistent shell sample at {x}: {s:?}"))?;
    }
    Ok(())
}

fn phi_moments_central_binomial() -> Check {
    let phi = phi_from_poly(&[Complex64::new(1.0, 0.0); 2]).map_err(err)?;
    let mut binom = 1u64;
    for j in 1..=6u32 {
        binom = binom * (4 * u64::from(j) - 2) / u64::from(j);
        let got = rational_to_f64(&phi_moment(&phi, j).map_err(err)?);
        expect(got == binom as f64, || format!("∫φ^{j} = {got}, want {binom}"))?;
    }
    Ok(())
}

fn gaussian_ladder() -> Check {
    for (j, want) in [(0, 1.0), (1, 0.0), (2, 1.0), (3, 0.0), (4, 3.0), (6, 15.0), (8, 105.0)] {
        let got = predicted_moment(MomentModel::SlowlyVarying, j).map_err(err)?;
        expect(got == want, || format!("Gaussian moment {j} = {got}"))?;
    }
    expect(gaussian_moment(10) == 945, || "10th Gaussian moment".into())
}

fn diagonal_constants() -> Check {
    expect(diagonal_constant(2) == 32.0 && diagonal_constant(4) == 3072.0, || {
        format!("diagonal constants {} {}", diagonal_constant(2), diagonal_constant(4))
    })
}

fn zero_relations() -> Check {
    let cases: [(&[i8], &[u64], bool); 4] = [
        (&[1, -1, -1], &[8, 2, 2], true),
        (&[1, -1], &[18, 2], false),
        (&[1, 1, -1], &[3, 12, 27], true),
        (&[1, -1], &[1, 2], false),
    ];
    for (signs, ms, want) in cases {
        let got = sum_sqrt_is_zero(signs, ms).map_err(err)?;
        expect(got == want, || format!("Σ±√m for {signs:?} {ms:?}: {got}"))?;
    }
    Ok(())
}

fn regrouping() -> Check {
    let r2 = build_r2(200).map_err(err)?;
    for omega in [0.05, 0.3, 0.77] {
        let c = regrouping_check(omega, 200, &r2).map_err(err)?;
        expect(c.relative_gap() < 1e-12, || format!("ω = {omega}: {c:?}"))?;
    }
    Ok(())
}

fn mixture_density() -> Check {
    let spec = DensitySpec::from_polys(CombineMode::Product, &[vec![Complex64::new(1.0, 0.0); 2]], DEFAULT_QUAD_POINTS)
        .map_err(err)?;
    let mass = density_moment(&spec, 0).map_err(err)?;
    let second = density_moment(&spec, 2).map_err(err)?;
    let at0 = density_eval(&spec, 0.0).map_err(err)?;
    expect((mass - 1.0).abs() < 1e-8 && (second - 1.0).abs() < 1e-8 && at0 > 0.0, || {
        format!("mass {mass}, second moment {second}, 𝒫(0) {at0}")
    })
}

type Fixture = (&'static str, fn() -> Check);

const FIXTURES: &[Fixture] = &[
    ("count_fixtures", count_fixtures),
    ("count_methods_agree", count_methods_agree),
    ("ball_volume", volume),
    ("r2_values", r2_values),
    ("mobius_values", mobius_values),
    ("integer_roots", integer_roots),
    ("shell_invariants", shell_invariants),
    ("phi_moments_central_binomial", phi_moments_central_binomial),
    ("gaussian_ladder", gaussian_ladder),
    ("diagonal_constants", diagonal_constants),
    ("zero_relations", zero_relations),
    ("regrouping", regrouping),
    ("mixture_density", mixture_density),
];

/// Runs every fixture, printing one line each; returns the names that failed.
pub fn run() -> Vec<&'static str> {
    let mut failed = Vec::new();
    for &(name, check) in FIXTURES {
        match check() {
            Ok(()) => println!("ok   {name}"),
            Err(detail) => {
                println!("FAIL {name}: {detail}");
                failed.push(name);
            }
        }
    }
    println!("selftest: {} passed, {} failed", FIXTURES.len() - failed.len(), failed.len());
    failed
}
