//! Small floating-point helpers shared by the series and statistics code.

use std::f64::consts::PI;

/// Neumaier (improved Kahan) compensated accumulator.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.comp += (self.sum - t) + v;
        } else {
            self.comp += (v - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

impl Extend<f64> for CompensatedSum {
    fn extend<I: IntoIterator<Item = f64>>(&mut self, iter: I) {
        for v in iter {
            self.add(v);
        }
    }
}

/// Compensated sum of an iterator.
pub fn csum<I: IntoIterator<Item = f64>>(iter: I) -> f64 {
    let mut acc = CompensatedSum::new();
    acc.extend(iter);
    acc.value()
}

/// Compensated mean; `NaN` for an empty input.
pub fn cmean(values: &[f64]) -> f64 {
    csum(values.iter().copied()) / values.len() as f64
}

/// `sin(π t)` with the argument reduced modulo 2 first.
#[inline]
pub fn sin_pi(t: f64) -> f64 {
    let r = t.rem_euclid(2.0);
    (PI * r).sin()
}

/// Error function, Abramowitz–Stegun 7.1.26 (`|error| ≤ 1.5·10⁻⁷`), extended as an odd function.
pub fn erf(x: f64) -> f64 {
    if x == 0.0 {
        return 0.0;
    }
    let ax = x.abs();
    let t = 1.0 / (1.0 + 0.327_591_1 * ax);
    let poly =
        t * (0.254_829_592 + t * (-0.284_496_736 + t * (1.421_413_741 + t * (-1.453_152_027 + t * 1.061_405_429))));
    let y = 1.0 - poly * (-ax * ax).exp();
    y.copysign(x)
}

/// Standard normal CDF.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * (1.0 + erf(x / std::f64::consts::SQRT_2))
}

/// Density of `N(0, sigma²)`.
#[inline]
pub fn normal_pdf(x: f64, sigma: f64) -> f64 {
    let z = x / sigma;
    (-0.5 * z * z).exp() / (sigma * (2.0 * PI).sqrt())
}

/// `j!/(2^{j/2} (j/2)!) = (j − 1)!!` for even `j`, `0` for odd `j`.
pub fn gaussian_moment(j: u32) -> u128 {
    if j % 2 == 1 {
        return 0;
    }
    (1..j).step_by(2).map(u128::from).product()
}

/// Least-squares slope of `ys` against `xs`.
pub fn ls_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

/// Median of a slice (mean of the two middle values for even length).
pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n == 0 {
        return f64::NAN;
    }
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compensated_sum_recovers_small_terms() {
        let mut vals = vec![1e16, 1.0, -1e16];
        vals.extend(std::iter::repeat_n(1e-3, 1000));
        assert!((csum(vals) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn erf_accuracy_against_statrs() {
        for i in -400..=400 {
            let x = i as f64 / 80.0;
            let d = (erf(x) - statrs::function::erf::erf(x)).abs();
            assert!(d <= 1.5e-7, "x = {x}: {d}");
        }
        assert_eq!(normal_cdf(0.0), 0.5);
        assert!((normal_cdf(1.96) - 0.975_002_104_851_780).abs() < 1e-6);
    }

    #[test]
    fn gaussian_moment_ladder() {
        assert_eq!(gaussian_moment(0), 1);
        assert_eq!(gaussian_moment(2), 1);
        assert_eq!(gaussian_moment(4), 3);
        assert_eq!(gaussian_moment(6), 15);
        assert_eq!(gaussian_moment(5), 0);
        for j in (4..=30).step_by(2) {
            assert_eq!(gaussian_moment(j), u128::from(j - 1) * gaussian_moment(j - 2));
        }
    }

    #[test]
    fn sin_pi_reduces() {
        assert!((sin_pi(0.5) - 1.0).abs() < 1e-15);
        assert!((sin_pi(1e7 + 0.5) - 1.0).abs() < 1e-8);
        assert!(sin_pi(2.0).abs() < 1e-15);
    }

    #[test]
    fn slope_and_median() {
        assert!((ls_slope(&[0.0, 1.0, 2.0], &[1.0, 3.0, 5.0]) - 2.0).abs() < 1e-12);
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), 2.5);
    }
}
