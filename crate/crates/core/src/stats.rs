//! Small numerical helpers shared by the estimators.

use crate::error::{Error, Result};

/// Sum in a fixed pairwise order. Deterministic for a given slice.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    const LEAF: usize = 64;
    if values.len() <= LEAF {
        return values.iter().sum();
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}

pub fn mean(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    pairwise_sum(values) / values.len() as f64
}

/// Sample moments of a Monte Carlo batch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Moments {
    pub count: usize,
    pub mean: f64,
    /// Unbiased sample variance.
    pub variance: f64,
    /// Standard error of `variance`, from the fourth central moment.
    pub variance_stderr: f64,
}

pub fn moments(values: &[f64]) -> Result<Moments> {
    let n = values.len();
    if n < 2 {
        return Err(Error::Domain(format!("need at least 2 samples, got {n}")));
    }
    let m = mean(values);
    let dev2: Vec<f64> = values.iter().map(|v| (v - m) * (v - m)).collect();
    let dev4: Vec<f64> = dev2.iter().map(|d| d * d).collect();
    let nf = n as f64;
    let m2 = pairwise_sum(&dev2) / nf;
    let m4 = pairwise_sum(&dev4) / nf;
    let variance = m2 * nf / (nf - 1.0);
    // var(s²) ≈ (μ₄ − (n−3)/(n−1) σ⁴) / n
    let var_of_var = (m4 - (nf - 3.0) / (nf - 1.0) * variance * variance) / nf;
    Ok(Moments {
        count: n,
        mean: m,
        variance,
        variance_stderr: var_of_var.max(0.0).sqrt(),
    })
}

/// Ordinary least-squares line fit.
#[derive(Debug, Clone, PartialEq)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub residuals: Vec<f64>,
}

pub fn fit_line(xs: &[f64], ys: &[f64]) -> Result<LineFit> {
    if xs.len() != ys.len() {
        return Err(Error::Parameter("x and y lengths differ".into()));
    }
    if xs.len() < 2 {
        return Err(Error::InsufficientData("line fit needs at least 2 points".into()));
    }
    let mx = mean(xs);
    let my = mean(ys);
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        return Err(Error::InsufficientData("all abscissae coincide".into()));
    }
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let residuals = xs.iter().zip(ys).map(|(x, y)| y - (intercept + slope * x)).collect();
    Ok(LineFit { slope, intercept, residuals })
}

/// Slope of `log y` against `log x`.
pub fn log_log_slope(xs: &[f64], ys: &[f64]) -> Result<LineFit> {
    if xs.iter().chain(ys).any(|v| v.partial_cmp(&0.0) != Some(std::cmp::Ordering::Greater) || !v.is_finite()) {
        return Err(Error::Domain("log-log fit needs positive finite values".into()));
    }
    let lx: Vec<f64> = xs.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|v| v.ln()).collect();
    fit_line(&lx, &ly)
}

pub fn harmonic(n: usize) -> f64 {
    let terms: Vec<f64> = (1..=n).map(|k| 1.0 / k as f64).collect();
    pairwise_sum(&terms)
}

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

/// Standard normal distribution function, via `erfc` (relative accuracy near 1e-15).
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * statrs::function::erf::erfc(-x / std::f64::consts::SQRT_2)
}

pub fn normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// Inverse of [`normal_cdf`], polished with Newton steps.
pub fn normal_quantile(p: f64) -> f64 {
    if p <= 0.0 {
        return f64::NEG_INFINITY;
    }
    if p >= 1.0 {
        return f64::INFINITY;
    }
    let mut x = -std::f64::consts::SQRT_2 * statrs::function::erf::erfc_inv(2.0 * p);
    for _ in 0..3 {
        let pdf = normal_pdf(x);
        if pdf <= 0.0 {
            break;
        }
        let step = (normal_cdf(x) - p) / pdf;
        x -= step;
        if step.abs() < 1e-15 * x.abs().max(1.0) {
            break;
        }
    }
    x
}

/// Antiderivative of the standard normal distribution function: `xΦ(x) + φ(x)`.
pub fn normal_cdf_integral(x: f64) -> f64 {
    if x < -8.0 {
        // Mills-ratio expansion avoids cancellation deep in the lower tail.
        let z2 = 1.0 / (x * x);
        return normal_pdf(x) * z2 * (1.0 - 3.0 * z2 + 15.0 * z2 * z2 - 105.0 * z2 * z2 * z2);
    }
    x * normal_cdf(x) + normal_pdf(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pairwise_sum_matches_naive_on_small_input() {
        let v: Vec<f64> = (1..=10).map(f64::from).collect();
        assert_eq!(pairwise_sum(&v), 55.0);
    }

    #[test]
    fn moments_of_constant_sample() {
        let m = moments(&[3.0; 10]).unwrap();
        assert_eq!(m.variance, 0.0);
        assert_eq!(m.variance_stderr, 0.0);
        assert!(moments(&[1.0]).is_err());
    }

    #[test]
    fn unbiased_variance() {
        let m = moments(&[1.0, 2.0, 3.0, 4.0]).unwrap();
        assert!((m.variance - 5.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn line_fit_recovers_exact_line() {
        let xs = [0.0, 1.0, 2.0, 3.0];
        let ys: Vec<f64> = xs.iter().map(|x| 2.0 - 0.5 * x).collect();
        let fit = fit_line(&xs, &ys).unwrap();
        assert!((fit.slope + 0.5).abs() < 1e-14);
        assert!((fit.intercept - 2.0).abs() < 1e-14);
    }

    #[test]
    fn normal_functions() {
        assert!((normal_cdf(0.0) - 0.5).abs() < 1e-16);
        // reference values from an independent double-precision implementation
        let table = [
            (-7.5, 3.190_891_672_910_884_4e-14),
            (-5.0, 2.866_515_718_791_933e-7),
            (-3.3, 0.000_483_424_142_383_777_44),
            (-2.0, 0.022_750_131_948_179_195),
            (-1.0, 0.158_655_253_931_457_07),
            (-0.3, 0.382_088_577_811_047_4),
            (0.4, 0.655_421_741_610_324_2),
            (1.2, 0.884_930_329_778_291_8),
            (1.96, 0.975_002_104_851_779_5),
            (2.7, 0.996_533_026_196_959_4),
            (4.1, 0.999_979_342_493_087_5),
            (6.0, 0.999_999_999_013_412_3),
        ];
        for (x, p) in table {
            assert!((normal_cdf(x) - p).abs() < 1e-10, "Φ({x}) = {} vs {p}", normal_cdf(x));
        }
        for p in [1e-12, 1e-6, 0.01, 0.3, 0.5, 0.9, 0.999_999] {
            assert!((normal_cdf(normal_quantile(p)) - p).abs() < 1e-14 * p.max(1e-3) + 1e-16);
        }
        // ∫_{-∞}^{x} Φ, checked by symmetry: G(x) - G(-x) = x
        for x in [0.1, 1.0, 3.5] {
            assert!((normal_cdf_integral(x) - normal_cdf_integral(-x) - x).abs() < 1e-14);
        }
        // tail branch against quadrature of Φ
        for x in [-8.5, -12.0] {
            let q = crate::quad::integrate(normal_cdf, -60.0, x, 1e-30).unwrap();
            assert!((normal_cdf_integral(x) - q).abs() < 1e-16, "{x}: {} vs {q}", normal_cdf_integral(x));
        }
    }

    #[test]
    fn harmonic_numbers() {
        assert_eq!(harmonic(1), 1.0);
        assert!((harmonic(2) - 1.5).abs() < 1e-16);
        let n = 1_000_000;
        let euler = 0.577_215_664_901_532_9;
        assert!((harmonic(n) - ((n as f64).ln() + euler)).abs() < 1.0 / (2.0 * n as f64) + 1e-12);
    }
}
