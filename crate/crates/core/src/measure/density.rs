//! Invariant densities with exact CDFs, and their L¹ shift modulus.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{ensure, Error, Result};
use crate::process::AnalyticDensity;
use crate::quad;
use crate::stats::{log_log_slope, pairwise_sum};

/// A nondecreasing distribution function with closed-form integral, as used
/// by the exact Kantorovich routines.
pub trait Distribution {
    /// Closed interval carrying all mass.
    fn support(&self) -> (f64, f64);
    fn cdf(&self, t: f64) -> f64;
    /// `H(t) = ∫_{lo}^{t} F`.
    fn cdf_integral(&self, t: f64) -> f64;
    /// Smallest `t` with `F(t) ≥ i/n`.
    fn crossing(&self, i: usize, n: usize) -> f64;
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DensityModel {
    Uniform { lo: f64, hi: f64 },
    /// Invariant density `1/(π√(x(1−x)))` of the logistic map at `a = 4`.
    Logistic4,
    /// Piecewise-linear density through `(xs[i], pdf[i])`, normalized.
    Tabulated { xs: Vec<f64>, pdf: Vec<f64>, cum: Vec<f64>, cum_integral: Vec<f64> },
}

impl DensityModel {
    pub fn uniform() -> Self {
        DensityModel::Uniform { lo: 0.0, hi: 1.0 }
    }

    pub fn from_analytic(d: AnalyticDensity) -> Self {
        match d {
            AnalyticDensity::Uniform => Self::uniform(),
            AnalyticDensity::Arcsine => DensityModel::Logistic4,
        }
    }

    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "uniform" | "analytic_uniform" => Ok(Self::uniform()),
            "logistic4" | "analytic_logistic4" | "arcsine" => Ok(DensityModel::Logistic4),
            other => Err(Error::Parameter(format!("unknown density '{other}'"))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            DensityModel::Uniform { .. } => "uniform",
            DensityModel::Logistic4 => "logistic4",
            DensityModel::Tabulated { .. } => "tabulated",
        }
    }

    pub fn tabulated(xs: Vec<f64>, pdf: Vec<f64>) -> Result<Self> {
        ensure(xs.len() >= 2 && xs.len() == pdf.len(), || Error::Parameter("tabulated density needs matching grids of length ≥ 2".into()))?;
        ensure(xs.windows(2).all(|w| w[1] > w[0]), || Error::Parameter("density grid must be increasing".into()))?;
        ensure(pdf.iter().all(|p| p.is_finite() && *p >= 0.0), || Error::Domain("density values must be finite and nonnegative".into()))?;
        let mut cum = vec![0.0];
        for i in 0..xs.len() - 1 {
            cum.push(cum[i] + 0.5 * (pdf[i] + pdf[i + 1]) * (xs[i + 1] - xs[i]));
        }
        let total = *cum.last().unwrap();
        ensure(total > 0.0, || Error::Domain("density has zero mass".into()))?;
        let pdf: Vec<f64> = pdf.iter().map(|p| p / total).collect();
        let cum: Vec<f64> = cum.iter().map(|c| c / total).collect();
        let mut cum_integral = vec![0.0];
        for i in 0..xs.len() - 1 {
            let h = xs[i + 1] - xs[i];
            cum_integral.push(cum_integral[i] + cum[i] * h + pdf[i] * h * h / 2.0 + (pdf[i + 1] - pdf[i]) * h * h / 6.0);
        }
        Ok(DensityModel::Tabulated { xs, pdf, cum, cum_integral })
    }

    pub fn pdf(&self, x: f64) -> f64 {
        match self {
            DensityModel::Uniform { lo, hi } => {
                if x >= *lo && x <= *hi { 1.0 / (hi - lo) } else { 0.0 }
            }
            DensityModel::Logistic4 => {
                if x > 0.0 && x < 1.0 { 1.0 / (PI * (x * (1.0 - x)).sqrt()) } else if x == 0.0 || x == 1.0 { f64::INFINITY } else { 0.0 }
            }
            DensityModel::Tabulated { xs, pdf, .. } => match cell(xs, x) {
                Some(i) => {
                    let s = (x - xs[i]) / (xs[i + 1] - xs[i]);
                    pdf[i] + s * (pdf[i + 1] - pdf[i])
                }
                None => 0.0,
            },
        }
    }

    /// `|∫ Φ − 1|` by quadrature, using `x = sin²(πt/2)` for the arcsine law.
    pub fn normalization_error(&self) -> Result<f64> {
        let total = match self {
            DensityModel::Logistic4 => {
                // dx = (π/2) sin(πt) dt, Φ(x) dx = dt
                quad::integrate(
                    |t| {
                        let x = (PI * t / 2.0).sin().powi(2);
                        self.pdf(x) * (PI / 2.0) * (PI * t).sin()
                    },
                    1e-12,
                    1.0 - 1e-12,
                    1e-12,
                )?
            }
            DensityModel::Tabulated { xs, .. } => {
                let parts: Vec<f64> = xs
                    .windows(2)
                    .map(|w| quad::integrate(|x| self.pdf(x), w[0], w[1], 1e-13))
                    .collect::<Result<_>>()?;
                pairwise_sum(&parts)
            }
            _ => {
                let (a, b) = self.support();
                quad::integrate(|x| self.pdf(x), a, b, 1e-13)?
            }
        };
        Ok((total - 1.0).abs())
    }

    /// Numerical inverse of the CDF by bisection.
    pub fn quantile(&self, p: f64) -> f64 {
        let (lo, hi) = self.support();
        match self {
            DensityModel::Uniform { .. } => lo + p.clamp(0.0, 1.0) * (hi - lo),
            DensityModel::Logistic4 => (PI * p.clamp(0.0, 1.0) / 2.0).sin().powi(2),
            DensityModel::Tabulated { .. } => {
                let (mut a, mut b) = (lo, hi);
                for _ in 0..200 {
                    let m = 0.5 * (a + b);
                    if m <= a || m >= b {
                        break;
                    }
                    if self.cdf(m) >= p { b = m } else { a = m }
                }
                b
            }
        }
    }
}

fn cell(xs: &[f64], x: f64) -> Option<usize> {
    if x < xs[0] || x > xs[xs.len() - 1] {
        return None;
    }
    let i = xs.partition_point(|v| *v <= x);
    Some(i.saturating_sub(1).min(xs.len() - 2))
}

impl Distribution for DensityModel {
    fn support(&self) -> (f64, f64) {
        match self {
            DensityModel::Uniform { lo, hi } => (*lo, *hi),
            DensityModel::Logistic4 => (0.0, 1.0),
            DensityModel::Tabulated { xs, .. } => (xs[0], xs[xs.len() - 1]),
        }
    }

    fn cdf(&self, t: f64) -> f64 {
        let (lo, hi) = self.support();
        if t <= lo {
            return 0.0;
        }
        if t >= hi {
            return 1.0;
        }
        match self {
            DensityModel::Uniform { .. } => (t - lo) / (hi - lo),
            DensityModel::Logistic4 => 2.0 / PI * t.sqrt().asin(),
            DensityModel::Tabulated { xs, pdf, cum, .. } => {
                let i = cell(xs, t).expect("inside support");
                let (h, s) = (xs[i + 1] - xs[i], t - xs[i]);
                cum[i] + pdf[i] * s + (pdf[i + 1] - pdf[i]) * s * s / (2.0 * h)
            }
        }
    }

    fn cdf_integral(&self, t: f64) -> f64 {
        let (lo, hi) = self.support();
        if t <= lo {
            return 0.0;
        }
        if t >= hi {
            return self.cdf_integral_inner(hi) + (t - hi);
        }
        self.cdf_integral_inner(t)
    }

    fn crossing(&self, i: usize, n: usize) -> f64 {
        self.quantile(i as f64 / n as f64)
    }
}

impl DensityModel {
    fn cdf_integral_inner(&self, t: f64) -> f64 {
        match self {
            DensityModel::Uniform { lo, hi } => (t - lo) * (t - lo) / (2.0 * (hi - lo)),
            // ∫F = tF(t) − ∫ t Φ(t) dt, and ∫₀ᵗ sΦ(s) ds = (asin√t − √(t(1−t)))/π
            DensityModel::Logistic4 => t * self.cdf(t) - (t.sqrt().asin() - (t * (1.0 - t)).sqrt()) / PI,
            DensityModel::Tabulated { xs, pdf, cum, cum_integral } => {
                let i = cell(xs, t).expect("inside support");
                let (h, s) = (xs[i + 1] - xs[i], t - xs[i]);
                cum_integral[i] + cum[i] * s + pdf[i] * s * s / 2.0 + (pdf[i + 1] - pdf[i]) * s * s * s / (6.0 * h)
            }
        }
    }
}

/// `∫|Φ(s) − Φ(s − δ)| ds`.
///
/// The sign of `Φ(s) − Φ(s − δ)` is located on each piece between support
/// endpoints (and their shifts); on a piece of constant sign the integral is
/// an exact combination of CDF values.
pub fn besov_modulus(phi: &DensityModel, delta: f64) -> Result<f64> {
    ensure(delta >= 0.0 && delta.is_finite(), || Error::Domain("δ must be nonnegative".into()))?;
    if delta == 0.0 {
        return Ok(0.0);
    }
    let (lo, hi) = phi.support();
    let mut knots = vec![lo, lo + delta, hi, hi + delta];
    if let DensityModel::Tabulated { xs, .. } = phi {
        knots.extend(xs.iter().copied());
        knots.extend(xs.iter().map(|x| x + delta));
    }
    knots.sort_by(f64::total_cmp);
    knots.dedup();
    let g = |s: f64| phi.pdf(s) - phi.pdf(s - delta);
    let mut cuts = Vec::new();
    for w in knots.windows(2) {
        let (a, b) = (w[0], w[1]);
        cuts.push(a);
        if matches!(phi, DensityModel::Tabulated { .. }) {
            // g is linear here
            let (ga, gb) = (g(a + 1e-15 * (b - a)), g(b - 1e-15 * (b - a)));
            if ga * gb < 0.0 {
                cuts.push(a + (b - a) * ga / (ga - gb));
            }
            continue;
        }
        const SCAN: usize = 512;
        let probe = |k: usize| a + (b - a) * (k as f64 + 0.5) / SCAN as f64;
        let mut prev = g(probe(0));
        for k in 1..SCAN {
            let cur = g(probe(k));
            if prev * cur < 0.0 {
                let (mut x0, mut x1) = (probe(k - 1), probe(k));
                for _ in 0..200 {
                    let m = 0.5 * (x0 + x1);
                    if m <= x0 || m >= x1 {
                        break;
                    }
                    if g(m) * prev < 0.0 { x1 = m } else { x0 = m }
                }
                cuts.push(0.5 * (x0 + x1));
            }
            prev = cur;
        }
    }
    cuts.push(*knots.last().unwrap());
    // ∫_a^b Φ(s) − Φ(s − δ) ds = F(b) − F(a) − F(b − δ) + F(a − δ)
    let pieces: Vec<f64> = cuts
        .windows(2)
        .map(|w| (phi.cdf(w[1]) - phi.cdf(w[0]) - phi.cdf(w[1] - delta) + phi.cdf(w[0] - delta)).abs())
        .collect();
    let v = pairwise_sum(&pieces);
    ensure(v.is_finite(), || Error::Quadrature(format!("modulus at δ = {delta} is not finite")))?;
    Ok(v)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BesovFit {
    pub deltas: Vec<f64>,
    pub moduli: Vec<f64>,
    pub tau: f64,
    pub constant: f64,
}

/// Log-log slope `τ̂` of the shift modulus over `deltas`.
pub fn fit_besov_exponent(phi: &DensityModel, deltas: &[f64]) -> Result<BesovFit> {
    let moduli: Vec<f64> = deltas.iter().map(|d| besov_modulus(phi, *d)).collect::<Result<_>>()?;
    let fit = log_log_slope(deltas, &moduli)?;
    Ok(BesovFit { deltas: deltas.to_vec(), moduli, tau: fit.slope, constant: fit.intercept.exp() })
}
