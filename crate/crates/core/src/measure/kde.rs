//! Kernel density estimates `h_n(s) = (1/(nα)) Σ ψ((s − X_j)/α)`.

use serde::{Deserialize, Serialize};

use super::density::DensityModel;
use crate::error::{ensure, Error, Result};
use crate::stats::pairwise_sum;

/// Compactly supported Lipschitz kernels on `[−1, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Kernel {
    /// `1 − |x|`
    Triangle,
    /// `(3/4)(1 − x²)`
    Epanechnikov,
}

impl Kernel {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "triangle" => Ok(Kernel::Triangle),
            "epanechnikov" => Ok(Kernel::Epanechnikov),
            other => Err(Error::Parameter(format!("unknown kernel '{other}'"))),
        }
    }

    pub fn eval(self, x: f64) -> f64 {
        if x.abs() >= 1.0 {
            return 0.0;
        }
        match self {
            Kernel::Triangle => 1.0 - x.abs(),
            Kernel::Epanechnikov => 0.75 * (1.0 - x * x),
        }
    }

    pub fn radius(self) -> f64 {
        1.0
    }

    pub fn lipschitz(self) -> f64 {
        match self {
            Kernel::Triangle => 1.0,
            Kernel::Epanechnikov => 1.5,
        }
    }
}

/// Uniform evaluation grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
}

impl Grid {
    pub fn new(lo: f64, hi: f64, count: usize) -> Result<Self> {
        ensure(hi > lo && count >= 2, || Error::Parameter("grid needs lo < hi and at least 2 points".into()))?;
        Ok(Self { lo, hi, count })
    }

    pub fn step(&self) -> f64 {
        (self.hi - self.lo) / (self.count - 1) as f64
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.count).map(|i| self.lo + self.step() * i as f64).collect()
    }

    pub fn trapezoid(&self, values: &[f64]) -> Result<f64> {
        ensure(values.len() == self.count, || {
            Error::Parameter(format!("{} values on a grid of {} points", values.len(), self.count))
        })?;
        let inner = pairwise_sum(&values[1..self.count - 1]);
        Ok(self.step() * (inner + 0.5 * (values[0] + values[self.count - 1])))
    }
}

/// `h_n` on `grid`; each grid point only visits atoms within the kernel radius.
pub fn kde(samples: &[f64], kernel: Kernel, alpha: f64, grid: &Grid) -> Result<Vec<f64>> {
    ensure(alpha > 0.0, || Error::Domain(format!("bandwidth {alpha} must be positive")))?;
    ensure(!samples.is_empty(), || Error::Domain("no samples".into()))?;
    let mut xs = samples.to_vec();
    xs.sort_by(f64::total_cmp);
    let norm = 1.0 / (xs.len() as f64 * alpha);
    let reach = kernel.radius() * alpha;
    Ok(grid
        .points()
        .into_iter()
        .map(|s| {
            let a = xs.partition_point(|x| *x <= s - reach);
            let b = xs.partition_point(|x| *x < s + reach);
            let terms: Vec<f64> = xs[a..b].iter().map(|x| kernel.eval((s - x) / alpha)).collect();
            norm * pairwise_sum(&terms)
        })
        .collect())
}

/// Trapezoid integral of `|h_n − Φ|` over `grid`.
pub fn kde_l1_error(h: &[f64], grid: &Grid, phi: &DensityModel) -> Result<f64> {
    let diff: Vec<f64> = grid
        .points()
        .into_iter()
        .zip(h)
        .map(|(s, v)| {
            let p = phi.pdf(s);
            ensure(p.is_finite(), || Error::Evaluation(format!("density is infinite at grid point {s}")))?;
            Ok((v - p).abs())
        })
        .collect::<Result<_>>()?;
    grid.trapezoid(&diff)
}
