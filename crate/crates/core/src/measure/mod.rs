//! Empirical measures, Kantorovich distances, density estimates and the
//! regularity checks on invariant laws.

pub mod density;
pub mod empirical;
pub mod kde;

pub use density::{besov_modulus, fit_besov_exponent, BesovFit, DensityModel, Distribution};
pub use empirical::{
    kantorovich_1d, kantorovich_convergence, kantorovich_empirical, kantorovich_to, EmpiricalMeasure, KantorovichRow,
    KantorovichTable, Measure,
};
pub use kde::{kde, kde_l1_error, Grid, Kernel};

use serde::{Deserialize, Serialize};

use crate::error::{ensure, Error, Result};
use crate::process::{generate_trajectory, MapSpec, DEFAULT_BURN_IN};

/// Orbit length used to estimate `μ(A)`.
pub const DEFAULT_ORBIT: usize = 10_000_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntervalRow {
    pub a: f64,
    pub b: f64,
    /// Lebesgue measure `m(A)`.
    pub length: f64,
    /// Orbit frequency estimate of `μ(A)`.
    pub mu: f64,
    pub mu_stderr: f64,
    /// `μ(A)/m(A)^ϱ` for each grid `ϱ`.
    pub ratios: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HolderCheck {
    pub rho_grid: Vec<f64>,
    pub rows: Vec<IntervalRow>,
    /// Largest grid `ϱ` whose ratio does not grow as `m(A)` shrinks.
    pub rho_hat: Option<f64>,
}

/// Intervals `[lo, lo + 10^{−k}]`, `k = 1..=decades`, at the left edge of the domain.
pub fn edge_intervals(lo: f64, decades: usize) -> Vec<(f64, f64)> {
    (1..=decades).map(|k| (lo, lo + 10f64.powi(-(k as i32)))).collect()
}

/// Estimate `μ(A)` on shrinking intervals and find the largest `ϱ` with `μ(A) ≤ C m(A)^ϱ`.
///
/// Intervals are ordered by decreasing length. A grid `ϱ` is accepted when
/// every ratio is at most 5% above its predecessor plus three standard errors.
pub fn measure_holder_check(
    map: &MapSpec,
    intervals: &[(f64, f64)],
    rho_grid: &[f64],
    orbit_len: usize,
    seed: u64,
) -> Result<HolderCheck> {
    ensure(!intervals.is_empty() && !rho_grid.is_empty(), || Error::Parameter("intervals and ϱ grid must be nonempty".into()))?;
    ensure(intervals.iter().all(|(a, b)| b > a), || Error::Parameter("intervals must have positive length".into()))?;
    let mut order: Vec<(f64, f64)> = intervals.to_vec();
    order.sort_by(|x, y| (y.1 - y.0).total_cmp(&(x.1 - x.0)));
    let traj = generate_trajectory(map, orbit_len, DEFAULT_BURN_IN, seed)?;
    let xs = traj.first_coordinates();
    let total = xs.len() as f64;
    let rows: Vec<IntervalRow> = order
        .iter()
        .map(|&(a, b)| {
            let count = xs.iter().filter(|x| **x >= a && **x <= b).count() as f64;
            let mu = count / total;
            let length = b - a;
            IntervalRow {
                a,
                b,
                length,
                mu,
                mu_stderr: (mu * (1.0 - mu) / total).sqrt(),
                ratios: rho_grid.iter().map(|r| mu / length.powf(*r)).collect(),
            }
        })
        .collect();
    let accepted = |k: usize| {
        rows.windows(2).all(|w| {
            let slack = 3.0 * w[1].mu_stderr / w[1].length.powf(rho_grid[k]);
            w[1].ratios[k] <= w[0].ratios[k] * 1.05 + slack
        })
    };
    let rho_hat = (0..rho_grid.len()).filter(|k| accepted(*k)).map(|k| rho_grid[k]).fold(None, |m: Option<f64>, r| {
        Some(m.map_or(r, |m| m.max(r)))
    });
    Ok(HolderCheck { rho_grid: rho_grid.to_vec(), rows, rho_hat })
}

/// `ϱ = 0.05, 0.10, …, max`.
pub fn rho_grid(max: f64) -> Vec<f64> {
    (1..).map(|k| 0.05 * k as f64).take_while(|r| *r <= max + 1e-12).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn doubling_law_is_lebesgue() {
        let c = measure_holder_check(&MapSpec::doubling(), &edge_intervals(0.0, 5), &[1.0], 2_000_000, 5).unwrap();
        assert_eq!(c.rho_hat, Some(1.0));
    }

    #[test]
    fn logistic_edge_exponent_is_one_half() {
        let c = measure_holder_check(&MapSpec::logistic(4.0).unwrap(), &edge_intervals(0.0, 5), &rho_grid(1.0), DEFAULT_ORBIT, 5)
            .unwrap();
        let r = c.rho_hat.unwrap();
        assert!((r - 0.5).abs() <= 0.05 + 1e-12, "{r}");
        // below the true exponent the ratio vanishes with the interval
        let k = c.rho_grid.iter().position(|x| (x - 0.25).abs() < 1e-9).unwrap();
        assert!(c.rows.windows(2).all(|w| w[1].ratios[k] < w[0].ratios[k]));
    }
}
