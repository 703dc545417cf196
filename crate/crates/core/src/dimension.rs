//! Correlation sums and correlation-dimension fits.

use rand::{Rng, SeedableRng};
use serde::{Deserialize, Serialize};

use crate::error::{ensure, Error, Result};
use crate::exec;
use crate::process::{ensemble_map, MapSpec, Trajectory};
use crate::stats::{fit_line, moments, pairwise_sum};

/// Pair loops stay exact up to this many points; larger sets subsample pairs.
pub const MAX_EXACT_POINTS: usize = 30_000;
pub const SUBSAMPLED_PAIRS: usize = 20_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelKind {
    Heaviside,
    Phi0,
    Custom,
}

/// `ϑ(s) = 1` for `s ≥ 0` (closed at zero).
pub fn heaviside(s: f64) -> f64 {
    if s >= 0.0 { 1.0 } else { 0.0 }
}

/// Piecewise-linear ramp from 0 at `−1/2` to 1 at `1/2`.
pub fn phi0(y: f64) -> f64 {
    (0.5 + y).clamp(0.0, 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorrelationSum {
    pub epsilon: f64,
    pub value: f64,
    pub kernel: KernelKind,
    pub n: usize,
    /// Standard error when pairs were subsampled.
    pub stderr: Option<f64>,
}

/// Point cloud view over a flat coordinate buffer.
#[derive(Debug, Clone, Copy)]
pub struct Points<'a> {
    pub flat: &'a [f64],
    pub dim: usize,
}

impl<'a> Points<'a> {
    pub fn new(flat: &'a [f64], dim: usize) -> Result<Self> {
        ensure(dim >= 1 && flat.len().is_multiple_of(dim), || Error::Parameter("coordinate buffer does not match dimension".into()))?;
        Ok(Self { flat, dim })
    }

    pub fn of(traj: &'a Trajectory) -> Self {
        Self { flat: traj.flat(), dim: traj.dim() }
    }

    pub fn len(&self) -> usize {
        self.flat.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.flat.is_empty()
    }

    fn dist(&self, i: usize, j: usize) -> f64 {
        let (a, b) = (&self.flat[i * self.dim..(i + 1) * self.dim], &self.flat[j * self.dim..(j + 1) * self.dim]);
        if self.dim == 1 {
            return (a[0] - b[0]).abs();
        }
        a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
    }
}

/// `(1/n²) Σ_{i≠j} g(d(x_i, x_j))` for several kernels `g` in one pass.
///
/// Exact up to [`MAX_EXACT_POINTS`]; above that, `pairs` random ordered pairs
/// drawn from `seed` estimate the pair mean, and standard errors are returned.
pub fn pair_sums<G>(points: Points<'_>, kernels: &[G], seed: u64) -> Result<Vec<(f64, Option<f64>)>>
where
    G: Fn(f64) -> f64 + Sync,
{
    let n = points.len();
    ensure(n >= 2, || Error::Domain(format!("correlation sums need at least 2 points, got {n}")))?;
    let scale = 1.0 / (n as f64 * n as f64);
    if n <= MAX_EXACT_POINTS {
        // row i covers pairs (i, j > i); each unordered pair counts twice
        let rows = exec::map_indexed(n, |i| {
            let mut acc = vec![0.0; kernels.len()];
            for j in i + 1..n {
                let d = points.dist(i, j);
                for (a, g) in acc.iter_mut().zip(kernels) {
                    *a += g(d);
                }
            }
            acc
        });
        return Ok((0..kernels.len())
            .map(|k| {
                let col: Vec<f64> = rows.iter().map(|r| r[k]).collect();
                (2.0 * pairwise_sum(&col) * scale, None)
            })
            .collect());
    }
    let pairs = SUBSAMPLED_PAIRS;
    let chunks = 64;
    let per_chunk = pairs / chunks;
    let samples = exec::map_indexed(chunks, |c| {
        let mut rng = crate::rng::StreamRng::seed_from_u64(crate::rng::mix(seed, c as u64));
        let mut out = vec![Vec::with_capacity(per_chunk); kernels.len()];
        for _ in 0..per_chunk {
            let i = rng.random_range(0..n);
            let mut j = rng.random_range(0..n - 1);
            if j >= i {
                j += 1;
            }
            let d = points.dist(i, j);
            for (o, g) in out.iter_mut().zip(kernels) {
                o.push(g(d));
            }
        }
        out
    });
    let factor = (n as f64 - 1.0) / n as f64;
    (0..kernels.len())
        .map(|k| {
            let all: Vec<f64> = samples.iter().flat_map(|s| s[k].iter().copied()).collect();
            let m = moments(&all)?;
            Ok((m.mean * factor, Some((m.variance / all.len() as f64).sqrt() * factor)))
        })
        .collect()
}

pub fn correlation_sum_heaviside(points: Points<'_>, eps: f64) -> Result<CorrelationSum> {
    ensure(eps > 0.0, || Error::Domain("ε must be positive".into()))?;
    let (value, stderr) = pair_sums(points, &[|d: f64| heaviside(eps - d)], 0)?[0];
    Ok(CorrelationSum { epsilon: eps, value, kernel: KernelKind::Heaviside, n: points.len(), stderr })
}

/// `K^φ = (1/n²) Σ_{i≠j} φ(1 − d/ε)`; `None` selects `φ₀`.
pub fn correlation_sum_smoothed(
    points: Points<'_>,
    eps: f64,
    phi: Option<&(dyn Fn(f64) -> f64 + Sync)>,
) -> Result<CorrelationSum> {
    ensure(eps > 0.0, || Error::Domain("ε must be positive".into()))?;
    let kind = if phi.is_some() { KernelKind::Custom } else { KernelKind::Phi0 };
    let f = |d: f64| match phi {
        Some(p) => p(1.0 - d / eps),
        None => phi0(1.0 - d / eps),
    };
    let (value, stderr) = pair_sums(points, &[f], 0)?[0];
    Ok(CorrelationSum { epsilon: eps, value, kernel: kind, n: points.len(), stderr })
}

/// Per-coordinate Lipschitz constants of `K^φ`: `2(n−1) Lip(φ) / (n² ε)`.
pub fn smoothed_sum_coefficients(n: usize, eps: f64, phi_lipschitz: f64) -> Vec<f64> {
    vec![2.0 * (n as f64 - 1.0) * phi_lipschitz / (n as f64 * n as f64 * eps); n]
}

/// Row of a correlation-sum scan over ε.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScaleRow {
    pub eps: f64,
    pub k_heaviside: f64,
    pub k_phi0: f64,
    /// `K^ϑ_{ε/2}` and `K^ϑ_{2ε}`, bracketing `K^{φ₀}_ε`.
    pub k_half: f64,
    pub k_double: f64,
    /// Set when `n < ε^{−2(d+η)}`: fluctuations may exceed the signal.
    pub flagged: bool,
}

impl ScaleRow {
    pub fn sandwich_holds(&self) -> bool {
        self.k_half <= self.k_phi0 && self.k_phi0 <= self.k_double
    }
}

/// `count` log-spaced values from `lo` to `hi`.
pub fn log_grid(lo: f64, hi: f64, count: usize) -> Result<Vec<f64>> {
    ensure(lo > 0.0 && hi > lo && count >= 2, || Error::Parameter("need 0 < lo < hi and count ≥ 2".into()))?;
    let (a, b) = (lo.ln(), hi.ln());
    Ok((0..count).map(|i| (a + (b - a) * i as f64 / (count - 1) as f64).exp()).collect())
}

pub fn scale_rows(points: Points<'_>, eps_grid: &[f64], d_prior: f64, eta: f64, seed: u64) -> Result<Vec<ScaleRow>> {
    ensure(eps_grid.iter().all(|e| *e > 0.0), || Error::Domain("ε must be positive".into()))?;
    let n = points.len();
    let mut kernels: Vec<Box<dyn Fn(f64) -> f64 + Sync>> = Vec::new();
    for &e in eps_grid {
        kernels.push(Box::new(move |d| heaviside(e - d)));
        kernels.push(Box::new(move |d| phi0(1.0 - d / e)));
        kernels.push(Box::new(move |d| heaviside(e / 2.0 - d)));
        kernels.push(Box::new(move |d| heaviside(2.0 * e - d)));
    }
    let sums = pair_sums(points, &kernels, seed)?;
    Ok(eps_grid
        .iter()
        .enumerate()
        .map(|(i, &eps)| ScaleRow {
            eps,
            k_heaviside: sums[4 * i].0,
            k_phi0: sums[4 * i + 1].0,
            k_half: sums[4 * i + 2].0,
            k_double: sums[4 * i + 3].0,
            flagged: (n as f64) < eps.powf(-2.0 * (d_prior + eta)),
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DimensionOptions {
    /// Prior correlation dimension for the sample-size flag; defaults to the ambient dimension.
    pub d_prior: Option<f64>,
    pub eta: f64,
    /// Drop flagged scales from the fit instead of only reporting them.
    pub exclude_flagged: bool,
    pub seed: u64,
}

impl Default for DimensionOptions {
    fn default() -> Self {
        Self { d_prior: None, eta: 1.0, exclude_flagged: false, seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DimensionFit {
    pub slope: f64,
    pub intercept: f64,
    pub residuals: Vec<f64>,
    pub rows: Vec<ScaleRow>,
    /// Which rows entered the fit.
    pub used: Vec<bool>,
}

/// Least-squares slope of `log K^{φ₀}` against `log ε`.
pub fn estimate_correlation_dimension(points: Points<'_>, eps_grid: &[f64], opts: &DimensionOptions) -> Result<DimensionFit> {
    ensure(eps_grid.len() >= 4, || Error::Parameter("ε grid needs at least 4 scales".into()))?;
    ensure(eps_grid.windows(2).all(|w| w[1] > w[0]), || Error::Parameter("ε grid must be increasing".into()))?;
    let d_prior = opts.d_prior.unwrap_or(points.dim as f64);
    let rows = scale_rows(points, eps_grid, d_prior, opts.eta, opts.seed)?;
    let used: Vec<bool> = rows.iter().map(|r| r.k_phi0 > 0.0 && !(opts.exclude_flagged && r.flagged)).collect();
    let (xs, ys): (Vec<f64>, Vec<f64>) =
        rows.iter().zip(&used).filter(|(_, u)| **u).map(|(r, _)| (r.eps.ln(), r.k_phi0.ln())).unzip();
    ensure(xs.len() >= 2, || Error::InsufficientData(format!("only {} usable scales", xs.len())))?;
    let fit = fit_line(&xs, &ys)?;
    Ok(DimensionFit { slope: fit.slope, intercept: fit.intercept, residuals: fit.residuals, rows, used })
}

/// Monte Carlo variance of `K^{φ₀}_{n,ε}` over orbits, for each ε.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VarianceAtScale {
    pub eps: f64,
    pub variance: f64,
    pub stderr: f64,
    /// `variance · ε² n`: the constant the bound `C/(ε² n)` needs at this scale.
    pub scaled: f64,
}

pub fn phi0_variance_scan(
    map: &MapSpec,
    n: usize,
    eps: &[f64],
    replicas: usize,
    burn_in: usize,
    master_seed: u64,
) -> Result<Vec<VarianceAtScale>> {
    let per = ensemble_map(map, replicas, n, burn_in, master_seed, |_, t| {
        let kernels: Vec<_> = eps.iter().map(|&e| move |d: f64| phi0(1.0 - d / e)).collect();
        Ok(pair_sums(Points::of(t), &kernels, 0)?.into_iter().map(|s| s.0).collect::<Vec<f64>>())
    })?;
    eps.iter()
        .enumerate()
        .map(|(i, &e)| {
            let col: Vec<f64> = per.iter().map(|r| r[i]).collect();
            let m = moments(&col)?;
            Ok(VarianceAtScale { eps: e, variance: m.variance, stderr: m.variance_stderr, scaled: m.variance * e * e * n as f64 })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::process::generate_trajectory;
    use rand_chacha::ChaCha8Rng;

    fn uniform(n: usize, dim: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n * dim).map(|_| rng.random::<f64>()).collect()
    }

    #[test]
    fn two_point_cases() {
        let same = [0.3, 0.3];
        let p = Points::new(&same, 1).unwrap();
        assert_eq!(correlation_sum_heaviside(p, 0.01).unwrap().value, 0.5);
        assert_eq!(correlation_sum_smoothed(p, 0.01, None).unwrap().value, 0.5);
        let far = [0.0, 1.0];
        assert_eq!(correlation_sum_heaviside(Points::new(&far, 1).unwrap(), 0.5).unwrap().value, 0.0);
        assert!(correlation_sum_heaviside(Points::new(&[0.2], 1).unwrap(), 0.5).is_err());
    }

    #[test]
    fn large_eps_gives_full_count() {
        let x = uniform(50, 1, 1);
        let v = correlation_sum_heaviside(Points::new(&x, 1).unwrap(), 2.0).unwrap().value;
        assert!((v - 49.0 / 50.0).abs() < 1e-15);
    }

    #[test]
    fn sandwich_and_monotonicity_on_random_sets() {
        let grid = log_grid(0.01, 0.5, 12).unwrap();
        for seed in 0..100 {
            let x = uniform(60, 1 + (seed as usize % 2), seed);
            let rows = scale_rows(Points::new(&x, 1 + (seed as usize % 2)).unwrap(), &grid, 1.0, 1.0, 0).unwrap();
            assert!(rows.iter().all(ScaleRow::sandwich_holds));
            assert!(rows.windows(2).all(|w| w[1].k_heaviside >= w[0].k_heaviside && w[1].k_phi0 >= w[0].k_phi0));
        }
    }

    #[test]
    fn uniform_interval_matches_analytic_integral() {
        let x = uniform(10_000, 1, 7);
        let p = Points::new(&x, 1).unwrap();
        let k = correlation_sum_heaviside(p, 0.1).unwrap().value;
        assert!((k - 0.19).abs() < 0.005, "{k}");
        let s = correlation_sum_smoothed(p, 0.1, None).unwrap().value;
        assert!(s > 0.0975 && s < 0.36);
    }

    #[test]
    fn dimension_of_uniform_samples() {
        let grid = log_grid(0.01, 0.1, 6).unwrap();
        let x = uniform(10_000, 1, 3);
        let f = estimate_correlation_dimension(Points::new(&x, 1).unwrap(), &grid, &Default::default()).unwrap();
        assert!((f.slope - 1.0).abs() < 0.1, "{}", f.slope);
        let y = uniform(10_000, 2, 4);
        let f = estimate_correlation_dimension(Points::new(&y, 2).unwrap(), &grid, &Default::default()).unwrap();
        assert!((f.slope - 2.0).abs() < 0.15, "{}", f.slope);
        assert!(f.rows.iter().all(|r| r.flagged));
    }

    #[test]
    fn identical_points_have_zero_dimension() {
        let x = vec![0.4; 200];
        let grid = log_grid(0.01, 0.1, 5).unwrap();
        let f = estimate_correlation_dimension(Points::new(&x, 1).unwrap(), &grid, &Default::default()).unwrap();
        assert_eq!(f.slope, 0.0);
    }

    #[test]
    fn excluding_flagged_scales_can_leave_too_few() {
        let x = uniform(1000, 1, 3);
        let grid = log_grid(0.01, 0.1, 5).unwrap();
        let opts = DimensionOptions { exclude_flagged: true, ..Default::default() };
        assert!(matches!(
            estimate_correlation_dimension(Points::new(&x, 1).unwrap(), &grid, &opts),
            Err(Error::InsufficientData(_))
        ));
    }

    #[test]
    fn subsampled_pairs_are_close_to_exact() {
        let x = uniform(MAX_EXACT_POINTS + 10, 1, 9);
        let p = Points::new(&x, 1).unwrap();
        let c = correlation_sum_heaviside(p, 0.1).unwrap();
        let se = c.stderr.unwrap();
        assert!((c.value - 0.19).abs() < 5.0 * se + 2e-3, "{c:?}");
    }

    #[test]
    fn coefficients_match_probing_of_one_coordinate() {
        let t = generate_trajectory(&MapSpec::doubling(), 30, 10, 2).unwrap();
        let eps = 0.2;
        let l = smoothed_sum_coefficients(30, eps, 1.0)[0];
        let base = correlation_sum_smoothed(Points::of(&t), eps, None).unwrap().value;
        let mut moved = t.flat().to_vec();
        moved[0] += 1e-4;
        let v = correlation_sum_smoothed(Points::new(&moved, 1).unwrap(), eps, None).unwrap().value;
        assert!((v - base).abs() <= l * 1e-4 * (1.0 + 1e-6));
    }
}
