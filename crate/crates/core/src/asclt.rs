//! Almost-sure CLT: log-weighted empirical measures of normalized partial sums.

use serde::{Deserialize, Serialize};

use crate::error::{ensure, Error, Result};
use crate::holder::{invariant_mean, Observable};
use crate::process::{ensemble_map, MapSpec, Trajectory};
use crate::stats::{harmonic, mean, median, moments, normal_cdf_integral, normal_quantile, pairwise_sum};

/// Largest `|E u|` accepted as centered.
pub const CENTERING_TOLERANCE: f64 = 1e-3;

/// Check that `u` has (approximately) zero invariant mean.
pub fn check_centered(map: &MapSpec, u: &Observable) -> Result<()> {
    let m = invariant_mean(map, u)?;
    ensure(m.abs() < CENTERING_TOLERANCE, || {
        Error::Parameter(format!("observable {} has invariant mean {m:.6}; subtract it before forming partial sums", u.name()))
    })
}

/// `S_k = u(X₁) + ⋯ + u(X_k)` after checking centering.
pub fn partial_sums(traj: &Trajectory, u: &Observable) -> Result<Vec<f64>> {
    check_centered(&traj.map, u)?;
    Ok(prefix_sums(&u.series(traj.flat(), traj.dim())))
}

pub fn prefix_sums(values: &[f64]) -> Vec<f64> {
    values
        .iter()
        .scan(0.0, |s, v| {
            *s += v;
            Some(*s)
        })
        .collect()
}

/// `A_n = (1/D_n) Σ_{k≤n} (1/k) δ_{S_k/√k}`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedEmpiricalMeasure {
    pub atoms: Vec<f64>,
    pub weights: Vec<f64>,
}

impl WeightedEmpiricalMeasure {
    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }
}

pub fn weighted_empirical(sums: &[f64]) -> Result<WeightedEmpiricalMeasure> {
    ensure(!sums.is_empty(), || Error::Domain("need at least one partial sum".into()))?;
    let dn = harmonic(sums.len());
    let atoms = sums.iter().enumerate().map(|(k, s)| s / ((k + 1) as f64).sqrt()).collect();
    let weights = (1..=sums.len()).map(|k| 1.0 / (k as f64 * dn)).collect();
    Ok(WeightedEmpiricalMeasure { atoms, weights })
}

/// `∫|F_A − F_{𝒩(0,σ²)}|`, exact up to the Gaussian CDF.
///
/// On each gap between sorted atoms `F_A` is a constant `c`; the integrand
/// changes sign at `σ Φ⁻¹(c)` and both sides integrate in closed form with
/// `∫_{−∞}^{t} Φ(s/σ) ds = σ G(t/σ)`, `G(x) = xΦ(x) + φ(x)`.
pub fn kappa_to_gaussian(a: &WeightedEmpiricalMeasure, sigma2: f64) -> Result<f64> {
    ensure(sigma2 > 0.0 && sigma2.is_finite(), || Error::Domain(format!("σ² = {sigma2} must be positive")))?;
    ensure(!a.is_empty() && a.atoms.len() == a.weights.len(), || Error::Domain("malformed weighted measure".into()))?;
    let sigma = sigma2.sqrt();
    let mut order: Vec<usize> = (0..a.len()).collect();
    // ties broken by weight so the result does not depend on input order
    order.sort_by(|&i, &j| a.atoms[i].total_cmp(&a.atoms[j]).then(a.weights[i].total_cmp(&a.weights[j])));
    let total = pairwise_sum(&order.iter().map(|&i| a.weights[i]).collect::<Vec<_>>());
    let h = |t: f64| sigma * normal_cdf_integral(t / sigma);
    let x: Vec<f64> = order.iter().map(|&i| a.atoms[i]).collect();
    let mut terms = Vec::with_capacity(x.len() + 1);
    terms.push(h(x[0]));
    let mut cum = 0.0;
    for k in 1..x.len() {
        cum += a.weights[order[k - 1]];
        let (lo, hi) = (x[k - 1], x[k]);
        if hi <= lo {
            continue;
        }
        let c = (cum / total).clamp(0.0, 1.0);
        let t = (sigma * normal_quantile(c)).clamp(lo, hi);
        terms.push(c * (t - lo) - (h(t) - h(lo)) + (h(hi) - h(t)) - c * (hi - t));
    }
    // ∫_{x_n}^{∞} (1 − Φ(s/σ)) ds = σ G(−x_n/σ)
    terms.push(sigma * normal_cdf_integral(-x[x.len() - 1] / sigma));
    Ok(pairwise_sum(&terms).max(0.0))
}

/// `n_k = round(exp(k^{1+ρ}))` up to `n_max`, plus `n_max`, deduplicated.
pub fn checkpoints(n_max: usize, rho: f64) -> Result<Vec<usize>> {
    ensure(rho > 0.0 && rho < 1.0, || Error::Parameter(format!("ρ = {rho} outside (0, 1)")))?;
    ensure(n_max >= 1, || Error::Domain("n_max must be positive".into()))?;
    let mut out: Vec<usize> = (1..)
        .map(|k: i32| (k as f64).powf(1.0 + rho).exp().round() as usize)
        .take_while(|n| *n <= n_max)
        .collect();
    out.push(n_max);
    out.dedup();
    Ok(out)
}

/// Per-coordinate coefficients of `K_n = κ(A_n, 𝒩)`: `L_q = (L_u/D_n) Σ_{j=q}^{n} j^{−3/2}`.
pub fn kn_coefficients(n: usize, holder_constant: f64) -> Vec<f64> {
    let dn = harmonic(n);
    let mut out = vec![0.0; n];
    let mut acc = 0.0;
    for q in (1..=n).rev() {
        acc += (q as f64).powf(-1.5);
        out[q - 1] = holder_constant * acc / dn;
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AscltRow {
    pub n: usize,
    pub kappa_median: f64,
    pub kappa_mean: f64,
    pub kappa_var: f64,
    pub kappa_var_stderr: f64,
    /// `D Σ L_q²` for `K_n`.
    pub bound: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AscltReport {
    pub sigma2: f64,
    pub rows: Vec<AscltRow>,
    /// Sample variance of `S_n/√n` at `n_max`: a normality diagnostic against `σ²`.
    pub endpoint_variance: f64,
}

#[derive(Debug, Clone)]
pub struct AscltConfig {
    pub n_max: usize,
    pub rho: f64,
    pub replicas: usize,
    pub burn_in: usize,
    pub d: f64,
    pub master_seed: u64,
}

/// `κ(A_{n_k}, 𝒩(0, σ²))` at each checkpoint, over replicas.
pub fn asclt_experiment(map: &MapSpec, u: &Observable, sigma2: f64, cfg: &AscltConfig) -> Result<AscltReport> {
    ensure(sigma2 > 0.0, || Error::Domain(format!("σ² = {sigma2} must be positive")))?;
    ensure(cfg.replicas >= 2, || Error::Domain("need at least 2 replicas".into()))?;
    check_centered(map, u)?;
    let cps = checkpoints(cfg.n_max, cfg.rho)?;
    let per = ensemble_map(map, cfg.replicas, cfg.n_max, cfg.burn_in, cfg.master_seed, |_, t| {
        let s = prefix_sums(&u.series(t.flat(), t.dim()));
        let kappas = cps
            .iter()
            .map(|&n| kappa_to_gaussian(&weighted_empirical(&s[..n])?, sigma2))
            .collect::<Result<Vec<f64>>>()?;
        Ok((kappas, s[cfg.n_max - 1] / (cfg.n_max as f64).sqrt()))
    })?;
    let rows = cps
        .iter()
        .enumerate()
        .map(|(i, &n)| {
            let col: Vec<f64> = per.iter().map(|(k, _)| k[i]).collect();
            let m = moments(&col)?;
            let bound = cfg.d * pairwise_sum(&kn_coefficients(n, u.holder_constant).iter().map(|l| l * l).collect::<Vec<_>>());
            Ok(AscltRow {
                n,
                kappa_median: median(&col),
                kappa_mean: mean(&col),
                kappa_var: m.variance,
                kappa_var_stderr: m.variance_stderr,
                bound,
                pass: m.variance - 3.0 * m.variance_stderr <= bound,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let ends: Vec<f64> = per.iter().map(|(_, e)| *e).collect();
    Ok(AscltReport { sigma2, rows, endpoint_variance: moments(&ends)?.variance })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad::integrate;
    use crate::stats::normal_cdf;

    #[test]
    fn prefix_sum_cases() {
        assert_eq!(prefix_sums(&[0.0; 5]), vec![0.0; 5]);
        assert_eq!(prefix_sums(&[1.0, -1.0, 1.0, -1.0]), vec![1.0, 0.0, 1.0, 0.0]);
    }

    #[test]
    fn centering_is_enforced() {
        let t = crate::process::generate_trajectory(&MapSpec::doubling(), 10, 0, 1).unwrap();
        assert!(matches!(partial_sums(&t, &Observable::identity()), Err(Error::Parameter(_))));
        assert!(partial_sums(&t, &Observable::cosine()).is_ok());
    }

    #[test]
    fn weights() {
        let a = weighted_empirical(&[0.7]).unwrap();
        assert_eq!((a.atoms.clone(), a.weights.clone()), (vec![0.7], vec![1.0]));
        let b = weighted_empirical(&[1.0, 2.0]).unwrap();
        assert!((b.weights[0] - 2.0 / 3.0).abs() < 1e-15 && (b.weights[1] - 1.0 / 3.0).abs() < 1e-15);
        let big = weighted_empirical(&vec![0.0; 1_000_000]).unwrap();
        assert!((pairwise_sum(&big.weights) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn harmonic_numbers_track_the_logarithm() {
        for n in [1000usize, 10_000, 1_000_000] {
            let dn = harmonic(n);
            assert!((dn - ((n as f64).ln() + 0.5772156649015329)).abs() <= 1.0 / (2.0 * n as f64) + 1e-3);
        }
    }

    #[test]
    fn single_atom_is_mean_absolute_deviation() {
        let a = weighted_empirical(&[0.0]).unwrap();
        let k = kappa_to_gaussian(&a, 1.0).unwrap();
        assert!((k - (2.0 / std::f64::consts::PI).sqrt()).abs() < 1e-12);
        assert!(kappa_to_gaussian(&a, 0.0).is_err());
    }

    #[test]
    fn matches_quadrature_and_ignores_order() {
        let a = WeightedEmpiricalMeasure { atoms: vec![0.3, -1.2, 2.0, 0.3, -0.1], weights: vec![0.1, 0.2, 0.3, 0.15, 0.25] };
        let k = kappa_to_gaussian(&a, 0.7).unwrap();
        let f = |t: f64| a.atoms.iter().zip(&a.weights).filter(|(x, _)| **x <= t).map(|(_, w)| w).sum::<f64>();
        let mut knots: Vec<f64> = a.atoms.clone();
        knots.sort_by(f64::total_cmp);
        knots.insert(0, -40.0);
        knots.push(40.0);
        let q: f64 = knots
            .windows(2)
            .map(|w| integrate(|t| (f(t) - normal_cdf(t / 0.7f64.sqrt())).abs(), w[0], w[1], 1e-13).unwrap())
            .sum();
        assert!((k - q).abs() < 1e-9, "{k} vs {q}");
        let mut b = a.clone();
        b.atoms.reverse();
        b.weights.reverse();
        assert_eq!(kappa_to_gaussian(&b, 0.7).unwrap(), k);
    }

    #[test]
    fn discretized_gaussian_is_close() {
        let m = 2000;
        let atoms: Vec<f64> = (0..m).map(|i| normal_quantile((i as f64 + 0.5) / m as f64)).collect();
        let spacing = atoms.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max);
        let a = WeightedEmpiricalMeasure { atoms, weights: vec![1.0 / m as f64; m] };
        assert!(kappa_to_gaussian(&a, 1.0).unwrap() <= spacing);
    }

    #[test]
    fn dual_with_anchored_test_function() {
        // g(0) = 0 and g' = −sign(F_A − F_𝒩) realizes the supremum in the dual form
        let cases = [
            vec![(0.0, 1.0)],
            vec![(-1.0, 0.5), (1.0, 0.5)],
            vec![(0.2, 0.3), (0.5, 0.7)],
            vec![(-2.0, 0.1), (0.0, 0.2), (1.5, 0.7)],
            vec![(3.0, 1.0)],
        ];
        for case in cases {
            let a = WeightedEmpiricalMeasure { atoms: case.iter().map(|c| c.0).collect(), weights: case.iter().map(|c| c.1).collect() };
            let fa = |t: f64| case.iter().filter(|c| c.0 <= t).map(|c| c.1).sum::<f64>();
            let h = 1e-3;
            let grid: Vec<f64> = (0..=20_000).map(|i| -10.0 + h * i as f64).collect();
            let mut g = vec![0.0; grid.len()];
            let zero = 10_000;
            for i in zero + 1..grid.len() {
                let mid = grid[i] - h / 2.0;
                g[i] = g[i - 1] - h * (fa(mid) - normal_cdf(mid)).signum();
            }
            for i in (0..zero).rev() {
                let mid = grid[i] + h / 2.0;
                g[i] = g[i + 1] + h * (fa(mid) - normal_cdf(mid)).signum();
            }
            let at = |x: f64| g[((x + 10.0) / h).round() as usize];
            let ga: f64 = case.iter().map(|c| c.1 * at(c.0)).sum();
            let gn: f64 = grid.iter().zip(&g).map(|(x, v)| v * crate::stats::normal_pdf(*x) * h).sum();
            let k = kappa_to_gaussian(&a, 1.0).unwrap();
            assert!((ga - gn - k).abs() < 1e-3, "{ga} − {gn} vs {k}");
        }
    }

    #[test]
    fn checkpoint_schedule() {
        assert_eq!(checkpoints(1_000_000, 0.5).unwrap(), vec![3, 17, 181, 2981, 71_707, 1_000_000]);
        assert!(checkpoints(100, 1.0).is_err());
    }

    #[test]
    fn kn_coefficients_decay() {
        let l = kn_coefficients(1000, 1.0);
        assert!(l.windows(2).all(|w| w[1] < w[0]));
        // L_q ≤ (2/√q + q^{−3/2}) / D_n from the integral comparison
        let dn = harmonic(1000);
        for (q, v) in l.iter().enumerate() {
            let q = (q + 1) as f64;
            assert!(*v <= (2.0 / (q - 1.0).max(0.0).sqrt().max(1e-300)).min(3.0) / dn + q.powf(-1.5) / dn);
        }
    }
}
