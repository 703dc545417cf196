//! Auto-covariance estimation and the series functionals derived from it.
//!
//! Indexing follows `C(ℓ) = E[u(X₁)u(X_ℓ)] − (E u)²`, so `C(1)` is the
//! variance of `u(X₁)` and `C(ℓ + 1)` is the covariance at time separation
//! `ℓ`. The estimator `Ĉ_k(ℓ)` pairs `X_j` with `X_{j+ℓ−1}` accordingly.

use serde::{Deserialize, Serialize};

use crate::error::{ensure, Error, Result};
use crate::holder::observable::{Observable, ObservableKind};
use crate::process::{generate_trajectory, AnalyticDensity, MapId, MapSpec, Trajectory, DEFAULT_BURN_IN};
use crate::stats::{fit_line, pairwise_sum};

/// `Ĉ_k(ℓ) = (1/k) Σ_{j≤k} u_j u_{j+ℓ−1} − ((1/k) Σ_{j≤k} u_j)²` on a precomputed series `u_j = u(X_j)`.
pub fn autocovariance_of(values: &[f64], lag: usize, k: usize) -> Result<f64> {
    ensure(lag >= 1 && k >= 1, || Error::Domain("lag and window must be positive".into()))?;
    ensure(values.len() >= k + lag, || {
        Error::Bounds(format!("series of length {} shorter than k + lag = {}", values.len(), k + lag))
    })?;
    // shifting by c = u_1 leaves the value unchanged up to c (ā_lag − ā) and limits cancellation
    let c = values[0];
    let a: Vec<f64> = values[..k + lag - 1].iter().map(|v| v - c).collect();
    let products: Vec<f64> = (0..k).map(|j| a[j] * a[j + lag - 1]).collect();
    let mean = pairwise_sum(&a[..k]) / k as f64;
    let lagged_mean = pairwise_sum(&a[lag - 1..lag - 1 + k]) / k as f64;
    Ok(pairwise_sum(&products) / k as f64 - mean * mean + c * (lagged_mean - mean))
}

pub fn autocovariance(traj: &Trajectory, u: &Observable, lag: usize, k: usize) -> Result<f64> {
    autocovariance_of(&u.series(traj.flat(), traj.dim()), lag, k)
}

/// Right-hand side of the mean-square error bound for `Ĉ_k(n)`:
/// `16 D L_u⁴ A^{2η} (n + k)/k² + D² L_u⁴/k²`.
pub fn covariance_variance_bound(k: usize, n: usize, holder_constant: f64, bound_a: f64, eta: f64, d: f64) -> f64 {
    let k = k as f64;
    let l4 = holder_constant.powi(4);
    16.0 * d * l4 * bound_a.powf(2.0 * eta) * (n as f64 + k) / (k * k) + d * d * l4 / (k * k)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Source {
    Empirical,
    Analytic,
}

/// Behaviour of `C(ℓ)` beyond the stored lags.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Tail {
    /// `C(ℓ) = 0` beyond the stored lags.
    Zero,
    /// `C(ℓ) = scale · ratio^ℓ` exactly.
    Geometric { scale: f64, ratio: f64 },
    /// Only `|C(ℓ)| ≤ scale · ratio^ℓ` is known.
    Bounded { scale: f64, ratio: f64 },
    /// Nothing is known.
    Unknown,
}

impl Tail {
    fn ratio(&self) -> Option<f64> {
        match self {
            Tail::Geometric { ratio, .. } | Tail::Bounded { ratio, .. } => Some(*ratio),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CovarianceSeries {
    pub observable: String,
    /// `values[i] = C(i + 1)`.
    pub values: Vec<f64>,
    pub source: Source,
    pub tail: Tail,
}

impl CovarianceSeries {
    pub fn new(observable: impl Into<String>, values: Vec<f64>, source: Source, tail: Tail) -> Result<Self> {
        ensure(!values.is_empty(), || Error::InsufficientData("empty covariance series".into()))?;
        ensure(values.iter().all(|v| v.is_finite()), || Error::Evaluation("non-finite covariance".into()))?;
        Ok(Self { observable: observable.into(), values, source, tail })
    }

    /// `C(1) = c`, everything else zero.
    pub fn white(c1: f64) -> Self {
        Self::new("white", vec![c1], Source::Analytic, Tail::Zero).expect("finite")
    }

    /// Exact geometric series `C(ℓ + 1) = c1 · r^ℓ`, stored up to `stored` lags.
    pub fn geometric(c1: f64, r: f64, stored: usize) -> Self {
        let values = (0..stored.max(1)).map(|l| c1 * r.powi(l as i32)).collect();
        // C(ℓ) = (c1/r) r^ℓ for ℓ > stored
        Self::new("geometric", values, Source::Analytic, Tail::Geometric { scale: c1 / r, ratio: r }).expect("finite")
    }

    pub fn max_lag(&self) -> usize {
        self.values.len()
    }

    pub fn c1(&self) -> f64 {
        self.values[0]
    }

    /// `C(ℓ)` for `ℓ ≥ 1` when it is determined (stored, zero tail or exact geometric tail).
    pub fn value(&self, lag: usize) -> Option<f64> {
        if lag == 0 {
            return None;
        }
        if lag <= self.values.len() {
            return Some(self.values[lag - 1]);
        }
        match self.tail {
            Tail::Zero => Some(0.0),
            Tail::Geometric { scale, ratio } => Some(scale * ratio.powi(lag as i32)),
            _ => None,
        }
    }

    /// Upper estimate of `|C(ℓ)|`.
    pub fn abs_bound(&self, lag: usize) -> Option<f64> {
        if let Some(v) = self.value(lag) {
            return Some(v.abs());
        }
        match self.tail {
            Tail::Bounded { scale, ratio } => Some(scale * ratio.powi(lag as i32)),
            _ => None,
        }
    }

    pub(crate) fn require_summable(&self) -> Result<()> {
        if let Some(r) = self.tail.ratio() {
            ensure(r.abs() < 1.0, || Error::NonSummable(format!("tail ratio {r} is not below 1")))?;
        }
        ensure(self.tail != Tail::Unknown, || {
            Error::InsufficientData(format!("series stops at lag {} with no tail model", self.values.len()))
        })
    }

    /// `Σ_{ℓ>m} w(ℓ) |C(ℓ)|`-style tail sums for a nonnegative decreasing weight.
    fn tail_sum(&self, from_lag: usize, weight: impl Fn(usize) -> f64) -> Result<f64> {
        self.require_summable()?;
        let (scale, ratio) = match self.tail {
            Tail::Zero => return Ok(0.0),
            Tail::Geometric { scale, ratio } | Tail::Bounded { scale, ratio } => (scale.abs(), ratio.abs()),
            Tail::Unknown => unreachable!(),
        };
        if scale == 0.0 || ratio == 0.0 {
            return Ok(0.0);
        }
        let mut sum = 0.0;
        let mut lag = from_lag;
        let mut term_base = scale * ratio.powi(lag as i32);
        loop {
            let term = term_base * weight(lag);
            sum += term;
            // remaining terms are at most term · r/(1 − r)
            if term * ratio / (1.0 - ratio) <= 1e-17 * sum.max(1e-300) || term_base < 1e-300 {
                break;
            }
            lag += 1;
            term_base *= ratio;
        }
        Ok(sum)
    }
}

/// Series `Ĉ_k(1), …, Ĉ_k(max_lag)` from one trajectory, with a fitted tail.
pub fn empirical_series(traj: &Trajectory, u: &Observable, k: usize, max_lag: usize) -> Result<CovarianceSeries> {
    let values = u.series(traj.flat(), traj.dim());
    let cs: Vec<f64> = (1..=max_lag).map(|l| autocovariance_of(&values, l, k)).collect::<Result<_>>()?;
    let noise = 4.0 * cs[0].abs() / (k as f64).sqrt();
    let tail = fit_tail(&cs, noise);
    CovarianceSeries::new(u.name(), cs, Source::Empirical, tail)
}

/// Geometric envelope `|C(ℓ)| ≤ c rᶩ` fitted on the last decade of stored lags.
///
/// Values whose magnitude is below `noise_floor` count as zero; a window
/// that is entirely below it yields [`Tail::Zero`].
pub fn fit_tail(values: &[f64], noise_floor: f64) -> Tail {
    let m = values.len();
    let width = (m / 10).max(10).min(m);
    let start = m - width;
    let pts: Vec<(f64, f64)> = values[start..]
        .iter()
        .enumerate()
        .filter(|(_, v)| v.abs() > noise_floor && v.abs() > 0.0)
        .map(|(i, v)| ((start + i + 1) as f64, v.abs().ln()))
        .collect();
    if pts.is_empty() {
        return Tail::Zero;
    }
    let ratio = if pts.len() >= 2 {
        let xs: Vec<f64> = pts.iter().map(|p| p.0).collect();
        let ys: Vec<f64> = pts.iter().map(|p| p.1).collect();
        fit_line(&xs, &ys).map(|f| f.slope.exp()).unwrap_or(1.0)
    } else {
        1.0
    };
    let scale = pts.iter().map(|(l, lv)| (lv - l * ratio.ln()).exp()).fold(0.0, f64::max);
    Tail::Bounded { scale, ratio }
}

/// `Δ_n = (2/n) Σ_{k=1}^{n−1} |C(k+1)| + 2 Σ_{k≥n} |C(k+1)|/k`.
pub fn delta_n(series: &CovarianceSeries, n: usize) -> Result<f64> {
    ensure(n >= 1, || Error::Domain("Δ_n needs n ≥ 1".into()))?;
    let m = series.max_lag();
    let missing = |lag: usize| Error::InsufficientData(format!("|C({lag})| unavailable"));
    let first: Vec<f64> = (1..n)
        .map(|k| series.abs_bound(k + 1).ok_or_else(|| missing(k + 1)))
        .collect::<Result<_>>()?;
    let first = 2.0 * pairwise_sum(&first) / n as f64;
    // stored part of the second sum: k from n while k + 1 ≤ m
    let stored: Vec<f64> = (n..m.max(n)).map(|k| series.values[k] .abs() / k as f64).collect();
    let stored = pairwise_sum(&stored);
    // lags beyond storage: C(k+1) with k + 1 > max(m, n)
    let from = m.max(n) + 1;
    let tail = series.tail_sum(from, |lag| 1.0 / (lag - 1) as f64)?;
    Ok(first + 2.0 * (stored + tail))
}

/// `σ² = C(1) + 2 Σ_{ℓ≥2} C(ℓ)` with a truncation bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SigmaSquared {
    pub value: f64,
    /// Bound on the omitted tail `2 Σ_{ℓ>m} |C(ℓ)|` (zero when the tail is exact).
    pub tail_bound: f64,
    /// Set when the estimate is negative (the true value is never negative).
    pub negative: bool,
}

pub const SUMMABILITY_TOLERANCE: f64 = 1e-2;

pub fn sigma_squared(series: &CovarianceSeries) -> Result<SigmaSquared> {
    sigma_squared_with_tolerance(series, SUMMABILITY_TOLERANCE)
}

pub fn sigma_squared_with_tolerance(series: &CovarianceSeries, tol: f64) -> Result<SigmaSquared> {
    series.require_summable()?;
    let partial = series.values[0] + 2.0 * pairwise_sum(&series.values[1..]);
    let m = series.max_lag();
    let (value, tail_bound) = match series.tail {
        Tail::Zero => (partial, 0.0),
        Tail::Geometric { scale, ratio } => (partial + 2.0 * scale * ratio.powi(m as i32 + 1) / (1.0 - ratio), 0.0),
        Tail::Bounded { scale, ratio } => (partial, 2.0 * scale.abs() * ratio.powi(m as i32 + 1) / (1.0 - ratio)),
        Tail::Unknown => unreachable!(),
    };
    ensure(tail_bound <= tol, || {
        Error::NonSummable(format!("partial sums not Cauchy: tail bound {tail_bound:.3e} above {tol:.1e}"))
    })?;
    Ok(SigmaSquared { value, tail_bound, negative: value < 0.0 })
}

/// Closed-form covariance series for catalog (map, observable) pairs.
///
/// Covers i.i.d. draws (any observable), trigonometric observables on the
/// doubling map and cosine-only ones on the tent map (both act on Fourier
/// modes by frequency doubling), and the identity on the doubling, tent and
/// logistic-4 maps.
pub fn analytic_series(map: &MapSpec, u: &Observable) -> Result<Option<CovarianceSeries>> {
    let series = |values: Vec<f64>| CovarianceSeries::new(u.name(), values, Source::Analytic, Tail::Zero).map(Some);
    let modes = |u: &Observable| -> Option<(Vec<f64>, Vec<f64>)> {
        match &u.kind {
            ObservableKind::Cosine2Pi => Some((vec![1.0], vec![])),
            ObservableKind::TrigPolynomial { cos, sin } => Some((cos.clone(), sin.clone())),
            _ => None,
        }
    };
    match (map.id, map.analytic_density) {
        (MapId::IidUniform, Some(d)) => {
            let m = u.mean_under(d)?;
            let second = u.clone().shifted(m);
            let v = crate::quad::integrate(|x| second.eval_scalar(x).powi(2), 0.0, 1.0, 1e-14)?;
            let _ = d;
            series(vec![v])
        }
        (MapId::Doubling, _) | (MapId::Tent, _) => {
            if let Some((cos, sin)) = modes(u) {
                if map.id == MapId::Tent && sin.iter().any(|b| *b != 0.0) {
                    return Ok(None);
                }
                // E[u(x) u(2^m x)] pairs mode j with mode j·2^m
                let top = cos.len().max(sin.len());
                let coef = |v: &Vec<f64>, k: usize| v.get(k - 1).copied().unwrap_or(0.0);
                let mut values = Vec::new();
                let mut shift = 0u32;
                loop {
                    let step = 1usize << shift;
                    if step > top && shift > 0 {
                        break;
                    }
                    let mut c = 0.0;
                    for j in 1..=top {
                        let k = j * step;
                        if k > top {
                            break;
                        }
                        c += 0.5 * (coef(&cos, k) * coef(&cos, j) + coef(&sin, k) * coef(&sin, j));
                    }
                    values.push(c);
                    shift += 1;
                }
                return series(values);
            }
            if u.kind == ObservableKind::Identity {
                return match map.id {
                    // cov(x, 2^m x mod 1) = 2^{−m}/12
                    MapId::Doubling => Ok(Some(CovarianceSeries::geometric(1.0 / 12.0, 0.5, 64))),
                    _ => series(vec![1.0 / 12.0]),
                };
            }
            Ok(None)
        }
        (MapId::Logistic, Some(AnalyticDensity::Arcsine)) if u.kind == ObservableKind::Identity => {
            // x = (1 − cos 2πy)/2 conjugates to the tent map
            series(vec![1.0 / 8.0])
        }
        _ => Ok(None),
    }
}

/// Analytic series when the catalog has one, else an empirical series from a
/// trajectory of length `k + max_lag` keyed by `seed`.
pub fn covariance_series(
    map: &MapSpec,
    u: &Observable,
    k: usize,
    max_lag: usize,
    seed: u64,
) -> Result<CovarianceSeries> {
    if let Some(s) = analytic_series(map, u)? {
        return Ok(s);
    }
    let traj = generate_trajectory(map, k + max_lag, DEFAULT_BURN_IN, seed)?;
    empirical_series(&traj, u, k, max_lag)
}

/// Per-observable outcome of the uniform summability check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummabilityEntry {
    pub observable: String,
    pub holder_norm: f64,
    pub abs_sum: f64,
    pub tail_bound: f64,
    /// `(Σ|Ĉ(ℓ)| + tail) / ‖u‖²_η`; `None` when the norm vanishes and the sum does not.
    pub ratio: Option<f64>,
    pub decaying: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummabilityReport {
    /// Largest ratio over the family: an empirical `C_η`.
    pub c_eta: f64,
    pub entries: Vec<SummabilityEntry>,
}

/// Estimate the constant in `Σ_ℓ |C_u(ℓ)| ≤ C_η ‖u‖²_η` over a family of observables.
pub fn check_summability(
    map: &MapSpec,
    eta: f64,
    family: &[Observable],
    lag_budget: usize,
    k: usize,
    seed: u64,
) -> Result<SummabilityReport> {
    ensure(!family.is_empty(), || Error::Parameter("observable family is empty".into()))?;
    let traj = generate_trajectory(map, k + lag_budget, DEFAULT_BURN_IN, seed)?;
    let mut entries = Vec::with_capacity(family.len());
    for u in family {
        let u = u.clone().with_eta(eta)?;
        let s = empirical_series(&traj, &u, k, lag_budget)?;
        let noise = 4.0 * s.c1().abs() / (k as f64).sqrt();
        let abs_sum = pairwise_sum(&s.values.iter().map(|v| v.abs()).collect::<Vec<_>>());
        let (tail_bound, decaying) = match s.tail {
            Tail::Zero => (0.0, true),
            Tail::Bounded { scale, ratio } if ratio < 1.0 => {
                (scale * ratio.powi(lag_budget as i32 + 1) / (1.0 - ratio), true)
            }
            _ => (0.0, false),
        };
        let _ = noise;
        let norm = u.holder_constant;
        let total = abs_sum + tail_bound;
        let ratio = if norm > 0.0 {
            Some(total / (norm * norm))
        } else if total == 0.0 {
            Some(0.0)
        } else {
            None
        };
        entries.push(SummabilityEntry { observable: u.name(), holder_norm: norm, abs_sum, tail_bound, ratio, decaying });
    }
    let c_eta = entries.iter().filter_map(|e| e.ratio).fold(0.0, f64::max);
    Ok(SummabilityReport { c_eta, entries })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_observable_has_zero_covariance() {
        let t = generate_trajectory(&MapSpec::doubling(), 200, 0, 1).unwrap();
        let u = Observable::constant(3.7);
        for (lag, k) in [(1, 10), (5, 100), (50, 150)] {
            assert_eq!(autocovariance(&t, &u, lag, k).unwrap(), 0.0);
        }
    }

    #[test]
    fn short_series_is_a_bounds_error() {
        let t = generate_trajectory(&MapSpec::doubling(), 20, 0, 1).unwrap();
        assert!(matches!(autocovariance(&t, &Observable::identity(), 5, 16), Err(Error::Bounds(_))));
    }

    #[test]
    fn lag_one_is_shift_invariant_and_scales_quadratically() {
        let t = generate_trajectory(&MapSpec::logistic(4.0).unwrap(), 1000, 10, 4).unwrap();
        let u = Observable::identity();
        let base = autocovariance(&t, &u, 1, 900).unwrap();
        let shifted = autocovariance(&t, &u.clone().shifted(-2.5), 1, 900).unwrap();
        assert!((base - shifted).abs() < 1e-12);
        let scaled = autocovariance(&t, &u.scaled(3.0), 1, 900).unwrap();
        assert!((scaled - 9.0 * base).abs() < 1e-12);
    }

    #[test]
    fn shift_changes_higher_lags_only_through_window_edges() {
        // Ĉ(u + c) − Ĉ(u) = c (ū_{lagged} − ū) exactly
        let t = generate_trajectory(&MapSpec::tent(), 600, 10, 4).unwrap();
        let u = Observable::identity();
        let vals = u.series(t.flat(), 1);
        let (lag, k, c) = (7, 500, 0.75);
        let lagged_mean = vals[lag - 1..lag - 1 + k].iter().sum::<f64>() / k as f64;
        let mean = vals[..k].iter().sum::<f64>() / k as f64;
        let diff = autocovariance(&t, &u.clone().shifted(-c), lag, k).unwrap() - autocovariance(&t, &u, lag, k).unwrap();
        assert!((diff - c * (lagged_mean - mean)).abs() < 1e-12);
    }

    #[test]
    fn variance_bound_formula() {
        let b = covariance_variance_bound(100, 100, 1.0, 1.0, 1.0, 1.0);
        assert!((b - 0.3201).abs() < 1e-15);
        assert_eq!(covariance_variance_bound(100, 100, 0.0, 1.0, 1.0, 1.0), 0.0);
        for k in [10, 100, 1000] {
            assert!(
                covariance_variance_bound(2 * k, 10, 1.3, 1.0, 1.0, 0.7)
                    < covariance_variance_bound(k, 10, 1.3, 1.0, 1.0, 0.7)
            );
        }
    }

    #[test]
    fn delta_n_hand_cases() {
        let zero_beyond_one = CovarianceSeries::white(0.7);
        for n in 1..20 {
            assert_eq!(delta_n(&zero_beyond_one, n).unwrap(), 0.0);
        }
        let c = 0.3;
        let s = CovarianceSeries::new("x", vec![1.0, c], Source::Analytic, Tail::Zero).unwrap();
        assert!((delta_n(&s, 1).unwrap() - 2.0 * c).abs() < 1e-15);
        for n in 2..10 {
            assert!((delta_n(&s, n).unwrap() - 2.0 * c / n as f64).abs() < 1e-15);
        }
    }

    /// Brute-force partial sums of the defining series.
    fn delta_brute(c: impl Fn(usize) -> f64, n: usize, terms: usize) -> f64 {
        let first: f64 = (1..n).map(|k| c(k + 1).abs()).sum::<f64>() * 2.0 / n as f64;
        let second: f64 = (n..n + terms).map(|k| c(k + 1).abs() / k as f64).sum::<f64>() * 2.0;
        first + second
    }

    #[test]
    fn delta_n_geometric_matches_brute_force() {
        for r in [0.5, 0.9, 0.99] {
            let s = CovarianceSeries::geometric(1.0, r, 20);
            for n in [1, 5, 20, 50] {
                let brute = delta_brute(|l| r.powi(l as i32 - 1), n, 1_000_000);
                let v = delta_n(&s, n).unwrap();
                assert!((v - brute).abs() < 1e-10, "r={r} n={n}: {v} vs {brute}");
            }
        }
    }

    #[test]
    fn delta_n_is_nonincreasing_for_decreasing_series() {
        let s = CovarianceSeries::geometric(0.2, 0.8, 30);
        let vals: Vec<f64> = (1..200).map(|n| delta_n(&s, n).unwrap()).collect();
        assert!(vals.windows(2).all(|w| w[1] <= w[0] + 1e-15));
    }

    #[test]
    fn delta_without_tail_is_insufficient() {
        let s = CovarianceSeries::new("x", vec![1.0, 0.5], Source::Empirical, Tail::Unknown).unwrap();
        assert!(matches!(delta_n(&s, 3), Err(Error::InsufficientData(_))));
    }

    #[test]
    fn sigma_squared_cases() {
        assert_eq!(sigma_squared(&CovarianceSeries::white(0.25)).unwrap().value, 0.25);
        assert_eq!(sigma_squared(&CovarianceSeries::white(0.0)).unwrap().value, 0.0);
        let g = sigma_squared(&CovarianceSeries::geometric(1.0 / 12.0, 0.5, 8)).unwrap();
        assert!((g.value - 0.25).abs() < 1e-15);
        let diverging =
            CovarianceSeries::new("x", vec![1.0; 5], Source::Empirical, Tail::Bounded { scale: 1.0, ratio: 1.0 })
                .unwrap();
        assert!(matches!(sigma_squared(&diverging), Err(Error::NonSummable(_))));
    }

    #[test]
    fn analytic_series_catalog() {
        let d = analytic_series(&MapSpec::doubling(), &Observable::cosine()).unwrap().unwrap();
        assert_eq!(d.values, vec![0.5]);
        let iid = analytic_series(&MapSpec::iid_uniform(), &Observable::identity()).unwrap().unwrap();
        assert!((iid.values[0] - 1.0 / 12.0).abs() < 1e-14);
        let trig = Observable::new(
            ObservableKind::TrigPolynomial { cos: vec![1.0, 0.5, 0.0, 0.25], sin: vec![] },
            1.0,
            (0.0, 1.0),
        )
        .unwrap();
        let s = analytic_series(&MapSpec::doubling(), &trig).unwrap().unwrap();
        // modes 1,2,4: C(1) = (1 + .25 + .0625)/2, C(2) = (.5·1 + .25·.5)/2, C(3) = (.25·1)/2
        assert_eq!(s.values, vec![0.65625, 0.3125, 0.125]);
    }

    #[test]
    fn analytic_series_agree_with_long_orbits() {
        let cases = [
            (MapSpec::doubling(), Observable::identity()),
            (MapSpec::tent(), Observable::identity()),
            (MapSpec::tent(), Observable::cosine()),
            (MapSpec::logistic(4.0).unwrap(), Observable::identity()),
        ];
        for (map, u) in cases {
            let a = analytic_series(&map, &u).unwrap().unwrap();
            let t = generate_trajectory(&map, 1_000_010, 100, 21).unwrap();
            let e = empirical_series(&t, &u, 1_000_000, 6).unwrap();
            for lag in 1..=6 {
                let (x, y) = (a.value(lag).unwrap(), e.values[lag - 1]);
                assert!((x - y).abs() < 3e-3, "{map} {} lag {lag}: {x} vs {y}", u.name());
            }
        }
    }

    #[test]
    fn summability_hand_cases() {
        let family = [Observable::constant(1.0), Observable::constant(-2.0)];
        let r = check_summability(&MapSpec::doubling(), 1.0, &family, 10, 10_000, 3).unwrap();
        assert_eq!(r.c_eta, 0.0);
        let r = check_summability(&MapSpec::iid_uniform(), 1.0, &[Observable::identity()], 20, 1_000_000, 3).unwrap();
        assert!((r.c_eta - 1.0 / 12.0).abs() < 0.01, "{}", r.c_eta);
    }
}
