//! Periodogram, integrated spectral distributions and the sup-deviation experiment.

use std::f64::consts::{PI, TAU};
use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::covariance::{covariance_series, delta_n, CovarianceSeries, Tail};
use crate::error::{ensure, Error, Result};
use crate::exec;
use crate::holder::Observable;
use crate::process::{ensemble_map, MapSpec, Trajectory, DEFAULT_BURN_IN};
use crate::rng::mix;
use crate::stats::{log_log_slope, mean, moments, pairwise_sum};

/// Centering used for `u(X_j)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MeanMode {
    /// Subtract the invariant mean `E u`.
    Exact(f64),
    /// Subtract the sample mean.
    Empirical,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CurveKind {
    RawI,
    JN,
    JTilde,
    JLimit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralCurve {
    pub omegas: Vec<f64>,
    pub values: Vec<f64>,
    pub kind: CurveKind,
}

impl SpectralCurve {
    /// Distribution curves must be nondecreasing, periodograms nonnegative.
    pub fn check_shape(&self, tol: f64) -> bool {
        match self.kind {
            CurveKind::RawI => self.values.iter().all(|v| *v >= -tol),
            _ => self.values.windows(2).all(|w| w[1] >= w[0] - tol),
        }
    }
}

/// `ω_p = 2πp/N` for `p = 0..=N`.
pub fn uniform_grid(points: usize) -> Vec<f64> {
    let n = points.max(1);
    (0..=n).map(|p| if p == n { TAU } else { TAU * p as f64 / n as f64 }).collect()
}

fn check_omega(omega: f64) -> Result<()> {
    ensure((0.0..=TAU).contains(&omega), || Error::Domain(format!("ω = {omega} outside [0, 2π]")))
}

pub fn centered(values: &[f64], mode: MeanMode) -> Vec<f64> {
    let c = match mode {
        MeanMode::Exact(m) => m,
        MeanMode::Empirical => mean(values),
    };
    values.iter().map(|v| v - c).collect()
}

/// `I_n(ω) = (1/n)|Σ_j e^{−ijω} y_j|²` for an already centered series.
pub fn periodogram_of(y: &[f64], omega: f64) -> f64 {
    let (re, im): (Vec<f64>, Vec<f64>) = y
        .iter()
        .enumerate()
        .map(|(j, v)| {
            let (s, c) = ((j + 1) as f64 * omega).sin_cos();
            (v * c, -v * s)
        })
        .unzip();
    let (re, im) = (pairwise_sum(&re), pairwise_sum(&im));
    (re * re + im * im) / y.len() as f64
}

pub fn raw_periodogram(traj: &Trajectory, u: &Observable, mode: MeanMode, omega: f64) -> Result<f64> {
    check_omega(omega)?;
    Ok(periodogram_of(&centered(&u.series(traj.flat(), traj.dim()), mode), omega))
}

/// Closed-form integrated periodogram of one centered series.
///
/// With `R(m) = Σ_j y_j y_{j+m}`, `∫₀^ω I_n = (ω R(0) + 2 Σ_{m≥1} R(m) sin(mω)/m) / n`.
#[derive(Debug, Clone)]
pub struct IntegratedPeriodogram {
    n: usize,
    autocorr: Vec<f64>,
}

impl IntegratedPeriodogram {
    pub fn new(y: &[f64]) -> Self {
        Self { n: y.len(), autocorr: autocorrelation(y) }
    }

    pub fn eval(&self, omega: f64) -> f64 {
        let terms: Vec<f64> =
            self.autocorr[1..].iter().enumerate().map(|(i, r)| r * ((i + 1) as f64 * omega).sin() / (i + 1) as f64).collect();
        (omega * self.autocorr[0] + 2.0 * pairwise_sum(&terms)) / self.n as f64
    }
}

/// Unnormalized autocorrelation `R(m) = Σ_{j} y_j y_{j+m}`, `m = 0..n−1`, via FFT.
pub fn autocorrelation(y: &[f64]) -> Vec<f64> {
    let n = y.len();
    if n <= 64 {
        return (0..n).map(|m| (0..n - m).map(|j| y[j] * y[j + m]).sum()).collect();
    }
    let len = (2 * n).next_power_of_two();
    let mut planner = FftPlanner::<f64>::new();
    let forward: Arc<dyn rustfft::Fft<f64>> = planner.plan_fft_forward(len);
    let inverse = planner.plan_fft_inverse(len);
    let mut buf: Vec<Complex<f64>> = y.iter().map(|v| Complex::new(*v, 0.0)).collect();
    buf.resize(len, Complex::new(0.0, 0.0));
    forward.process(&mut buf);
    for z in buf.iter_mut() {
        *z = Complex::new(z.norm_sqr(), 0.0);
    }
    inverse.process(&mut buf);
    buf[..n].iter().map(|z| z.re / len as f64).collect()
}

/// `J_n(ω)` (exact centering) or `J̃_n(ω)` (empirical centering) in closed form.
pub fn spectral_distribution(traj: &Trajectory, u: &Observable, omega: f64, mode: MeanMode) -> Result<f64> {
    check_omega(omega)?;
    let y = centered(&u.series(traj.flat(), traj.dim()), mode);
    Ok(IntegratedPeriodogram::new(&y).eval(omega))
}

pub fn spectral_curve(traj: &Trajectory, u: &Observable, omegas: &[f64], mode: MeanMode) -> Result<SpectralCurve> {
    for w in omegas {
        check_omega(*w)?;
    }
    let y = centered(&u.series(traj.flat(), traj.dim()), mode);
    let ip = IntegratedPeriodogram::new(&y);
    let kind = match mode {
        MeanMode::Exact(_) => CurveKind::JN,
        MeanMode::Empirical => CurveKind::JTilde,
    };
    Ok(SpectralCurve { omegas: omegas.to_vec(), values: omegas.iter().map(|w| ip.eval(*w)).collect(), kind })
}

/// `J(ω) = C(1) ω + 2 Σ_{k≥1} sin(ωk)/k · C(k+1)`.
///
/// Exact geometric tails are summed to machine precision; a bounded tail is
/// truncated at the stored lags.
pub fn limit_spectral_distribution(series: &CovarianceSeries, omega: f64) -> Result<f64> {
    series.require_summable()?;
    let terms: Vec<f64> =
        series.values[1..].iter().enumerate().map(|(i, c)| c * ((i + 1) as f64 * omega).sin() / (i + 1) as f64).collect();
    let mut tail = 0.0;
    if let Tail::Geometric { scale, ratio } = series.tail {
        // C(k+1) = scale r^{k+1} for k + 1 > m
        let mut k = series.max_lag();
        let mut c = scale * ratio.powi(k as i32 + 1);
        while c.abs() / k as f64 > 1e-18 * (1.0 - ratio.abs()) {
            tail += c * (k as f64 * omega).sin() / k as f64;
            k += 1;
            c *= ratio;
        }
    }
    Ok(series.c1() * omega + 2.0 * (pairwise_sum(&terms) + tail))
}

pub fn limit_curve(series: &CovarianceSeries, omegas: &[f64]) -> Result<SpectralCurve> {
    let values = omegas.iter().map(|w| limit_spectral_distribution(series, *w)).collect::<Result<_>>()?;
    Ok(SpectralCurve { omegas: omegas.to_vec(), values, kind: CurveKind::JLimit })
}

/// Grid sup of `|J̃_n − J|` and the monotonicity bracket that bounds the true sup.
pub fn sup_deviation(jt: &[f64], jl: &[f64]) -> (f64, f64) {
    let grid = jt.iter().zip(jl).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let bracket = (0..jt.len().saturating_sub(1))
        .map(|p| (jt[p + 1] - jl[p]).abs().max((jt[p] - jl[p + 1]).abs()))
        .fold(grid, f64::max);
    (grid, bracket)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SupDeviationRow {
    pub n: usize,
    pub grid: usize,
    /// Monte Carlo mean of the squared grid sup (a lower bound for the true sup).
    pub e_sup2: f64,
    pub e_sup2_stderr: f64,
    /// Monte Carlo mean of the squared monotonicity bracket (an upper bound).
    pub e_bracket2: f64,
    /// `inf_N { N[(C(1)² + D A^{2η} L⁴ (1 + log n)²)/n + Δ_n²] + (C(1)/N + Δ_N)² }`.
    pub envelope_base: Option<f64>,
    /// `Γ · envelope_base` with the fitted `Γ`.
    pub envelope: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SupDeviationTable {
    pub rows: Vec<SupDeviationRow>,
    /// Slope of `log E[sup²]` against `log n`.
    pub slope: Option<f64>,
    /// Smallest constant making the envelope cover every row.
    pub gamma: Option<f64>,
}

pub struct SupDeviationConfig {
    /// Grid size `N_ω`; `None` uses `⌈n^{1/3}⌉`.
    pub grid: Option<usize>,
    pub replicas: usize,
    pub burn_in: usize,
    pub master_seed: u64,
    /// Devroye constant used in the envelope.
    pub d: f64,
    /// Window and lag budget for empirical covariance series of maps without closed forms.
    pub series_window: usize,
    pub series_lags: usize,
}

impl Default for SupDeviationConfig {
    fn default() -> Self {
        Self { grid: None, replicas: 200, burn_in: DEFAULT_BURN_IN, master_seed: 0, d: 1.0, series_window: 1_000_000, series_lags: 64 }
    }
}

pub fn default_grid(n: usize) -> usize {
    let g = (n as f64).cbrt().ceil() as usize;
    // guard against cbrt rounding just above an integer cube
    if (g - 1).pow(3) >= n && g > 1 { g - 1 } else { g.max(1) }
}

/// The sup-deviation rate bracket, minimized over `N ∈ 1..=1000`.
pub fn envelope_base(series: &CovarianceSeries, n: usize, d: f64, bound_a: f64, eta: f64, holder_constant: f64) -> Result<f64> {
    let c1 = series.c1();
    let log_term = 1.0 + (n as f64).ln();
    let dn = delta_n(series, n)?;
    let first = (c1 * c1 + d * bound_a.powf(2.0 * eta) * holder_constant.powi(4) * log_term * log_term) / n as f64 + dn * dn;
    let mut best = f64::INFINITY;
    for big_n in 1..=1000usize {
        let dbig = delta_n(series, big_n)?;
        let v = big_n as f64 * first + (c1 / big_n as f64 + dbig).powi(2);
        best = best.min(v);
    }
    Ok(best)
}

/// Monte Carlo estimate of `E[(sup_ω |J̃_n(ω) − J(ω)|)²]` for each `n`.
pub fn sup_deviation_experiment(
    map: &MapSpec,
    u: &Observable,
    n_grid: &[usize],
    cfg: &SupDeviationConfig,
) -> Result<SupDeviationTable> {
    ensure(!n_grid.is_empty() && n_grid.iter().all(|n| *n >= 1), || Error::Domain("n grid must be nonempty and positive".into()))?;
    ensure(cfg.replicas >= 2, || Error::Domain("need at least 2 replicas".into()))?;
    let series = covariance_series(map, u, cfg.series_window, cfg.series_lags, mix(cfg.master_seed, u64::MAX))?;
    let mut rows = Vec::with_capacity(n_grid.len());
    for (i, &n) in n_grid.iter().enumerate() {
        let grid = cfg.grid.unwrap_or_else(|| default_grid(n));
        let omegas = uniform_grid(grid);
        let jl = limit_curve(&series, &omegas)?.values;
        let per_replica = ensemble_map(map, cfg.replicas, n, cfg.burn_in, mix(cfg.master_seed, i as u64), |_, traj| {
            let jt = spectral_curve(traj, u, &omegas, MeanMode::Empirical)?.values;
            let (s, b) = sup_deviation(&jt, &jl);
            Ok((s * s, b * b))
        })?;
        let (s2, b2): (Vec<f64>, Vec<f64>) = per_replica.into_iter().unzip();
        let m = moments(&s2)?;
        let env = envelope_base(&series, n, cfg.d, map.bound, u.eta, u.holder_constant).ok();
        rows.push(SupDeviationRow {
            n,
            grid,
            e_sup2: m.mean,
            e_sup2_stderr: (m.variance / s2.len() as f64).sqrt(),
            e_bracket2: mean(&b2),
            envelope_base: env,
            envelope: None,
        });
    }
    let gamma = rows
        .iter()
        .map(|r| r.envelope_base.filter(|b| *b > 0.0).map(|b| r.e_sup2 / b))
        .collect::<Option<Vec<f64>>>()
        .map(|g| g.into_iter().fold(0.0, f64::max));
    if let Some(g) = gamma {
        for r in rows.iter_mut() {
            r.envelope = r.envelope_base.map(|b| g * b);
        }
    }
    let slope = if rows.len() >= 2 && rows.iter().all(|r| r.e_sup2 > 0.0) {
        let xs: Vec<f64> = rows.iter().map(|r| r.n as f64).collect();
        let ys: Vec<f64> = rows.iter().map(|r| r.e_sup2).collect();
        Some(log_log_slope(&xs, &ys)?.slope)
    } else {
        None
    };
    Ok(SupDeviationTable { rows, slope, gamma })
}

/// Largest `|Σ_{k≤m} sin(kω)/k|` over `m ≤ m_max` along one ω, pruned against `floor`.
fn partial_sum_peak(omega: f64, m_max: usize, floor: f64) -> f64 {
    let half = (omega / 2.0).sin();
    let mut s = 0.0;
    let mut best = 0.0f64;
    for k in 1..=m_max {
        s += (k as f64 * omega).sin() / k as f64;
        best = best.max(s.abs());
        // |Σ_{j>k} sin(jω)/j| ≤ 1/((k+1) sin(ω/2))
        if half > 0.0 && s.abs() + 1.0 / ((k + 1) as f64 * half) <= floor.max(best) {
            break;
        }
    }
    best
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrigSup {
    pub sup: f64,
    pub omega: f64,
    /// Final grid size on `[0, π]`.
    pub grid: usize,
}

/// `sup_{m ≤ m_max, ω ∈ grid} |Σ_{k=1}^m sin(kω)/k|`, doubling the grid until
/// the value changes by less than `1e-6`.
///
/// The sum is odd under `ω ↦ 2π − ω`, so the grid `ω_p = πp/G` on `[0, π]` covers `[0, 2π]`.
pub fn trig_partial_sum_sup(m_max: usize, grid_size: usize) -> Result<TrigSup> {
    ensure(m_max >= 1, || Error::Domain("m_max must be at least 1".into()))?;
    ensure(grid_size >= 1, || Error::Domain("grid size must be at least 1".into()))?;
    const MAX_GRID: usize = 1 << 26;
    let mut g = grid_size;
    let mut prev: Option<TrigSup> = None;
    loop {
        let floor = prev.map_or(0.0, |p| p.sup);
        // odd points are new; even points were evaluated at the previous level
        let step = if prev.is_some() { 2 } else { 1 };
        let start = if prev.is_some() { 1 } else { 0 };
        let count = (g - start) / step + 1;
        let peaks = exec::map_indexed(count, |i| {
            let p = start + i * step;
            let w = PI * p as f64 / g as f64;
            (partial_sum_peak(w, m_max, floor), w)
        });
        let mut cur = prev.unwrap_or(TrigSup { sup: 0.0, omega: 0.0, grid: g });
        for (v, w) in peaks {
            if v > cur.sup {
                cur.sup = v;
                cur.omega = w;
            }
        }
        cur.grid = g;
        if let Some(p) = prev {
            if cur.sup - p.sup < 1e-6 || g >= MAX_GRID {
                return Ok(cur);
            }
        }
        prev = Some(cur);
        g *= 2;
    }
}
