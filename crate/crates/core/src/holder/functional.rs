//! Separately Hölder functionals of `n` points and their coefficients `L_j`.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use serde::{Deserialize, Serialize};

use super::observable::Observable;
use crate::asclt::{kappa_to_gaussian, kn_coefficients, prefix_sums, weighted_empirical};
use crate::covariance::autocovariance_of;
use crate::dimension::{correlation_sum_smoothed, smoothed_sum_coefficients, Points};
use crate::error::{ensure, Error, Result};
use crate::measure::{kantorovich_to, EmpiricalMeasure};
use crate::rng::{mix, StreamRng};
use crate::stats::pairwise_sum;

/// A real function of `arity` points in `R^dim`, given as a flat buffer.
pub trait Functional: Sync + Send {
    fn name(&self) -> String;
    fn arity(&self) -> usize;
    fn eta(&self) -> f64 {
        1.0
    }
    fn evaluate(&self, flat: &[f64], dim: usize) -> Result<f64>;
    /// Closed-form `L_j`, when known.
    fn coefficients(&self) -> Option<Vec<f64>> {
        None
    }
}

/// `Σ L_j²` scaled by `D`.
pub fn devroye_bound(l: &[f64], d: f64) -> f64 {
    d * pairwise_sum(&l.iter().map(|v| v * v).collect::<Vec<_>>())
}

/// Per-coordinate coefficients with their provenance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Coefficients {
    pub values: Vec<f64>,
    /// Probed lower bounds rather than closed-form constants.
    pub estimated: bool,
}

pub const PROBE_BASE_POINTS: usize = 64;
pub const PROBE_SCALES: usize = 16;

/// Closed-form coefficients for catalog functionals, probing otherwise.
pub fn lj_coefficients(k: &dyn Functional, domain: &[(f64, f64)], seed: u64) -> Result<Coefficients> {
    match k.coefficients() {
        Some(values) => Ok(Coefficients { values, estimated: false }),
        None => Ok(Coefficients { values: probe_coefficients(k, domain, PROBE_BASE_POINTS, PROBE_SCALES, seed)?, estimated: true }),
    }
}

/// Largest observed `|ΔK| / ‖Δx_j‖^η` per coordinate.
///
/// Base points mix uniform draws from the box with random box corners;
/// perturbation sizes run over `scales` dyadic fractions of the box
/// diameter in random directions. The result is a lower bound on `L_j`.
pub fn probe_coefficients(
    k: &dyn Functional,
    domain: &[(f64, f64)],
    base_points: usize,
    scales: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    let dim = domain.len();
    ensure(dim >= 1 && domain.iter().all(|(a, b)| b > a), || Error::Parameter("probe box must be nonempty".into()))?;
    let n = k.arity();
    let diam = domain.iter().map(|(a, b)| (b - a) * (b - a)).sum::<f64>().sqrt();
    let coords = crate::exec::map_indexed(n, |j| -> Result<f64> {
        let mut rng = StreamRng::seed_from_u64(mix(seed, j as u64));
        let mut best = 0.0f64;
        let mut best_point: Option<Vec<f64>> = None;
        for b in 0..base_points {
            let corner = b % 2 == 1;
            let mut x: Vec<f64> = (0..n * dim)
                .map(|i| {
                    let (lo, hi) = domain[i % dim];
                    if corner {
                        if rng.random::<bool>() { hi } else { lo }
                    } else {
                        lo + (hi - lo) * rng.random::<f64>()
                    }
                })
                .collect();
            let base = k.evaluate(&x, dim)?;
            ensure(base.is_finite(), || Error::Evaluation(format!("{} is not finite at a probe point", k.name())))?;
            for s in 0..scales {
                let h = diam * 0.5f64.powi(s as i32 + 1);
                let saved: Vec<f64> = x[j * dim..(j + 1) * dim].to_vec();
                let mut moved = 0.0;
                for c in 0..dim {
                    let dir = if rng.random::<bool>() { 1.0 } else { -1.0 };
                    let (lo, hi) = domain[c];
                    let target = (saved[c] + dir * h / (dim as f64).sqrt()).clamp(lo, hi);
                    x[j * dim + c] = target;
                    moved += (target - saved[c]).powi(2);
                }
                let moved = moved.sqrt();
                if moved > 0.0 {
                    let v = k.evaluate(&x, dim)?;
                    let r = (v - base).abs() / moved.powf(k.eta());
                    if r > best {
                        best = r;
                        best_point = Some(saved_point(&x, j, dim, &saved));
                    }
                }
                x[j * dim..(j + 1) * dim].copy_from_slice(&saved);
            }
        }
        if let Some(mut x) = best_point.filter(|x| x.len() <= REFINE_MAX_COORDS) {
            // corner hill-climb from the best base point
            let slope = |x: &mut Vec<f64>| -> Result<f64> { axis_slope(k, x, j, dim, domain, diam, scales) };
            best = best.max(slope(&mut x)?);
            for _ in 0..REFINE_SWEEPS {
                let mut improved = false;
                for i in 0..x.len() {
                    let (lo, hi) = domain[i % dim];
                    for v in [lo, hi] {
                        let keep = x[i];
                        x[i] = v;
                        let r = slope(&mut x)?;
                        if r > best * (1.0 + 1e-12) {
                            best = r;
                            improved = true;
                        } else {
                            x[i] = keep;
                        }
                    }
                }
                if !improved {
                    break;
                }
            }
        }
        Ok(best)
    });
    coords.into_iter().collect()
}

/// Points with more coordinates than this skip the corner hill-climb.
const REFINE_MAX_COORDS: usize = 256;
const REFINE_SWEEPS: usize = 3;

fn saved_point(x: &[f64], j: usize, dim: usize, saved: &[f64]) -> Vec<f64> {
    let mut p = x.to_vec();
    p[j * dim..(j + 1) * dim].copy_from_slice(saved);
    p
}

/// Largest two-sided difference quotient along each axis of point `j`.
fn axis_slope(
    k: &dyn Functional,
    x: &mut [f64],
    j: usize,
    dim: usize,
    domain: &[(f64, f64)],
    diam: f64,
    scales: usize,
) -> Result<f64> {
    let base = k.evaluate(x, dim)?;
    let mut best = 0.0f64;
    for (c, &(lo, hi)) in domain.iter().enumerate().take(dim) {
        let idx = j * dim + c;
        let saved = x[idx];
        for s in 0..scales {
            let h = diam * 0.5f64.powi(s as i32 + 1);
            for dir in [1.0, -1.0] {
                let target = (saved + dir * h).clamp(lo, hi);
                let moved = (target - saved).abs();
                if moved > 0.0 {
                    x[idx] = target;
                    let v = k.evaluate(x, dim)?;
                    best = best.max((v - base).abs() / moved.powf(k.eta()));
                }
            }
        }
        x[idx] = saved;
    }
    Ok(best)
}

/// Reference law for the Kantorovich functional.
#[derive(Debug, Clone)]
pub enum Reference {
    Empirical(Arc<EmpiricalMeasure>),
    Density(crate::measure::DensityModel),
}

/// The catalog of functionals with closed-form coefficients.
#[derive(Debug, Clone)]
pub enum CatalogFunctional {
    /// `(1/n) Σ u(x_j)`.
    Mean { n: usize, u: Observable },
    /// `κ(𝔈_n, μ_ref)` on first coordinates.
    Kantorovich { n: usize, reference: Reference },
    /// `Ĉ_k(lag)` of `u` on `k + lag` points.
    Autocovariance { k: usize, lag: usize, u: Observable },
    /// `K^{φ₀}_{n,ε}`.
    CorrelationSum { n: usize, eps: f64 },
    /// `κ(A_n, 𝒩(0, σ²))` for a centered `u`.
    Asclt { n: usize, u: Observable, sigma2: f64 },
}

impl CatalogFunctional {
    pub const NAMES: [&'static str; 5] = ["mean", "kantorovich", "autocov", "corrsum", "asclt"];
}

impl Functional for CatalogFunctional {
    fn name(&self) -> String {
        match self {
            CatalogFunctional::Mean { .. } => "mean".into(),
            CatalogFunctional::Kantorovich { .. } => "kantorovich".into(),
            CatalogFunctional::Autocovariance { .. } => "autocov".into(),
            CatalogFunctional::CorrelationSum { .. } => "corrsum".into(),
            CatalogFunctional::Asclt { .. } => "asclt".into(),
        }
    }

    fn arity(&self) -> usize {
        match self {
            CatalogFunctional::Mean { n, .. }
            | CatalogFunctional::Kantorovich { n, .. }
            | CatalogFunctional::CorrelationSum { n, .. }
            | CatalogFunctional::Asclt { n, .. } => *n,
            CatalogFunctional::Autocovariance { k, lag, .. } => k + lag,
        }
    }

    fn eta(&self) -> f64 {
        match self {
            CatalogFunctional::Mean { u, .. } | CatalogFunctional::Autocovariance { u, .. } | CatalogFunctional::Asclt { u, .. } => u.eta,
            _ => 1.0,
        }
    }

    fn evaluate(&self, flat: &[f64], dim: usize) -> Result<f64> {
        ensure(flat.len() == self.arity() * dim, || {
            Error::Parameter(format!("{} expects {} points", self.name(), self.arity()))
        })?;
        match self {
            CatalogFunctional::Mean { n, u } => Ok(pairwise_sum(&u.series(flat, dim)) / *n as f64),
            CatalogFunctional::Kantorovich { reference, .. } => {
                let e = EmpiricalMeasure::new(flat.chunks_exact(dim).map(|p| p[0]).collect())?;
                match reference {
                    Reference::Empirical(r) => kantorovich_to(&e, r.as_ref()),
                    Reference::Density(d) => kantorovich_to(&e, d),
                }
            }
            CatalogFunctional::Autocovariance { k, lag, u } => autocovariance_of(&u.series(flat, dim), *lag, *k),
            CatalogFunctional::CorrelationSum { eps, .. } => Ok(correlation_sum_smoothed(Points::new(flat, dim)?, *eps, None)?.value),
            CatalogFunctional::Asclt { u, sigma2, .. } => {
                kappa_to_gaussian(&weighted_empirical(&prefix_sums(&u.series(flat, dim)))?, *sigma2)
            }
        }
    }

    fn coefficients(&self) -> Option<Vec<f64>> {
        Some(match self {
            CatalogFunctional::Mean { n, u } => vec![u.holder_constant / *n as f64; *n],
            CatalogFunctional::Kantorovich { n, .. } => vec![1.0 / *n as f64; *n],
            CatalogFunctional::Autocovariance { k, lag, u } => autocov_coefficients(*k, *lag, u.range(), u.holder_constant),
            CatalogFunctional::CorrelationSum { n, eps } => smoothed_sum_coefficients(*n, *eps, 1.0),
            CatalogFunctional::Asclt { n, u, .. } => kn_coefficients(*n, u.holder_constant),
        })
    }
}

/// `L_i = L_u · max_{box} |∂Ĉ_k(lag)/∂u_i|` for `u_m ∈ [lo, hi]`.
///
/// The partial derivative is affine in the `u_m`, so its extremes over the
/// box are attained coordinate-wise at the box ends.
pub fn autocov_coefficients(k: usize, lag: usize, (lo, hi): (f64, f64), holder_constant: f64) -> Vec<f64> {
    let kf = k as f64;
    let mean_coef = -2.0 / (kf * kf);
    let ext = |a: f64| (a * lo).max(a * hi);
    let ext_min = |a: f64| (a * lo).min(a * hi);
    (1..=k + lag)
        .map(|i| {
            // coefficients of ∂_i on u_m: 1/k at the paired partners, −2/k² on m ≤ k when i ≤ k
            let mut special: Vec<(usize, f64)> = Vec::with_capacity(2);
            let mut add = |m: usize, a: f64| match special.iter_mut().find(|(mm, _)| *mm == m) {
                Some(e) => e.1 += a,
                None => special.push((m, a)),
            };
            if i <= k {
                add(i + lag - 1, 1.0 / kf);
            }
            if i >= lag && i - lag < k {
                add(i - lag + 1, 1.0 / kf);
            }
            let default = |m: usize| if i <= k && m <= k { mean_coef } else { 0.0 };
            let base_count = if i <= k { k } else { 0 };
            let mut max = base_count as f64 * ext(mean_coef);
            let mut min = base_count as f64 * ext_min(mean_coef);
            for (m, a) in special {
                let full = a + default(m);
                max += ext(full) - ext(default(m));
                min += ext_min(full) - ext_min(default(m));
            }
            holder_constant * max.abs().max(min.abs())
        })
        .collect()
}
