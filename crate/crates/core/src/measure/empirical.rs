//! Empirical measures on the line and exact Kantorovich distances.

use serde::{Deserialize, Serialize};

use super::density::{DensityModel, Distribution};
use crate::error::{ensure, Error, Result};
use crate::process::{ensemble_map, generate_trajectory, MapSpec, Trajectory};
use crate::quad;
use crate::rng::mix;
use crate::stats::{log_log_slope, moments, pairwise_sum};

/// Uniform-weight atoms, kept sorted.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalMeasure {
    atoms: Vec<f64>,
    /// `prefix[k] = Σ_{i<k} atoms[i]`, for closed-form CDF integrals.
    prefix: Vec<f64>,
}

impl EmpiricalMeasure {
    pub fn new(mut atoms: Vec<f64>) -> Result<Self> {
        ensure(!atoms.is_empty(), || Error::Domain("empirical measure needs at least one atom".into()))?;
        ensure(atoms.iter().all(|a| a.is_finite()), || Error::Domain("atoms must be finite".into()))?;
        atoms.sort_by(f64::total_cmp);
        let mut prefix = Vec::with_capacity(atoms.len() + 1);
        let mut acc = 0.0;
        prefix.push(0.0);
        for a in &atoms {
            acc += a;
            prefix.push(acc);
        }
        Ok(Self { atoms, prefix })
    }

    /// Empirical measure of the first coordinates of an orbit.
    pub fn of(traj: &Trajectory) -> Result<Self> {
        Self::new(traj.first_coordinates())
    }

    pub fn atoms(&self) -> &[f64] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    fn count_le(&self, t: f64) -> usize {
        self.atoms.partition_point(|a| *a <= t)
    }
}

impl Distribution for EmpiricalMeasure {
    fn support(&self) -> (f64, f64) {
        (self.atoms[0], self.atoms[self.atoms.len() - 1])
    }

    fn cdf(&self, t: f64) -> f64 {
        self.count_le(t) as f64 / self.len() as f64
    }

    /// `Σ_{a ≤ t} (t − a) / N`.
    fn cdf_integral(&self, t: f64) -> f64 {
        let k = self.count_le(t);
        (k as f64 * t - self.prefix[k]) / self.len() as f64
    }

    fn crossing(&self, i: usize, n: usize) -> f64 {
        // smallest k with k/N ≥ i/n
        let big = self.len();
        let k = (i * big).div_ceil(n).max(1);
        self.atoms[k.min(big) - 1]
    }
}

/// Either side of a Kantorovich distance.
#[derive(Debug, Clone, Copy)]
pub enum Measure<'a> {
    Empirical(&'a EmpiricalMeasure),
    Density(&'a DensityModel),
}

/// `κ(m₁, m₂) = ∫|F₁ − F₂|`.
pub fn kantorovich_1d(m1: Measure<'_>, m2: Measure<'_>) -> Result<f64> {
    match (m1, m2) {
        (Measure::Empirical(a), Measure::Empirical(b)) => Ok(kantorovich_empirical(a, b)),
        (Measure::Empirical(a), Measure::Density(d)) | (Measure::Density(d), Measure::Empirical(a)) => {
            kantorovich_to(a, d)
        }
        (Measure::Density(a), Measure::Density(b)) => {
            let (lo, hi) = (a.support().0.min(b.support().0), a.support().1.max(b.support().1));
            ensure(lo.is_finite() && hi.is_finite(), || Error::Domain("unbounded support".into()))?;
            quad::integrate(|t| (a.cdf(t) - b.cdf(t)).abs(), lo, hi, 1e-10)
        }
    }
}

/// Exact distance between two empirical measures by merging atoms.
///
/// `|F₁ − F₂|` is formed as `|i·m − j·n| / (n·m)` so the result is
/// bit-identical under swapping the arguments.
pub fn kantorovich_empirical(a: &EmpiricalMeasure, b: &EmpiricalMeasure) -> f64 {
    let (x, y) = (a.atoms(), b.atoms());
    let (n, m) = (x.len(), y.len());
    let (mut i, mut j) = (0usize, 0usize);
    let mut terms = Vec::with_capacity(n + m);
    let mut last = x[0].min(y[0]);
    while i < n || j < m {
        let next = match (x.get(i), y.get(j)) {
            (Some(p), Some(q)) => p.min(*q),
            (Some(p), None) => *p,
            (None, Some(q)) => *q,
            (None, None) => unreachable!(),
        };
        let diff = (i as f64 * m as f64 - j as f64 * n as f64).abs() / (n as f64 * m as f64);
        terms.push(diff * (next - last));
        while i < n && x[i] == next {
            i += 1;
        }
        while j < m && y[j] == next {
            j += 1;
        }
        last = next;
    }
    pairwise_sum(&terms)
}

/// `κ(𝔈, G)` for an empirical measure against any [`Distribution`], in
/// `O(n log N)` for an empirical `G` with `N` atoms.
///
/// Between consecutive atoms `F_𝔈 = c` is constant; the integral of
/// `|c − G|` splits at the first `t` with `G(t) ≥ c` and each side is a
/// difference of `H = ∫G`.
pub fn kantorovich_to(sample: &EmpiricalMeasure, g: &impl Distribution) -> Result<f64> {
    let (glo, ghi) = g.support();
    ensure(glo.is_finite() && ghi.is_finite(), || Error::Domain("unbounded support".into()))?;
    let x = sample.atoms();
    let n = x.len();
    let lo = glo.min(x[0]);
    let hi = ghi.max(x[n - 1]);
    let h = |t: f64| g.cdf_integral(t);
    let mut terms = Vec::with_capacity(n + 1);
    // below the first atom F_𝔈 = 0
    terms.push(h(x[0]) - h(lo));
    for i in 1..n {
        let (a, b) = (x[i - 1], x[i]);
        if b <= a {
            continue;
        }
        let c = i as f64 / n as f64;
        let t = g.crossing(i, n).clamp(a, b);
        terms.push(c * (t - a) - (h(t) - h(a)) + (h(b) - h(t)) - c * (b - t));
    }
    // above the last atom F_𝔈 = 1
    terms.push((hi - x[n - 1]) - (h(hi) - h(x[n - 1])));
    Ok(pairwise_sum(&terms).max(0.0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KantorovichRow {
    pub n: usize,
    pub mean: f64,
    pub variance: f64,
    pub variance_stderr: f64,
    /// `D(1)/n` with the fitted `D(1)`.
    pub variance_bound: f64,
    /// `δ = n^{−1/(2(1+η))}`.
    pub delta: f64,
    /// `2δ + a/(δ^η √n)` with the fitted `a`.
    pub smoothed_bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KantorovichTable {
    pub reference_n: usize,
    pub rows: Vec<KantorovichRow>,
    /// Smallest `D(1)` with `var κ ≤ D(1)/n` on every row.
    pub d_fit: f64,
    /// Smallest `a` with `E κ ≤ 2δ + a/(δ^η √n)` on every row.
    pub smoothing_constant: f64,
    /// Slope of `log E κ` against `log n`.
    pub slope: Option<f64>,
}

/// `E κ(𝔈_n, μ)` and `var κ(𝔈_n, μ)` with `μ` frozen as one long orbit.
pub fn kantorovich_convergence(
    map: &MapSpec,
    reference_n: usize,
    n_grid: &[usize],
    replicas: usize,
    burn_in: usize,
    eta: f64,
    master_seed: u64,
) -> Result<KantorovichTable> {
    ensure(!n_grid.is_empty() && n_grid.iter().all(|n| *n >= 1), || Error::Domain("n grid must be nonempty".into()))?;
    ensure(replicas >= 2, || Error::Domain("need at least 2 replicas".into()))?;
    let reference = EmpiricalMeasure::of(&generate_trajectory(map, reference_n, burn_in, mix(master_seed, u64::MAX))?)?;
    let mut rows = Vec::with_capacity(n_grid.len());
    for (k, &n) in n_grid.iter().enumerate() {
        let kappas = ensemble_map(map, replicas, n, burn_in, mix(master_seed, k as u64), |_, t| {
            kantorovich_to(&EmpiricalMeasure::of(t)?, &reference)
        })?;
        let m = moments(&kappas)?;
        let delta = (n as f64).powf(-1.0 / (2.0 * (1.0 + eta)));
        rows.push(KantorovichRow {
            n,
            mean: m.mean,
            variance: m.variance,
            variance_stderr: m.variance_stderr,
            variance_bound: 0.0,
            delta,
            smoothed_bound: 0.0,
        });
    }
    let d_fit = rows.iter().map(|r| r.variance * r.n as f64).fold(0.0, f64::max);
    let smoothing_constant = rows
        .iter()
        .map(|r| (r.mean - 2.0 * r.delta) * r.delta.powf(eta) * (r.n as f64).sqrt())
        .fold(0.0, f64::max);
    for r in rows.iter_mut() {
        r.variance_bound = d_fit / r.n as f64;
        r.smoothed_bound = 2.0 * r.delta + smoothing_constant / (r.delta.powf(eta) * (r.n as f64).sqrt());
    }
    let slope = if rows.len() >= 2 && rows.iter().all(|r| r.mean > 0.0) {
        let xs: Vec<f64> = rows.iter().map(|r| r.n as f64).collect();
        let ys: Vec<f64> = rows.iter().map(|r| r.mean).collect();
        Some(log_log_slope(&xs, &ys)?.slope)
    } else {
        None
    };
    Ok(KantorovichTable { reference_n, rows, d_fit, smoothing_constant, slope })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn emp(v: &[f64]) -> EmpiricalMeasure {
        EmpiricalMeasure::new(v.to_vec()).unwrap()
    }

    #[test]
    fn hand_cases() {
        assert_eq!(kantorovich_empirical(&emp(&[0.0]), &emp(&[1.0])), 1.0);
        assert_eq!(kantorovich_empirical(&emp(&[0.3, 0.1]), &emp(&[0.1, 0.3])), 0.0);
        assert_eq!(kantorovich_empirical(&emp(&[0.0, 1.0]), &emp(&[0.5, 0.5])), 0.5);
    }

    #[test]
    fn reference_path_matches_merge() {
        let mut rng = crate::rng::stream(3);
        use rand::Rng;
        for _ in 0..50 {
            let a: Vec<f64> = (0..rng.random_range(1..40)).map(|_| rng.random::<f64>()).collect();
            let b: Vec<f64> = (0..rng.random_range(1..300)).map(|_| rng.random::<f64>() * 1.2 - 0.1).collect();
            let (a, b) = (emp(&a), emp(&b));
            let merge = kantorovich_empirical(&a, &b);
            assert!((kantorovich_to(&a, &b).unwrap() - merge).abs() < 1e-12);
        }
    }

    #[test]
    fn density_path_matches_quadrature() {
        let s = emp(&[0.05, 0.2, 0.21, 0.6, 0.9]);
        for d in [DensityModel::uniform(), DensityModel::Logistic4] {
            let exact = kantorovich_1d(Measure::Empirical(&s), Measure::Density(&d)).unwrap();
            let q = quad::integrate(|t| (s.cdf(t) - d.cdf(t)).abs(), 0.0, 1.0, 1e-12).unwrap();
            assert!((exact - q).abs() < 1e-8, "{}", d.name());
        }
        // a single atom at 1/2 against the uniform law: 2 ∫_0^{1/2} t dt
        let half = emp(&[0.5]);
        assert!((kantorovich_to(&half, &DensityModel::uniform()).unwrap() - 0.25).abs() < 1e-15);
    }

    #[test]
    fn identical_orbits_have_zero_distance() {
        let t = generate_trajectory(&MapSpec::tent(), 500, 10, 8).unwrap();
        let e = EmpiricalMeasure::of(&t).unwrap();
        assert_eq!(kantorovich_to(&e, &e).unwrap(), 0.0);
        assert_eq!(kantorovich_empirical(&e, &e), 0.0);
    }

    proptest! {
        #[test]
        fn metric_properties(
            a in prop::collection::vec(-1.0f64..1.0, 1..30),
            b in prop::collection::vec(-1.0f64..1.0, 1..30),
            c in prop::collection::vec(-1.0f64..1.0, 1..30),
            shift in -2.0f64..2.0,
        ) {
            let (ma, mb, mc) = (emp(&a), emp(&b), emp(&c));
            let ab = kantorovich_empirical(&ma, &mb);
            prop_assert_eq!(ab, kantorovich_empirical(&mb, &ma));
            prop_assert!(ab <= kantorovich_empirical(&ma, &mc) + kantorovich_empirical(&mc, &mb) + 1e-12);
            let sa: Vec<f64> = a.iter().map(|x| x + shift).collect();
            let sb: Vec<f64> = b.iter().map(|x| x + shift).collect();
            prop_assert!((kantorovich_empirical(&emp(&sa), &emp(&sb)) - ab).abs() < 1e-12);
            prop_assert!((kantorovich_empirical(&emp(&sa), &mb) - ab).abs() <= shift.abs() + 1e-12);
        }
    }

    #[test]
    fn shifted_point_masses_move_by_the_shift() {
        assert!((kantorovich_empirical(&emp(&[0.25]), &emp(&[0.25 + 0.7])) - 0.7).abs() < 1e-15);
    }
}
