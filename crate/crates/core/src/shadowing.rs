//! Shadowing distance and mismatch counts against a sampled bank of orbits.

use serde::{Deserialize, Serialize};

use crate::error::{ensure, Error, Result};
use crate::exec;
use crate::process::{generate_trajectory, replica_seed, MapSpec, Trajectory};
use crate::rng::mix;
use crate::stats::{mean, median};

/// Condition on the first point of an orbit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Predicate {
    All,
    /// `lo ≤ x₁ ≤ hi` on the first coordinate.
    FirstCoordinate { lo: f64, hi: f64 },
}

impl Predicate {
    /// `all`, `x1<=v`, `x1>=v` or `x1in[a,b]`.
    pub fn parse(s: &str) -> Result<Self> {
        let s: String = s.chars().filter(|c| !c.is_whitespace()).collect();
        let num = |v: &str| v.parse::<f64>().map_err(|_| Error::Parameter(format!("bad number '{v}' in predicate")));
        if s == "all" {
            Ok(Predicate::All)
        } else if let Some(v) = s.strip_prefix("x1<=") {
            Ok(Predicate::FirstCoordinate { lo: f64::NEG_INFINITY, hi: num(v)? })
        } else if let Some(v) = s.strip_prefix("x1>=") {
            Ok(Predicate::FirstCoordinate { lo: num(v)?, hi: f64::INFINITY })
        } else if let Some(v) = s.strip_prefix("x1in[").and_then(|v| v.strip_suffix(']')) {
            let (a, b) = v.split_once(',').ok_or_else(|| Error::Parameter(format!("bad interval in '{s}'")))?;
            Ok(Predicate::FirstCoordinate { lo: num(a)?, hi: num(b)? })
        } else {
            Err(Error::Parameter(format!("unknown predicate '{s}'")))
        }
    }

    pub fn describe(&self) -> String {
        match self {
            Predicate::All => "all".into(),
            Predicate::FirstCoordinate { lo, hi } => format!("x1 in [{lo}, {hi}]"),
        }
    }

    pub fn holds(&self, traj: &Trajectory) -> bool {
        self.holds_at(traj.point(0))
    }

    pub fn holds_at(&self, p: &[f64]) -> bool {
        match self {
            Predicate::All => true,
            Predicate::FirstCoordinate { lo, hi } => p[0] >= *lo && p[0] <= *hi,
        }
    }
}

/// Equal-length orbits whose first points satisfy the predicate.
#[derive(Debug, Clone)]
pub struct TrajectoryBank {
    pub members: Vec<Trajectory>,
    pub n: usize,
    pub predicate: Predicate,
    /// Candidate orbits drawn while filling the bank.
    pub attempts: usize,
}

/// Cap on candidate draws when filling a bank.
pub const MAX_ATTEMPTS: usize = 1_000_000;

impl TrajectoryBank {
    pub fn new(members: Vec<Trajectory>, predicate: Predicate) -> Result<Self> {
        ensure(!members.is_empty(), || Error::Domain("bank is empty".into()))?;
        let n = members[0].len();
        ensure(members.iter().all(|m| m.len() == n), || Error::Parameter("bank members differ in length".into()))?;
        ensure(members.iter().all(|m| predicate.holds(m)), || Error::Parameter("bank member violates the predicate".into()))?;
        Ok(Self { members, n, predicate, attempts: 0 })
    }

    /// Rejection sampling: candidate `r` uses seed `mix(master_seed, r)`, kept in index order.
    pub fn sample(map: &MapSpec, predicate: Predicate, size: usize, n: usize, burn_in: usize, master_seed: u64) -> Result<Self> {
        ensure(size >= 1, || Error::Domain("bank size must be positive".into()))?;
        let mut members = Vec::with_capacity(size);
        let mut next = 0usize;
        while members.len() < size {
            ensure(next < MAX_ATTEMPTS, || {
                Error::Domain(format!("predicate '{}' accepted {} of {MAX_ATTEMPTS} draws", predicate.describe(), members.len()))
            })?;
            let batch = (2 * (size - members.len())).clamp(64, MAX_ATTEMPTS - next);
            let drawn = exec::map_indexed(batch, |i| generate_trajectory(map, n, burn_in, replica_seed(master_seed, next + i)));
            for t in drawn {
                let t = t?;
                next += 1;
                if predicate.holds(&t) {
                    members.push(t);
                    if members.len() == size {
                        break;
                    }
                }
            }
        }
        Ok(Self { members, n, predicate, attempts: next })
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// The first `size` members.
    pub fn prefix(&self, size: usize) -> Result<Self> {
        ensure(size >= 1 && size <= self.len(), || Error::Domain(format!("prefix {size} of a bank of {}", self.len())))?;
        Ok(Self { members: self.members[..size].to_vec(), n: self.n, predicate: self.predicate, attempts: self.attempts })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShadowMatch {
    pub value: f64,
    /// Lowest bank index attaining the minimum.
    pub index: usize,
}

fn point_dist(a: &[f64], b: &[f64]) -> f64 {
    if a.len() == 1 {
        return (a[0] - b[0]).abs();
    }
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

fn best_over_bank(y: &Trajectory, bank: &TrajectoryBank, score: impl Fn(&Trajectory) -> f64) -> Result<ShadowMatch> {
    ensure(!bank.is_empty(), || Error::Domain("bank is empty".into()))?;
    ensure(y.len() == bank.n && y.dim() == bank.members[0].dim(), || {
        Error::Parameter(format!("query length {} does not match bank length {}", y.len(), bank.n))
    })?;
    let mut best = ShadowMatch { value: f64::INFINITY, index: 0 };
    for (i, m) in bank.members.iter().enumerate() {
        let v = score(m);
        if v < best.value {
            best = ShadowMatch { value: v, index: i };
        }
    }
    Ok(best)
}

/// `Z_E(Y) = (1/n) min_{X ∈ bank} Σ_j ‖X_j − Y_j‖`.
pub fn shadow_distance(y: &Trajectory, bank: &TrajectoryBank) -> Result<ShadowMatch> {
    let n = y.len() as f64;
    best_over_bank(y, bank, |m| y.points().zip(m.points()).map(|(a, b)| point_dist(a, b)).sum::<f64>() / n)
}

/// `Z′_{E,ε}(Y) = (1/n) min_{X ∈ bank} #{j : ‖X_j − Y_j‖ > ε}`.
pub fn mismatch_count(y: &Trajectory, bank: &TrajectoryBank, eps: f64) -> Result<ShadowMatch> {
    ensure(eps > 0.0, || Error::Domain("ε must be positive".into()))?;
    let n = y.len() as f64;
    best_over_bank(y, bank, |m| y.points().zip(m.points()).filter(|(a, b)| point_dist(a, b) > eps).count() as f64 / n)
}

/// Right-hand sides of the two shadowing tail bounds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShadowBounds {
    pub threshold: f64,
    pub tail: f64,
    /// Mismatch-count analogues, present when `ε` is given.
    pub mismatch_threshold: Option<f64>,
    pub mismatch_tail: Option<f64>,
}

/// `P(Z_E ≥ (t + 2^{4/3} D^{1/3}/P_E)/n^{1/3}) ≤ D/(n^{1/3} t²)`, and the
/// mismatch version with an extra `ε^{−2/3}` on both sides.
pub fn shadow_bound_report(n: usize, t: f64, d: f64, p_e: f64, eps: Option<f64>) -> Result<ShadowBounds> {
    ensure(p_e > 0.0 && p_e <= 1.0, || Error::Domain(format!("P(E) = {p_e} outside (0, 1]")))?;
    ensure(t > 0.0 && d > 0.0 && n >= 1, || Error::Domain("t, D and n must be positive".into()))?;
    let cube = (n as f64).cbrt();
    let threshold = (t + 2f64.powf(4.0 / 3.0) * d.cbrt() / p_e) / cube;
    let tail = d / (cube * t * t);
    let (mt, mtail) = match eps {
        Some(e) => {
            ensure(e > 0.0, || Error::Domain("ε must be positive".into()))?;
            let f = e.powf(2.0 / 3.0);
            (Some(threshold / f), Some(tail / f))
        }
        None => (None, None),
    };
    Ok(ShadowBounds { threshold, tail, mismatch_threshold: mt, mismatch_tail: mtail })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailCheck {
    pub t: f64,
    pub threshold: f64,
    pub empirical: f64,
    pub stderr: f64,
    pub bound: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShadowRow {
    pub n: usize,
    pub p_e: f64,
    pub bank: usize,
    pub queries: usize,
    pub z_median: f64,
    pub z_mean: f64,
    pub z2_mean: f64,
    /// `√D / √(n P_E)`.
    pub second_moment_bound: f64,
    pub second_moment_pass: bool,
    /// Median `Z_E` over bank prefixes of size 10, 100, ….
    pub bank_curve: Vec<(usize, f64)>,
    pub tails: Vec<TailCheck>,
    /// Median `Z′_{E,ε}` when `ε` is given.
    pub mismatch_median: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct ShadowConfig {
    pub bank: usize,
    pub queries: usize,
    pub t_grid: Vec<f64>,
    pub d: f64,
    pub eps: Option<f64>,
    pub burn_in: usize,
    pub master_seed: u64,
    /// Orbit length used to estimate `P_E = μ(first-point set)`.
    pub p_e_orbit: usize,
}

/// `μ` of the first-point set, as the visit frequency of one long orbit.
pub fn estimate_p_e(map: &MapSpec, predicate: Predicate, orbit: usize, burn_in: usize, seed: u64) -> Result<f64> {
    let t = generate_trajectory(map, orbit, burn_in, seed)?;
    let hits = t.points().filter(|p| predicate.holds_at(p)).count();
    ensure(hits > 0, || Error::Domain(format!("predicate '{}' never satisfied in {orbit} draws", predicate.describe())))?;
    Ok(hits as f64 / orbit as f64)
}

/// Tail probabilities of `Z_E` for queries drawn from the unconditioned process.
pub fn shadow_experiment(map: &MapSpec, predicate: Predicate, n_grid: &[usize], cfg: &ShadowConfig) -> Result<Vec<ShadowRow>> {
    ensure(cfg.queries >= 2, || Error::Domain("need at least 2 queries".into()))?;
    let p_e = estimate_p_e(map, predicate, cfg.p_e_orbit, cfg.burn_in, mix(cfg.master_seed, u64::MAX))?;
    let mut rows = Vec::new();
    for (k, &n) in n_grid.iter().enumerate() {
        let bank = TrajectoryBank::sample(map, predicate, cfg.bank, n, cfg.burn_in, mix(cfg.master_seed, 2 * k as u64))?;
        let qseed = mix(cfg.master_seed, 2 * k as u64 + 1);
        let mut sizes: Vec<usize> = std::iter::successors(Some(10usize), |s| Some(s * 10)).take_while(|s| *s < bank.len()).collect();
        sizes.push(bank.len());
        let per_query = exec::map_indexed(cfg.queries, |q| -> Result<(Vec<f64>, Option<f64>)> {
            let y = generate_trajectory(map, n, cfg.burn_in, replica_seed(qseed, q))?;
            let scores: Vec<f64> = bank
                .members
                .iter()
                .map(|m| y.points().zip(m.points()).map(|(a, b)| point_dist(a, b)).sum::<f64>() / n as f64)
                .collect();
            let curve: Vec<f64> = sizes.iter().map(|s| scores[..*s].iter().copied().fold(f64::INFINITY, f64::min)).collect();
            ensure(curve.windows(2).all(|w| w[1] <= w[0]), || Error::Evaluation("Z_E increased with a larger bank".into()))?;
            let mm = cfg.eps.map(|e| mismatch_count(&y, &bank, e).map(|m| m.value)).transpose()?;
            if let (Some(e), Some(zp)) = (cfg.eps, mm) {
                let z = *curve.last().expect("nonempty");
                ensure(z >= e * zp, || Error::Evaluation(format!("Z_E = {z} below ε·Z′ = {}", e * zp)))?;
            }
            Ok((curve, mm))
        })
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
        let z: Vec<f64> = per_query.iter().map(|(c, _)| *c.last().unwrap()).collect();
        let z2: Vec<f64> = z.iter().map(|v| v * v).collect();
        let bank_curve = sizes
            .iter()
            .enumerate()
            .map(|(i, s)| (*s, median(&per_query.iter().map(|(c, _)| c[i]).collect::<Vec<_>>())))
            .collect();
        let mismatch_median = cfg.eps.map(|_| median(&per_query.iter().filter_map(|(_, m)| *m).collect::<Vec<_>>()));
        let qn = z.len() as f64;
        let tails = cfg
            .t_grid
            .iter()
            .map(|&t| {
                let b = shadow_bound_report(n, t, cfg.d, p_e, None)?;
                let p = z.iter().filter(|v| **v >= b.threshold).count() as f64 / qn;
                let se = (p * (1.0 - p) / qn).sqrt();
                Ok(TailCheck { t, threshold: b.threshold, empirical: p, stderr: se, bound: b.tail, pass: p <= b.tail + 3.0 * se })
            })
            .collect::<Result<Vec<_>>>()?;
        let second_moment_bound = cfg.d.sqrt() / (n as f64 * p_e).sqrt();
        let z2_mean = mean(&z2);
        rows.push(ShadowRow {
            n,
            p_e,
            bank: bank.len(),
            queries: cfg.queries,
            z_median: median(&z),
            z_mean: mean(&z),
            z2_mean,
            second_moment_bound,
            second_moment_pass: z2_mean <= second_moment_bound,
            bank_curve,
            tails,
            mismatch_median,
        });
    }
    Ok(rows)
}
