//! Monte Carlo variance of functionals against `D Σ L_j²`, and the fit of `D`.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::functional::{devroye_bound, lj_coefficients, CatalogFunctional, Functional, Reference};
use super::observable::{invariant_mean, Observable};
use crate::covariance::{covariance_series, sigma_squared};
use crate::error::{ensure, Error, Result};
use crate::measure::{DensityModel, EmpiricalMeasure};
use crate::process::{ensemble_map, generate_trajectory, MapSpec, DEFAULT_BURN_IN};
use crate::rng::mix;
use crate::stats::moments;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VarianceReport {
    pub functional: String,
    pub map: String,
    pub n: usize,
    pub replicas: usize,
    pub mc_variance: f64,
    pub stderr: f64,
    pub bound: f64,
    #[serde(rename = "D")]
    pub d: f64,
    /// `mc_variance / bound`; `None` when the bound vanishes but the variance does not.
    pub ratio: Option<f64>,
    pub pass: bool,
    /// Coefficients came from probing, so the bound may be too small.
    pub estimated_coefficients: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DevroyeCheck {
    pub pass: bool,
    pub margin: Option<f64>,
}

/// Pass iff `mc_variance − 3·stderr ≤ bound`.
pub fn check_devroye(report: &VarianceReport) -> DevroyeCheck {
    DevroyeCheck { pass: report.mc_variance - 3.0 * report.stderr <= report.bound, margin: report.ratio }
}

fn ratio(var: f64, bound: f64) -> Option<f64> {
    if bound > 0.0 {
        Some(var / bound)
    } else if var == 0.0 {
        Some(0.0)
    } else {
        None
    }
}

/// `D` fitted by [`calibrate_d`] with its default configuration (0.2565), rounded up.
pub const DEFAULT_D: f64 = 0.26;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HarnessConfig {
    pub replicas: usize,
    pub burn_in: usize,
    pub d: f64,
    pub master_seed: u64,
}

impl Default for HarnessConfig {
    fn default() -> Self {
        Self { replicas: 1000, burn_in: DEFAULT_BURN_IN, d: DEFAULT_D, master_seed: 0 }
    }
}

/// Evaluate `K` on `replicas` orbits of length `arity` and compare its variance with the bound.
pub fn estimate_variance_mc(k: &dyn Functional, map: &MapSpec, cfg: &HarnessConfig) -> Result<VarianceReport> {
    ensure(cfg.replicas >= 2, || Error::Domain(format!("need at least 2 replicas, got {}", cfg.replicas)))?;
    ensure(cfg.d > 0.0, || Error::Parameter("D must be positive".into()))?;
    let coeffs = lj_coefficients(k, &map.domain(), mix(cfg.master_seed, u64::MAX))?;
    let values = ensemble_map(map, cfg.replicas, k.arity(), cfg.burn_in, cfg.master_seed, |_, t| {
        let v = k.evaluate(t.flat(), t.dim())?;
        ensure(v.is_finite(), || Error::Evaluation(format!("{} returned {v}", k.name())))?;
        Ok(v)
    })?;
    let m = moments(&values)?;
    let bound = devroye_bound(&coeffs.values, cfg.d);
    let mut report = VarianceReport {
        functional: k.name(),
        map: map.to_string(),
        n: k.arity(),
        replicas: cfg.replicas,
        mc_variance: m.variance,
        stderr: m.variance_stderr,
        bound,
        d: cfg.d,
        ratio: ratio(m.variance, bound),
        pass: false,
        estimated_coefficients: coeffs.estimated,
    };
    report.pass = check_devroye(&report).pass;
    Ok(report)
}

/// Points in the long orbit used as the Kantorovich reference for maps without a density.
pub const REFERENCE_POINTS: usize = 100_000;

/// Catalog functional `name` sized for orbits of length `n` of `map`.
///
/// `mean` and `autocov` (lag 2) use the identity, `corrsum` uses `ε = 0.1`,
/// and `asclt` the identity centered at its invariant mean with `σ²` from the
/// covariance series.
pub fn catalog_functional(name: &str, map: &MapSpec, n: usize) -> Result<CatalogFunctional> {
    ensure(n >= 3, || Error::Domain("catalog functionals need n ≥ 3".into()))?;
    let u = Observable::identity().on_map(map)?;
    Ok(match name {
        "mean" => CatalogFunctional::Mean { n, u },
        "kantorovich" => {
            let reference = match map.analytic_density {
                Some(d) => Reference::Density(DensityModel::from_analytic(d)),
                None => {
                    let t = generate_trajectory(map, REFERENCE_POINTS, DEFAULT_BURN_IN, mix(0x4EF, map.id as u64))?;
                    Reference::Empirical(Arc::new(EmpiricalMeasure::of(&t)?))
                }
            };
            CatalogFunctional::Kantorovich { n, reference }
        }
        "autocov" => CatalogFunctional::Autocovariance { k: n - 2, lag: 2, u },
        "corrsum" => CatalogFunctional::CorrelationSum { n, eps: 0.1 },
        "asclt" => {
            let m = invariant_mean(map, &u)?;
            let u = u.shifted(m);
            let series = covariance_series(map, &u, 1_000_000, 64, mix(0xA5C, map.id as u64))?;
            let sigma2 = match sigma_squared(&series) {
                Ok(s) if s.value > 0.0 => s.value,
                _ => series.c1(),
            };
            CatalogFunctional::Asclt { n, u, sigma2 }
        }
        other => return Err(Error::Parameter(format!("unknown functional '{other}' (expected one of {:?})", CatalogFunctional::NAMES))),
    })
}

#[derive(Debug, Clone)]
pub struct CalibrationConfig {
    pub training_functionals: Vec<String>,
    pub training_maps: Vec<MapSpec>,
    pub validation_functionals: Vec<String>,
    pub validation_maps: Vec<MapSpec>,
    pub n_values: Vec<usize>,
    pub replicas: usize,
    pub burn_in: usize,
    pub master_seed: u64,
}

impl Default for CalibrationConfig {
    fn default() -> Self {
        let all_maps = vec![
            MapSpec::doubling(),
            MapSpec::tent(),
            MapSpec::logistic(4.0).expect("valid"),
            MapSpec::iid_uniform(),
            MapSpec::lozi(1.7, 0.5).expect("valid"),
        ];
        Self {
            training_functionals: vec!["mean".into(), "kantorovich".into()],
            training_maps: vec![MapSpec::doubling(), MapSpec::tent()],
            validation_functionals: CatalogFunctional::NAMES.iter().map(|s| s.to_string()).collect(),
            validation_maps: all_maps,
            n_values: vec![100, 1000],
            replicas: 1000,
            burn_in: DEFAULT_BURN_IN,
            master_seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationReport {
    /// Smallest `D` with `mc_variance ≤ D Σ L_j²` on every training case.
    #[serde(rename = "D_fit")]
    pub d_fit: f64,
    pub training: Vec<VarianceReport>,
    pub validation: Vec<VarianceReport>,
    pub all_pass: bool,
}

fn run_grid(names: &[String], maps: &[MapSpec], cfg: &CalibrationConfig, d: f64, salt: u64) -> Result<Vec<VarianceReport>> {
    let mut out = Vec::new();
    for (mi, map) in maps.iter().enumerate() {
        for (fi, name) in names.iter().enumerate() {
            for (ni, &n) in cfg.n_values.iter().enumerate() {
                let k = catalog_functional(name, map, n)?;
                let seed = mix(mix(mix(cfg.master_seed, salt), (mi * 64 + fi) as u64), ni as u64);
                let h = HarnessConfig { replicas: cfg.replicas, burn_in: cfg.burn_in, d, master_seed: seed };
                out.push(estimate_variance_mc(&k, map, &h)?);
            }
        }
    }
    Ok(out)
}

/// Fit `D` on the training grid, then check every validation case with it.
pub fn calibrate_d(cfg: &CalibrationConfig) -> Result<CalibrationReport> {
    let training = run_grid(&cfg.training_functionals, &cfg.training_maps, cfg, 1.0, 1)?;
    let d_fit = training.iter().filter_map(|r| r.ratio).fold(0.0, f64::max);
    ensure(d_fit > 0.0, || Error::InsufficientData("training variances are all zero".into()))?;
    let training = training
        .into_iter()
        .map(|mut r| {
            r.d = d_fit;
            r.bound *= d_fit;
            r.ratio = ratio(r.mc_variance, r.bound);
            r.pass = check_devroye(&r).pass;
            r
        })
        .collect();
    let validation = run_grid(&cfg.validation_functionals, &cfg.validation_maps, cfg, d_fit, 2)?;
    let all_pass = validation.iter().all(|r| r.pass);
    Ok(CalibrationReport { d_fit, training, validation, all_pass })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_functional_has_zero_variance() {
        let k = CatalogFunctional::Mean { n: 10, u: Observable::constant(2.0) };
        let r = estimate_variance_mc(&k, &MapSpec::doubling(), &HarnessConfig { replicas: 50, ..Default::default() }).unwrap();
        assert_eq!(r.mc_variance, 0.0);
        assert_eq!(r.bound, 0.0);
        assert_eq!(r.ratio, Some(0.0));
        assert!(r.pass);
    }

    #[test]
    fn iid_mean_variance() {
        let k = CatalogFunctional::Mean { n: 100, u: Observable::identity() };
        let r = estimate_variance_mc(&k, &MapSpec::iid_uniform(), &HarnessConfig { replicas: 4000, ..Default::default() }).unwrap();
        assert!((r.mc_variance * 1200.0 - 1.0).abs() < 0.1, "{}", r.mc_variance);
        assert!((r.bound - DEFAULT_D * 0.01).abs() < 1e-15);
        assert!(check_devroye(&r).pass);
    }

    #[test]
    fn too_few_replicas() {
        let k = CatalogFunctional::Mean { n: 10, u: Observable::identity() };
        let cfg = HarnessConfig { replicas: 1, ..Default::default() };
        assert!(matches!(estimate_variance_mc(&k, &MapSpec::doubling(), &cfg), Err(Error::Domain(_))));
    }

    #[test]
    fn fabricated_report_fails() {
        let r = VarianceReport {
            functional: "x".into(),
            map: "doubling".into(),
            n: 1,
            replicas: 10,
            mc_variance: 1.0,
            stderr: 0.01,
            bound: 0.01,
            d: 1.0,
            ratio: Some(100.0),
            pass: false,
            estimated_coefficients: false,
        };
        assert!(!check_devroye(&r).pass);
        let zero = VarianceReport { mc_variance: 0.0, bound: 0.1, ratio: Some(0.0), ..r };
        assert_eq!(check_devroye(&zero), DevroyeCheck { pass: true, margin: Some(0.0) });
    }

    #[test]
    fn report_json_schema() {
        let k = CatalogFunctional::Mean { n: 10, u: Observable::identity() };
        let r = estimate_variance_mc(&k, &MapSpec::tent(), &HarnessConfig { replicas: 20, ..Default::default() }).unwrap();
        let v: serde_json::Value = serde_json::to_value(&r).unwrap();
        for key in ["functional", "n", "replicas", "mc_variance", "stderr", "bound", "D", "ratio", "pass"] {
            assert!(v.get(key).is_some(), "missing {key}");
        }
    }

    #[test]
    fn reports_are_thread_count_independent() {
        let k = CatalogFunctional::Mean { n: 200, u: Observable::identity() };
        let cfg = HarnessConfig { replicas: 300, master_seed: 5, ..Default::default() };
        let one = crate::exec::with_threads(1, || estimate_variance_mc(&k, &MapSpec::logistic(4.0).unwrap(), &cfg).unwrap());
        let many = crate::exec::with_threads(7, || estimate_variance_mc(&k, &MapSpec::logistic(4.0).unwrap(), &cfg).unwrap());
        assert_eq!(one, many);
    }
}
