use std::str::FromStr;

use serde_json::json;

use super::config::Params;
use super::Outcome;
use crate::asclt::{asclt_experiment, AscltConfig};
use crate::covariance::{autocovariance_of, covariance_series, covariance_variance_bound, sigma_squared};
use crate::dimension::{estimate_correlation_dimension, log_grid, phi0_variance_scan, DimensionOptions, Points};
use crate::error::{Error, Result};
use crate::format::fmt_f64;
use crate::holder::harness::{calibrate_d, catalog_functional, check_devroye, estimate_variance_mc, CalibrationConfig, HarnessConfig};
use crate::holder::{invariant_mean, Observable};
use crate::measure::{fit_besov_exponent, kantorovich_convergence, kde, kde_l1_error, DensityModel, Grid, Kernel};
use crate::process::{ensemble_map, generate_from, generate_trajectory, write_trajectory, MapSpec};
use crate::rng::mix;
use crate::shadowing::{shadow_experiment, Predicate, ShadowConfig};
use crate::spectral::{limit_curve, spectral_curve, sup_deviation_experiment, trig_partial_sum_sup, uniform_grid, MeanMode, SupDeviationConfig};
use crate::stats::{log_log_slope, moments, pairwise_sum};

/// Lengths of the window and lag budget for empirical covariance series.
const SERIES_WINDOW: usize = 1_000_000;
const SERIES_LAGS: usize = 64;

struct Args<'a>(&'a Params);

impl Args<'_> {
    fn raw(&self, key: &str) -> Option<&str> {
        self.0.get(key).map(|s| s.trim()).filter(|s| !s.is_empty())
    }

    fn req<T: FromStr>(&self, key: &str) -> Result<T> {
        self.opt(key)?.ok_or_else(|| Error::Parameter(format!("--{key} is required")))
    }

    fn opt<T: FromStr>(&self, key: &str) -> Result<Option<T>> {
        self.raw(key)
            .map(|s| parse_num(s).ok_or_else(|| Error::Parameter(format!("--{key}: cannot parse '{s}'"))))
            .transpose()
    }

    fn str(&self, key: &str) -> Result<&str> {
        self.raw(key).ok_or_else(|| Error::Parameter(format!("--{key} is required")))
    }

    fn list<T: FromStr>(&self, key: &str) -> Result<Vec<T>> {
        match self.raw(key) {
            None => Ok(vec![]),
            Some(s) => s
                .split(',')
                .map(|x| parse_num(x.trim()).ok_or_else(|| Error::Parameter(format!("--{key}: cannot parse '{x}'"))))
                .collect(),
        }
    }

    fn flag(&self, key: &str) -> Result<bool> {
        match self.raw(key) {
            None | Some("false") | Some("0") => Ok(false),
            Some("true") | Some("1") => Ok(true),
            Some(other) => Err(Error::Parameter(format!("--{key}: expected true or false, got '{other}'"))),
        }
    }

    fn map(&self) -> Result<MapSpec> {
        MapSpec::from_str_params(self.str("map")?, &self.list::<f64>("params")?)
    }

    fn observable(&self, map: &MapSpec) -> Result<Observable> {
        Observable::parse(self.str("obs")?, &self.list::<f64>("obs-params")?)?.on_map(map)
    }
}

/// Integers also accept scientific notation such as `1e6`.
fn parse_num<T: FromStr>(s: &str) -> Option<T> {
    s.parse().ok().or_else(|| {
        let v: f64 = s.parse().ok()?;
        (v.fract() == 0.0 && v.abs() < 9.0e15).then(|| format!("{v:.0}").parse().ok()).flatten()
    })
}

/// CSV table; `None` cells stay empty and non-finite values are rejected.
struct Csv(csv::Writer<Vec<u8>>);

impl Csv {
    fn new(header: &[&str]) -> Self {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(header).expect("in-memory write");
        Csv(w)
    }

    fn row(&mut self, cells: &[Cell]) -> Result<()> {
        self.row_with(&[], cells)
    }

    /// Row with leading text fields.
    fn row_with(&mut self, text: &[&str], cells: &[Cell]) -> Result<()> {
        let mut parts: Vec<String> = text.iter().map(|t| t.to_string()).collect();
        for c in cells {
            parts.push(match c {
                Cell::F(v) | Cell::Opt(Some(v)) if !v.is_finite() => {
                    return Err(Error::Evaluation(format!("non-finite output value {v}")))
                }
                Cell::F(v) | Cell::Opt(Some(v)) => fmt_f64(*v),
                Cell::Opt(None) => String::new(),
                Cell::U(v) => v.to_string(),
                Cell::B(b) => b.to_string(),
            });
        }
        self.0.write_record(&parts).map_err(|e| Error::Evaluation(e.to_string()))
    }

    fn finish(self) -> String {
        String::from_utf8(self.0.into_inner().expect("in-memory flush")).expect("utf-8 cells")
    }
}

enum Cell {
    F(f64),
    Opt(Option<f64>),
    U(usize),
    B(bool),
}

fn verdict(pass: bool) -> &'static str {
    if pass {
        "PASS"
    } else {
        "FAIL"
    }
}

pub(crate) fn dispatch(name: &str, p: &Params) -> Result<Outcome> {
    let a = Args(p);
    match name {
        "simulate" => simulate(&a),
        "covariance" => covariance(&a),
        "spectrum" => spectrum(&a),
        "spectrum-rate" => spectrum_rate(&a),
        "corrdim" => corrdim(&a),
        "kantorovich" => kantorovich(&a),
        "kde" => kde_cmd(&a),
        "besov" => besov(&a),
        "shadow" => shadow(&a),
        "asclt" => asclt(&a),
        "devroye-check" => devroye_check(&a),
        "trig-check" => trig_check(&a),
        "calibrate-D" => calibrate(&a),
        other => Err(Error::Parameter(format!("unknown subcommand '{other}'"))),
    }
}

fn simulate(a: &Args) -> Result<Outcome> {
    let map = a.map()?;
    let (n, burn_in, seed) = (a.req::<usize>("n")?, a.req::<usize>("burnin")?, a.req::<u64>("seed")?);
    let x0 = a.list::<f64>("x0")?;
    let traj = if x0.is_empty() { generate_trajectory(&map, n, burn_in, seed)? } else { generate_from(&map, &x0, n, burn_in, seed)? };
    let mut buf = Vec::new();
    write_trajectory(&traj, &mut buf)?;
    let table = String::from_utf8(buf).expect("ASCII output");
    Ok(Outcome {
        report: json!({ "map": map.to_string(), "n": n, "points": traj.flat() }),
        table: Some(table),
        summary: format!("{n} points of {map}"),
        pass: true,
    })
}

fn covariance(a: &Args) -> Result<Outcome> {
    let map = a.map()?;
    let u = a.observable(&map)?;
    let (k, maxlag, d) = (a.req::<usize>("k")?, a.req::<usize>("maxlag")?, a.req::<f64>("D")?);
    let (burn_in, seed, replicas) = (a.req::<usize>("burnin")?, a.req::<u64>("seed")?, a.req::<usize>("replicas")?);
    let traj = generate_trajectory(&map, k + maxlag, burn_in, seed)?;
    let values = u.series(traj.flat(), traj.dim());
    let mc = if replicas >= 2 {
        let per = ensemble_map(&map, replicas, k + maxlag, burn_in, mix(seed, 1), |_, t| {
            let v = u.series(t.flat(), t.dim());
            (1..=maxlag).map(|lag| autocovariance_of(&v, lag, k)).collect::<Result<Vec<f64>>>()
        })?;
        let m = (0..maxlag).map(|i| moments(&per.iter().map(|r| r[i]).collect::<Vec<_>>())).collect::<Result<Vec<_>>>()?;
        Some(m)
    } else {
        None
    };
    let mut header = vec!["lag", "C_hat", "bound_at_lag"];
    if mc.is_some() {
        header.extend(["mc_variance", "mc_stderr", "pass"]);
    }
    let mut csv = Csv::new(&header);
    let mut rows = Vec::new();
    let mut all = true;
    for lag in 1..=maxlag {
        let c = autocovariance_of(&values, lag, k)?;
        let b = covariance_variance_bound(k, lag, u.holder_constant, map.bound, u.eta, d);
        let mut cells = vec![Cell::U(lag), Cell::F(c), Cell::F(b)];
        let mut row = json!({ "lag": lag, "C_hat": c, "bound_at_lag": b });
        if let Some(m) = &mc {
            let m = &m[lag - 1];
            let pass = m.variance - 3.0 * m.variance_stderr <= b;
            all &= pass;
            cells.extend([Cell::F(m.variance), Cell::F(m.variance_stderr), Cell::B(pass)]);
            row["mc_variance"] = json!(m.variance);
            row["mc_stderr"] = json!(m.variance_stderr);
            row["pass"] = json!(pass);
        }
        csv.row(&cells)?;
        rows.push(row);
    }
    let mut summary = format!("{maxlag} lags of {} on {map}, k = {k}", u.name());
    if mc.is_some() {
        summary.push_str(&format!("; variance bounds {}", verdict(all)));
    }
    Ok(Outcome {
        table: Some(csv.finish()),
        report: json!({ "map": map.to_string(), "observable": u.name(), "k": k, "D": d, "replicas": replicas, "rows": rows }),
        summary,
        pass: all,
    })
}

fn spectrum(a: &Args) -> Result<Outcome> {
    let map = a.map()?;
    let u = a.observable(&map)?;
    let (n, replicas, seed) = (a.req::<usize>("n")?, a.req::<usize>("replicas")?, a.req::<u64>("seed")?);
    if replicas < 1 {
        return Err(Error::Parameter("--replicas must be at least 1".into()));
    }
    let omegas = uniform_grid(a.req("grid")?);
    let curves = ensemble_map(&map, replicas, n, a.req("burnin")?, seed, |_, t| spectral_curve(t, &u, &omegas, MeanMode::Empirical))?;
    let jt: Vec<f64> = (0..omegas.len())
        .map(|i| pairwise_sum(&curves.iter().map(|c| c.values[i]).collect::<Vec<_>>()) / replicas as f64)
        .collect();
    let series = covariance_series(&map, &u, SERIES_WINDOW, SERIES_LAGS, mix(seed, u64::MAX))?;
    let jl = limit_curve(&series, &omegas)?;
    let mut csv = Csv::new(&["omega", "J_tilde", "J_limit"]);
    for i in 0..omegas.len() {
        csv.row(&[Cell::F(omegas[i]), Cell::F(jt[i]), Cell::F(jl.values[i])])?;
    }
    let sup = jt.iter().zip(&jl.values).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    Ok(Outcome {
        table: Some(csv.finish()),
        report: json!({ "map": map.to_string(), "observable": u.name(), "n": n, "replicas": replicas, "omega": omegas, "J_tilde": jt, "J_limit": jl.values }),
        summary: format!("max grid deviation {}", fmt_f64(sup)),
        pass: true,
    })
}

fn spectrum_rate(a: &Args) -> Result<Outcome> {
    let map = a.map()?;
    let u = a.observable(&map)?;
    let n_grid = a.list::<usize>("n-grid")?;
    let cfg = SupDeviationConfig {
        grid: a.opt("grid")?,
        replicas: a.req("replicas")?,
        burn_in: a.req("burnin")?,
        master_seed: a.req("seed")?,
        d: a.req("D")?,
        series_window: SERIES_WINDOW,
        series_lags: SERIES_LAGS,
    };
    let table = sup_deviation_experiment(&map, &u, &n_grid, &cfg)?;
    let mut csv = Csv::new(&["n", "E_sup2", "envelope", "E_sup2_stderr", "E_bracket2", "grid"]);
    for r in &table.rows {
        csv.row(&[Cell::U(r.n), Cell::F(r.e_sup2), Cell::Opt(r.envelope), Cell::F(r.e_sup2_stderr), Cell::F(r.e_bracket2), Cell::U(r.grid)])?;
    }
    let summary = format!(
        "slope {} gamma {}",
        table.slope.map_or("n/a".into(), fmt_f64),
        table.gamma.map_or("n/a".into(), fmt_f64)
    );
    Ok(Outcome { table: Some(csv.finish()), report: serde_json::to_value(&table)?, summary, pass: true })
}

fn corrdim(a: &Args) -> Result<Outcome> {
    let map = a.map()?;
    let n: usize = a.req("n")?;
    let seed: u64 = a.req("seed")?;
    let grid = log_grid(a.req("eps-min")?, a.req("eps-max")?, a.req("eps-count")?)?;
    let opts = DimensionOptions { d_prior: a.opt("d-prior")?, eta: 1.0, exclude_flagged: a.flag("exclude-flagged")?, seed: mix(seed, 1) };
    let traj = generate_trajectory(&map, n, a.req("burnin")?, seed)?;
    let fit = estimate_correlation_dimension(Points::of(&traj), &grid, &opts)?;
    let violations: Vec<f64> = fit.rows.iter().filter(|r| !r.sandwich_holds()).map(|r| r.eps).collect();
    if !violations.is_empty() {
        return Err(Error::Evaluation(format!("kernel sandwich violated at ε = {violations:?}")));
    }
    let slope = match a.str("kernel")? {
        "phi0" => fit.slope,
        "heaviside" => {
            let (xs, ys): (Vec<f64>, Vec<f64>) = fit
                .rows
                .iter()
                .zip(&fit.used)
                .filter(|(r, u)| **u && r.k_heaviside > 0.0)
                .map(|(r, _)| (r.eps, r.k_heaviside))
                .unzip();
            log_log_slope(&xs, &ys)?.slope
        }
        other => return Err(Error::Parameter(format!("unknown kernel '{other}' (phi0 | heaviside)"))),
    };
    let replicas: usize = a.req("replicas")?;
    let scan = if replicas >= 2 { Some(phi0_variance_scan(&map, n, &grid, replicas, a.req("burnin")?, mix(seed, 2))?) } else { None };
    let mut header = vec!["eps", "K_heaviside", "K_phi0", "flagged", "K_half", "K_double", "used"];
    if scan.is_some() {
        header.extend(["var_phi0", "var_stderr", "var_scaled"]);
    }
    let mut csv = Csv::new(&header);
    for (i, (r, used)) in fit.rows.iter().zip(&fit.used).enumerate() {
        let mut cells =
            vec![Cell::F(r.eps), Cell::F(r.k_heaviside), Cell::F(r.k_phi0), Cell::B(r.flagged), Cell::F(r.k_half), Cell::F(r.k_double), Cell::B(*used)];
        if let Some(v) = &scan {
            cells.extend([Cell::F(v[i].variance), Cell::F(v[i].stderr), Cell::F(v[i].scaled)]);
        }
        csv.row(&cells)?;
    }
    let mut report = serde_json::to_value(&fit)?;
    report["slope"] = json!(slope);
    if let Some(v) = &scan {
        report["variance"] = serde_json::to_value(v)?;
    }
    Ok(Outcome { table: Some(csv.finish()), report, summary: format!("slope {}", fmt_f64(slope)), pass: true })
}

fn kantorovich(a: &Args) -> Result<Outcome> {
    let map = a.map()?;
    let d: f64 = a.req("D")?;
    let table = kantorovich_convergence(
        &map,
        a.req("ref-n")?,
        &a.list::<usize>("n-grid")?,
        a.req("replicas")?,
        a.req("burnin")?,
        a.req("eta")?,
        a.req("seed")?,
    )?;
    let mut csv = Csv::new(&["n", "mean", "variance", "variance_stderr", "bound_D", "pass", "variance_bound_fit", "delta", "smoothed_bound"]);
    let mut all = true;
    let mut passes = Vec::new();
    for r in &table.rows {
        let bound = d / r.n as f64;
        let pass = r.variance - 3.0 * r.variance_stderr <= bound;
        all &= pass;
        passes.push(pass);
        csv.row(&[
            Cell::U(r.n),
            Cell::F(r.mean),
            Cell::F(r.variance),
            Cell::F(r.variance_stderr),
            Cell::F(bound),
            Cell::B(pass),
            Cell::F(r.variance_bound),
            Cell::F(r.delta),
            Cell::F(r.smoothed_bound),
        ])?;
    }
    let mut report = serde_json::to_value(&table)?;
    report["D"] = json!(d);
    report["pass"] = json!(passes);
    let summary = format!("D_fit {} slope {} {}", fmt_f64(table.d_fit), table.slope.map_or("n/a".into(), fmt_f64), verdict(all));
    Ok(Outcome { table: Some(csv.finish()), report, summary, pass: all })
}

fn kde_cmd(a: &Args) -> Result<Outcome> {
    let map = a.map()?;
    let n: usize = a.req("n")?;
    let alpha = a.opt::<f64>("bandwidth")?.unwrap_or((n as f64).powf(-0.25));
    let kernel = Kernel::parse(a.str("kernel")?)?;
    let count: usize = a.req("grid")?;
    let (lo, hi) = map.domain()[0];
    if count < 2 {
        return Err(Error::Parameter("--grid needs at least 2 points".into()));
    }
    // cell midpoints keep an integrable edge singularity off the grid
    let h = (hi - lo) / count as f64;
    let grid = Grid::new(lo + 0.5 * h, hi - 0.5 * h, count)?;
    let traj = generate_trajectory(&map, n, a.req("burnin")?, a.req("seed")?)?;
    let est = kde(&traj.first_coordinates(), kernel, alpha, &grid)?;
    let density = map.analytic_density.map(DensityModel::from_analytic);
    let l1 = density.as_ref().map(|phi| kde_l1_error(&est, &grid, phi)).transpose()?;
    let xs = grid.points();
    let mut csv = Csv::new(&["x", "h_n", "phi"]);
    for (i, x) in xs.iter().enumerate() {
        csv.row(&[Cell::F(*x), Cell::F(est[i]), Cell::Opt(density.as_ref().map(|d| d.pdf(*x)))])?;
    }
    let summary = match l1 {
        Some(e) => format!("L1 error {} at bandwidth {}", fmt_f64(e), fmt_f64(alpha)),
        None => format!("bandwidth {} (no closed-form density for {map})", fmt_f64(alpha)),
    };
    Ok(Outcome {
        table: Some(csv.finish()),
        report: json!({ "map": map.to_string(), "n": n, "bandwidth": alpha, "kernel": a.str("kernel")?, "l1_error": l1, "x": xs, "h_n": est }),
        summary,
        pass: true,
    })
}

fn besov(a: &Args) -> Result<Outcome> {
    let phi = DensityModel::parse(a.str("density")?)?;
    let deltas = log_grid(a.req("delta-min")?, a.req("delta-max")?, a.req("count")?)?;
    let fit = fit_besov_exponent(&phi, &deltas)?;
    let mut csv = Csv::new(&["delta", "modulus"]);
    for (d, m) in fit.deltas.iter().zip(&fit.moduli) {
        csv.row(&[Cell::F(*d), Cell::F(*m)])?;
    }
    let summary = format!("tau {} constant {}", fmt_f64(fit.tau), fmt_f64(fit.constant));
    Ok(Outcome { table: Some(csv.finish()), report: serde_json::to_value(&fit)?, summary, pass: true })
}

fn shadow(a: &Args) -> Result<Outcome> {
    let map = a.map()?;
    let predicate = Predicate::parse(a.str("predicate")?)?;
    let cfg = ShadowConfig {
        bank: a.req("bank")?,
        queries: a.req("queries")?,
        t_grid: a.list("t-grid")?,
        d: a.req("D")?,
        eps: a.opt("eps")?,
        burn_in: a.req("burnin")?,
        master_seed: a.req("seed")?,
        p_e_orbit: a.req("p-e-orbit")?,
    };
    let rows = shadow_experiment(&map, predicate, &a.list::<usize>("n")?, &cfg)?;
    let mut csv = Csv::new(&["n", "t", "threshold", "empirical_tail", "stderr", "tail_bound", "pass", "p_e", "z_median", "z2_mean", "second_moment_bound", "second_moment_pass", "mismatch_median"]);
    let mut tails_pass = true;
    let mut second_moment_pass = true;
    for r in &rows {
        second_moment_pass &= r.second_moment_pass;
        for t in &r.tails {
            tails_pass &= t.pass;
            csv.row(&[
                Cell::U(r.n),
                Cell::F(t.t),
                Cell::F(t.threshold),
                Cell::F(t.empirical),
                Cell::F(t.stderr),
                Cell::F(t.bound),
                Cell::B(t.pass),
                Cell::F(r.p_e),
                Cell::F(r.z_median),
                Cell::F(r.z2_mean),
                Cell::F(r.second_moment_bound),
                Cell::B(r.second_moment_pass),
                Cell::Opt(r.mismatch_median),
            ])?;
        }
    }
    let summary = format!("tail bounds {}; second-moment bound {}", verdict(tails_pass), verdict(second_moment_pass));
    Ok(Outcome { table: Some(csv.finish()), report: serde_json::to_value(&rows)?, summary, pass: tails_pass })
}

fn asclt(a: &Args) -> Result<Outcome> {
    let map = a.map()?;
    let raw = a.observable(&map)?;
    let u = raw.clone().shifted(invariant_mean(&map, &raw)?);
    let seed: u64 = a.req("seed")?;
    let sigma2 = match a.opt::<f64>("sigma2")? {
        Some(s) => s,
        None => sigma_squared(&covariance_series(&map, &u, SERIES_WINDOW, SERIES_LAGS, mix(seed, u64::MAX))?)?.value,
    };
    let cfg = AscltConfig {
        n_max: a.req("n-max")?,
        rho: a.req("rho")?,
        replicas: a.req("replicas")?,
        burn_in: a.req("burnin")?,
        d: a.req("D")?,
        master_seed: seed,
    };
    let report = asclt_experiment(&map, &u, sigma2, &cfg)?;
    let mut csv = Csv::new(&["n_k", "kappa_mean", "kappa_var", "bound", "kappa_median", "kappa_var_stderr", "pass"]);
    for r in &report.rows {
        csv.row(&[Cell::U(r.n), Cell::F(r.kappa_mean), Cell::F(r.kappa_var), Cell::F(r.bound), Cell::F(r.kappa_median), Cell::F(r.kappa_var_stderr), Cell::B(r.pass)])?;
    }
    let all = report.rows.iter().all(|r| r.pass);
    let last = report.rows.last().map_or(f64::NAN, |r| r.kappa_median);
    let summary = format!("sigma2 {} final median kappa {} variance bounds {}", fmt_f64(sigma2), fmt_f64(last), verdict(all));
    Ok(Outcome { table: Some(csv.finish()), report: serde_json::to_value(&report)?, summary, pass: all })
}

fn devroye_check(a: &Args) -> Result<Outcome> {
    let map = a.map()?;
    let k = catalog_functional(a.str("functional")?, &map, a.req("n")?)?;
    let cfg = HarnessConfig { replicas: a.req("replicas")?, burn_in: a.req("burnin")?, d: a.req("D")?, master_seed: a.req("seed")? };
    let report = estimate_variance_mc(&k, &map, &cfg)?;
    let check = check_devroye(&report);
    let summary = format!(
        "{} on {}: var {} bound {} {}",
        report.functional,
        report.map,
        fmt_f64(report.mc_variance),
        fmt_f64(report.bound),
        verdict(check.pass)
    );
    Ok(Outcome { table: None, report: serde_json::to_value(&report)?, summary, pass: check.pass })
}

/// Upper end of the accepted band for the trigonometric supremum.
const TRIG_LIMIT: f64 = 1.86;

fn trig_check(a: &Args) -> Result<Outcome> {
    let t = trig_partial_sum_sup(a.req("m-max")?, a.req("grid")?)?;
    let pass = t.sup <= TRIG_LIMIT;
    let mut report = serde_json::to_value(t)?;
    report["limit"] = json!(TRIG_LIMIT);
    report["pass"] = json!(pass);
    Ok(Outcome { table: None, report, summary: format!("sup {} at omega {} {}", fmt_f64(t.sup), fmt_f64(t.omega), verdict(pass)), pass })
}

fn calibrate(a: &Args) -> Result<Outcome> {
    let cfg = CalibrationConfig {
        n_values: a.list("n-grid")?,
        replicas: a.req("replicas")?,
        burn_in: a.req("burnin")?,
        master_seed: a.req("seed")?,
        ..CalibrationConfig::default()
    };
    let report = calibrate_d(&cfg)?;
    let mut csv = Csv::new(&["stage", "functional", "map", "n", "mc_variance", "stderr", "bound", "ratio", "pass"]);
    for (stage, rows) in [("training", &report.training), ("validation", &report.validation)] {
        for r in rows {
            csv.row_with(&[stage, &r.functional, &r.map], &[Cell::U(r.n), Cell::F(r.mc_variance), Cell::F(r.stderr), Cell::F(r.bound), Cell::Opt(r.ratio), Cell::B(r.pass)])?;
        }
    }
    let summary = format!("D_fit {} validation {}", fmt_f64(report.d_fit), verdict(report.all_pass));
    Ok(Outcome { table: Some(csv.finish()), report: serde_json::to_value(&report)?, summary, pass: report.all_pass })
}
