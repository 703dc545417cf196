//! Command-line entry point.
//!
//! Parameters are resolved as built-in defaults, then a `--config` file (or
//! a previous run's manifest), then explicit flags. A run with `--out PATH`
//! writes CSV, or JSON when `PATH` ends in `.json`, plus the sidecar
//! `PATH.manifest.json`. Without `--out` the table goes to stdout.

mod commands;
pub mod config;

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Arg, ArgAction, Command};

pub use config::{load_config, parse_config, Config, ExperimentManifest, Params};

use crate::error::{Error, Result};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

pub struct FlagSpec {
    pub name: &'static str,
    pub default: Option<&'static str>,
    pub help: &'static str,
}

const fn flag(name: &'static str, default: Option<&'static str>, help: &'static str) -> FlagSpec {
    FlagSpec { name, default, help }
}

pub struct SubcommandSpec {
    pub name: &'static str,
    pub about: &'static str,
    pub flags: &'static [FlagSpec],
}

const MAP: FlagSpec = flag("map", Some("doubling"), "doubling | tent | logistic | iid_uniform | lozi");
const MAP_PARAMS: FlagSpec = flag("params", Some(""), "comma-separated map parameters");
const OBS: FlagSpec = flag("obs", Some("identity"), "identity | cosine2pi | abs_shift | constant | custom_polynomial");
const OBS_PARAMS: FlagSpec = flag("obs-params", Some(""), "comma-separated observable parameters");
const SEED: FlagSpec = flag("seed", Some("0"), "master seed");
const BURNIN: FlagSpec = flag("burnin", Some("1000"), "discarded iterations before each orbit");
const D: FlagSpec = flag("D", Some("0.26"), "Devroye constant");

pub const SUBCOMMANDS: &[SubcommandSpec] = &[
    SubcommandSpec {
        name: "simulate",
        about: "Write one trajectory in the cache format",
        flags: &[MAP, MAP_PARAMS, flag("n", Some("1000"), "points"), BURNIN, SEED, flag("x0", None, "initial point, comma-separated")],
    },
    SubcommandSpec {
        name: "covariance",
        about: "Empirical autocovariances with their variance bound",
        flags: &[MAP, MAP_PARAMS, OBS, OBS_PARAMS, flag("k", Some("100000"), "averaging window"), flag("maxlag", Some("20"), "largest lag"),
            flag("replicas", Some("0"), "when ≥ 2, also the Monte Carlo variance of each C_hat over this many orbits"),
            BURNIN,
            SEED,
            D,
        ],
    },
    SubcommandSpec {
        name: "spectrum",
        about: "Centered spectral distribution against its limit",
        flags: &[
            MAP,
            MAP_PARAMS,
            OBS,
            OBS_PARAMS,
            flag("n", Some("4096"), "orbit length"),
            flag("grid", Some("64"), "frequency cells on [0, 2π]"),
            flag("replicas", Some("1"), "orbits averaged"),
            BURNIN,
            SEED,
        ],
    },
    SubcommandSpec {
        name: "spectrum-rate",
        about: "Mean squared sup deviation of the spectral distribution against n",
        flags: &[
            MAP,
            MAP_PARAMS,
            OBS,
            OBS_PARAMS,
            flag("n-grid", Some("256,512,1024,2048,4096,8192,16384"), "orbit lengths"),
            flag("grid", None, "frequency cells; default ⌈n^(1/3)⌉"),
            flag("replicas", Some("200"), "orbits per n"),
            BURNIN,
            SEED,
            D,
        ],
    },
    SubcommandSpec {
        name: "corrdim",
        about: "Correlation sums over a window of scales and the fitted dimension",
        flags: &[
            flag("map", Some("iid_uniform"), "catalog map"),
            MAP_PARAMS,
            flag("n", Some("10000"), "points"),
            flag("eps-min", None, "smallest scale (required)"),
            flag("eps-max", None, "largest scale (required)"),
            flag("eps-count", Some("8"), "log-spaced scales"),
            flag("kernel", Some("phi0"), "kernel used for the fit: phi0 | heaviside"),
            flag("d-prior", None, "dimension prior for the sample-size flag; default ambient"),
            flag("exclude-flagged", Some("false"), "drop flagged scales from the fit"),
            flag("replicas", Some("0"), "when ≥ 2, also the Monte Carlo variance of K_phi0 over this many orbits"),
            BURNIN,
            SEED,
        ],
    },
    SubcommandSpec {
        name: "kantorovich",
        about: "Kantorovich distance of empirical measures to a long-orbit reference",
        flags: &[
            MAP,
            MAP_PARAMS,
            flag("n-grid", Some("100,1000,10000"), "sample sizes"),
            flag("replicas", Some("1000"), "orbits per n"),
            flag("ref-n", Some("1000000"), "reference orbit length"),
            flag("eta", Some("1"), "Hölder exponent of the smoothing bound"),
            BURNIN,
            SEED,
            D,
        ],
    },
    SubcommandSpec {
        name: "kde",
        about: "Kernel density estimate of the invariant density",
        flags: &[
            flag("map", Some("logistic"), "catalog map"),
            flag("params", Some("4"), "comma-separated map parameters"),
            flag("n", Some("100000"), "orbit length"),
            flag("bandwidth", None, "kernel bandwidth; default n^(-1/4)"),
            flag("kernel", Some("triangle"), "triangle | epanechnikov"),
            flag("grid", Some("20000"), "evaluation points (cell midpoints)"),
            BURNIN,
            SEED,
        ],
    },
    SubcommandSpec {
        name: "besov",
        about: "L1 shift modulus of a density and its power-law exponent",
        flags: &[
            flag("density", Some("uniform"), "uniform | logistic4"),
            flag("delta-min", Some("1e-4"), "smallest shift"),
            flag("delta-max", Some("1e-2"), "largest shift"),
            flag("count", Some("9"), "log-spaced shifts"),
        ],
    },
    SubcommandSpec {
        name: "shadow",
        about: "Shadowing distances of free orbits to a bank of conditioned orbits",
        flags: &[
            MAP,
            MAP_PARAMS,
            flag("predicate", Some("x1<=0.5"), "all | x1<=v | x1>=v | x1in[a,b]"),
            flag("n", Some("100,1000"), "orbit lengths"),
            flag("bank", Some("1000"), "conditioned orbits in the bank"),
            flag("queries", Some("500"), "free query orbits"),
            flag("eps", None, "mismatch tolerance"),
            flag("t-grid", Some("0.5,1,2"), "tail thresholds t"),
            flag("p-e-orbit", Some("1000000"), "orbit length for P(E)"),
            BURNIN,
            SEED,
            D,
        ],
    },
    SubcommandSpec {
        name: "asclt",
        about: "Distance of the log-weighted partial-sum measure to its Gaussian limit",
        flags: &[
            MAP,
            MAP_PARAMS,
            flag("obs", Some("cosine2pi"), "observable; centered at its invariant mean"),
            OBS_PARAMS,
            flag("n-max", Some("1000000"), "orbit length"),
            flag("rho", Some("0.5"), "checkpoint schedule n_k = round(e^(k^(1+rho))), 0 < rho < 1"),
            flag("replicas", Some("50"), "orbits"),
            flag("sigma2", None, "limit variance; default from the covariance series"),
            BURNIN,
            SEED,
            D,
        ],
    },
    SubcommandSpec {
        name: "devroye-check",
        about: "Monte Carlo variance of a functional against D·ΣL_j²",
        flags: &[
            MAP,
            MAP_PARAMS,
            flag("functional", Some("mean"), "mean | kantorovich | autocov | corrsum | asclt"),
            flag("n", Some("1000"), "orbit length"),
            flag("replicas", Some("1000"), "orbits"),
            BURNIN,
            SEED,
            D,
        ],
    },
    SubcommandSpec {
        name: "trig-check",
        about: "Supremum of the sine partial sums Σ sin(kω)/k",
        flags: &[flag("m-max", Some("100000"), "largest m"), flag("grid", Some("1024"), "initial grid on [0, π]")],
    },
    SubcommandSpec {
        name: "calibrate-D",
        about: "Fit D on mean and Kantorovich functionals, then validate on the full catalog",
        flags: &[flag("replicas", Some("1000"), "orbits per case"), flag("n-grid", Some("100,1000"), "orbit lengths"), BURNIN, SEED],
    },
];

fn command() -> Command {
    let mut cmd = Command::new("devroye-lab")
        .version(env!("CARGO_PKG_VERSION"))
        .about("Variance bounds and estimators for chaotic-map processes")
        .subcommand_required(true)
        .arg_required_else_help(true);
    for spec in SUBCOMMANDS {
        let mut sub = Command::new(spec.name)
            .about(spec.about)
            .arg(Arg::new("config").long("config").value_name("FILE").help("key = value or JSON parameters; a manifest also works"))
            .arg(Arg::new("out").long("out").value_name("PATH").help("output file (.json for a JSON report)"));
        for f in spec.flags {
            let mut help = f.help.to_string();
            if let Some(d) = f.default {
                if !d.is_empty() {
                    help.push_str(&format!(" [default: {d}]"));
                }
            }
            sub = sub.arg(Arg::new(f.name).long(f.name).value_name("VALUE").allow_hyphen_values(true).action(ArgAction::Set).help(help));
        }
        cmd = cmd.subcommand(sub);
    }
    cmd
}

/// Resolve defaults, config and flags for one subcommand.
pub fn effective_params(spec: &SubcommandSpec, config: Option<&Config>, flags: &Params) -> Result<Params> {
    let mut p = Params::new();
    for f in spec.flags {
        if let Some(d) = f.default {
            p.insert(f.name.to_string(), d.to_string());
        }
    }
    if let Some(c) = config {
        if let Some(s) = &c.subcommand {
            if s != spec.name {
                return Err(Error::Parameter(format!("config was written for '{s}', not '{}'", spec.name)));
            }
        }
        for (k, v) in &c.params {
            if k == "out" {
                p.insert(k.clone(), v.clone());
                continue;
            }
            if !spec.flags.iter().any(|f| f.name == k) {
                return Err(Error::Parameter(format!("config key '{k}' is not a parameter of '{}'", spec.name)));
            }
            p.insert(k.clone(), v.clone());
        }
    }
    p.extend(flags.iter().map(|(k, v)| (k.clone(), v.clone())));
    Ok(p)
}

/// Result of a subcommand before it is written anywhere.
pub(crate) struct Outcome {
    /// CSV (or trajectory) text; `None` when the command has only a report.
    pub table: Option<String>,
    pub report: serde_json::Value,
    pub summary: String,
    pub pass: bool,
}

/// Run with process stdio and return the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    crate::exec::init_from_env();
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run_with(args, &mut stdout.lock(), &mut stderr.lock())
}

pub fn run_with<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let matches = match command().try_get_matches_from(args) {
        Ok(m) => m,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if code == EXIT_OK { stdout.write_all(text.as_bytes()) } else { stderr.write_all(text.as_bytes()) };
            return code;
        }
    };
    let (name, sub) = matches.subcommand().expect("subcommand required");
    let spec = SUBCOMMANDS.iter().find(|s| s.name == name).expect("registered");
    match execute(spec, sub, stdout, stderr) {
        Ok(true) => EXIT_OK,
        Ok(false) => EXIT_VALIDATION,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            if matches!(e, Error::Parameter(_) | Error::Parse { .. }) {
                let _ = writeln!(stderr, "run 'devroye-lab {name} --help' for usage");
            }
            EXIT_USAGE
        }
    }
}

fn execute(spec: &SubcommandSpec, sub: &clap::ArgMatches, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<bool> {
    let config = sub.get_one::<String>("config").map(|p| load_config(Path::new(p))).transpose()?;
    let mut flags = Params::new();
    for f in spec.flags {
        if let Some(v) = sub.get_one::<String>(f.name) {
            flags.insert(f.name.to_string(), v.clone());
        }
    }
    if let Some(o) = sub.get_one::<String>("out") {
        flags.insert("out".into(), o.clone());
    }
    let mut params = effective_params(spec, config.as_ref(), &flags)?;
    let out = params.remove("out").filter(|s| !s.is_empty()).map(PathBuf::from);
    let outcome = commands::dispatch(spec.name, &params)?;
    match out {
        Some(path) => {
            let json = path.extension().is_some_and(|e| e == "json");
            let bytes = match (&outcome.table, json) {
                (Some(t), false) => t.clone().into_bytes(),
                _ => {
                    let mut s = serde_json::to_string_pretty(&outcome.report)?;
                    s.push('\n');
                    s.into_bytes()
                }
            };
            std::fs::write(&path, &bytes)?;
            let seed = params.get("seed").and_then(|s| s.parse().ok()).unwrap_or(0);
            let mut manifest = ExperimentManifest::new(spec.name, &params, seed);
            manifest.record(&path, &bytes);
            std::fs::write(ExperimentManifest::path_for(&path), serde_json::to_string_pretty(&manifest)? + "\n")?;
            writeln!(stdout, "{}", outcome.summary)?;
        }
        None => match &outcome.table {
            Some(t) => {
                stdout.write_all(t.as_bytes())?;
                if !outcome.summary.is_empty() {
                    writeln!(stderr, "{}", outcome.summary)?;
                }
            }
            None => writeln!(stdout, "{}", outcome.summary)?,
        },
    }
    Ok(outcome.pass)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_capture(args: &[&str]) -> (i32, String, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let code = run_with(std::iter::once("devroye-lab").chain(args.iter().copied()), &mut out, &mut err);
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    #[test]
    fn command_definition_is_consistent() {
        command().debug_assert();
    }

    #[test]
    fn default_d_matches_holder_constant() {
        assert_eq!(D.default.unwrap().parse::<f64>().unwrap(), crate::holder::DEFAULT_D);
    }

    #[test]
    fn usage_errors_exit_2() {
        assert_eq!(run_capture(&["simulate", "--map", "noSuchMap"]).0, EXIT_USAGE);
        assert_eq!(run_capture(&["simulate", "--bogus", "1"]).0, EXIT_USAGE);
        assert_eq!(run_capture(&["nope"]).0, EXIT_USAGE);
        assert_eq!(run_capture(&[]).0, EXIT_USAGE);
    }

    #[test]
    fn flags_override_config() {
        let spec = SUBCOMMANDS.iter().find(|s| s.name == "simulate").unwrap();
        let config = parse_config("seed = 7\nn = 5\n").unwrap();
        let mut flags = Params::new();
        flags.insert("seed".into(), "9".into());
        let p = effective_params(spec, Some(&config), &flags).unwrap();
        assert_eq!(p["seed"], "9");
        assert_eq!(p["n"], "5");
        assert_eq!(p["map"], "doubling");
        let empty = effective_params(spec, Some(&parse_config("").unwrap()), &Params::new()).unwrap();
        assert_eq!(empty, effective_params(spec, None, &Params::new()).unwrap());
        assert!(effective_params(spec, Some(&parse_config("bogus = 1").unwrap()), &Params::new()).is_err());
    }

    #[test]
    fn simulate_with_forced_start() {
        let (code, out, _) = run_capture(&["simulate", "--map", "doubling", "--n", "3", "--seed", "7", "--burnin", "0", "--x0", "0.2"]);
        assert_eq!(code, EXIT_OK);
        let lines: Vec<&str> = out.lines().filter(|l| !l.starts_with('#')).collect();
        assert_eq!(lines, ["0.2", "0.4", "0.8"]);
    }
}
