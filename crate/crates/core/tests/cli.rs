use std::path::Path;

use devroye_lab::cli::{run_with, ExperimentManifest, EXIT_OK, EXIT_USAGE, EXIT_VALIDATION};
use devroye_lab::exec::with_threads;

fn run(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let code = run_with(std::iter::once("devroye-lab").chain(args.iter().copied()), &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn path(dir: &Path, name: &str) -> String {
    dir.join(name).to_string_lossy().into_owned()
}

#[test]
fn unknown_flag_prints_help_and_exits_2() {
    let (code, _, err) = run(&["covariance", "--lagz", "3"]);
    assert_eq!(code, EXIT_USAGE);
    assert!(err.contains("--lagz"), "{err}");
    assert!(err.contains("Usage"), "{err}");
}

#[test]
fn help_exits_0() {
    let (code, out, _) = run(&["shadow", "--help"]);
    assert_eq!(code, EXIT_OK);
    assert!(out.contains("--predicate"));
}

#[test]
fn every_subcommand_is_registered() {
    let names = [
        "simulate",
        "covariance",
        "spectrum",
        "spectrum-rate",
        "corrdim",
        "kantorovich",
        "kde",
        "besov",
        "shadow",
        "asclt",
        "devroye-check",
        "trig-check",
        "calibrate-D",
    ];
    for n in names {
        assert_eq!(run(&[n, "--help"]).0, EXIT_OK, "{n}");
    }
}

#[test]
fn trig_check_prints_pass() {
    let (code, out, _) = run(&["trig-check", "--m-max", "100000"]);
    assert_eq!(code, EXIT_OK);
    assert!(out.contains("PASS") && out.starts_with("sup 1.85"), "{out}");
}

#[test]
fn malformed_config_reports_the_line() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.conf");
    std::fs::write(&cfg, "seed = 1\nthis line is wrong\n").unwrap();
    let (code, _, err) = run(&["simulate", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code, EXIT_USAGE);
    assert!(err.contains("line 2"), "{err}");
}

#[test]
fn flag_beats_config_and_lands_in_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.conf");
    std::fs::write(&cfg, "seed = 7\nn = 4\nmap = tent\n").unwrap();
    let out = path(dir.path(), "t.traj");
    let (code, _, _) = run(&["simulate", "--config", cfg.to_str().unwrap(), "--seed", "9", "--out", &out]);
    assert_eq!(code, EXIT_OK);
    let m: ExperimentManifest =
        serde_json::from_str(&std::fs::read_to_string(ExperimentManifest::path_for(Path::new(&out))).unwrap()).unwrap();
    assert_eq!(m.params["seed"], "9");
    assert_eq!(m.params["map"], "tent");
    assert_eq!(m.master_seed, 9);
    let text = std::fs::read_to_string(&out).unwrap();
    assert!(text.starts_with("# map=tent params= dim=1 n=4 seed=9 burnin=1000\n"), "{text}");
}

#[test]
fn manifest_replay_is_byte_identical_across_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let cases: Vec<Vec<&str>> = vec![
        vec!["covariance", "--obs", "cosine2pi", "--k", "2000", "--maxlag", "4", "--replicas", "20"],
        vec!["spectrum", "--n", "512", "--grid", "8", "--replicas", "4", "--map", "tent"],
        vec!["kantorovich", "--map", "logistic", "--params", "4", "--n-grid", "50,100", "--replicas", "30", "--ref-n", "5000"],
        vec!["shadow", "--n", "50", "--bank", "40", "--queries", "30", "--eps", "0.2", "--p-e-orbit", "10000"],
        vec!["devroye-check", "--map", "lozi", "--functional", "kantorovich", "--n", "50", "--replicas", "40"],
    ];
    for (i, args) in cases.iter().enumerate() {
        let out = path(dir.path(), &format!("run{i}.csv"));
        let mut full = args.clone();
        full.extend(["--out", &out]);
        let (code, _, err) = run(&full);
        assert!(code == EXIT_OK || code == EXIT_VALIDATION, "{args:?}: {err}");
        let original = std::fs::read(&out).unwrap();
        let manifest = ExperimentManifest::path_for(Path::new(&out));
        for threads in [1, 3] {
            let replay = path(dir.path(), &format!("replay{i}_{threads}.csv"));
            let code2 = with_threads(threads, || run(&[args[0], "--config", manifest.to_str().unwrap(), "--out", &replay]).0);
            assert_eq!(code, code2);
            assert_eq!(std::fs::read(&replay).unwrap(), original, "{args:?} on {threads} threads");
        }
    }
}

#[test]
fn csv_cells_are_finite_numbers_or_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cases: Vec<Vec<&str>> = vec![
        vec!["covariance", "--k", "500", "--maxlag", "3"],
        vec!["spectrum-rate", "--n-grid", "64,128", "--replicas", "10"],
        vec!["corrdim", "--n", "300", "--eps-min", "0.02", "--eps-max", "0.3"],
        vec!["kde", "--n", "2000", "--grid", "50"],
        vec!["besov", "--density", "logistic4"],
        vec!["asclt", "--n-max", "3000", "--replicas", "4"],
    ];
    for (i, args) in cases.iter().enumerate() {
        let out = path(dir.path(), &format!("c{i}.csv"));
        let mut full = args.clone();
        full.extend(["--out", &out]);
        assert_eq!(run(&full).0, EXIT_OK, "{args:?}");
        for record in csv::Reader::from_path(&out).unwrap().records() {
            for cell in record.unwrap().iter() {
                let fine = cell.is_empty() || cell == "true" || cell == "false" || cell.parse::<f64>().is_ok_and(f64::is_finite);
                assert!(fine, "{args:?}: cell '{cell}'");
            }
        }
    }
}

#[test]
fn failed_bound_exits_1() {
    let (code, out, _) = run(&["devroye-check", "--functional", "mean", "--n", "100", "--replicas", "500", "--D", "0.01"]);
    assert_eq!(code, EXIT_VALIDATION, "{out}");
    assert!(out.contains("FAIL"));
}

#[test]
fn devroye_report_schema() {
    let dir = tempfile::tempdir().unwrap();
    let out = path(dir.path(), "r.json");
    assert_eq!(run(&["devroye-check", "--functional", "corrsum", "--n", "100", "--replicas", "50", "--out", &out]).0, EXIT_OK);
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    for key in ["functional", "n", "replicas", "mc_variance", "stderr", "bound", "D", "ratio", "pass"] {
        assert!(v.get(key).is_some(), "missing {key}");
    }
}

#[test]
fn invalid_inputs_exit_2() {
    assert_eq!(run(&["simulate", "--map", "noSuchMap"]).0, EXIT_USAGE);
    assert_eq!(run(&["simulate", "--n", "ten"]).0, EXIT_USAGE);
    assert_eq!(run(&["corrdim", "--eps-min", "0.1"]).0, EXIT_USAGE);
    assert_eq!(run(&["shadow", "--predicate", "x3<1"]).0, EXIT_USAGE);
    assert_eq!(run(&["asclt", "--rho", "2"]).0, EXIT_USAGE);
}
