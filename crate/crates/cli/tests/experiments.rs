use std::fs;
use std::path::PathBuf;

use rieszlab_cli::artifacts::{RunStatus, FAILURE_FILE, MANIFEST_FILE, RESULTS_FILE, SUMMARY_FILE};
use rieszlab_cli::experiments::{run_experiment, run_in_memory, EXPERIMENTS};
use rieszlab_cli::manifest::Manifest;
use rieszlab_cli::CliError;

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("rieszlab-experiments-{}-{name}", std::process::id()));
    let _ = fs::remove_dir_all(&dir);
    dir
}

fn manifest(text: &str) -> Manifest {
    Manifest::parse(text).unwrap()
}

#[test]
fn passing_run_writes_all_artifacts() {
    let dir = scratch("pass");
    let m = manifest("experiment = \"gamma-constants\"\n[params]\ndims = [2]\nsigmas = [0.5]\n");
    let (status, outcome) = run_experiment(&m, &dir, 1).unwrap();
    assert_eq!(status, RunStatus::Passed);
    assert!(outcome.unwrap().passed());
    for f in [MANIFEST_FILE, RESULTS_FILE, SUMMARY_FILE] {
        assert!(dir.join(f).exists(), "{f}");
    }
    assert!(!dir.join(FAILURE_FILE).exists());

    // The written manifest spells out every parameter and reproduces the run.
    let resolved = manifest(&fs::read_to_string(dir.join(MANIFEST_FILE)).unwrap());
    assert!(resolved.params.contains_key("radii"));
    let again = scratch("pass-again");
    run_experiment(&resolved, &again, 1).unwrap();
    assert_eq!(
        fs::read(dir.join(RESULTS_FILE)).unwrap(),
        fs::read(again.join(RESULTS_FILE)).unwrap()
    );
    let summary: toml::Table = toml::from_str(&fs::read_to_string(dir.join(SUMMARY_FILE)).unwrap()).unwrap();
    assert_eq!(summary["passed"].as_bool(), Some(true));
}

#[test]
fn impossible_tolerance_fails_with_report() {
    let dir = scratch("fail");
    let m = manifest(
        "experiment = \"gamma-convergence-integrable\"\n[params]\nepsilons = [0.04, 0.02]\nfinal_tolerance = 1e-12\n",
    );
    let (status, outcome) = run_experiment(&m, &dir, 1).unwrap();
    assert_eq!(status, RunStatus::Failed);
    assert_eq!(status.exit_code(), 1);
    assert!(!outcome.unwrap().check("final_gap_small").unwrap().passed);
    let report: toml::Table = toml::from_str(&fs::read_to_string(dir.join(FAILURE_FILE)).unwrap()).unwrap();
    let failed = report["failed"].as_array().unwrap();
    assert!(failed.iter().any(|c| c["name"].as_str() == Some("final_gap_small")));

    // A later passing run in the same directory clears the stale report.
    let m = manifest("experiment = \"gamma-convergence-integrable\"\n[params]\nepsilons = [0.04, 0.02]\nfinal_tolerance = 1.0\n");
    assert_eq!(run_experiment(&m, &dir, 1).unwrap().0, RunStatus::Passed);
    assert!(!dir.join(FAILURE_FILE).exists());
}

#[test]
fn invalid_parameters_are_errors() {
    let dir = scratch("error");
    let m = manifest("experiment = \"gamma-convergence-integrable\"\n[params]\nepsilons = []\n");
    let (status, outcome) = run_experiment(&m, &dir, 1).unwrap();
    assert_eq!(status, RunStatus::Errored);
    assert!(outcome.is_none());
    let report: toml::Table = toml::from_str(&fs::read_to_string(dir.join(FAILURE_FILE)).unwrap()).unwrap();
    assert!(report["error"].as_str().unwrap().contains("epsilons"));
    assert!(!dir.join(RESULTS_FILE).exists());
}

#[test]
fn unknown_names_are_rejected() {
    let m = manifest("experiment = \"no-such-thing\"\n");
    assert!(matches!(run_in_memory(&m, 1), Err(CliError::UnknownExperiment(_))));
    let m = manifest("experiment = \"gamma-constants\"\n[params]\nbogus = 1\n");
    assert!(matches!(run_in_memory(&m, 1), Err(CliError::Manifest(_))));
}

#[test]
fn every_listed_experiment_resolves() {
    for e in &EXPERIMENTS {
        let (resolved, _) = rieszlab_cli::experiments::resolve_manifest(&Manifest::new(e.name)).unwrap();
        assert_eq!(resolved.experiment, e.name);
        assert!(!resolved.params.is_empty());
        let shipped = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../manifests").join(format!("{}.toml", e.name));
        let m = manifest(&fs::read_to_string(&shipped).unwrap());
        assert_eq!(m.experiment, e.name);
    }
}
