use std::fs;
use std::path::PathBuf;
use std::process::{Command, Output};

use rieszlab::continuum_energy::fractional_perimeter;
use rieszlab::io::pixel_set_from_text;
use rieszlab::Dim;

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("rieszlab-cli-{}-{name}", std::process::id()));
    let _ = fs::remove_dir_all(&dir);
    fs::create_dir_all(&dir).unwrap();
    dir
}

fn rieszlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rieszlab")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

/// The `value` column of a single-row CSV.
fn value(o: &Output) -> f64 {
    let text = stdout(o);
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    let i = header.iter().position(|h| *h == "value").unwrap();
    row[i].parse().unwrap()
}

#[test]
fn list_names_every_experiment() {
    let o = rieszlab(&["experiment", "list"]);
    assert!(o.status.success());
    let text = stdout(&o);
    for e in &rieszlab_cli::experiments::EXPERIMENTS {
        assert!(text.contains(e.name));
    }
}

#[test]
fn energy_of_unit_interval() {
    let dir = scratch("energy");
    let path = dir.join("interval.txt");
    fs::write(&path, "pixelset\nd 1\nh 1.0\n0\n").unwrap();
    let o = rieszlab(&["energy", path.to_str().unwrap(), "--sigma", "-0.5"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    // −∫∫ |x − y|^{−1/2} over the unit square is −2∫_0^1 (1 − t) t^{−1/2} dt.
    assert!((value(&o) + 8.0 / 3.0).abs() < 1e-6, "{}", value(&o));
}

#[test]
fn perimeter_matches_library() {
    let dir = scratch("perimeter");
    let text = "pixelset\nd 2\nh 0.25\n0 0\n1 0\n1 1\n";
    let path = dir.join("set.txt");
    fs::write(&path, text).unwrap();
    let o = rieszlab(&["perimeter", path.to_str().unwrap(), "--sigma", "0.5"]);
    assert!(o.status.success());
    let want = fractional_perimeter(Dim::TWO, 0.5, &pixel_set_from_text(text).unwrap()).unwrap();
    assert!((value(&o) - want.value).abs() <= 1e-12 * want.value);
}

#[test]
fn bad_input_exits_with_two() {
    let dir = scratch("bad");
    let path = dir.join("junk.txt");
    fs::write(&path, "not a record\n").unwrap();
    let o = rieszlab(&["energy", path.to_str().unwrap(), "--sigma", "-0.5"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!o.stderr.is_empty());

    let missing = dir.join("missing.toml");
    let o = rieszlab(&["experiment", "run", missing.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn overlapping_configuration_is_rejected() {
    let dir = scratch("overlap");
    let path = dir.join("c.txt");
    fs::write(&path, "configuration\nd 2\nepsilon 0.1\n0 0\n0.1 0\n").unwrap();
    let o = rieszlab(&["energy", path.to_str().unwrap(), "--sigma", "-0.5"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn experiment_run_writes_directory_and_exit_code() {
    let dir = scratch("run");
    let manifest = dir.join("m.toml");
    fs::write(&manifest, "experiment = \"gamma-constants\"\n[params]\ndims = [1]\n").unwrap();
    let out = dir.join("out");
    let o = rieszlab(&["experiment", "run", manifest.to_str().unwrap(), "--out", out.to_str().unwrap(), "--seed", "7"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("pass closed_forms_match_quadrature"));
    let written = fs::read_to_string(out.join("manifest.toml")).unwrap();
    assert!(written.contains("seed = 7"));

    fs::write(&manifest, "experiment = \"gamma-constants\"\n[params]\ndims = [1]\ntolerance = -1.0\n").unwrap();
    let o = rieszlab(&["experiment", "run", manifest.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(out.join("failure.toml").exists());
}

#[test]
fn descent_writes_its_outputs() {
    let dir = scratch("descent");
    let out = dir.join("d");
    let o = rieszlab(&[
        "minimize-density", "--sigma", "-1", "--c1", "-2", "--c2", "12", "--h", "0.0625", "--out", out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    for f in ["trace.csv", "summary.csv", "density.txt"] {
        assert!(out.join(f).exists(), "{f}");
    }
}
