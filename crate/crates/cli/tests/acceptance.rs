//! One line per acceptance criterion. Every threshold is spelled out in the
//! manifests below rather than taken from experiment defaults.

use std::collections::HashMap;
use std::fs;
use std::path::PathBuf;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;
use rieszlab::cellint::{kappa, Band};
use rieszlab::continuum_energy::{j_truncated, riesz_energy};
use rieszlab::discrete_energy::{energy, energy_with, PairMethod};
use rieszlab::kernels::KernelSpec;
use rieszlab::summation::Neumaier;
use rieszlab::{CellIndex, Configuration, DensityField, Dim, PixelSet, Point};
use rieszlab_cli::artifacts::{Outcome, RESULTS_FILE, SUMMARY_FILE};
use rieszlab_cli::experiments::{run_experiment, run_in_memory};
use rieszlab_cli::manifest::Manifest;

struct Line {
    passed: bool,
    detail: String,
}

fn run(text: &str) -> Outcome {
    let m = Manifest::parse(text).unwrap();
    let (_, outcome) = run_in_memory(&m, 0).unwrap();
    outcome.unwrap()
}

fn from_checks(o: &Outcome, names: &[&str]) -> Line {
    let mut passed = true;
    let mut parts = Vec::new();
    for n in names {
        let c = o.check(n).unwrap_or_else(|| panic!("missing check {n}"));
        passed &= c.passed;
        parts.push(format!("{n}: {}", c.detail));
    }
    Line { passed, detail: parts.join("; ") }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn random_configuration(d: Dim, eps: f64, n: usize, side: f64, seed: u64) -> Configuration {
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(seed);
    let du = d.get();
    let min2 = 4.0 * eps * eps * (1.0 + 1e-9);
    let mut pts: Vec<Point> = Vec::new();
    while pts.len() < n {
        let mut p = [0.0; 3];
        for v in p.iter_mut().take(du) {
            *v = rng.gen::<f64>() * side;
        }
        if pts.iter().all(|q| (0..du).map(|a| (p[a] - q[a]).powi(2)).sum::<f64>() >= min2) {
            pts.push(p);
        }
    }
    Configuration::new(d, eps, pts).unwrap()
}

fn naive_pairs(d: Dim, p: f64, cutoff: f64, pts: &[Point]) -> f64 {
    let mut s = Neumaier::new();
    for (i, a) in pts.iter().enumerate() {
        for (j, b) in pts.iter().enumerate() {
            let r = (0..d.get()).map(|k| (a[k] - b[k]).powi(2)).sum::<f64>().sqrt();
            if i != j && r >= cutoff {
                s.add(-r.powf(-p));
            }
        }
    }
    s.value()
}

fn naive_cells(d: Dim, rho: &DensityField, p: f64, band: Band) -> f64 {
    let mut cache: HashMap<CellIndex, f64> = HashMap::new();
    let mut s = Neumaier::new();
    for (a, ra) in rho.iter() {
        for (b, rb) in rho.iter() {
            let key = [(b[0] - a[0]).abs(), (b[1] - a[1]).abs(), (b[2] - a[2]).abs()];
            let k = *cache.entry(key).or_insert_with(|| kappa(d.get(), key, p, band).unwrap().value);
            s.add(ra * rb * k);
        }
    }
    s.value()
}

fn oracle_equivalence() -> Line {
    let mut worst: f64 = 0.0;
    let d = Dim::TWO;
    let eps = 0.01;
    let c = random_configuration(d, eps, 2000, 2.0, 1);
    let w2 = rieszlab::domain::mass_weight(d, eps).powi(2);
    for (spec, cutoff) in [
        (KernelSpec::integrable(d, -0.5, eps).unwrap(), 0.0),
        (KernelSpec::regularized(d, 0.5, eps, 0.2).unwrap(), 0.2),
    ] {
        let got = energy_with(&spec, &c, PairMethod::Direct).unwrap().breakdown().unwrap().pair_sum;
        worst = worst.max(rel(got, w2 * naive_pairs(d, spec.exponent(), cutoff, c.points())));
        let auto = energy(&spec, &c).unwrap().breakdown().unwrap().pair_sum;
        worst = worst.max(rel(auto, got));
    }

    let h = 1.0 / 40.0;
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(2);
    let mut entries = Vec::new();
    for i in 0..40 {
        for j in 0..40 {
            if rng.gen::<f64>() < 0.9 {
                entries.push(([i, j, 0], rng.gen::<f64>()));
            }
        }
    }
    let f = DensityField::new(d, h, entries).unwrap();
    let p = 1.0;
    let got = riesz_energy(d, -1.0, &f).unwrap().value;
    worst = worst.max(rel(got, -h.powf(4.0 - p) * naive_cells(d, &f, p, Band::FULL)));

    let set = PixelSet::new(d, h, f.cells().to_vec()).unwrap();
    let ones = DensityField::from_pixel_set(&set, 1.0).unwrap();
    let (p, r) = (2.5, 0.2);
    let got = j_truncated(d, 0.5, r, &set).unwrap().value;
    worst = worst.max(rel(got, -h.powf(4.0 - p) * naive_cells(d, &ones, p, Band::above(r / h))));
    Line {
        passed: worst < 1e-12,
        detail: format!("max relative difference {worst:e} (limit 1e-12)"),
    }
}

fn hand_cases() -> Line {
    let set = PixelSet::new(Dim::ONE, 1.0 / 256.0, (0..256).map(|i| [i, 0, 0]).collect()).unwrap();
    let f = DensityField::from_pixel_set(&set, 1.0).unwrap();
    let e = riesz_energy(Dim::ONE, -0.5, &f).unwrap().value;
    let j = j_truncated(Dim::ONE, 0.0, 0.5, &set).unwrap().value;
    let de = (e + 8.0 / 3.0).abs();
    let dj = (j + 2.0 * (2f64.ln() - 0.5)).abs();
    Line {
        passed: de < 1e-4 && dj < 1e-4,
        detail: format!("energy off by {de:e}, truncated energy off by {dj:e} (limit 1e-4)"),
    }
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("rieszlab-acceptance-{}-{name}", std::process::id()));
    let _ = fs::remove_dir_all(&dir);
    dir
}

fn determinism() -> Line {
    let mut mismatched = Vec::new();
    let mut compared = 0;
    for e in &rieszlab_cli::experiments::EXPERIMENTS {
        let m = Manifest::new(e.name);
        let dirs: Vec<PathBuf> = [(1, "a"), (4, "b"), (1, "c")]
            .iter()
            .map(|&(threads, tag)| {
                let dir = scratch(&format!("{}-{tag}", e.name));
                run_experiment(&m, &dir, threads).unwrap();
                dir
            })
            .collect();
        for f in [RESULTS_FILE, SUMMARY_FILE] {
            let bytes: Vec<Vec<u8>> = dirs.iter().map(|d| fs::read(d.join(f)).unwrap()).collect();
            compared += 1;
            if bytes[0] != bytes[1] || bytes[0] != bytes[2] {
                mismatched.push(format!("{}/{f}", e.name));
            }
        }
    }
    Line {
        passed: mismatched.is_empty(),
        detail: format!("{compared} files compared over threads 1, 4 and a rerun; mismatched {mismatched:?}"),
    }
}

fn main() {
    type Criterion = (&'static str, f64, Box<dyn Fn() -> Line>);
    let criteria: Vec<Criterion> = vec![
        ("closed-form constants", 5.0, Box::new(|| {
            let o = run("experiment = \"gamma-constants\"\n[params]\ndims = [1, 2, 3]\nsigmas = [0.0, 0.25, 0.5, 0.75]\nradii = [0.5, 0.1, 0.01]\ntolerance = 1e-8\n");
            let mut l = from_checks(&o, &["closed_forms_match_quadrature"]);
            let rows = o.table.rows.len();
            l.passed &= rows >= 36;
            l.detail = format!("{rows} rows; {}", l.detail);
            l
        })),
        ("oracle equivalence", 60.0, Box::new(oracle_equivalence)),
        ("hand-integrable cases", 60.0, Box::new(hand_cases)),
        ("packing-rate envelope", 300.0, Box::new(|| {
            let o = run("experiment = \"packing-rate\"\n[params]\nd = 2\nbox_sides = [10.0, 20.0, 40.0]\nratio_limit = 4.0\nslack = 1e-12\n");
            from_checks(&o, &["density_at_least_optimal", "excess_decays_like_one_over_r"])
        })),
        ("integrable gamma-convergence", 600.0, Box::new(|| {
            let o = run("experiment = \"gamma-convergence-integrable\"\n[params]\nd = 2\nsigma = -1.0\nepsilons = [0.04, 0.02, 0.01]\nfinal_tolerance = 0.05\n");
            from_checks(&o, &["gap_strictly_decreasing", "final_gap_small"])
        })),
        ("bridge bounds", 600.0, Box::new(|| {
            let o = run("experiment = \"bridge-sweep\"\n[params]\nd = 2\nsigma = 0.5\nepsilons = [0.02, 0.01, 0.005]\nfactor = 3.0\n");
            from_checks(&o, &["mass_envelope_stable", "energy_envelope_stable", "renormalized_gap_strictly_decreasing"])
        })),
        ("regularized gamma-convergence", 900.0, Box::new(|| {
            let o = run("experiment = \"gamma-convergence-regularized\"\n[params]\nd = 2\nsigma = 0.5\nfinal_tolerance = 0.1\n");
            from_checks(&o, &["gap_decreasing", "final_gap_small"])
        })),
        ("ball optimality", 600.0, Box::new(|| {
            let o = run("experiment = \"isoperimetry\"\n[params]\nh = 0.0078125\nriesz_sigma = -1.0\nperimeter_sigmas = [0.25, 0.5, 0.75]\ninclude_p0 = true\n");
            let names: Vec<&str> = o.checks.iter().map(|c| c.name.as_str()).collect();
            let mut l = from_checks(&o, &names);
            l.passed &= names.len() == 20;
            l.detail = format!("{} rankings, smallest margin beyond error {:?}", names.len(), o.metrics["smallest_margin_beyond_error"]);
            l
        })),
        ("minimizer structure", 1800.0, Box::new(|| {
            let o = run("experiment = \"confined-minimizer-shape\"\n[params]\nparticles = 200\nanneal_runs = 5\nbang_bang_limit = 0.1\ndeficit_limit = 0.05\nanneal_deficit_limit = 0.15\n");
            let mut l = from_checks(&o, &["density_is_bang_bang", "density_support_is_ball", "density_kkt", "anneal_median_is_ball"]);
            let kkt = run("experiment = \"first-variation\"\n");
            let extra = from_checks(&kkt, &["kkt_sign_pattern"]);
            l.passed &= extra.passed;
            l.detail = format!("{}; {}", l.detail, extra.detail);
            l
        })),
        ("determinism", f64::INFINITY, Box::new(determinism)),
    ];

    let mut failed = Vec::new();
    for (i, (name, budget, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let mut line = check();
        let secs = start.elapsed().as_secs_f64();
        if secs > *budget {
            line.passed = false;
        }
        let verdict = if line.passed { "PASS" } else { "FAIL" };
        println!("criterion {:>2} {verdict} {name} ({secs:.1} s): {}", i + 1, line.detail);
        if !line.passed {
            failed.push(i + 1);
        }
    }
    if !failed.is_empty() {
        eprintln!("failed criteria: {failed:?}");
        std::process::exit(1);
    }
}
