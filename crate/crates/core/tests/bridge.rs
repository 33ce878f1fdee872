mod common;

use std::collections::{BTreeMap, BTreeSet};

use rieszlab::bridge::{cube_side, energy_bridge_report, measure_to_set, set_to_measure, smoothed_measure, VOLUME_TOL};
use rieszlab::kernels::KernelSpec;
use rieszlab::{AxisBox, Ball, Configuration, Dim, PixelSet, Region, ScaledEmpiricalMeasure};

fn spec(d: Dim, eps: f64) -> KernelSpec {
    KernelSpec::regularized_default(d, 0.5, eps).unwrap()
}

fn root(s: &KernelSpec) -> f64 {
    (s.epsilon() / s.r_eps().unwrap()).sqrt()
}

/// Measure of E Δ D with D rasterized on the grid of E by cell centres.
fn symmetric_difference(set: &PixelSet, region: &dyn Region) -> f64 {
    let disk = PixelSet::from_region(region, set.resolution()).unwrap();
    let a: BTreeSet<_> = set.cells().iter().copied().collect();
    let b: BTreeSet<_> = disk.cells().iter().copied().collect();
    a.symmetric_difference(&b).count() as f64 * set.cell_volume()
}

#[test]
fn each_cube_holds_min_of_mass_and_full_volume() {
    for (d, eps, side) in [(Dim::TWO, 0.005, 0.6), (Dim::THREE, 0.01, 0.25)] {
        let s = spec(d, eps);
        let config = common::random_configuration(d, eps, 1500, side, 11);
        let m = ScaledEmpiricalMeasure::new(config);
        let set = measure_to_set(&m, &s).unwrap();
        let rho = cube_side(&s).unwrap();
        let du = d.get();
        let cube_of = |p: &[f64; 3]| {
            let mut c = [0i64; 3];
            for a in 0..du {
                c[a] = (p[a] / rho).floor() as i64;
            }
            c
        };

        let mut mass: BTreeMap<[i64; 3], f64> = BTreeMap::new();
        for p in m.config().points() {
            *mass.entry(cube_of(p)).or_default() += m.mass_weight();
        }
        let mut vol: BTreeMap<[i64; 3], f64> = BTreeMap::new();
        for c in set.cells() {
            *vol.entry(cube_of(&set.center(c))).or_default() += set.cell_volume();
        }
        assert_eq!(mass.keys().collect::<Vec<_>>(), vol.keys().collect::<Vec<_>>());

        let full = rho.powi(du as i32);
        let mut err = 0.0;
        let mut total = 0.0;
        for (q, &mq) in &mass {
            let want = mq.min(full);
            let got = vol[q];
            assert!(got <= full * (1.0 + 1e-12));
            err += (got - want).abs();
            total += want;
        }
        assert!(err <= VOLUME_TOL * total, "d = {du}: {err} of {total}");
    }
}

#[test]
fn unit_square_recovery_mass() {
    let s = spec(Dim::TWO, 0.01);
    let square = AxisBox::cube(Dim::TWO, 1.0);
    let m = set_to_measure(&square, &s).unwrap();
    let pts = m.config().points();
    assert!(pts.iter().all(|p| square.contains(p)));
    assert!(m.config().is_admissible_for(0.01));
    let mass = pts.len() as f64 * 0.01f64.powi(2) * Dim::TWO.unit_ball_volume() / Dim::TWO.packing_density();
    assert!((mass - m.total_mass()).abs() < 1e-12);
    assert!((mass - 1.0).abs() < root(&s), "{mass}");
}

#[test]
fn empty_set_gives_empty_measure() {
    let s = spec(Dim::TWO, 0.01);
    let m = set_to_measure(&PixelSet::empty(Dim::TWO, 0.1).unwrap(), &s).unwrap();
    assert!(m.config().is_empty());
}

#[test]
fn disk_round_trip_stays_close() {
    let disk = Ball::centered(Dim::TWO, 0.5);
    let mut previous = f64::INFINITY;
    for eps in [0.02, 0.01, 0.005] {
        let s = spec(Dim::TWO, eps);
        let m = set_to_measure(&disk, &s).unwrap();
        let set = measure_to_set(&m, &s).unwrap();
        let gap = symmetric_difference(&set, &disk);
        assert!(gap <= 2.0 * root(&s), "ε = {eps}: {gap} vs {}", root(&s));
        assert!(gap < previous);
        previous = gap;
    }
}

#[test]
fn smoothed_measure_approaches_disk_in_l1() {
    let radius = 0.5;
    let disk = Ball::centered(Dim::TWO, radius);
    let mut previous = f64::INFINITY;
    for eps in [0.04, 0.02, 0.01] {
        let m = set_to_measure(&disk, &spec(Dim::TWO, eps)).unwrap();
        let f = smoothed_measure(&m).unwrap();
        let h = f.resolution();
        // Cells of f off the disk, plus |v − 1| on the rasterized disk.
        let inside = PixelSet::from_region(&disk, h).unwrap();
        let mut l1 = 0.0;
        for (c, v) in f.iter() {
            if !inside.contains_cell(c) {
                l1 += v;
            }
        }
        for c in inside.cells() {
            l1 += (f.get(c) - 1.0).abs();
        }
        l1 *= f.cell_volume();
        assert!(l1 < previous, "ε = {eps}: {l1}");
        previous = l1;
    }
    // Inside the disk μ̂ oscillates between 0 and 1/C^d, so the L¹ distance
    // levels off near 2(1 − C^d)|D| instead of vanishing.
    let floor = 2.0 * (1.0 - Dim::TWO.packing_density()) * disk.measure();
    assert!(previous < 1.1 * floor, "{previous} vs {floor}");
}

#[test]
fn smoothed_measure_converges_weakly() {
    let radius = 0.5;
    let disk = Ball::centered(Dim::TWO, radius);
    let bump = |p: &[f64; 3]| {
        let t = (p[0] * p[0] + p[1] * p[1]) / (radius * radius);
        if t < 1.0 { (-1.0 / (1.0 - t)).exp() } else { 0.0 }
    };
    // ∫_D φ = 2π R² ∫_0^1 e^{−1/(1−t)} dt / 2 with t = |x|²/R².
    let exact = std::f64::consts::PI * radius * radius * quadrature::integrate(|t| (-1.0 / (1.0 - t)).exp(), 0.0, 1.0 - 1e-12, 1e-14).integral;
    // The gap is already at the lattice-phase noise floor for ε = 0.04, so
    // it is bounded rather than required to shrink monotonically.
    for eps in [0.04, 0.02, 0.01] {
        let m = set_to_measure(&disk, &spec(Dim::TWO, eps)).unwrap();
        let f = smoothed_measure(&m).unwrap();
        let pairing: f64 = f.iter().map(|(c, v)| v * bump(&f.center(c))).sum::<f64>() * f.cell_volume();
        let gap = (pairing - exact).abs();
        assert!(gap < 2e-3 * exact, "ε = {eps}: {gap} of {exact}");
    }
}

#[test]
fn single_point_report_is_finite() {
    let s = spec(Dim::TWO, 0.01);
    let m = ScaledEmpiricalMeasure::new(Configuration::new(Dim::TWO, 0.01, vec![[0.1, 0.2, 0.0]]).unwrap());
    let r = energy_bridge_report(&m, &s).unwrap();
    for v in [r.mass_gap, r.energy_gap, r.renormalized_gap] {
        assert!(v.is_finite() && v >= 0.0);
    }
    assert_eq!(r.discrete_energy, 0.0);
    assert!(r.mass_gap <= VOLUME_TOL * m.total_mass());
}
