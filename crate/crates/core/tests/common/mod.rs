#![allow(dead_code)]

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;
use rieszlab::cellint::{kappa, Band};
use rieszlab::summation::Neumaier;
use rieszlab::{CellIndex, Configuration, DensityField, Dim, Point};

/// Random sequential addition of up to `n` points with pairwise distance
/// ≥ 2ε in the cube [0, side)^d.
pub fn random_configuration(d: Dim, eps: f64, n: usize, side: f64, seed: u64) -> Configuration {
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(seed);
    let du = d.get();
    let mut pts: Vec<Point> = Vec::new();
    let min2 = 4.0 * eps * eps * (1.0 + 1e-9);
    let mut attempts = 0;
    while pts.len() < n && attempts < 200 * n {
        attempts += 1;
        let mut p = [0.0; 3];
        for v in p.iter_mut().take(du) {
            *v = rng.gen::<f64>() * side;
        }
        if pts.iter().all(|q| (0..du).map(|a| (p[a] - q[a]).powi(2)).sum::<f64>() >= min2) {
            pts.push(p);
        }
    }
    Configuration::new(d, eps, pts).expect("admissible by construction")
}

/// Σ_{i≠j} w² f(|x_i − x_j|) with f = −r^{−p} beyond `cutoff`, straight from
/// the definition.
pub fn naive_discrete(d: Dim, sigma: f64, eps: f64, cutoff: f64, pts: &[Point]) -> f64 {
    let du = d.get();
    let w = eps.powi(du as i32) * d.unit_ball_volume() / d.packing_density();
    let p = du as f64 + sigma;
    let mut s = Neumaier::new();
    for (i, a) in pts.iter().enumerate() {
        for (j, b) in pts.iter().enumerate() {
            if i == j {
                continue;
            }
            let r = (0..du).map(|k| (a[k] - b[k]).powi(2)).sum::<f64>().sqrt();
            assert!(r >= 2.0 * eps * (1.0 - 1e-12), "inadmissible pair");
            if r >= cutoff {
                s.add(-r.powf(-p));
            }
        }
    }
    s.value() * w * w
}

/// Σ_{a,b} ρ_a ρ_b κ(b − a) by a double loop over cells, memoizing κ per
/// offset.
pub fn naive_cell_pairs(d: Dim, rho: &DensityField, p: f64, band: Band) -> f64 {
    let mut cache: HashMap<CellIndex, f64> = HashMap::new();
    let mut s = Neumaier::new();
    for (a, ra) in rho.iter() {
        for (b, rb) in rho.iter() {
            let k = [b[0] - a[0], b[1] - a[1], b[2] - a[2]];
            let key = [k[0].abs(), k[1].abs(), k[2].abs()];
            let v = *cache
                .entry(key)
                .or_insert_with(|| kappa(d.get(), key, p, band).expect("finite").value);
            s.add(ra * rb * v);
        }
    }
    s.value()
}

pub fn random_field(d: Dim, h: f64, side: i64, fill: f64, seed: u64) -> DensityField {
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(seed);
    let mut entries = Vec::new();
    let range = |a: usize| if a < d.get() { side } else { 1 };
    for i in 0..range(0) {
        for j in 0..range(1) {
            for k in 0..range(2) {
                if rng.gen::<f64>() < fill {
                    entries.push(([i, j, k], rng.gen::<f64>()));
                }
            }
        }
    }
    DensityField::new(d, h, entries).unwrap()
}

pub fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}
