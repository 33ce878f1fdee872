//! Discrete ↔ continuum constructions: from a scaled empirical measure to a
//! union of (sub-)cubes of side ρ_ε = √(ε r_ε), back from a set to a lattice
//! measure, and the smoothed measure μ̂.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::continuum_energy::j_truncated;
use crate::discrete_energy::{energy, EnergyValue};
use crate::domain::{CellIndex, Configuration, DensityField, PixelSet, Point, Region, ScaledEmpiricalMeasure};
use crate::error::{Error, Result};
use crate::kernels::KernelSpec;
use crate::packing::recovery_in_region;
use crate::summation::Neumaier;

/// Relative volume error allowed when realizing partial cubes on the sub-grid.
pub const VOLUME_TOL: f64 = 1e-3;
const MAX_SUBDIVISION: usize = 64;

fn regularized_r(spec: &KernelSpec) -> Result<f64> {
    spec.r_eps()
        .ok_or_else(|| Error::RegimeMismatch("the bridge is defined for regularized kernels".into()))
}

/// Side of the coarse cubes, ρ_ε = √(ε r_ε).
pub fn cube_side(spec: &KernelSpec) -> Result<f64> {
    Ok((spec.epsilon() * regularized_r(spec)?).sqrt())
}

/// Scaled mass per coarse cube, in cube-index order.
fn cube_masses(m: &ScaledEmpiricalMeasure, side: f64) -> BTreeMap<CellIndex, f64> {
    let d = m.config().dim().get();
    let mut counts: BTreeMap<CellIndex, usize> = BTreeMap::new();
    for p in m.config().points() {
        let mut c = [0i64; 3];
        for a in 0..d {
            c[a] = (p[a] / side).floor() as i64;
        }
        *counts.entry(c).or_default() += 1;
    }
    let w = m.mass_weight();
    counts.into_iter().map(|(c, n)| (c, n as f64 * w)).collect()
}

/// Sub-cells of a cube of `n` sub-cells per side whose total volume is
/// `target / h^d` rounded to the nearest integer: the smallest centered cube
/// that covers the target, with the cells farthest from the center removed.
fn partial_cube(d: usize, n: usize, cells_target: usize) -> Vec<CellIndex> {
    if cells_target == 0 {
        return Vec::new();
    }
    let mut k = 1usize;
    while k.pow(d as u32) < cells_target {
        k += 1;
    }
    let k = k.min(n);
    let start = (n - k) / 2;
    let mid = 0.5 * n as f64;
    let mut cells = Vec::with_capacity(k.pow(d as u32));
    let ranges: Vec<usize> = (0..3).map(|a| if a < d { k } else { 1 }).collect();
    for i in 0..ranges[0] {
        for j in 0..ranges[1] {
            for l in 0..ranges[2] {
                let mut c = [0i64; 3];
                let raw = [i, j, l];
                for a in 0..d {
                    c[a] = (start + raw[a]) as i64;
                }
                cells.push(c);
            }
        }
    }
    let dist = |c: &CellIndex| -> f64 {
        (0..d)
            .map(|a| {
                let x = c[a] as f64 + 0.5 - mid;
                x * x
            })
            .sum()
    };
    cells.sort_by(|a, b| dist(a).partial_cmp(&dist(b)).unwrap().then(a.cmp(b)));
    cells.truncate(cells_target);
    cells.sort_unstable();
    cells
}

/// Cube classification: full iff scaled mass ≥ ρ^d; otherwise the target
/// volume equals the cube's mass.
fn targets(masses: &BTreeMap<CellIndex, f64>, side: f64, d: usize) -> Vec<(CellIndex, Option<f64>)> {
    let full = side.powi(d as i32);
    masses
        .iter()
        .map(|(c, &m)| (*c, if m >= full { None } else { Some(m) }))
        .collect()
}

fn realization_error(t: &[(CellIndex, Option<f64>)], side: f64, n: usize, d: usize) -> (f64, f64) {
    let sub = (side / n as f64).powi(d as i32);
    let total = n.pow(d as u32);
    let mut err = 0.0;
    let mut vol = 0.0;
    for (_, v) in t {
        match v {
            None => vol += side.powi(d as i32),
            Some(m) => {
                let cells = ((m / sub).round() as usize).min(total);
                err += (cells as f64 * sub - m).abs();
                vol += m;
            }
        }
    }
    (err, vol)
}

/// Smallest sub-grid resolution (cells per cube side) meeting [`VOLUME_TOL`].
pub fn subdivision_for(m: &ScaledEmpiricalMeasure, spec: &KernelSpec) -> Result<usize> {
    let side = cube_side(spec)?;
    let d = m.config().dim().get();
    let t = targets(&cube_masses(m, side), side, d);
    let mut n = 4;
    loop {
        let (err, vol) = realization_error(&t, side, n, d);
        if err <= VOLUME_TOL * vol || n >= MAX_SUBDIVISION {
            return Ok(n);
        }
        n += 2;
    }
}

/// E_ε for a measure: full cubes where the scaled mass reaches ρ_ε^d, and
/// concentric sub-cubes of volume equal to the mass elsewhere.
pub fn measure_to_set(m: &ScaledEmpiricalMeasure, spec: &KernelSpec) -> Result<PixelSet> {
    let n = subdivision_for(m, spec)?;
    measure_to_set_with(m, spec, n)
}

pub fn measure_to_set_with(m: &ScaledEmpiricalMeasure, spec: &KernelSpec, subdivision: usize) -> Result<PixelSet> {
    let side = cube_side(spec)?;
    let dim = m.config().dim();
    let d = dim.get();
    if subdivision == 0 {
        return Err(crate::error::invalid("subdivision", "must be positive"));
    }
    let n = subdivision;
    let h = side / n as f64;
    let sub = h.powi(d as i32);
    let t = targets(&cube_masses(m, side), side, d);
    let full_block = partial_cube(d, n, n.pow(d as u32));
    let cells: Vec<CellIndex> = t
        .par_iter()
        .flat_map_iter(|(q, v)| {
            let local = match v {
                None => full_block.clone(),
                Some(mass) => partial_cube(d, n, ((mass / sub).round() as usize).min(n.pow(d as u32))),
            };
            let base: CellIndex = [q[0] * n as i64, q[1] * n as i64, q[2] * n as i64];
            local
                .into_iter()
                .map(move |c| [base[0] + c[0], base[1] + c[1], base[2] + c[2]])
        })
        .collect();
    PixelSet::new(dim, h, cells)
}

/// Fills E with the dilated optimal lattice ε·T^d ∩ E.
pub fn set_to_measure(set: &dyn Region, spec: &KernelSpec) -> Result<ScaledEmpiricalMeasure> {
    regularized_r(spec)?;
    if set.dim() != spec.d() {
        return Err(crate::error::invalid("set", "dimension mismatch"));
    }
    let config = if set.measure() == 0.0 {
        Configuration::empty(spec.d(), spec.epsilon())?
    } else {
        recovery_in_region(set, 1.0, spec.epsilon())?
    };
    Ok(ScaledEmpiricalMeasure::new(config))
}

/// Gaps between a measure and its set E_ε, with unit-constant envelopes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BridgeReport {
    pub epsilon: f64,
    pub r_eps: f64,
    pub subdivision: usize,
    pub scaled_mass: f64,
    pub set_measure: f64,
    pub discrete_energy: f64,
    pub continuum_energy: f64,
    pub continuum_error: f64,
    pub mass_gap: f64,
    pub energy_gap: f64,
    pub renormalized_gap: f64,
    /// √(ε / r_ε)
    pub bound_mass: f64,
    /// |γ_{r_ε}^σ| √(ε / r_ε)
    pub bound_energy: f64,
}

impl BridgeReport {
    pub const CSV_HEADER: [&'static str; 7] = [
        "epsilon",
        "r_eps",
        "mass_gap",
        "energy_gap",
        "renormalized_gap",
        "bound_mass",
        "bound_energy",
    ];

    pub fn csv_row(&self) -> [String; 7] {
        [
            self.epsilon,
            self.r_eps,
            self.mass_gap,
            self.energy_gap,
            self.renormalized_gap,
            self.bound_mass,
            self.bound_energy,
        ]
        .map(|v| format!("{v:?}"))
    }
}

pub fn energy_bridge_report(m: &ScaledEmpiricalMeasure, spec: &KernelSpec) -> Result<BridgeReport> {
    let r = regularized_r(spec)?;
    let set = measure_to_set(m, spec)?;
    let subdivision = (cube_side(spec)? / set.resolution()).round() as usize;
    let f = match energy(spec, m.config())? {
        EnergyValue::Finite(b) => b.pair_sum,
        EnergyValue::Forbidden { i, j, distance } => {
            return Err(Error::HardSphereViolation { i, j, distance });
        }
    };
    let j = j_truncated(spec.d(), spec.sigma(), r, &set)?;
    let gamma = spec.renormalization_constant();
    let mass = m.total_mass();
    let vol = set.measure();
    let root = (spec.epsilon() / r).sqrt();
    Ok(BridgeReport {
        epsilon: spec.epsilon(),
        r_eps: r,
        subdivision,
        scaled_mass: mass,
        set_measure: vol,
        discrete_energy: f,
        continuum_energy: j.value,
        continuum_error: j.error,
        mass_gap: (vol - mass).abs(),
        energy_gap: (f - j.value).abs(),
        renormalized_gap: ((f - gamma * mass) - (j.value - gamma * vol)).abs(),
        bound_mass: root,
        bound_energy: gamma.abs() * root,
    })
}

/// ⟨(ε^d ω_d / C^d) μ − χ_E, φ⟩, the integral over E by midpoint sampling
/// of its cells.
pub fn weak_star_gap(m: &ScaledEmpiricalMeasure, set: &PixelSet, phi: impl Fn(&Point) -> f64 + Sync) -> f64 {
    let w = m.mass_weight();
    let discrete: Neumaier = m.config().points().iter().map(|p| w * phi(p)).collect();
    let vol = set.cell_volume();
    let continuum: Neumaier = set.cells().iter().map(|c| vol * phi(&set.center(c))).collect();
    discrete.value() - continuum.value()
}

/// Samples per cell axis used to rasterize balls in [`smoothed_measure`].
const SUPERSAMPLE: [usize; 4] = [0, 16, 8, 4];

/// μ̂ = (1/C^d) Σ χ_{B_ε(x_i)} on a grid of resolution ε/4.
pub fn smoothed_measure(m: &ScaledEmpiricalMeasure) -> Result<DensityField> {
    smoothed_measure_at(m, m.config().epsilon() / 4.0)
}

/// Same, at a caller-chosen resolution. Cell values are the covered fraction
/// (by supersampling) divided by C^d.
pub fn smoothed_measure_at(m: &ScaledEmpiricalMeasure, h: f64) -> Result<DensityField> {
    let dim = m.config().dim();
    let d = dim.get();
    let eps = m.config().epsilon();
    let s = SUPERSAMPLE[d];
    let per_cell = s.pow(d as u32) as f64;
    let cap = 1.0 / dim.packing_density();
    let e2 = eps * eps;
    let reach = (eps / h).ceil() as i64 + 1;
    let counts: Vec<Vec<(CellIndex, u32)>> = m
        .config()
        .points()
        .par_iter()
        .map(|p| {
            let mut base = [0i64; 3];
            for a in 0..d {
                base[a] = (p[a] / h).floor() as i64;
            }
            let span = |a: usize| if a < d { -reach..=reach } else { 0..=0 };
            let mut out = Vec::new();
            for i in span(0) {
                for j in span(1) {
                    for k in span(2) {
                        let c = [base[0] + i, base[1] + j, base[2] + k];
                        let hits = covered_samples(d, s, h, &c, p, e2);
                        if hits > 0 {
                            out.push((c, hits));
                        }
                    }
                }
            }
            out
        })
        .collect();
    let mut acc: BTreeMap<CellIndex, u32> = BTreeMap::new();
    for list in counts {
        for (c, n) in list {
            *acc.entry(c).or_default() += n;
        }
    }
    let entries = acc
        .into_iter()
        .map(|(c, n)| (c, (n as f64 / per_cell).min(1.0) * cap))
        .collect();
    DensityField::with_cap(dim, h, cap, entries)
}

fn covered_samples(d: usize, s: usize, h: f64, c: &CellIndex, p: &Point, e2: f64) -> u32 {
    // Quick reject on the nearest point of the cell.
    let mut near = 0.0;
    for a in 0..d {
        let lo = c[a] as f64 * h;
        let x = p[a].clamp(lo, lo + h) - p[a];
        near += x * x;
    }
    if near >= e2 {
        return 0;
    }
    let step = h / s as f64;
    let coord = |a: usize, i: usize| c[a] as f64 * h + (i as f64 + 0.5) * step - p[a];
    let mut hits = 0u32;
    let ns = |a: usize| if a < d { s } else { 1 };
    for i in 0..ns(0) {
        let x = coord(0, i);
        for j in 0..ns(1) {
            let y = if d > 1 { coord(1, j) } else { 0.0 };
            for k in 0..ns(2) {
                let z = if d > 2 { coord(2, k) } else { 0.0 };
                if x * x + y * y + z * z < e2 {
                    hits += 1;
                }
            }
        }
    }
    hits
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{total_mass, AxisBox, Ball, Dim};

    fn spec(eps: f64) -> KernelSpec {
        KernelSpec::regularized_default(Dim::TWO, 0.5, eps).unwrap()
    }

    #[test]
    fn empty_measure_gives_empty_set() {
        let m = ScaledEmpiricalMeasure::new(Configuration::empty(Dim::TWO, 0.01).unwrap());
        assert!(measure_to_set(&m, &spec(0.01)).unwrap().is_empty());
    }

    #[test]
    fn integrable_kernel_is_rejected() {
        let m = ScaledEmpiricalMeasure::new(Configuration::empty(Dim::TWO, 0.01).unwrap());
        let k = KernelSpec::integrable(Dim::TWO, -1.0, 0.01).unwrap();
        assert!(matches!(measure_to_set(&m, &k), Err(Error::RegimeMismatch(_))));
        assert!(matches!(set_to_measure(&AxisBox::cube(Dim::TWO, 1.0), &k), Err(Error::RegimeMismatch(_))));
    }

    #[test]
    fn partial_cubes_hit_their_cell_counts() {
        for target in [0, 1, 5, 16, 37, 64] {
            let cells = partial_cube(2, 8, target);
            assert_eq!(cells.len(), target);
            assert!(cells.iter().all(|c| (0..8).contains(&c[0]) && (0..8).contains(&c[1])));
        }
    }

    #[test]
    fn single_point_becomes_small_cube() {
        let s = spec(0.01);
        let m = ScaledEmpiricalMeasure::new(Configuration::new(Dim::TWO, 0.01, vec![[0.3, 0.3, 0.0]]).unwrap());
        let set = measure_to_set(&m, &s).unwrap();
        let rel = (set.measure() - m.total_mass()).abs() / m.total_mass();
        assert!(rel <= VOLUME_TOL, "{rel}");
        assert!(set.cells().iter().all(|c| set.center(c)[0] < 0.3 + cube_side(&s).unwrap()));
    }

    #[test]
    fn unit_square_mass() {
        let s = spec(0.01);
        let m = set_to_measure(&AxisBox::cube(Dim::TWO, 1.0), &s).unwrap();
        let root = (s.epsilon() / s.r_eps().unwrap()).sqrt();
        assert!((total_mass(&m) - 1.0).abs() < root);
    }

    #[test]
    fn smoothed_single_point_integral() {
        let eps = 0.05;
        let m = ScaledEmpiricalMeasure::new(Configuration::new(Dim::TWO, eps, vec![[0.0; 3]]).unwrap());
        let f = smoothed_measure(&m).unwrap();
        let rel = (f.mass() - m.total_mass()).abs() / m.total_mass();
        assert!(rel < 0.01, "{rel}");
        assert!(f.values().iter().all(|&v| v > 0.0 && v <= f.cap()));
    }

    #[test]
    fn smoothed_disk_fill_keeps_mass() {
        let eps = 0.04;
        let c = recovery_in_region(&Ball::centered(Dim::TWO, 0.5), 1.0, eps).unwrap();
        let m = ScaledEmpiricalMeasure::new(c);
        let f = smoothed_measure(&m).unwrap();
        let rel = (f.mass() - m.total_mass()).abs() / m.total_mass();
        assert!(rel < 0.01, "{rel}");
    }
}
