//! Discrete energies of hard-sphere configurations.
//!
//! Pair sums use the ordered-pair convention Σ_{i≠j}, so every unordered pair
//! is counted twice. All pairs on the attractive tail are enumerated exactly;
//! configurations carrying a lattice support can instead go through an exact
//! integer autocorrelation of their lattice indices.

use rayon::prelude::*;

use crate::domain::{dist2, first_violation, Configuration, Dim, Point};
use crate::error::{invalid, Result};
use crate::grid::{autocorrelation, round_counts, Grid, DIRECT_LIMIT};
use crate::kernels::{ConfinementSpec, KernelSpec};
use crate::summation::{combine, Neumaier};

/// Itemized energy. `total = pair_sum − renormalization + confinement`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyBreakdown {
    pub n: usize,
    pub pair_sum: f64,
    pub renormalization: f64,
    pub confinement: f64,
    pub total: f64,
}

impl EnergyBreakdown {
    pub const CSV_HEADER: [&'static str; 5] = ["n", "pair_sum", "renormalization", "confinement", "total"];

    pub fn csv_row(&self) -> [String; 5] {
        [
            self.n.to_string(),
            format!("{:?}", self.pair_sum),
            format!("{:?}", self.renormalization),
            format!("{:?}", self.confinement),
            format!("{:?}", self.total),
        ]
    }
}

/// Either a finite energy or the +∞ of a hard-sphere violation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EnergyValue {
    Forbidden { i: usize, j: usize, distance: f64 },
    Finite(EnergyBreakdown),
}

impl EnergyValue {
    pub fn total(&self) -> Option<f64> {
        match self {
            EnergyValue::Finite(b) => Some(b.total),
            EnergyValue::Forbidden { .. } => None,
        }
    }

    pub fn breakdown(&self) -> Option<&EnergyBreakdown> {
        match self {
            EnergyValue::Finite(b) => Some(b),
            EnergyValue::Forbidden { .. } => None,
        }
    }

    pub fn is_forbidden(&self) -> bool {
        matches!(self, EnergyValue::Forbidden { .. })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PairMethod {
    /// Lattice correlation for large lattice-supported inputs, direct otherwise.
    #[default]
    Auto,
    Direct,
    Lattice,
}

const ROWS_PER_BLOCK: usize = 64;

fn check(spec: &KernelSpec, config: &Configuration) -> Result<()> {
    if spec.d() != config.dim() {
        return Err(invalid(
            "config",
            format!("dimension {} does not match kernel dimension {}", config.dim().get(), spec.d().get()),
        ));
    }
    Ok(())
}

/// Σ_{i<j} f(|x_i − x_j|) over a fixed row-block tree.
fn direct_unordered(spec: &KernelSpec, pts: &[Point]) -> f64 {
    let n = pts.len();
    let blocks: Vec<Neumaier> = (0..n.div_ceil(ROWS_PER_BLOCK))
        .into_par_iter()
        .map(|b| {
            let mut acc = Neumaier::new();
            for i in b * ROWS_PER_BLOCK..((b + 1) * ROWS_PER_BLOCK).min(n) {
                let p = &pts[i];
                for q in &pts[i + 1..] {
                    acc.add(spec.admissible_pair_sq(dist2(p, q)));
                }
            }
            acc
        })
        .collect();
    combine(&blocks)
}

/// Σ_{k≠0} C(k) f(|Bk|) where C counts ordered index pairs at offset k.
fn lattice_ordered(spec: &KernelSpec, config: &Configuration) -> Option<f64> {
    let lat = config.lattice()?;
    let d = config.dim().get();
    if lat.indices.is_empty() {
        return Some(0.0);
    }
    let mut lo = lat.indices[0];
    let mut hi = lo;
    for c in &lat.indices {
        for a in 0..d {
            lo[a] = lo[a].min(c[a]);
            hi[a] = hi[a].max(c[a]);
        }
    }
    let mut shape = [1usize; 3];
    for a in 0..d {
        shape[a] = (hi[a] - lo[a] + 1) as usize;
    }
    let mut grid = Grid::zeros(config.dim(), lo, shape);
    for c in &lat.indices {
        let i = grid.index(c).expect("index inside bounding box");
        grid.data[i] = 1.0;
    }
    let mut corr = autocorrelation(&grid);
    round_counts(&mut corr);
    let basis = lat.basis;
    let partial: Vec<Neumaier> = corr
        .data
        .par_chunks(4096)
        .enumerate()
        .map(|(ci, chunk)| {
            let mut acc = Neumaier::new();
            for (j, &w) in chunk.iter().enumerate() {
                if w == 0.0 {
                    continue;
                }
                let k = corr.offset(ci * 4096 + j);
                if k == [0, 0, 0] {
                    continue;
                }
                let mut v = [0.0; 3];
                for (a, row) in basis.iter().enumerate().take(d) {
                    for c in 0..3 {
                        v[c] += k[a] as f64 * row[c];
                    }
                }
                acc.add(w * spec.admissible_pair_sq(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]));
            }
            acc
        })
        .collect();
    Some(combine(&partial))
}

fn lattice_is_cheap(config: &Configuration) -> bool {
    let Some(lat) = config.lattice() else { return false };
    let d = config.dim().get();
    let mut vol = 1.0f64;
    for a in 0..d {
        let (mn, mx) = lat
            .indices
            .iter()
            .fold((i64::MAX, i64::MIN), |(l, h), c| (l.min(c[a]), h.max(c[a])));
        vol *= (mx - mn + 1) as f64;
    }
    vol <= 16.0 * lat.indices.len() as f64 + 4096.0
}

/// Σ_{i≠j} f(|x_i − x_j|) without the mass weight, or the first violating pair.
pub fn raw_pair_sum(spec: &KernelSpec, config: &Configuration, method: PairMethod) -> Result<std::result::Result<f64, (usize, usize, f64)>> {
    check(spec, config)?;
    let pts = config.points();
    // A configuration validated at a larger ε needs no recheck.
    if config.epsilon() < spec.epsilon() {
        if let Some(v) = first_violation(config.dim(), pts, 2.0 * spec.epsilon()) {
            return Ok(Err(v));
        }
    }
    let use_lattice = match method {
        PairMethod::Direct => false,
        PairMethod::Lattice => config.lattice().is_some(),
        PairMethod::Auto => pts.len() > DIRECT_LIMIT && lattice_is_cheap(config),
    };
    let s = if use_lattice {
        lattice_ordered(spec, config).expect("lattice support present")
    } else {
        2.0 * direct_unordered(spec, pts)
    };
    Ok(Ok(s))
}

fn evaluate(
    spec: &KernelSpec,
    config: &Configuration,
    renormalize: bool,
    g: Option<&ConfinementSpec>,
    method: PairMethod,
) -> Result<EnergyValue> {
    let raw = match raw_pair_sum(spec, config, method)? {
        Ok(s) => s,
        Err((i, j, distance)) => return Ok(EnergyValue::Forbidden { i, j, distance }),
    };
    let w = spec.mass_weight();
    let n = config.len();
    let pair_sum = raw * w * w;
    let renormalization = if renormalize {
        spec.renormalization_constant() * w * n as f64
    } else {
        0.0
    };
    let confinement = match g {
        Some(g) if !g.is_zero() => {
            let acc: Neumaier = config.points().iter().map(|p| g.eval(p)).collect();
            acc.value() * w
        }
        _ => 0.0,
    };
    Ok(EnergyValue::Finite(EnergyBreakdown {
        n,
        pair_sum,
        renormalization,
        confinement,
        total: pair_sum - renormalization + confinement,
    }))
}

/// 𝓕_ε^σ: Σ_{i≠j} f_ε^σ(|x_i − x_j|)·(ε^d ω_d / C^d)².
pub fn energy(spec: &KernelSpec, config: &Configuration) -> Result<EnergyValue> {
    evaluate(spec, config, false, None, PairMethod::Auto)
}

pub fn energy_with(spec: &KernelSpec, config: &Configuration, method: PairMethod) -> Result<EnergyValue> {
    evaluate(spec, config, false, None, method)
}

/// 𝓕̂_ε^σ = 𝓕_ε^σ − γ_{r_ε}^σ·(ε^d ω_d / C^d)·N, regularized regime only.
pub fn energy_renormalized(spec: &KernelSpec, config: &Configuration) -> Result<EnergyValue> {
    if spec.is_integrable() {
        return Err(crate::error::Error::RegimeMismatch(
            "renormalized energy needs a regularized kernel".into(),
        ));
    }
    evaluate(spec, config, true, None, PairMethod::Auto)
}

/// T_ε^σ = 𝓕_ε^σ + Σ g(x_i)·(ε^d ω_d / C^d), integrable regime only.
pub fn energy_confined(spec: &KernelSpec, g: &ConfinementSpec, config: &Configuration) -> Result<EnergyValue> {
    if !spec.is_integrable() {
        return Err(crate::error::Error::RegimeMismatch(
            "confined energy needs an integrable kernel".into(),
        ));
    }
    evaluate(spec, config, false, Some(g), PairMethod::Auto)
}

/// Both sides of the rearrangement bound behind the confinement lower
/// estimate, for s = −σ > 0:
///
/// Σ_i w (|x_i| + ε)^s ≥ (1/C^d) ∫_{B_ρ} |y|^s dy, with |B_ρ| = C^d·w·N.
///
/// The ε-balls around the points are disjoint with total volume C^d·w·N, and
/// |y|^s ≤ (|x_i| + ε)^s on each of them; the bathtub principle places that
/// volume at the origin. Returns (lhs, rhs).
pub fn confinement_rearrangement_bound(d: Dim, sigma: f64, config: &Configuration) -> Result<(f64, f64)> {
    if !(sigma < 0.0 && sigma > -d.as_f64()) {
        return Err(crate::error::Error::NonIntegrableSigma(sigma));
    }
    let s = -sigma;
    let eps = config.epsilon();
    let w = crate::domain::mass_weight(d, eps);
    let lhs: Neumaier = config
        .points()
        .iter()
        .map(|p| w * (crate::domain::norm(p) + eps).powf(s))
        .collect();
    let df = d.as_f64();
    let c = d.packing_density();
    let vol = c * w * config.len() as f64;
    let rho = (vol / d.unit_ball_volume()).powf(1.0 / df);
    let rhs = d.unit_sphere_area() * rho.powf(df + s) / (df + s) / c;
    Ok((lhs.value(), rhs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::packing::recovery_in_region;
    use crate::Ball;

    fn naive(spec: &KernelSpec, pts: &[Point]) -> f64 {
        let mut s = 0.0;
        for (i, p) in pts.iter().enumerate() {
            for (j, q) in pts.iter().enumerate() {
                if i != j {
                    s += spec.admissible_pair(dist2(p, q).sqrt());
                }
            }
        }
        s * spec.mass_weight().powi(2)
    }

    #[test]
    fn two_point_hand_value() {
        let spec = KernelSpec::integrable(Dim::ONE, -0.5, 0.25).unwrap();
        let c = Configuration::new(Dim::ONE, 0.25, vec![[0.0; 3], [1.0, 0.0, 0.0]]).unwrap();
        let e = energy(&spec, &c).unwrap().total().unwrap();
        assert!((e + 0.5).abs() < 1e-15, "{e}");
    }

    #[test]
    fn forbidden_when_kernel_epsilon_is_larger() {
        let spec = KernelSpec::integrable(Dim::ONE, -0.5, 0.25).unwrap();
        let c = Configuration::new(Dim::ONE, 0.1, vec![[0.0; 3], [0.3, 0.0, 0.0]]).unwrap();
        assert!(energy(&spec, &c).unwrap().is_forbidden());
    }

    #[test]
    fn single_point_renormalized_is_positive() {
        let spec = KernelSpec::regularized(Dim::TWO, 0.5, 0.01, 0.1).unwrap();
        let c = Configuration::new(Dim::TWO, 0.01, vec![[0.0; 3]]).unwrap();
        let e = energy_renormalized(&spec, &c).unwrap().total().unwrap();
        let expected = -spec.renormalization_constant() * spec.mass_weight();
        assert!(e > 0.0 && (e - expected).abs() < 1e-15 * expected);
    }

    #[test]
    fn lattice_path_matches_direct() {
        let region = Ball::centered(Dim::TWO, 1.0);
        let c = recovery_in_region(&region, 1.0, 0.05).unwrap();
        for spec in [
            KernelSpec::integrable(Dim::TWO, -1.0, 0.05).unwrap(),
            KernelSpec::regularized(Dim::TWO, 0.5, 0.05, 0.31).unwrap(),
        ] {
            let a = energy_with(&spec, &c, PairMethod::Direct).unwrap().total().unwrap();
            let b = energy_with(&spec, &c, PairMethod::Lattice).unwrap().total().unwrap();
            let o = naive(&spec, c.points());
            assert!((a - o).abs() <= 1e-12 * o.abs(), "{a} {o}");
            assert!((b - o).abs() <= 1e-12 * o.abs(), "{b} {o}");
        }
    }

    #[test]
    fn regime_guards() {
        let reg = KernelSpec::regularized(Dim::TWO, 0.5, 0.01, 0.1).unwrap();
        let int = KernelSpec::integrable(Dim::TWO, -1.0, 0.01).unwrap();
        let c = Configuration::empty(Dim::TWO, 0.01).unwrap();
        assert!(energy_renormalized(&int, &c).is_err());
        assert!(energy_confined(&reg, &ConfinementSpec::zero(), &c).is_err());
        assert_eq!(energy_renormalized(&reg, &c).unwrap().total(), Some(0.0));
    }
}
