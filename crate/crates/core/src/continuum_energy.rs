//! Continuum functionals on pixel sets and density fields: the Riesz energy
//! 𝓕^σ and its confined form, the truncated and renormalized energies J_r^σ,
//! Ĵ_r^σ, the fractional perimeters P^σ and P^0, and the first-variation
//! residual.
//!
//! Every functional is a finite sum of cell-pair integrals h^{2d−p} κ(b − a)
//! (see [`crate::cellint`]) weighted by the cell values; the diagonal terms
//! that diverge for p ≥ d are handled through single-cell identities.

use crate::cellint::{covariogram_complement, kappa_with, symmetric_cube_integral, Band, Multilinear};
use crate::domain::{CellIndex, DensityField, Dim, PixelSet, Region};
use crate::error::{invalid, Error, Result};
use crate::grid::{pair_sum, Convolver, Grid, KernelTable, Method};
use crate::kernels::{gamma_r_sigma, gamma_sigma, ConfinementSpec};
use crate::quadrature::Estimate;
use crate::summation::Neumaier;

pub use crate::cellint::QuadratureSpec;

fn check_dim(expected: Dim, got: Dim) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(invalid("dim", format!("functional in d = {} applied to data in d = {}", expected.get(), got.get())))
    }
}

fn extent(grid: &Grid) -> [usize; 3] {
    [grid.shape[0].saturating_sub(1), grid.shape[1].saturating_sub(1), grid.shape[2].saturating_sub(1)]
}

/// Table of κ(k) for exponent `p` and band, covering the grid's offsets.
pub fn kernel_table(d: Dim, ext: [usize; 3], p: f64, band: Band, q: &QuadratureSpec) -> Result<KernelTable> {
    KernelTable::build(d, ext, |k| kappa_with(d.get(), k, p, band, q))
}

fn scaled(e: Estimate, factor: f64) -> Estimate {
    Estimate {
        value: e.value * factor,
        error: (e.error * factor).abs(),
    }
}

/// Σ_{a,b} ρ_a ρ_b κ(b−a) for the given grid and band; `drop_diagonal`
/// removes the a = b terms.
fn banded_pair_sum(d: Dim, grid: &Grid, p: f64, band: Band, drop_diagonal: bool, q: &QuadratureSpec) -> Result<Estimate> {
    if grid.data.iter().all(|&v| v == 0.0) {
        return Ok(Estimate::default());
    }
    let ext = extent(grid);
    let table = if drop_diagonal {
        KernelTable::build(d, ext, |k| {
            if k == [0, 0, 0] {
                Some(Estimate::default())
            } else {
                kappa_with(d.get(), k, p, band, q)
            }
        })?
    } else {
        kernel_table(d, ext, p, band, q)?
    };
    Ok(pair_sum(grid, &table, Method::Auto))
}

/// 𝓕^σ(ρ) = −∬ ρ(x)ρ(y)|x−y|^{−(d+σ)} dx dy for σ ∈ (−d, 0).
pub fn riesz_energy(d: Dim, sigma: f64, rho: &DensityField) -> Result<Estimate> {
    riesz_energy_with(d, sigma, rho, &QuadratureSpec::default())
}

pub fn riesz_energy_with(d: Dim, sigma: f64, rho: &DensityField, q: &QuadratureSpec) -> Result<Estimate> {
    check_integrable(d, sigma)?;
    check_dim(d, rho.dim())?;
    let h = rho.resolution();
    let p = d.as_f64() + sigma;
    let grid = Grid::from_field(rho);
    let s = banded_pair_sum(d, &grid, p, Band::FULL, false, q)?;
    Ok(scaled(s, -h.powf(2.0 * d.as_f64() - p)))
}

fn check_integrable(d: Dim, sigma: f64) -> Result<()> {
    if sigma >= 0.0 {
        return Err(Error::NonIntegrableSigma(sigma));
    }
    if sigma <= -d.as_f64() {
        return Err(Error::SigmaOutOfRange(sigma));
    }
    Ok(())
}

/// ∫ g ρ with g sampled at cell centers.
pub fn confinement_energy(rho: &DensityField, g: &ConfinementSpec) -> f64 {
    let vol = rho.cell_volume();
    let mut s = Neumaier::new();
    for (c, v) in rho.iter() {
        s.add(g.eval(&rho.center(c)) * v);
    }
    s.value() * vol
}

/// 𝓣^σ(ρ) = 𝓕^σ(ρ) + ∫ g ρ.
pub fn riesz_energy_confined(d: Dim, sigma: f64, rho: &DensityField, g: &ConfinementSpec) -> Result<Estimate> {
    let mut e = riesz_energy(d, sigma, rho)?;
    e.value += confinement_energy(rho, g);
    Ok(e)
}

fn check_regularized_sigma(sigma: f64) -> Result<()> {
    if (0.0..1.0).contains(&sigma) {
        Ok(())
    } else {
        Err(Error::SigmaOutOfRange(sigma))
    }
}

/// J_r^σ(E) = −∫_E ∫_{E ∖ B_r(x)} |x−y|^{−(d+σ)}; requires r > 2h.
pub fn j_truncated(d: Dim, sigma: f64, r: f64, set: &PixelSet) -> Result<Estimate> {
    j_truncated_with(d, sigma, r, set, &QuadratureSpec::default())
}

pub fn j_truncated_with(d: Dim, sigma: f64, r: f64, set: &PixelSet, q: &QuadratureSpec) -> Result<Estimate> {
    check_regularized_sigma(sigma)?;
    check_dim(d, set.dim())?;
    let h = set.resolution();
    if !(r > 2.0 * h) {
        return Err(Error::ResolutionTooCoarse { r, h });
    }
    if set.is_empty() || set.diameter_bound() <= r {
        return Ok(Estimate::default());
    }
    let p = d.as_f64() + sigma;
    let grid = Grid::from_set(set);
    let s = banded_pair_sum(d, &grid, p, Band::above(r / h), false, q)?;
    Ok(scaled(s, -h.powf(2.0 * d.as_f64() - p)))
}

/// Ĵ_r^σ(E) = J_r^σ(E) − γ_r^σ |E|.
pub fn j_renormalized(d: Dim, sigma: f64, r: f64, set: &PixelSet) -> Result<Estimate> {
    if !(r > 0.0 && r < 1.0) {
        return Err(invalid("r", format!("{r} is not in (0, 1)")));
    }
    let mut j = j_truncated(d, sigma, r, set)?;
    j.value -= gamma_r_sigma(d, sigma, r)? * set.measure();
    Ok(j)
}

/// P^σ of the unit cube: ∫_{[−1,1]^d}|s|^{−p}(1 − g_Q(s)) + ∫_{ℝ^d ∖ [−1,1]^d}|s|^{−p}.
pub fn unit_cube_perimeter(d: Dim, sigma: f64) -> Result<Estimate> {
    let p = d.as_f64() + sigma;
    let du = d.get();
    let inner = symmetric_cube_integral(du, &covariogram_complement(du), p, Band::FULL)
        .ok_or_else(|| Error::Divergent("cube self-interaction".into()))?;
    let corners = symmetric_cube_integral(du, &Multilinear::constant(1.0), p, Band::above(1.0))
        .ok_or_else(|| Error::Divergent("cube corners".into()))?;
    Ok(Estimate {
        value: inner.value + gamma_sigma(d, sigma)? - corners.value,
        error: inner.error + corners.error,
    })
}

/// P^σ(E) = ∫_E ∫_{ℝ^d ∖ E} |x−y|^{−(d+σ)} for σ ∈ (0, 1).
///
/// Computed as M·P^σ(Q_h) − Σ_{a≠b} ∫_{Q_a}∫_{Q_b}: each cell's interaction
/// with its own complement minus the parts of that complement inside E.
pub fn fractional_perimeter(d: Dim, sigma: f64, set: &PixelSet) -> Result<Estimate> {
    fractional_perimeter_with(d, sigma, set, &QuadratureSpec::default())
}

pub fn fractional_perimeter_with(d: Dim, sigma: f64, set: &PixelSet, q: &QuadratureSpec) -> Result<Estimate> {
    if !(sigma > 0.0 && sigma < 1.0) {
        return Err(Error::SigmaOutOfRange(sigma));
    }
    check_dim(d, set.dim())?;
    if set.is_empty() {
        return Ok(Estimate::default());
    }
    let h = set.resolution();
    let p = d.as_f64() + sigma;
    let cube = unit_cube_perimeter(d, sigma)?;
    let m = set.len() as f64;
    let grid = Grid::from_set(set);
    let off = banded_pair_sum(d, &grid, p, Band::FULL, true, q)?;
    let scale = h.powf(d.as_f64() - sigma);
    Ok(Estimate {
        value: scale * (m * cube.value - off.value),
        error: scale * (m * cube.error + off.error),
    })
}

/// Default radii for [`p0_perimeter`]: three values in geometric progression
/// spanning a decade, starting beyond the set's diameter.
pub fn default_p0_radii(set: &PixelSet) -> Vec<f64> {
    let base = 2.0 * (set.diameter_bound() + set.dim().as_f64().sqrt() * set.resolution());
    vec![base, base * 10f64.sqrt(), base * 10.0]
}

/// Relative tolerance of the P^0 plateau test.
pub const P0_PLATEAU_TOL: f64 = 1e-4;

/// Bracketed P^0 quantity at radius R:
/// ∫_E ∫_{B_R(x) ∖ E}|x−y|^{−d} − γ_R^0 |E|.
pub fn p0_bracket(d: Dim, set: &PixelSet, radius: f64) -> Result<Estimate> {
    p0_bracket_with(d, set, radius, &QuadratureSpec::default())
}

pub fn p0_bracket_with(d: Dim, set: &PixelSet, radius: f64, q: &QuadratureSpec) -> Result<Estimate> {
    check_dim(d, set.dim())?;
    if set.is_empty() {
        return Ok(Estimate::default());
    }
    let h = set.resolution();
    let du = d.get();
    let df = d.as_f64();
    let rr = radius / h;
    if !(rr >= df.sqrt()) {
        return Err(invalid("R", format!("{radius} must be at least √d·h")));
    }
    // Single cell, in units of h:
    // ∫_{B_{R'}} |s|^{−d}(1 − g_Q) = A + γ_{R'}^0 − ∫_{[−1,1]^d ∩ {|s| ≥ 1}} |s|^{−d}, valid for R' ≥ √d.
    let a = symmetric_cube_integral(du, &covariogram_complement(du), df, Band::FULL)
        .ok_or_else(|| Error::Divergent("cube self-interaction".into()))?;
    let corners = symmetric_cube_integral(du, &Multilinear::constant(1.0), df, Band::above(1.0))
        .ok_or_else(|| Error::Divergent("cube corners".into()))?;
    let s = d.unit_sphere_area();
    let m = set.len() as f64;
    let grid = Grid::from_set(set);
    let off = banded_pair_sum(d, &grid, df, Band::below(rr), true, q)?;
    let vol = h.powi(du as i32);
    // γ_{R/h}^0 per cell minus γ_R^0 per cell leaves −dω_d log h.
    let per_cell = a.value - corners.value - s * h.ln();
    Ok(Estimate {
        value: vol * (m * per_cell - off.value),
        error: vol * (m * (a.error + corners.error) + off.error),
    })
}

/// P^0(E): evaluates the bracket at each radius and returns the plateau
/// value, failing with `NoPlateau` if successive values disagree.
pub fn p0_perimeter(d: Dim, set: &PixelSet, radii: &[f64]) -> Result<Estimate> {
    if set.is_empty() {
        return Ok(Estimate::default());
    }
    if radii.is_empty() || radii.windows(2).any(|w| w[1] <= w[0]) {
        return Err(invalid("R_list", "radii must be nonempty and increasing"));
    }
    let mut last: Option<Estimate> = None;
    for &r in radii {
        let e = p0_bracket(d, set, r)?;
        if let Some(prev) = last {
            let scale = e.value.abs().max(prev.value.abs()).max(1e-300);
            if (e.value - prev.value).abs() > P0_PLATEAU_TOL * scale {
                return Err(Error::NoPlateau(prev.value, e.value));
            }
        }
        last = Some(e);
    }
    Ok(last.expect("at least one radius"))
}

/// Signed per-cell field on a box of cells.
#[derive(Debug, Clone, PartialEq)]
pub struct ResidualField {
    pub dim: Dim,
    pub resolution: f64,
    pub origin: CellIndex,
    pub shape: [usize; 3],
    pub values: Vec<f64>,
}

impl ResidualField {
    pub fn cell(&self, i: usize) -> CellIndex {
        let g = Grid {
            dim: self.dim,
            origin: self.origin,
            shape: self.shape,
            data: Vec::new(),
        };
        g.cell(i)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Box of cells covering the support of ρ with `margin` extra cells per side.
pub fn support_box(rho: &DensityField, margin: usize) -> Option<(CellIndex, [usize; 3])> {
    let (lo, hi) = rho.index_bounds()?;
    let d = rho.dim().get();
    let mut origin = [0i64; 3];
    let mut shape = [1usize; 3];
    for a in 0..d {
        origin[a] = lo[a] - margin as i64;
        shape[a] = (hi[a] - lo[a] + 1) as usize + 2 * margin;
    }
    Some((origin, shape))
}

/// g(x) − 2∫ ρ(y)|x−y|^{−(d+σ)} dy, averaged over each cell of the box
/// `origin + [0, shape)` (which must contain the support of ρ).
pub fn first_variation_residual(
    d: Dim,
    sigma: f64,
    rho: &DensityField,
    g: &ConfinementSpec,
    origin: CellIndex,
    shape: [usize; 3],
) -> Result<ResidualField> {
    check_integrable(d, sigma)?;
    check_dim(d, rho.dim())?;
    let h = rho.resolution();
    let p = d.as_f64() + sigma;
    let mut grid = Grid::zeros(d, origin, shape);
    for (c, v) in rho.iter() {
        let i = grid.index(c).ok_or_else(|| invalid("domain", "box does not contain the support of rho"))?;
        grid.data[i] = v;
    }
    let potential = if rho.is_empty() {
        vec![0.0; grid.len()]
    } else {
        let table = kernel_table(d, extent(&grid), p, Band::FULL, &QuadratureSpec::default())?;
        Convolver::new(d, grid.shape, &table).apply(&grid)
    };
    let factor = 2.0 * h.powf(d.as_f64() - p);
    let values = potential
        .iter()
        .enumerate()
        .map(|(i, u)| {
            let x = crate::domain::cell_center(d, h, &grid.cell(i));
            g.eval(&x) - factor * u
        })
        .collect();
    Ok(ResidualField {
        dim: d,
        resolution: h,
        origin: grid.origin,
        shape: grid.shape,
        values,
    })
}

/// Naive O(M²) reference for the cell-pair sums: Σ_{a,b} ρ_a ρ_b κ(b − a)
/// with κ evaluated afresh for every pair.
pub fn naive_pair_sum(d: Dim, rho: &DensityField, p: f64, band: Band, drop_diagonal: bool) -> Result<f64> {
    let mut s = Neumaier::new();
    for (a, ra) in rho.iter() {
        for (b, rb) in rho.iter() {
            if drop_diagonal && a == b {
                continue;
            }
            let k = [b[0] - a[0], b[1] - a[1], b[2] - a[2]];
            let e = kappa_with(d.get(), k, p, band, &QuadratureSpec::default())
                .ok_or_else(|| Error::Divergent(format!("offset {k:?}")))?;
            s.add(ra * rb * e.value);
        }
    }
    Ok(s.value())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::Ball;
    use crate::reference;

    fn interval(n: i64) -> PixelSet {
        PixelSet::new(Dim::ONE, 1.0 / n as f64, (0..n).map(|i| [i, 0, 0]).collect()).unwrap()
    }

    fn square(n: i64, h: f64) -> PixelSet {
        let mut cells = Vec::new();
        for i in 0..n {
            for j in 0..n {
                cells.push([i, j, 0]);
            }
        }
        PixelSet::new(Dim::TWO, h, cells).unwrap()
    }

    #[test]
    fn unit_interval_riesz() {
        for n in [1, 7, 40] {
            let rho = DensityField::from_pixel_set(&interval(n), 1.0).unwrap();
            let e = riesz_energy(Dim::ONE, -0.5, &rho).unwrap();
            assert!((e.value + 8.0 / 3.0).abs() < 1e-9, "n={n}: {e:?}");
        }
    }

    #[test]
    fn unit_interval_truncated() {
        let e = j_truncated(Dim::ONE, 0.0, 0.5, &interval(10)).unwrap();
        let exact = -2.0 * (2f64.ln() - 0.5);
        assert!((e.value - exact).abs() < 1e-9, "{e:?}");
    }

    #[test]
    fn truncation_removes_small_sets() {
        let s = square(3, 0.01);
        assert_eq!(j_truncated(Dim::TWO, 0.5, 0.1, &s).unwrap().value, 0.0);
        assert!(matches!(j_truncated(Dim::TWO, 0.5, 0.015, &s), Err(Error::ResolutionTooCoarse { .. })));
    }

    #[test]
    fn interval_perimeter_matches_closed_form() {
        let sigma = 0.4;
        let e = fractional_perimeter(Dim::ONE, sigma, &interval(16)).unwrap();
        let exact = 2.0 / (sigma * (1.0 - sigma));
        assert!((e.value - exact).abs() < 1e-8 * exact, "{e:?} vs {exact}");
    }

    #[test]
    fn perimeter_scaling_on_square() {
        let a = fractional_perimeter(Dim::TWO, 0.5, &square(6, 0.1)).unwrap().value;
        let b = fractional_perimeter(Dim::TWO, 0.5, &square(6, 0.2)).unwrap().value;
        assert!((b / a - 2f64.powf(1.5)).abs() < 1e-10);
    }

    #[test]
    fn unit_square_perimeter_matches_covariogram_integral() {
        // P^σ([0,1]^2) = ∫_{ℝ²}|s|^{−p}(1 − g(s)) ds, evaluated in polar
        // coordinates with 30-digit arithmetic for σ = 1/2.
        let e = unit_cube_perimeter(Dim::TWO, 0.5).unwrap();
        let reference = 27.211_908_360_256_528_409;
        assert!((e.value - reference).abs() < 1e-11 * reference, "{e:?}");
    }

    #[test]
    fn interval_p0_matches_closed_form() {
        // d=1: the interval is a ball, so the covariogram form applies.
        let set = interval(20);
        let radii = default_p0_radii(&set);
        let e = p0_perimeter(Dim::ONE, &set, &radii).unwrap();
        let r = reference::p0_perimeter_ball(Dim::ONE, 0.5);
        assert!((e.value - r.value).abs() < 1e-8, "{e:?} vs {r:?}");
    }

    #[test]
    fn p0_plateau_and_scaling() {
        let s = square(5, 0.2);
        let radii = default_p0_radii(&s);
        let e = p0_perimeter(Dim::TWO, &s, &radii).unwrap();
        let early = p0_bracket(Dim::TWO, &s, 0.5).unwrap();
        assert!((e.value - early.value).abs() > 1e-6);
        assert!(e.value.is_finite());
    }

    #[test]
    fn naive_agreement_small() {
        let set = PixelSet::from_region(&Ball::centered(Dim::TWO, 0.3), 0.05).unwrap();
        let rho = DensityField::from_pixel_set(&set, 0.7).unwrap();
        let fast = riesz_energy(Dim::TWO, -1.0, &rho).unwrap().value;
        let naive = -0.05f64.powf(3.0) * naive_pair_sum(Dim::TWO, &rho, 1.0, Band::FULL, false).unwrap();
        assert!((fast - naive).abs() < 1e-12 * naive.abs());
        assert!(set.measure() > 0.0 && set.measure() < Ball::centered(Dim::TWO, 0.4).measure());
    }

    #[test]
    fn residual_without_density_is_g() {
        let rho = DensityField::new(Dim::TWO, 0.1, vec![]).unwrap();
        let g = ConfinementSpec::for_sigma(1.0, 2.0, -1.0).unwrap();
        let r = first_variation_residual(Dim::TWO, -1.0, &rho, &g, [-3, -3, 0], [6, 6, 1]).unwrap();
        for (i, v) in r.values.iter().enumerate() {
            let x = crate::domain::cell_center(Dim::TWO, 0.1, &r.cell(i));
            assert_eq!(*v, g.eval(&x));
            assert!(*v > 0.0);
        }
    }
}
