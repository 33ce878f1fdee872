//! Densest lattices in d ≤ 3, finite-box packing estimates and the lattice
//! recovery construction ε a^{−1/d} T^d ∩ A.

use rand::{Rng, SeedableRng};
use rand_distr::{Distribution, Normal};
use rand_xoshiro::Xoshiro256PlusPlus;
use serde::{Deserialize, Serialize};

use crate::domain::{AxisBox, CellIndex, Configuration, DensityField, Dim, PixelSet, Point, Region};
use crate::error::{invalid, Error, Result};
use crate::neighbors::CellList;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LatticeKind {
    IntegerLine,
    Hexagonal,
    Fcc,
}

/// The densest lattice in dimension d with the given nearest-neighbor
/// distance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LatticeSpec {
    pub d: Dim,
    pub kind: LatticeKind,
    pub spacing: f64,
}

impl LatticeSpec {
    pub fn optimal(d: Dim, spacing: f64) -> Result<Self> {
        if !(spacing.is_finite() && spacing > 0.0) {
            return Err(invalid("spacing", format!("{spacing} must be positive")));
        }
        let kind = match d.get() {
            1 => LatticeKind::IntegerLine,
            2 => LatticeKind::Hexagonal,
            _ => LatticeKind::Fcc,
        };
        Ok(LatticeSpec { d, kind, spacing })
    }

    /// Primitive vectors as rows.
    pub fn basis(&self) -> [[f64; 3]; 3] {
        let s = self.spacing;
        match self.kind {
            LatticeKind::IntegerLine => [[s, 0.0, 0.0], [0.0; 3], [0.0; 3]],
            LatticeKind::Hexagonal => [[s, 0.0, 0.0], [0.5 * s, 0.5 * 3f64.sqrt() * s, 0.0], [0.0; 3]],
            LatticeKind::Fcc => {
                let a = s / 2f64.sqrt();
                [[0.0, a, a], [a, 0.0, a], [a, a, 0.0]]
            }
        }
    }

    /// Volume of the fundamental cell.
    pub fn cell_volume(&self) -> f64 {
        let s = self.spacing;
        match self.kind {
            LatticeKind::IntegerLine => s,
            LatticeKind::Hexagonal => 0.5 * 3f64.sqrt() * s * s,
            LatticeKind::Fcc => s * s * s / 2f64.sqrt(),
        }
    }
}

fn point_of(basis: &[[f64; 3]; 3], d: usize, n: &CellIndex, shift: &Point) -> Point {
    let mut p = *shift;
    for (a, row) in basis.iter().enumerate().take(d) {
        for c in 0..3 {
            p[c] += n[a] as f64 * row[c];
        }
    }
    p
}

/// Inverse of the d×d matrix whose columns are the basis rows.
fn inverse_columns(basis: &[[f64; 3]; 3], d: usize) -> [[f64; 3]; 3] {
    let mut m = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            m[i][j] = if i < d && j < d { basis[j][i] } else if i == j { 1.0 } else { 0.0 };
        }
    }
    let det = m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
    let mut inv = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            let (r0, r1) = ((j + 1) % 3, (j + 2) % 3);
            let (c0, c1) = ((i + 1) % 3, (i + 2) % 3);
            inv[i][j] = (m[r0][c0] * m[r1][c1] - m[r0][c1] * m[r1][c0]) / det;
        }
    }
    inv
}

/// Indices n with basis·n + shift inside `region`, in index order.
pub fn lattice_indices_in(d: Dim, basis: &[[f64; 3]; 3], shift: &Point, region: &dyn Region) -> Vec<CellIndex> {
    let du = d.get();
    let (lo, hi) = region.bounds();
    let inv = inverse_columns(basis, du);
    let mut nlo = [0i64; 3];
    let mut nhi = [0i64; 3];
    for a in 0..du {
        let mut mn = f64::INFINITY;
        let mut mx = f64::NEG_INFINITY;
        for corner in 0..(1usize << du) {
            let mut v = 0.0;
            for b in 0..du {
                let x = if corner & (1 << b) == 0 { lo[b] } else { hi[b] };
                v += inv[a][b] * (x - shift[b]);
            }
            mn = mn.min(v);
            mx = mx.max(v);
        }
        nlo[a] = mn.floor() as i64 - 1;
        nhi[a] = mx.ceil() as i64 + 1;
    }
    let mut out = Vec::new();
    for i in nlo[0]..=nhi[0] {
        for j in nlo[1]..=nhi[1] {
            for k in nlo[2]..=nhi[2] {
                let n = [i, j, k];
                if region.contains(&point_of(basis, du, &n, shift)) {
                    out.push(n);
                }
            }
        }
    }
    out
}

fn lexicographic(points: &mut [Point]) {
    points.sort_by(|a, b| a.partial_cmp(b).expect("finite coordinates"));
}

/// Lattice points inside a bounded region, in lexicographic coordinate order.
pub fn lattice_points_in(spec: &LatticeSpec, region: &dyn Region) -> Vec<Point> {
    let basis = spec.basis();
    let idx = lattice_indices_in(spec.d, &basis, &[0.0; 3], region);
    let mut pts: Vec<Point> = idx.iter().map(|n| point_of(&basis, spec.d.get(), n, &[0.0; 3])).collect();
    lexicographic(&mut pts);
    pts
}

/// Result of [`estimate_box_density`].
#[derive(Debug, Clone, PartialEq)]
pub struct BoxPacking {
    pub count: usize,
    pub density: f64,
    /// Count of the best lattice placement found (the asserted lower bound).
    pub lattice_count: usize,
    pub points: Vec<Point>,
}

/// Centers may lie anywhere in [0, r)^d; the closed box [0, r − δ]^d is used.
const EDGE: f64 = 1e-9;

/// Lower bound for C_r^d: the best number of unit-radius sphere centers
/// (pairwise distance ≥ 2) found in [0, r)^d, by structured placements
/// followed by randomized shaking and insertion.
pub fn estimate_box_density(d: Dim, r: f64, anneal_budget: usize, seed: u64) -> Result<(usize, f64)> {
    let p = estimate_box_packing(d, r, anneal_budget, seed)?;
    Ok((p.count, p.density))
}

pub fn estimate_box_packing(d: Dim, r: f64, anneal_budget: usize, seed: u64) -> Result<BoxPacking> {
    if !(r > 2.0 && r.is_finite()) {
        return Err(invalid("r", format!("{r} must exceed 2")));
    }
    let side = r - EDGE;
    let lattice = best_lattice_placement(d, side);
    let lattice_count = lattice.len();
    let mut best = lattice;
    if d.get() == 2 {
        let rows = compressed_rows(side);
        if rows.len() > best.len() {
            best = rows;
        }
    }
    if d.get() == 1 {
        // Equally spaced at distance 2 from 0 is optimal.
        let n = (side / 2.0).floor() as usize + 1;
        best = (0..n).map(|i| [2.0 * i as f64, 0.0, 0.0]).collect();
    }
    if best.is_empty() {
        return Err(Error::BudgetTooSmall);
    }
    let improved = shake_and_insert(d, side, best, anneal_budget, seed);
    let count = improved.len();
    let volume = r.powi(d.get() as i32);
    let mut points = improved;
    lexicographic(&mut points);
    let out = BoxPacking {
        count,
        density: count as f64 * d.unit_ball_volume() / volume,
        lattice_count,
        points,
    };
    debug_assert!(out.count >= lattice_count);
    Ok(out)
}

fn in_closed_box(p: &Point, d: usize, side: f64) -> bool {
    (0..d).all(|a| p[a] >= 0.0 && p[a] <= side)
}

/// Optimal lattice (spacing 2) under a grid of translations, best count.
fn best_lattice_placement(d: Dim, side: f64) -> Vec<Point> {
    let spec = LatticeSpec::optimal(d, 2.0).expect("positive spacing");
    let basis = spec.basis();
    let du = d.get();
    let region = AxisBox::new(d, [0.0; 3], {
        let mut hi = [0.0; 3];
        for v in hi.iter_mut().take(du) {
            *v = side + 1e-12;
        }
        hi
    });
    let steps = match du {
        1 => 1,
        2 => 8,
        _ => 4,
    };
    let mut best: Vec<Point> = Vec::new();
    for i in 0..steps {
        for j in 0..if du > 1 { steps } else { 1 } {
            for k in 0..if du > 2 { steps } else { 1 } {
                let t = [i as f64 / steps as f64, j as f64 / steps as f64, k as f64 / steps as f64];
                let shift = point_of(&basis, du, &[0, 0, 0], &[0.0; 3]);
                let mut s = shift;
                for (a, row) in basis.iter().enumerate().take(du) {
                    for c in 0..3 {
                        s[c] += t[a] * row[c];
                    }
                }
                let idx = lattice_indices_in(d, &basis, &s, &region);
                if idx.len() > best.len() {
                    best = idx
                        .iter()
                        .map(|n| point_of(&basis, du, n, &s))
                        .filter(|p| in_closed_box(p, du, side))
                        .collect();
                }
            }
        }
    }
    best
}

/// Rows of disks with spacing `a` alternating with rows shifted by a/2,
/// m rows spread over the full height; the row gap is compressed below √3
/// while the in-row spacing grows to keep contacts admissible.
fn compressed_rows(side: f64) -> Vec<Point> {
    let mut best: Vec<Point> = Vec::new();
    let mut m = 2usize;
    loop {
        let hy = side / (m - 1) as f64;
        if hy < 1.0 {
            break;
        }
        let a = if hy >= 2.0 { 2.0 } else { 2.0f64.max(2.0 * (4.0 - hy * hy).sqrt()) };
        for start_full in [true, false] {
            let mut pts = Vec::new();
            for row in 0..m {
                let full = (row % 2 == 0) == start_full;
                let x0 = if full { 0.0 } else { 0.5 * a };
                let mut x = x0;
                while x <= side {
                    pts.push([x, row as f64 * hy, 0.0]);
                    x += a;
                }
            }
            if pts.len() > best.len() {
                best = pts;
            }
        }
        m += 1;
    }
    best
}

/// Random single-particle moves that keep admissibility, interleaved with
/// insertion attempts at uniformly random positions. Only ever adds points.
fn shake_and_insert(d: Dim, side: f64, mut pts: Vec<Point>, budget: usize, seed: u64) -> Vec<Point> {
    if budget == 0 {
        return pts;
    }
    let du = d.get();
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(seed);
    let normal = Normal::new(0.0, 0.25).expect("positive scale");
    let mut cells = CellList::build(d, 2.0, &pts);
    for it in 0..budget {
        if it % 8 == 7 {
            let mut q = [0.0; 3];
            for v in q.iter_mut().take(du) {
                *v = rng.gen::<f64>() * side;
            }
            if !cells.conflicts(&pts, &q, None, 2.0) {
                cells.insert(pts.len(), &q);
                pts.push(q);
            }
            continue;
        }
        if pts.is_empty() {
            continue;
        }
        let i = rng.gen_range(0..pts.len());
        let mut q = pts[i];
        for v in q.iter_mut().take(du) {
            *v = (*v + normal.sample(&mut rng)).clamp(0.0, side);
        }
        if !cells.conflicts(&pts, &q, Some(i), 2.0) {
            let from = pts[i];
            cells.relocate(i, &from, &q);
            pts[i] = q;
        }
    }
    pts
}

/// I_ε = ε a^{−1/d} T^d ∩ A for ρ = a·χ_A given as a density field with a
/// single nonzero level.
pub fn recovery_configuration(rho: &DensityField, epsilon: f64) -> Result<Configuration> {
    let values = rho.values();
    let level = match values.first() {
        None => return Configuration::empty(rho.dim(), epsilon),
        Some(&a) => a,
    };
    if values.iter().any(|&v| v != level) {
        return Err(invalid("rho", "recovery needs a single density level a·χ_A"));
    }
    let set = PixelSet::new(rho.dim(), rho.resolution(), rho.cells().to_vec())?;
    recovery_in_region(&set, level, epsilon)
}

/// Same construction for an arbitrary region A (balls, boxes, pixel sets).
/// Membership is the region's own (half-open for boxes and pixel cells).
pub fn recovery_in_region(region: &dyn Region, level: f64, epsilon: f64) -> Result<Configuration> {
    if !(level > 0.0 && level <= 1.0) {
        return Err(Error::LevelOutOfRange(level));
    }
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(invalid("epsilon", format!("{epsilon} must be positive")));
    }
    let d = region.dim();
    let spacing = 2.0 * epsilon * level.powf(-1.0 / d.as_f64());
    let spec = LatticeSpec::optimal(d, spacing)?;
    let basis = spec.basis();
    let idx = lattice_indices_in(d, &basis, &[0.0; 3], region);
    Configuration::from_lattice(d, epsilon, basis, idx)
}
