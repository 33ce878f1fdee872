//! Domain types shared by every module: dimensions, parameters, hard-sphere
//! configurations, scaled empirical measures, pixel sets and density fields.
//!
//! Points are stored as `[f64; 3]` regardless of the ambient dimension; the
//! coordinates beyond `d` are always zero, so Euclidean distances computed on
//! all three components are the `d`-dimensional ones.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

pub type Point = [f64; 3];

/// Integer cell index on a uniform grid; unused axes are zero.
pub type CellIndex = [i64; 3];

/// Relative slack applied to the hard-sphere test so that configurations
/// generated from exact lattices are not rejected because of rounding.
pub const HARD_SPHERE_SLACK: f64 = 1e-12;

/// Ambient dimension, restricted to 1, 2 or 3 where the optimal packing
/// density is known.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "usize", into = "usize")]
pub struct Dim(usize);

impl Dim {
    pub const ONE: Dim = Dim(1);
    pub const TWO: Dim = Dim(2);
    pub const THREE: Dim = Dim(3);

    pub fn new(d: usize) -> Result<Self> {
        match d {
            1..=3 => Ok(Dim(d)),
            _ => Err(Error::UnsupportedDimension(d)),
        }
    }

    #[inline]
    pub fn get(self) -> usize {
        self.0
    }

    pub fn as_f64(self) -> f64 {
        self.0 as f64
    }

    /// Volume of the unit ball, ω_d.
    pub fn unit_ball_volume(self) -> f64 {
        match self.0 {
            1 => 2.0,
            2 => PI,
            _ => 4.0 * PI / 3.0,
        }
    }

    /// Surface measure of the unit sphere, d·ω_d.
    pub fn unit_sphere_area(self) -> f64 {
        self.as_f64() * self.unit_ball_volume()
    }

    /// Optimal ball-packing density C^d.
    ///
    /// d = 1: unit intervals tile the line, so C^1 = 1.
    /// d = 2: the hexagonal packing covers π/(2√3) of the plane.
    /// d = 3: the fcc packing covers π/(3√2) of space.
    pub fn packing_density(self) -> f64 {
        match self.0 {
            1 => 1.0,
            2 => PI / (2.0 * 3f64.sqrt()),
            _ => PI / (3.0 * 2f64.sqrt()),
        }
    }
}

impl TryFrom<usize> for Dim {
    type Error = Error;
    fn try_from(d: usize) -> Result<Self> {
        Dim::new(d)
    }
}

impl From<Dim> for usize {
    fn from(d: Dim) -> usize {
        d.0
    }
}

/// Mass carried by a single point of an empirical measure: ε^d ω_d / C^d.
pub fn mass_weight(dim: Dim, epsilon: f64) -> f64 {
    epsilon.powi(dim.get() as i32) * dim.unit_ball_volume() / dim.packing_density()
}

#[inline]
pub fn dist2(a: &Point, b: &Point) -> f64 {
    let dx = a[0] - b[0];
    let dy = a[1] - b[1];
    let dz = a[2] - b[2];
    dx * dx + dy * dy + dz * dz
}

#[inline]
pub fn norm(a: &Point) -> f64 {
    (a[0] * a[0] + a[1] * a[1] + a[2] * a[2]).sqrt()
}

/// Physical parameters of a kernel: dimension, exponent σ, sphere scale ε and
/// the optional mesoscale cutoff r_ε (present exactly in the regularized regime).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Params {
    pub d: Dim,
    pub sigma: f64,
    pub epsilon: f64,
    pub r_eps: Option<f64>,
}

impl Params {
    pub fn new(d: Dim, sigma: f64, epsilon: f64, r_eps: Option<f64>) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon < 1.0) {
            return Err(invalid("epsilon", format!("{epsilon} is not in (0, 1)")));
        }
        let dd = d.as_f64();
        match r_eps {
            None => {
                if !(sigma > -dd && sigma < 0.0) {
                    return Err(invalid(
                        "sigma",
                        format!("{sigma} is not in (-{dd}, 0); a mesoscale r_eps is required for sigma >= 0"),
                    ));
                }
            }
            Some(r) => {
                if !(0.0..1.0).contains(&sigma) {
                    return Err(invalid(
                        "sigma",
                        format!("{sigma} is not in [0, 1); r_eps is only used in the regularized regime"),
                    ));
                }
                if !(r.is_finite() && r > 2.0 * epsilon) {
                    return Err(invalid("r_eps", format!("{r} must exceed 2·epsilon = {}", 2.0 * epsilon)));
                }
            }
        }
        Ok(Params { d, sigma, epsilon, r_eps })
    }

    pub fn mass_weight(&self) -> f64 {
        mass_weight(self.d, self.epsilon)
    }
}

/// Integer lattice coordinates backing a configuration whose points all lie on
/// a common Bravais lattice. Enables the correlation-based energy evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatticeSupport {
    /// Rows are the primitive vectors (only the first `d` rows are used).
    pub basis: [[f64; 3]; 3],
    pub indices: Vec<CellIndex>,
}

impl LatticeSupport {
    pub fn point(&self, dim: Dim, idx: &CellIndex) -> Point {
        let mut p = [0.0; 3];
        for (a, row) in self.basis.iter().enumerate().take(dim.get()) {
            let n = idx[a] as f64;
            for c in 0..3 {
                p[c] += n * row[c];
            }
        }
        p
    }

    /// Shortest nonzero lattice vector (searched over small index combinations).
    pub fn shortest_vector(&self, dim: Dim) -> f64 {
        let d = dim.get();
        let mut best = f64::INFINITY;
        let span = 2i64;
        let range = |a: usize| if a < d { -span..=span } else { 0..=0 };
        for i in range(0) {
            for j in range(1) {
                for k in range(2) {
                    if i == 0 && j == 0 && k == 0 {
                        continue;
                    }
                    let v = self.point(dim, &[i, j, k]);
                    best = best.min(norm(&v));
                }
            }
        }
        best
    }
}

/// A finite hard-sphere configuration: all pairwise distances are at least 2ε.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "crate::io::ConfigurationRecord", into = "crate::io::ConfigurationRecord")]
pub struct Configuration {
    dim: Dim,
    epsilon: f64,
    points: Vec<Point>,
    lattice: Option<LatticeSupport>,
}

impl Configuration {
    /// Validates the hard-sphere constraint using a cell grid of side 2ε.
    pub fn new(dim: Dim, epsilon: f64, points: Vec<Point>) -> Result<Self> {
        check_epsilon(epsilon)?;
        check_points(dim, &points)?;
        if let Some((i, j, distance)) = first_violation(dim, &points, 2.0 * epsilon) {
            return Err(Error::HardSphereViolation { i, j, distance });
        }
        Ok(Configuration {
            dim,
            epsilon,
            points,
            lattice: None,
        })
    }

    /// Convenience constructor from coordinate vectors of length `d`.
    pub fn from_coords(dim: Dim, epsilon: f64, coords: &[Vec<f64>]) -> Result<Self> {
        let mut points = Vec::with_capacity(coords.len());
        for (index, c) in coords.iter().enumerate() {
            if c.len() != dim.get() {
                return Err(Error::InvalidPoint { index, dim: dim.get() });
            }
            let mut p = [0.0; 3];
            p[..c.len()].copy_from_slice(c);
            points.push(p);
        }
        Self::new(dim, epsilon, points)
    }

    /// Builds a configuration from lattice coordinates. Admissibility follows
    /// from the shortest lattice vector and distinctness of the indices, so no
    /// pairwise scan is needed.
    pub fn from_lattice(dim: Dim, epsilon: f64, basis: [[f64; 3]; 3], mut indices: Vec<CellIndex>) -> Result<Self> {
        check_epsilon(epsilon)?;
        indices.sort_unstable();
        let before = indices.len();
        indices.dedup();
        if indices.len() != before {
            return Err(invalid("indices", "duplicate lattice indices"));
        }
        let support = LatticeSupport { basis, indices };
        let shortest = support.shortest_vector(dim);
        if indices_nontrivial(&support) && shortest < 2.0 * epsilon * (1.0 - HARD_SPHERE_SLACK) {
            return Err(invalid(
                "basis",
                format!("shortest lattice vector {shortest} is below 2·epsilon"),
            ));
        }
        let points: Vec<Point> = support.indices.iter().map(|i| support.point(dim, i)).collect();
        check_points(dim, &points)?;
        Ok(Configuration {
            dim,
            epsilon,
            points,
            lattice: Some(support),
        })
    }

    pub fn empty(dim: Dim, epsilon: f64) -> Result<Self> {
        Self::new(dim, epsilon, Vec::new())
    }

    pub fn dim(&self) -> Dim {
        self.dim
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn lattice(&self) -> Option<&LatticeSupport> {
        self.lattice.as_ref()
    }

    /// Drops the lattice certificate (forces generic pair enumeration).
    pub fn without_lattice(&self) -> Self {
        Configuration {
            lattice: None,
            ..self.clone()
        }
    }

    /// Whether every pair is at distance at least `2·radius` (with slack).
    pub fn is_admissible_for(&self, radius: f64) -> bool {
        if radius <= self.epsilon {
            return true;
        }
        if let Some(l) = &self.lattice {
            return l.indices.len() < 2 || l.shortest_vector(self.dim) >= 2.0 * radius * (1.0 - HARD_SPHERE_SLACK);
        }
        first_violation(self.dim, &self.points, 2.0 * radius).is_none()
    }

    /// Disjoint union; fails if the union violates the hard-sphere constraint.
    pub fn union(&self, other: &Configuration) -> Result<Configuration> {
        if self.dim != other.dim {
            return Err(invalid("dim", "dimension mismatch in union"));
        }
        let mut pts = self.points.clone();
        pts.extend_from_slice(&other.points);
        Configuration::new(self.dim, self.epsilon.min(other.epsilon), pts)
    }
}

fn indices_nontrivial(s: &LatticeSupport) -> bool {
    s.indices.len() >= 2
}

fn check_epsilon(epsilon: f64) -> Result<()> {
    if epsilon.is_finite() && epsilon > 0.0 {
        Ok(())
    } else {
        Err(invalid("epsilon", format!("{epsilon} must be positive and finite")))
    }
}

fn check_points(dim: Dim, points: &[Point]) -> Result<()> {
    let d = dim.get();
    for (index, p) in points.iter().enumerate() {
        let ok = p[..d].iter().all(|x| x.is_finite()) && p[d..].iter().all(|&x| x == 0.0);
        if !ok {
            return Err(Error::InvalidPoint { index, dim: d });
        }
    }
    Ok(())
}

fn cell_of(p: &Point, side: f64, d: usize) -> CellIndex {
    let mut c = [0i64; 3];
    for a in 0..d {
        c[a] = (p[a] / side).floor() as i64;
    }
    c
}

/// Scans for the first pair closer than `min_dist` (up to the relative slack).
/// Returns `(i, j, distance)` with `i < j`, choosing the smallest `j` first and
/// then the smallest partner `i`.
pub(crate) fn first_violation(dim: Dim, points: &[Point], min_dist: f64) -> Option<(usize, usize, f64)> {
    if points.len() < 2 {
        return None;
    }
    let d = dim.get();
    let threshold = min_dist * (1.0 - HARD_SPHERE_SLACK);
    let t2 = threshold * threshold;
    let side = min_dist;
    let mut keyed: Vec<(CellIndex, usize)> = points.iter().enumerate().map(|(i, p)| (cell_of(p, side, d), i)).collect();
    keyed.sort_unstable();
    let keys: Vec<CellIndex> = keyed.iter().map(|k| k.0).collect();

    let offsets = neighbor_offsets(d);
    let mut best: Option<(usize, usize, f64)> = None;
    for (j, p) in points.iter().enumerate() {
        if let Some((_, bj, _)) = best {
            if j > bj {
                break;
            }
        }
        let c = cell_of(p, side, d);
        let mut partner: Option<(usize, f64)> = None;
        for off in &offsets {
            let nc = [c[0] + off[0], c[1] + off[1], c[2] + off[2]];
            let lo = keys.partition_point(|k| k < &nc);
            let hi = keys.partition_point(|k| k <= &nc);
            for &(_, i) in &keyed[lo..hi] {
                if i >= j {
                    continue;
                }
                let q = &points[i];
                let r2 = dist2(p, q);
                if r2 < t2 && partner.map_or(true, |(pi, _)| i < pi) {
                    partner = Some((i, r2.sqrt()));
                }
            }
        }
        if let Some((i, dist)) = partner {
            best = Some((i, j, dist));
        }
    }
    best
}

pub(crate) fn neighbor_offsets(d: usize) -> Vec<CellIndex> {
    let r = |a: usize| if a < d { -1..=1 } else { 0..=0 };
    let mut out = Vec::new();
    for i in r(0) {
        for j in r(1) {
            for k in r(2) {
                out.push([i, j, k]);
            }
        }
    }
    out
}

/// A configuration together with its per-point mass ε^d ω_d / C^d.
#[derive(Debug, Clone, PartialEq)]
pub struct ScaledEmpiricalMeasure {
    config: Configuration,
    mass_weight: f64,
}

impl ScaledEmpiricalMeasure {
    pub fn new(config: Configuration) -> Self {
        let mass_weight = mass_weight(config.dim(), config.epsilon());
        ScaledEmpiricalMeasure { config, mass_weight }
    }

    pub fn config(&self) -> &Configuration {
        &self.config
    }

    pub fn mass_weight(&self) -> f64 {
        self.mass_weight
    }

    pub fn total_mass(&self) -> f64 {
        total_mass(self)
    }

    /// Scaled mass of the points selected by `pred`.
    pub fn mass_where(&self, pred: impl Fn(&Point) -> bool) -> f64 {
        self.config.points().iter().filter(|p| pred(p)).count() as f64 * self.mass_weight
    }
}

/// N · ε^d ω_d / C^d.
pub fn total_mass(m: &ScaledEmpiricalMeasure) -> f64 {
    m.config.len() as f64 * m.mass_weight
}

/// A bounded region of ℝ^d with membership test and exact measure.
pub trait Region: Sync {
    fn dim(&self) -> Dim;
    fn contains(&self, p: &Point) -> bool;
    /// Axis-aligned bounding box `(lo, hi)` containing the region.
    fn bounds(&self) -> (Point, Point);
    fn measure(&self) -> f64;
}

/// Open ball `|x - center| < radius`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Ball {
    pub dim: Dim,
    pub center: Point,
    pub radius: f64,
}

impl Ball {
    pub fn new(dim: Dim, center: Point, radius: f64) -> Self {
        Ball { dim, center, radius }
    }

    pub fn centered(dim: Dim, radius: f64) -> Self {
        Ball::new(dim, [0.0; 3], radius)
    }

    /// Ball of the given measure.
    pub fn with_measure(dim: Dim, center: Point, measure: f64) -> Self {
        let r = (measure / dim.unit_ball_volume()).powf(1.0 / dim.as_f64());
        Ball::new(dim, center, r)
    }
}

impl Region for Ball {
    fn dim(&self) -> Dim {
        self.dim
    }
    fn contains(&self, p: &Point) -> bool {
        dist2(p, &self.center) < self.radius * self.radius
    }
    fn bounds(&self) -> (Point, Point) {
        let mut lo = [0.0; 3];
        let mut hi = [0.0; 3];
        for a in 0..self.dim.get() {
            lo[a] = self.center[a] - self.radius;
            hi[a] = self.center[a] + self.radius;
        }
        (lo, hi)
    }
    fn measure(&self) -> f64 {
        self.dim.unit_ball_volume() * self.radius.powi(self.dim.get() as i32)
    }
}

/// Half-open box `[lo, hi)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AxisBox {
    pub dim: Dim,
    pub lo: Point,
    pub hi: Point,
}

impl AxisBox {
    pub fn new(dim: Dim, lo: Point, hi: Point) -> Self {
        AxisBox { dim, lo, hi }
    }

    /// `[0, side)^d`.
    pub fn cube(dim: Dim, side: f64) -> Self {
        let mut hi = [0.0; 3];
        for v in hi.iter_mut().take(dim.get()) {
            *v = side;
        }
        AxisBox::new(dim, [0.0; 3], hi)
    }
}

impl Region for AxisBox {
    fn dim(&self) -> Dim {
        self.dim
    }
    fn contains(&self, p: &Point) -> bool {
        (0..self.dim.get()).all(|a| p[a] >= self.lo[a] && p[a] < self.hi[a])
    }
    fn bounds(&self) -> (Point, Point) {
        (self.lo, self.hi)
    }
    fn measure(&self) -> f64 {
        (0..self.dim.get()).map(|a| (self.hi[a] - self.lo[a]).max(0.0)).product()
    }
}

/// A finite union of grid cells `k·h + [0, h)^d`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "crate::io::PixelSetRecord", into = "crate::io::PixelSetRecord")]
pub struct PixelSet {
    dim: Dim,
    resolution: f64,
    cells: Vec<CellIndex>,
}

impl PixelSet {
    pub fn new(dim: Dim, resolution: f64, mut cells: Vec<CellIndex>) -> Result<Self> {
        check_resolution(resolution)?;
        let d = dim.get();
        if cells.iter().any(|c| c[d..].iter().any(|&v| v != 0)) {
            return Err(invalid("cells", format!("cell indices must have zero components beyond d = {d}")));
        }
        cells.sort_unstable();
        cells.dedup();
        Ok(PixelSet { dim, resolution, cells })
    }

    pub fn empty(dim: Dim, resolution: f64) -> Result<Self> {
        Self::new(dim, resolution, Vec::new())
    }

    /// Cells of the grid whose centers satisfy `pred`, scanning the cells
    /// that meet the box `[lo, hi]`.
    pub fn from_predicate(dim: Dim, resolution: f64, lo: Point, hi: Point, pred: impl Fn(&Point) -> bool) -> Result<Self> {
        check_resolution(resolution)?;
        let d = dim.get();
        let mut lo_i = [0i64; 3];
        let mut hi_i = [0i64; 3];
        for a in 0..d {
            lo_i[a] = (lo[a] / resolution).floor() as i64 - 1;
            hi_i[a] = (hi[a] / resolution).ceil() as i64 + 1;
        }
        let mut cells = Vec::new();
        for i in lo_i[0]..=hi_i[0] {
            for j in lo_i[1]..=hi_i[1] {
                for k in lo_i[2]..=hi_i[2] {
                    let c = [i, j, k];
                    if pred(&cell_center(dim, resolution, &c)) {
                        cells.push(c);
                    }
                }
            }
        }
        Self::new(dim, resolution, cells)
    }

    /// Rasterizes a region by cell-center membership.
    pub fn from_region(region: &dyn Region, resolution: f64) -> Result<Self> {
        let (lo, hi) = region.bounds();
        Self::from_predicate(region.dim(), resolution, lo, hi, |p| region.contains(p))
    }

    pub fn dim(&self) -> Dim {
        self.dim
    }

    pub fn resolution(&self) -> f64 {
        self.resolution
    }

    pub fn cells(&self) -> &[CellIndex] {
        &self.cells
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn cell_volume(&self) -> f64 {
        self.resolution.powi(self.dim.get() as i32)
    }

    pub fn contains_cell(&self, c: &CellIndex) -> bool {
        self.cells.binary_search(c).is_ok()
    }

    pub fn center(&self, c: &CellIndex) -> Point {
        cell_center(self.dim, self.resolution, c)
    }

    /// Shifts every cell index by `offset`.
    pub fn translated(&self, offset: CellIndex) -> Self {
        let d = self.dim.get();
        let cells = self
            .cells
            .iter()
            .map(|c| {
                let mut n = *c;
                for a in 0..d {
                    n[a] += offset[a];
                }
                n
            })
            .collect();
        PixelSet::new(self.dim, self.resolution, cells).expect("translation keeps a valid set")
    }

    /// Swaps two coordinate axes.
    pub fn permuted(&self, a: usize, b: usize) -> Self {
        let cells = self
            .cells
            .iter()
            .map(|c| {
                let mut n = *c;
                n.swap(a, b);
                n
            })
            .collect();
        PixelSet::new(self.dim, self.resolution, cells).expect("permutation keeps a valid set")
    }

    /// Inclusive index bounds of the cells, or `None` when empty.
    pub fn index_bounds(&self) -> Option<(CellIndex, CellIndex)> {
        index_bounds(self.dim, &self.cells)
    }

    /// Largest distance between two points of the set (upper bound from the
    /// bounding box of the cells).
    pub fn diameter_bound(&self) -> f64 {
        match self.index_bounds() {
            None => 0.0,
            Some((lo, hi)) => {
                let s: f64 = (0..self.dim.get())
                    .map(|a| {
                        let w = (hi[a] - lo[a] + 1) as f64 * self.resolution;
                        w * w
                    })
                    .sum();
                s.sqrt()
            }
        }
    }

    pub fn union(&self, other: &PixelSet) -> Result<PixelSet> {
        if self.dim != other.dim || self.resolution != other.resolution {
            return Err(invalid("pixel set", "union requires matching dimension and resolution"));
        }
        let mut cells = self.cells.clone();
        cells.extend_from_slice(&other.cells);
        PixelSet::new(self.dim, self.resolution, cells)
    }
}

impl Region for PixelSet {
    fn dim(&self) -> Dim {
        self.dim
    }
    fn contains(&self, p: &Point) -> bool {
        self.contains_cell(&cell_of(p, self.resolution, self.dim.get()))
    }
    fn bounds(&self) -> (Point, Point) {
        let mut lo = [0.0; 3];
        let mut hi = [0.0; 3];
        if let Some((l, h)) = self.index_bounds() {
            for a in 0..self.dim.get() {
                lo[a] = l[a] as f64 * self.resolution;
                hi[a] = (h[a] + 1) as f64 * self.resolution;
            }
        }
        (lo, hi)
    }
    fn measure(&self) -> f64 {
        self.cells.len() as f64 * self.cell_volume()
    }
}

pub(crate) fn index_bounds(dim: Dim, cells: &[CellIndex]) -> Option<(CellIndex, CellIndex)> {
    let first = cells.first()?;
    let mut lo = *first;
    let mut hi = *first;
    for c in cells {
        for a in 0..dim.get() {
            lo[a] = lo[a].min(c[a]);
            hi[a] = hi[a].max(c[a]);
        }
    }
    Some((lo, hi))
}

pub fn cell_center(dim: Dim, h: f64, c: &CellIndex) -> Point {
    let mut p = [0.0; 3];
    for a in 0..dim.get() {
        p[a] = (c[a] as f64 + 0.5) * h;
    }
    p
}

fn check_resolution(h: f64) -> Result<()> {
    if h.is_finite() && h > 0.0 {
        Ok(())
    } else {
        Err(invalid("resolution", format!("{h} must be positive and finite")))
    }
}

/// Piecewise-constant density on a uniform grid, with values in `[0, cap]`.
/// `cap` is 1 for densities dominated by Lebesgue measure; the smoothed
/// empirical measure uses `cap = 1 / C^d`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "crate::io::DensityRecord", into = "crate::io::DensityRecord")]
pub struct DensityField {
    dim: Dim,
    resolution: f64,
    cap: f64,
    cells: Vec<CellIndex>,
    values: Vec<f64>,
}

impl DensityField {
    pub fn new(dim: Dim, resolution: f64, entries: Vec<(CellIndex, f64)>) -> Result<Self> {
        Self::with_cap(dim, resolution, 1.0, entries)
    }

    pub fn with_cap(dim: Dim, resolution: f64, cap: f64, mut entries: Vec<(CellIndex, f64)>) -> Result<Self> {
        check_resolution(resolution)?;
        if !(cap.is_finite() && cap > 0.0) {
            return Err(invalid("cap", format!("{cap} must be positive")));
        }
        let d = dim.get();
        for (c, v) in &entries {
            if !(v.is_finite() && *v >= 0.0 && *v <= cap) {
                return Err(invalid("density", format!("value {v} at cell {c:?} outside [0, {cap}]")));
            }
            if c[d..].iter().any(|&x| x != 0) {
                return Err(invalid("cells", "cell indices must have zero components beyond d"));
            }
        }
        entries.retain(|(_, v)| *v > 0.0);
        entries.sort_by(|a, b| a.0.cmp(&b.0));
        for w in entries.windows(2) {
            if w[0].0 == w[1].0 {
                return Err(invalid("cells", format!("duplicate cell {:?}", w[0].0)));
            }
        }
        let (cells, values) = entries.into_iter().unzip();
        Ok(DensityField {
            dim,
            resolution,
            cap,
            cells,
            values,
        })
    }

    /// `level · χ_E`.
    pub fn from_pixel_set(set: &PixelSet, level: f64) -> Result<Self> {
        let entries = set.cells().iter().map(|c| (*c, level)).collect();
        Self::new(set.dim(), set.resolution(), entries)
    }

    pub fn dim(&self) -> Dim {
        self.dim
    }

    pub fn resolution(&self) -> f64 {
        self.resolution
    }

    pub fn cap(&self) -> f64 {
        self.cap
    }

    pub fn cells(&self) -> &[CellIndex] {
        &self.cells
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn get(&self, c: &CellIndex) -> f64 {
        match self.cells.binary_search(c) {
            Ok(i) => self.values[i],
            Err(_) => 0.0,
        }
    }

    pub fn cell_volume(&self) -> f64 {
        self.resolution.powi(self.dim.get() as i32)
    }

    /// ∫ρ.
    pub fn mass(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.cell_volume()
    }

    pub fn center(&self, c: &CellIndex) -> Point {
        cell_center(self.dim, self.resolution, c)
    }

    pub fn index_bounds(&self) -> Option<(CellIndex, CellIndex)> {
        index_bounds(self.dim, &self.cells)
    }

    /// Cells with value strictly above `threshold`.
    pub fn superlevel_set(&self, threshold: f64) -> PixelSet {
        let cells = self
            .cells
            .iter()
            .zip(&self.values)
            .filter(|(_, v)| **v > threshold)
            .map(|(c, _)| *c)
            .collect();
        PixelSet::new(self.dim, self.resolution, cells).expect("cells come from a valid field")
    }

    pub fn iter(&self) -> impl Iterator<Item = (&CellIndex, f64)> {
        self.cells.iter().zip(self.values.iter().copied())
    }

    pub fn translated(&self, offset: CellIndex) -> Self {
        let d = self.dim.get();
        let entries = self
            .iter()
            .map(|(c, v)| {
                let mut n = *c;
                for a in 0..d {
                    n[a] += offset[a];
                }
                (n, v)
            })
            .collect();
        DensityField::with_cap(self.dim, self.resolution, self.cap, entries).expect("translation keeps a valid field")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pts2(v: &[(f64, f64)]) -> Vec<Point> {
        v.iter().map(|&(x, y)| [x, y, 0.0]).collect()
    }

    #[test]
    fn contact_distance_is_admissible() {
        let c = Configuration::new(Dim::TWO, 0.1, pts2(&[(0.0, 0.0), (0.2, 0.0)]));
        assert!(c.is_ok());
    }

    #[test]
    fn overlap_is_reported_with_pair() {
        let e = Configuration::new(Dim::TWO, 0.1, pts2(&[(0.0, 0.0), (0.1, 0.0)])).unwrap_err();
        assert_eq!(
            e,
            Error::HardSphereViolation {
                i: 0,
                j: 1,
                distance: 0.1
            }
        );
    }

    #[test]
    fn rejects_bad_dimension_and_points() {
        assert!(Dim::new(4).is_err());
        assert!(Dim::new(0).is_err());
        let bad = Configuration::new(Dim::ONE, 0.1, vec![[0.0, 1.0, 0.0]]);
        assert!(matches!(bad, Err(Error::InvalidPoint { index: 0, .. })));
        assert!(Configuration::new(Dim::TWO, 0.1, vec![[f64::NAN, 0.0, 0.0]]).is_err());
    }

    #[test]
    fn params_regimes() {
        assert!(Params::new(Dim::TWO, -1.0, 0.1, None).is_ok());
        assert!(Params::new(Dim::TWO, 0.5, 0.1, None).is_err());
        assert!(Params::new(Dim::TWO, 0.5, 0.1, Some(0.3)).is_ok());
        assert!(Params::new(Dim::TWO, 0.5, 0.1, Some(0.2)).is_err());
        assert!(Params::new(Dim::TWO, -0.5, 0.1, Some(0.3)).is_err());
        assert!(Params::new(Dim::TWO, -2.0, 0.1, None).is_err());
        assert!(Params::new(Dim::TWO, -1.0, 1.0, None).is_err());
    }

    #[test]
    fn total_mass_examples() {
        let empty = ScaledEmpiricalMeasure::new(Configuration::empty(Dim::ONE, 0.25).unwrap());
        assert_eq!(total_mass(&empty), 0.0);
        let two = ScaledEmpiricalMeasure::new(Configuration::new(Dim::ONE, 0.25, vec![[0.0; 3], [1.0, 0.0, 0.0]]).unwrap());
        assert!((total_mass(&two) - 1.0).abs() < 1e-15);
        let one = ScaledEmpiricalMeasure::new(Configuration::new(Dim::TWO, 0.1, vec![[0.0; 3]]).unwrap());
        assert!((total_mass(&one) - 0.02 * 3f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn lattice_constructor_rejects_dense_basis() {
        let basis = [[0.1, 0.0, 0.0], [0.0; 3], [0.0; 3]];
        assert!(Configuration::from_lattice(Dim::ONE, 0.1, basis, vec![[0, 0, 0], [1, 0, 0]]).is_err());
        let basis = [[0.2, 0.0, 0.0], [0.0; 3], [0.0; 3]];
        let c = Configuration::from_lattice(Dim::ONE, 0.1, basis, vec![[1, 0, 0], [0, 0, 0]]).unwrap();
        assert_eq!(c.points()[1], [0.2, 0.0, 0.0]);
    }

    #[test]
    fn density_field_bounds() {
        assert!(DensityField::new(Dim::TWO, 0.1, vec![([0, 0, 0], 1.5)]).is_err());
        assert!(DensityField::new(Dim::TWO, 0.1, vec![([0, 0, 0], -0.1)]).is_err());
        let f = DensityField::new(Dim::TWO, 0.5, vec![([0, 0, 0], 0.5), ([1, 0, 0], 0.0)]).unwrap();
        assert_eq!(f.len(), 1);
        assert!((f.mass() - 0.125).abs() < 1e-15);
    }

    #[test]
    fn pixel_set_measure_and_membership() {
        let s = PixelSet::new(Dim::TWO, 0.5, vec![[0, 0, 0], [1, 0, 0], [0, 0, 0]]).unwrap();
        assert_eq!(s.len(), 2);
        assert!((s.measure() - 0.5).abs() < 1e-15);
        assert!(s.contains(&[0.75, 0.25, 0.0]));
        assert!(!s.contains(&[1.0, 0.25, 0.0]));
        assert!(PixelSet::new(Dim::ONE, 0.5, vec![[0, 1, 0]]).is_err());
    }
}
