//! Dense grids, symmetric kernel tables and the two pair-sum engines
//! (direct cell-pair loop and FFT autocorrelation) used by the continuum
//! functionals.

use std::collections::BTreeMap;
use std::sync::Arc;

use rayon::prelude::*;
use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::domain::{CellIndex, DensityField, Dim, PixelSet};
use crate::error::{Error, Result};
use crate::quadrature::Estimate;
use crate::summation::{combine, Neumaier};

/// Values on the box of cells `origin + [0, shape)`; unused axes have size 1.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    pub dim: Dim,
    pub origin: CellIndex,
    pub shape: [usize; 3],
    pub data: Vec<f64>,
}

impl Grid {
    pub fn zeros(dim: Dim, origin: CellIndex, shape: [usize; 3]) -> Self {
        let mut shape = shape;
        for s in shape.iter_mut().skip(dim.get()) {
            *s = 1;
        }
        let n = shape.iter().product();
        Grid {
            dim,
            origin,
            shape,
            data: vec![0.0; n],
        }
    }

    fn bounding(dim: Dim, bounds: Option<(CellIndex, CellIndex)>) -> Self {
        match bounds {
            None => Grid::zeros(dim, [0; 3], [0, 0, 0]),
            Some((lo, hi)) => {
                let mut shape = [1usize; 3];
                for a in 0..dim.get() {
                    shape[a] = (hi[a] - lo[a] + 1) as usize;
                }
                Grid::zeros(dim, lo, shape)
            }
        }
    }

    pub fn from_set(set: &PixelSet) -> Self {
        let mut g = Grid::bounding(set.dim(), set.index_bounds());
        for c in set.cells() {
            let i = g.index(c).expect("cell inside its bounding box");
            g.data[i] = 1.0;
        }
        g
    }

    pub fn from_field(field: &DensityField) -> Self {
        let mut g = Grid::bounding(field.dim(), field.index_bounds());
        for (c, v) in field.iter() {
            let i = g.index(c).expect("cell inside its bounding box");
            g.data[i] = v;
        }
        g
    }

    /// Same values embedded in a larger box.
    pub fn embedded(&self, origin: CellIndex, shape: [usize; 3]) -> Self {
        let mut g = Grid::zeros(self.dim, origin, shape);
        for (i, &v) in self.data.iter().enumerate() {
            if v != 0.0 {
                let c = self.cell(i);
                let j = g.index(&c).expect("embedding box must contain the grid");
                g.data[j] = v;
            }
        }
        g
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn index(&self, c: &CellIndex) -> Option<usize> {
        let mut idx = 0usize;
        for a in 0..3 {
            let off = c[a] - self.origin[a];
            if off < 0 || off as usize >= self.shape[a] {
                return None;
            }
            idx = idx * self.shape[a] + off as usize;
        }
        Some(idx)
    }

    #[inline]
    pub fn cell(&self, mut i: usize) -> CellIndex {
        let mut c = [0i64; 3];
        for a in (0..3).rev() {
            c[a] = self.origin[a] + (i % self.shape[a]) as i64;
            i /= self.shape[a];
        }
        c
    }

    /// Nonzero entries as (cell, value), in storage order.
    pub fn nonzero(&self) -> Vec<(CellIndex, f64)> {
        self.data
            .iter()
            .enumerate()
            .filter(|(_, v)| **v != 0.0)
            .map(|(i, v)| (self.cell(i), *v))
            .collect()
    }
}

/// A function of the cell offset k that is even in every coordinate and
/// symmetric under permutations, tabulated for |k_i| ≤ ext_i.
#[derive(Debug, Clone)]
pub struct KernelTable {
    dim: Dim,
    ext: [usize; 3],
    values: Vec<f64>,
    errors: Vec<f64>,
}

impl KernelTable {
    /// Evaluates `f` once per permutation class of |k| (in parallel, each
    /// entry independently, so the table does not depend on the thread count).
    pub fn build<F>(dim: Dim, ext: [usize; 3], f: F) -> Result<Self>
    where
        F: Fn([i64; 3]) -> Option<Estimate> + Sync,
    {
        let d = dim.get();
        let mut ext = ext;
        for e in ext.iter_mut().skip(d) {
            *e = 0;
        }
        let size: usize = ext.iter().map(|e| e + 1).product();
        let mut keys: BTreeMap<[i64; 3], usize> = BTreeMap::new();
        let mut slot = Vec::with_capacity(size);
        for i in 0..=ext[0] {
            for j in 0..=ext[1] {
                for k in 0..=ext[2] {
                    let mut key = [i as i64, j as i64, k as i64];
                    key[..d].sort_unstable();
                    let next = keys.len();
                    let id = *keys.entry(key).or_insert(next);
                    slot.push(id);
                }
            }
        }
        let mut reps: Vec<[i64; 3]> = vec![[0; 3]; keys.len()];
        for (k, &id) in &keys {
            reps[id] = *k;
        }
        let evaluated: Vec<Option<Estimate>> = reps.par_iter().map(|k| f(*k)).collect();
        let mut values = Vec::with_capacity(size);
        let mut errors = Vec::with_capacity(size);
        for id in slot {
            let e = evaluated[id].ok_or_else(|| Error::Divergent(format!("kernel entry {:?} diverges", reps[id])))?;
            values.push(e.value);
            errors.push(e.error);
        }
        Ok(KernelTable { dim, ext, values, errors })
    }

    pub fn ext(&self) -> [usize; 3] {
        self.ext
    }

    #[inline]
    fn slot(&self, k: &[i64; 3]) -> Option<usize> {
        let mut idx = 0usize;
        for a in 0..3 {
            let v = k[a].unsigned_abs() as usize;
            if v > self.ext[a] {
                return None;
            }
            idx = idx * (self.ext[a] + 1) + v;
        }
        Some(idx)
    }

    /// Value at offset `k`; offsets beyond the table are a logic error.
    #[inline]
    pub fn get(&self, k: &[i64; 3]) -> f64 {
        self.values[self.slot(k).expect("offset inside kernel table")]
    }

    #[inline]
    pub fn error(&self, k: &[i64; 3]) -> f64 {
        self.errors[self.slot(k).expect("offset inside kernel table")]
    }

    /// Replaces the entry at the origin (used to drop the diagonal).
    pub fn with_origin(mut self, value: f64, error: f64) -> Self {
        self.values[0] = value;
        self.errors[0] = error;
        self
    }

    pub fn dim(&self) -> Dim {
        self.dim
    }
}

/// Largest number of occupied cells summed by the direct O(M²) loop.
pub const DIRECT_LIMIT: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Auto,
    Direct,
    Fft,
}

/// Σ_{a,b} ρ_a ρ_b κ(b − a) over all ordered pairs including a = b, with the
/// matching error bound Σ ρ_a ρ_b err(b − a).
pub fn pair_sum(grid: &Grid, table: &KernelTable, method: Method) -> Estimate {
    let occupied = grid.nonzero();
    let use_direct = match method {
        Method::Direct => true,
        Method::Fft => false,
        Method::Auto => occupied.len() <= DIRECT_LIMIT,
    };
    if occupied.is_empty() {
        return Estimate::default();
    }
    if use_direct {
        direct_pair_sum(&occupied, table)
    } else {
        let c = autocorrelation(grid);
        correlate_with_table(&c, table)
    }
}

const CHUNK: usize = 64;

fn direct_pair_sum(cells: &[(CellIndex, f64)], table: &KernelTable) -> Estimate {
    let partial: Vec<(Neumaier, Neumaier)> = cells
        .par_chunks(CHUNK)
        .map(|chunk| {
            let mut v = Neumaier::new();
            let mut e = Neumaier::new();
            for (a, ra) in chunk {
                for (b, rb) in cells {
                    let k = [b[0] - a[0], b[1] - a[1], b[2] - a[2]];
                    let w = ra * rb;
                    v.add(w * table.get(&k));
                    e.add(w * table.error(&k));
                }
            }
            (v, e)
        })
        .collect();
    let (vs, es): (Vec<Neumaier>, Vec<Neumaier>) = partial.into_iter().unzip();
    Estimate {
        value: combine(&vs),
        error: combine(&es),
    }
}

/// Autocorrelation C(k) = Σ_a ρ_a ρ_{a+k} for |k_i| < shape_i, stored with
/// offset `shape − 1` per axis. Symmetric: C(−k) = C(k).
#[derive(Debug, Clone)]
pub struct Correlation {
    pub dim: Dim,
    pub half: [usize; 3],
    pub data: Vec<f64>,
}

impl Correlation {
    pub fn shape(&self) -> [usize; 3] {
        [2 * self.half[0] + 1, 2 * self.half[1] + 1, 2 * self.half[2] + 1]
    }

    pub fn offset(&self, mut i: usize) -> [i64; 3] {
        let s = self.shape();
        let mut k = [0i64; 3];
        for a in (0..3).rev() {
            k[a] = (i % s[a]) as i64 - self.half[a] as i64;
            i /= s[a];
        }
        k
    }
}

/// Smallest 2^a 3^b 5^c that is at least `n`.
fn smooth_size(n: usize) -> usize {
    let mut best = n.next_power_of_two();
    let mut p2 = 1;
    while p2 < 2 * n {
        let mut p3 = p2;
        while p3 < 2 * n {
            let mut p5 = p3;
            while p5 < n {
                p5 *= 5;
            }
            if p5 >= n && p5 < best {
                best = p5;
            }
            p3 *= 3;
        }
        p2 *= 2;
    }
    best
}

/// In-place multidimensional FFT over a row-major buffer.
pub(crate) fn fft_nd(data: &mut [Complex<f64>], shape: [usize; 3], inverse: bool) {
    let mut planner = FftPlanner::<f64>::new();
    for axis in 0..3 {
        let n = shape[axis];
        if n <= 1 {
            continue;
        }
        let fft: Arc<dyn Fft<f64>> = if inverse {
            planner.plan_fft_inverse(n)
        } else {
            planner.plan_fft_forward(n)
        };
        let stride: usize = shape[axis + 1..].iter().product();
        if stride == 1 {
            data.par_chunks_mut(n * 64).for_each(|rows| fft.process(rows));
            continue;
        }
        let outer: usize = shape[..axis].iter().product();
        let block = n * stride;
        // Gather each set of `stride` interleaved lines, transform, scatter.
        data.par_chunks_mut(block).take(outer).for_each(|blk| {
            let mut line = vec![Complex::new(0.0, 0.0); n * stride];
            for s in 0..stride {
                for i in 0..n {
                    line[s * n + i] = blk[i * stride + s];
                }
            }
            fft.process(&mut line);
            for s in 0..stride {
                for i in 0..n {
                    blk[i * stride + s] = line[s * n + i];
                }
            }
        });
    }
}

/// C(k) via zero-padded FFT: |FFT(ρ)|² transformed back.
pub fn autocorrelation(grid: &Grid) -> Correlation {
    let mut half = [0usize; 3];
    let mut size = [1usize; 3];
    for a in 0..grid.dim.get() {
        half[a] = grid.shape[a].saturating_sub(1);
        size[a] = smooth_size(2 * grid.shape[a].max(1) - 1);
    }
    let total: usize = size.iter().product();
    let mut buf = vec![Complex::new(0.0, 0.0); total];
    for (i, &v) in grid.data.iter().enumerate() {
        if v != 0.0 {
            let mut rem = i;
            let mut c = [0usize; 3];
            for a in (0..3).rev() {
                c[a] = rem % grid.shape[a];
                rem /= grid.shape[a];
            }
            buf[(c[0] * size[1] + c[1]) * size[2] + c[2]] = Complex::new(v, 0.0);
        }
    }
    fft_nd(&mut buf, size, false);
    for z in buf.iter_mut() {
        *z = Complex::new(z.norm_sqr(), 0.0);
    }
    fft_nd(&mut buf, size, true);
    let norm = 1.0 / total as f64;
    let out_shape = [2 * half[0] + 1, 2 * half[1] + 1, 2 * half[2] + 1];
    let mut data = vec![0.0; out_shape.iter().product()];
    for i in 0..out_shape[0] {
        let k0 = (i as i64 - half[0] as i64).rem_euclid(size[0] as i64) as usize;
        for j in 0..out_shape[1] {
            let k1 = (j as i64 - half[1] as i64).rem_euclid(size[1] as i64) as usize;
            for l in 0..out_shape[2] {
                let k2 = (l as i64 - half[2] as i64).rem_euclid(size[2] as i64) as usize;
                data[(i * out_shape[1] + j) * out_shape[2] + l] = buf[(k0 * size[1] + k1) * size[2] + k2].re * norm;
            }
        }
    }
    Correlation {
        dim: grid.dim,
        half,
        data,
    }
}

/// Rounds an autocorrelation of 0/1 data to exact integer counts.
pub fn round_counts(c: &mut Correlation) {
    for v in c.data.iter_mut() {
        *v = v.round();
    }
}

/// Σ_k C(k) κ(k) in storage order of C.
pub fn correlate_with_table(c: &Correlation, table: &KernelTable) -> Estimate {
    let partial: Vec<(Neumaier, Neumaier)> = c
        .data
        .par_chunks(4096)
        .enumerate()
        .map(|(ci, chunk)| {
            let mut v = Neumaier::new();
            let mut e = Neumaier::new();
            for (j, &w) in chunk.iter().enumerate() {
                if w != 0.0 {
                    let k = c.offset(ci * 4096 + j);
                    v.add(w * table.get(&k));
                    e.add(w * table.error(&k));
                }
            }
            (v, e)
        })
        .collect();
    let (vs, es): (Vec<Neumaier>, Vec<Neumaier>) = partial.into_iter().unzip();
    Estimate {
        value: combine(&vs),
        error: combine(&es),
    }
}

/// Precomputed FFT of a kernel table for repeated convolutions on a fixed box.
pub struct Convolver {
    shape: [usize; 3],
    size: [usize; 3],
    kernel_hat: Vec<Complex<f64>>,
}

impl Convolver {
    /// Prepares u_a = Σ_b κ(b − a) ρ_b for grids of the given shape; the table
    /// must cover offsets up to `shape − 1`.
    pub fn new(dim: Dim, shape: [usize; 3], table: &KernelTable) -> Self {
        let mut size = [1usize; 3];
        for a in 0..dim.get() {
            size[a] = smooth_size(2 * shape[a] - 1);
        }
        let total: usize = size.iter().product();
        let mut buf = vec![Complex::new(0.0, 0.0); total];
        let reach = |a: usize| shape[a] as i64 - 1;
        for k0 in -reach(0)..=reach(0) {
            for k1 in -reach(1)..=reach(1) {
                for k2 in -reach(2)..=reach(2) {
                    let v = table.get(&[k0, k1, k2]);
                    let i0 = k0.rem_euclid(size[0] as i64) as usize;
                    let i1 = k1.rem_euclid(size[1] as i64) as usize;
                    let i2 = k2.rem_euclid(size[2] as i64) as usize;
                    buf[(i0 * size[1] + i1) * size[2] + i2] = Complex::new(v, 0.0);
                }
            }
        }
        fft_nd(&mut buf, size, false);
        Convolver {
            shape,
            size,
            kernel_hat: buf,
        }
    }

    /// u on the same box as `grid` (which must have the prepared shape).
    pub fn apply(&self, grid: &Grid) -> Vec<f64> {
        assert_eq!(grid.shape, self.shape, "grid shape differs from the prepared shape");
        let size = self.size;
        let total: usize = size.iter().product();
        let mut buf = vec![Complex::new(0.0, 0.0); total];
        let s = self.shape;
        for i in 0..s[0] {
            for j in 0..s[1] {
                for l in 0..s[2] {
                    let v = grid.data[(i * s[1] + j) * s[2] + l];
                    buf[(i * size[1] + j) * size[2] + l] = Complex::new(v, 0.0);
                }
            }
        }
        fft_nd(&mut buf, size, false);
        for (z, k) in buf.iter_mut().zip(&self.kernel_hat) {
            *z *= k;
        }
        fft_nd(&mut buf, size, true);
        let norm = 1.0 / total as f64;
        let mut out = vec![0.0; grid.data.len()];
        for i in 0..s[0] {
            for j in 0..s[1] {
                for l in 0..s[2] {
                    out[(i * s[1] + j) * s[2] + l] = buf[(i * size[1] + j) * size[2] + l].re * norm;
                }
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy_table(dim: Dim, ext: [usize; 3]) -> KernelTable {
        KernelTable::build(dim, ext, |k| {
            let r2 = (k[0] * k[0] + k[1] * k[1] + k[2] * k[2]) as f64;
            Some(Estimate {
                value: 1.0 / (1.0 + r2).sqrt(),
                error: 0.0,
            })
        })
        .unwrap()
    }

    fn random_grid(dim: Dim, shape: [usize; 3], seed: u64) -> Grid {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_xoshiro::Xoshiro256PlusPlus::seed_from_u64(seed);
        let mut g = Grid::zeros(dim, [-3, 2, 0], shape);
        for v in g.data.iter_mut() {
            if rng.gen_bool(0.6) {
                *v = rng.gen();
            }
        }
        g
    }

    #[test]
    fn fft_and_direct_agree() {
        for (dim, shape) in [(Dim::ONE, [37, 1, 1]), (Dim::TWO, [13, 9, 1]), (Dim::THREE, [5, 7, 4])] {
            let g = random_grid(dim, shape, 7);
            let t = toy_table(dim, [shape[0] - 1, shape[1] - 1, shape[2] - 1]);
            let a = pair_sum(&g, &t, Method::Direct).value;
            let b = pair_sum(&g, &t, Method::Fft).value;
            assert!((a - b).abs() < 1e-12 * a.abs(), "{dim:?}: {a} vs {b}");
        }
    }

    #[test]
    fn convolver_matches_direct_potential() {
        let dim = Dim::TWO;
        let shape = [11, 6, 1];
        let g = random_grid(dim, shape, 3);
        let t = toy_table(dim, [10, 5, 0]);
        let u = Convolver::new(dim, shape, &t).apply(&g);
        for i in 0..g.len() {
            let a = g.cell(i);
            let mut s = 0.0;
            for j in 0..g.len() {
                let b = g.cell(j);
                s += t.get(&[b[0] - a[0], b[1] - a[1], 0]) * g.data[j];
            }
            assert!((u[i] - s).abs() < 1e-12 * s.abs().max(1.0));
        }
    }

    #[test]
    fn table_symmetry() {
        let t = toy_table(Dim::THREE, [3, 2, 4]);
        assert_eq!(t.get(&[1, -2, 3]), t.get(&[3, 1, -2]));
        assert_eq!(t.get(&[-1, 0, 0]), t.get(&[0, 0, 1]));
    }

    #[test]
    fn smooth_sizes() {
        assert_eq!(smooth_size(7), 8);
        assert_eq!(smooth_size(11), 12);
        assert_eq!(smooth_size(101), 108);
        for n in 1..300 {
            let s = smooth_size(n);
            assert!(s >= n);
        }
    }
}
