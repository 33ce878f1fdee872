//! Exact-to-quadrature-precision integrals of |x|^{-p} against multilinear
//! weights over axis-aligned boxes, optionally restricted to a radial band
//! lo ≤ |x| < hi.
//!
//! Near the origin and where the band boundary crosses a box, the volume
//! integral is turned into a surface integral: with
//! Φ(x) = ∫ u^{d-1} F(u x̂) du along the ray, the field x |x|^{-d} Φ(x) has
//! divergence F, so ∫_B F = Σ_faces (x·n) ∫_face |x|^{-d} Φ. The radial
//! integral is analytic for polynomial weights and the face integrands are
//! smooth apart from known kinks, which become quadrature breakpoints.
//! Boxes well away from the origin use tensor Gauss-Legendre rules instead.

use crate::quadrature::{self, adaptive, Estimate, Tolerance};

/// Radial band `[lo, hi)`; `hi` may be infinite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Band {
    pub lo: f64,
    pub hi: f64,
}

impl Band {
    pub const FULL: Band = Band { lo: 0.0, hi: f64::INFINITY };

    pub fn new(lo: f64, hi: f64) -> Self {
        Band { lo: lo.max(0.0), hi }
    }

    pub fn above(lo: f64) -> Self {
        Band::new(lo, f64::INFINITY)
    }

    pub fn below(hi: f64) -> Self {
        Band::new(0.0, hi)
    }

    #[inline]
    pub fn contains(&self, r: f64) -> bool {
        r >= self.lo && r < self.hi
    }
}

/// Multilinear polynomial Σ_S c_S Π_{i∈S} x_i; bit `i` of the index marks x_i.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Multilinear {
    pub coef: [f64; 8],
}

impl Multilinear {
    pub fn constant(c: f64) -> Self {
        let mut coef = [0.0; 8];
        coef[0] = c;
        Multilinear { coef }
    }

    /// Expansion of Π_{i<d} (α_i + β_i x_i).
    pub fn linear_product(d: usize, alpha: [f64; 3], beta: [f64; 3]) -> Self {
        let mut coef = [0.0; 8];
        for (s, c) in coef.iter_mut().enumerate().take(1 << d) {
            let mut v = 1.0;
            for i in 0..d {
                v *= if s & (1 << i) != 0 { beta[i] } else { alpha[i] };
            }
            *c = v;
        }
        Multilinear { coef }
    }

    pub fn sub(&self, o: &Multilinear) -> Self {
        let mut coef = self.coef;
        for (c, x) in coef.iter_mut().zip(o.coef) {
            *c -= x;
        }
        Multilinear { coef }
    }

    pub fn eval(&self, d: usize, x: &[f64; 3]) -> f64 {
        let mut total = 0.0;
        for (s, &c) in self.coef.iter().enumerate().take(1 << d) {
            if c != 0.0 {
                let mut v = c;
                for (i, xi) in x.iter().enumerate().take(d) {
                    if s & (1 << i) != 0 {
                        v *= xi;
                    }
                }
                total += v;
            }
        }
        total
    }

    /// Coefficients of u ↦ P(u ω) by degree.
    fn radial(&self, d: usize, w: &[f64; 3]) -> [f64; 4] {
        let mut out = [0.0; 4];
        for (s, &c) in self.coef.iter().enumerate().take(1 << d) {
            if c != 0.0 {
                let mut v = c;
                let mut m = 0;
                for (i, wi) in w.iter().enumerate().take(d) {
                    if s & (1 << i) != 0 {
                        v *= wi;
                        m += 1;
                    }
                }
                out[m] += v;
            }
        }
        out
    }

    fn has_degree(&self, d: usize, m: u32) -> bool {
        self.coef.iter().enumerate().take(1 << d).any(|(s, &c)| c != 0.0 && (s as u32).count_ones() == m)
    }
}

/// ∫_a^b u^e du for 0 ≤ a < b (a = 0 requires e > −1).
pub(crate) fn power_integral(e: f64, a: f64, b: f64) -> f64 {
    if b <= a {
        return 0.0;
    }
    let k = e + 1.0;
    if a == 0.0 {
        return b.powf(k) / k;
    }
    let l = b.ln() - a.ln();
    if k.abs() < 1e-14 {
        return l;
    }
    a.powf(k) * (k * l).exp_m1() / k
}

fn face_tolerance() -> Tolerance {
    Tolerance {
        abs: 1e-300,
        rel: 1e-13,
        max_depth: 50,
    }
}

/// Distance from the origin to the box and to its farthest corner.
fn box_distances(d: usize, lo: &[f64; 3], hi: &[f64; 3]) -> (f64, f64) {
    let mut near = 0.0;
    let mut far = 0.0;
    for i in 0..d {
        let n = if lo[i] > 0.0 {
            lo[i]
        } else if hi[i] < 0.0 {
            -hi[i]
        } else {
            0.0
        };
        let f = lo[i].abs().max(hi[i].abs());
        near += n * n;
        far += f * f;
    }
    (near.sqrt(), far.sqrt())
}

/// ∫_B |x|^{-p} P(x) 1{|x| ∈ band} dx over `B = Π [lo_i, hi_i]`.
///
/// Returns `None` when the integral diverges (the origin lies in the closed
/// box and the weight does not vanish fast enough there).
pub fn box_integral(d: usize, lo: [f64; 3], hi: [f64; 3], poly: &Multilinear, p: f64, band: Band) -> Option<Estimate> {
    let (near, far) = box_distances(d, &lo, &hi);
    if far <= band.lo || near >= band.hi {
        return Some(Estimate::default());
    }
    let touches = near == 0.0;
    let anchor = if touches { band.lo } else { band.lo.max(near) };
    if touches && anchor == 0.0 {
        let df = d as f64;
        for m in 0..=d as u32 {
            if poly.has_degree(d, m) && df - p + m as f64 <= 0.0 {
                // Only divergent if the origin is actually inside the box
                // (closure), which `touches` guarantees.
                return None;
            }
        }
    }
    let mut total = Estimate::default();
    for i in 0..d {
        for (b, sign) in [(hi[i], 1.0), (lo[i], -1.0)] {
            if b == 0.0 {
                continue;
            }
            let e = face_integral(d, i, b, &lo, &hi, poly, p, band, anchor);
            total.value += sign * b * e.value;
            total.error += (b * e.error).abs();
        }
    }
    Some(total)
}

/// Φ(x)/|x|^d for the flux formulation.
#[inline]
fn flux_density(d: usize, x: &[f64; 3], poly: &Multilinear, p: f64, band: Band, anchor: f64) -> f64 {
    let s2: f64 = x.iter().take(d).map(|v| v * v).sum();
    let s = s2.sqrt();
    let top = s.min(band.hi);
    if top <= anchor {
        return 0.0;
    }
    let mut w = [0.0; 3];
    for i in 0..d {
        w[i] = x[i] / s;
    }
    let c = poly.radial(d, &w);
    let df = d as f64;
    let mut phi = 0.0;
    for (m, cm) in c.iter().enumerate().take(d + 1) {
        if *cm != 0.0 {
            phi += cm * power_integral(df - 1.0 - p + m as f64, anchor, top);
        }
    }
    phi / s.powi(d as i32)
}

fn radii(band: Band, anchor: f64) -> [f64; 3] {
    [band.lo, band.hi, anchor]
}

/// Points in `y` where y² + offset² equals one of the squared radii.
fn crossings(offset2: f64, rs: &[f64; 3], out: &mut Vec<f64>) {
    out.push(0.0);
    for &r in rs {
        if r.is_finite() && r > 0.0 {
            let q = r * r - offset2;
            if q > 0.0 {
                let y = q.sqrt();
                out.push(y);
                out.push(-y);
            }
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn face_integral(
    d: usize,
    axis: usize,
    b: f64,
    lo: &[f64; 3],
    hi: &[f64; 3],
    poly: &Multilinear,
    p: f64,
    band: Band,
    anchor: f64,
) -> Estimate {
    let rs = radii(band, anchor);
    match d {
        1 => {
            let x = [b, 0.0, 0.0];
            Estimate {
                value: flux_density(1, &x, poly, p, band, anchor),
                error: 0.0,
            }
        }
        2 => {
            let j = 1 - axis;
            let mut bp = Vec::new();
            crossings(b * b, &rs, &mut bp);
            let mut f = |y: f64| {
                let mut x = [0.0; 3];
                x[axis] = b;
                x[j] = y;
                flux_density(2, &x, poly, p, band, anchor)
            };
            adaptive(&mut f, lo[j], hi[j], &bp, face_tolerance())
        }
        _ => {
            let (j, k) = match axis {
                0 => (1, 2),
                1 => (0, 2),
                _ => (0, 1),
            };
            let mut bp = Vec::new();
            crossings(b * b, &rs, &mut bp);
            // Coarse magnitude of the face integral; it sets an absolute floor
            // for the inner integrals, which can be arbitrarily small near a
            // tangency without mattering for the total.
            let (lj, lk) = (hi[j] - lo[j], hi[k] - lo[k]);
            let mut scale = 0.0;
            for a in 0..4 {
                for c in 0..4 {
                    let mut x = [0.0; 3];
                    x[axis] = b;
                    x[j] = lo[j] + (a as f64 + 0.5) * lj / 4.0;
                    x[k] = lo[k] + (c as f64 + 0.5) * lk / 4.0;
                    scale += flux_density(3, &x, poly, p, band, anchor).abs();
                }
            }
            scale *= lj * lk / 16.0;
            let inner_tol = Tolerance {
                abs: (1e-15 * scale / lj).max(1e-300),
                rel: 1e-13,
                max_depth: 50,
            };
            let mut inner_err = 0.0;
            let mut outer = |yj: f64| {
                let mut bpi = Vec::new();
                crossings(b * b + yj * yj, &rs, &mut bpi);
                let mut f = |yk: f64| {
                    let mut x = [0.0; 3];
                    x[axis] = b;
                    x[j] = yj;
                    x[k] = yk;
                    flux_density(3, &x, poly, p, band, anchor)
                };
                let e = adaptive(&mut f, lo[k], hi[k], &bpi, inner_tol);
                inner_err += e.error;
                e.value
            };
            let tol = Tolerance {
                abs: (1e-14 * scale).max(1e-300),
                rel: 1e-11,
                max_depth: 40,
            };
            let mut e = adaptive(&mut outer, lo[j], hi[j], &bp, tol);
            // Inner errors are accumulated over every node of every panel;
            // scale by a typical weight-times-length to keep the estimate sane.
            e.error += inner_err * (hi[j] - lo[j]) / 60.0;
            e
        }
    }
}

/// Quadrature settings for cell-pair integrals.
///
/// Offsets whose support comes within `diagonal_radius` cell widths of the
/// singularity (or that the radial band boundary crosses) use the surface
/// reduction; the rest use tensor Gauss-Legendre rules whose order scales
/// with `subdivision` and decreases with distance.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct QuadratureSpec {
    pub subdivision: usize,
    pub diagonal_radius: f64,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        QuadratureSpec {
            subdivision: 4,
            diagonal_radius: 2.0,
        }
    }
}

/// Normalized cell-pair integral
/// κ(k) = ∫_{[−1,1]^d} |k + t|^{-p} Π (1 − |t_i|) 1{|k+t| ∈ band} dt.
///
/// For unit cells Q_a, Q_b the pair integral ∫_{Q_a}∫_{Q_b}|x−y|^{-p} equals
/// κ(b − a); on a grid of spacing h it scales by h^{2d−p}.
pub fn kappa(d: usize, k: [i64; 3], p: f64, band: Band) -> Option<Estimate> {
    kappa_with(d, k, p, band, &QuadratureSpec::default())
}

pub fn kappa_with(d: usize, k: [i64; 3], p: f64, band: Band, spec: &QuadratureSpec) -> Option<Estimate> {
    let mut lo = [0.0; 3];
    let mut hi = [0.0; 3];
    for i in 0..d {
        lo[i] = k[i] as f64 - 1.0;
        hi[i] = k[i] as f64 + 1.0;
    }
    let (near, far) = box_distances(d, &lo, &hi);
    if far <= band.lo || near >= band.hi {
        return Some(Estimate::default());
    }
    let cut = |r: f64| r > near && r < far;
    if near >= spec.diagonal_radius.max(1.0) && !cut(band.lo) && !cut(band.hi) {
        return Some(kappa_tensor(d, k, p, near, spec.subdivision.max(2)));
    }
    let mut total = Estimate::default();
    for mask in 0..(1usize << d) {
        let mut blo = [0.0; 3];
        let mut bhi = [0.0; 3];
        let mut alpha = [1.0; 3];
        let mut beta = [0.0; 3];
        for i in 0..d {
            let ki = k[i] as f64;
            if mask & (1 << i) == 0 {
                // t_i ∈ [−1, 0]: weight 1 + t_i = (1 − k_i) + x_i.
                blo[i] = ki - 1.0;
                bhi[i] = ki;
                alpha[i] = 1.0 - ki;
                beta[i] = 1.0;
            } else {
                blo[i] = ki;
                bhi[i] = ki + 1.0;
                alpha[i] = 1.0 + ki;
                beta[i] = -1.0;
            }
        }
        let poly = Multilinear::linear_product(d, alpha, beta);
        total += box_integral(d, blo, bhi, &poly, p, band)?;
    }
    Some(total)
}

fn kappa_tensor(d: usize, k: [i64; 3], p: f64, near: f64, s: usize) -> Estimate {
    let (q, q_low) = if near < 6.0 {
        (3 * s, 2 * s)
    } else if near < 20.0 {
        ((3 * s).div_ceil(2), s)
    } else {
        (s, s - 1)
    };
    let high = tensor_rule(d, k, p, q.min(64));
    let low = tensor_rule(d, k, p, q_low.clamp(2, 64));
    Estimate {
        value: high,
        error: (high - low).abs(),
    }
}

fn tensor_rule(d: usize, k: [i64; 3], p: f64, q: usize) -> f64 {
    let r = quadrature::rule(q);
    // Nodes mapped to [0, 1] with weights carrying the factor 1/2.
    let nodes: Vec<(f64, f64)> = r.nodes.iter().zip(&r.weights).map(|(x, w)| (0.5 * (x + 1.0), 0.5 * w)).collect();
    let half_p = -0.5 * p;
    let kf = [k[0] as f64, k[1] as f64, k[2] as f64];
    let mut total = 0.0;
    match d {
        1 => {
            for &(s, w) in &nodes {
                for t in [s, -s] {
                    let x = kf[0] + t;
                    total += w * (1.0 - s) * (x * x).powf(half_p);
                }
            }
        }
        2 => {
            for &(s0, w0) in &nodes {
                for t0 in [s0, -s0] {
                    let x0 = kf[0] + t0;
                    let a = w0 * (1.0 - s0);
                    for &(s1, w1) in &nodes {
                        for t1 in [s1, -s1] {
                            let x1 = kf[1] + t1;
                            total += a * w1 * (1.0 - s1) * (x0 * x0 + x1 * x1).powf(half_p);
                        }
                    }
                }
            }
        }
        _ => {
            for &(s0, w0) in &nodes {
                for t0 in [s0, -s0] {
                    let x0 = kf[0] + t0;
                    let a = w0 * (1.0 - s0);
                    for &(s1, w1) in &nodes {
                        for t1 in [s1, -s1] {
                            let x1 = kf[1] + t1;
                            let b = a * w1 * (1.0 - s1);
                            let r01 = x0 * x0 + x1 * x1;
                            for &(s2, w2) in &nodes {
                                for t2 in [s2, -s2] {
                                    let x2 = kf[2] + t2;
                                    total += b * w2 * (1.0 - s2) * (r01 + x2 * x2).powf(half_p);
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    total
}

/// ∫_{[−1,1]^d} |s|^{-p} w(s) 1{|s| ∈ band} ds for a weight given on the
/// positive orthant by `poly` and extended evenly in each coordinate.
pub fn symmetric_cube_integral(d: usize, poly: &Multilinear, p: f64, band: Band) -> Option<Estimate> {
    let mut hi = [0.0; 3];
    for v in hi.iter_mut().take(d) {
        *v = 1.0;
    }
    let e = box_integral(d, [0.0; 3], hi, poly, p, band)?;
    let m = (1u32 << d) as f64;
    Some(Estimate {
        value: m * e.value,
        error: m * e.error,
    })
}

/// 1 − Π(1 − s_i): the complement of the unit-cube covariogram on the
/// positive orthant.
pub fn covariogram_complement(d: usize) -> Multilinear {
    let g = Multilinear::linear_product(d, [1.0; 3], [-1.0; 3]);
    Multilinear::constant(1.0).sub(&g)
}

/// The unit-cube covariogram Π(1 − s_i) on the positive orthant.
pub fn cube_covariogram(d: usize) -> Multilinear {
    Multilinear::linear_product(d, [1.0; 3], [-1.0; 3])
}
