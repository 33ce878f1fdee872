//! Gauss-Legendre rules and an adaptive one-dimensional integrator used by
//! the cell-pair integrals and the radial references.

use std::sync::OnceLock;

use gauss_quad::GaussLegendre;

/// Nodes and weights on `[-1, 1]`.
#[derive(Debug)]
pub struct Rule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

const MAX_CACHED: usize = 64;

/// Cached Gauss-Legendre rule with `n` points (2 ≤ n ≤ 64).
pub fn rule(n: usize) -> &'static Rule {
    static RULES: OnceLock<Vec<OnceLock<Rule>>> = OnceLock::new();
    assert!((2..=MAX_CACHED).contains(&n), "unsupported Gauss-Legendre order {n}");
    let table = RULES.get_or_init(|| (0..=MAX_CACHED).map(|_| OnceLock::new()).collect());
    table[n].get_or_init(|| {
        let gl = GaussLegendre::new(n).expect("order is at least 2");
        let (nodes, weights) = gl.as_node_weight_pairs().iter().copied().unzip();
        Rule { nodes, weights }
    })
}

/// Fixed-order rule on `[a, b]`.
pub fn fixed(n: usize, a: f64, b: f64, mut f: impl FnMut(f64) -> f64) -> f64 {
    let r = rule(n);
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    let mut s = 0.0;
    for (x, w) in r.nodes.iter().zip(&r.weights) {
        s += w * f(mid + half * x);
    }
    s * half
}

/// Result of an adaptive integration.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
}

impl std::ops::Add for Estimate {
    type Output = Estimate;
    fn add(self, o: Estimate) -> Estimate {
        Estimate {
            value: self.value + o.value,
            error: self.error + o.error,
        }
    }
}

impl std::ops::AddAssign for Estimate {
    fn add_assign(&mut self, o: Estimate) {
        self.value += o.value;
        self.error += o.error;
    }
}

/// Tolerances for [`adaptive`].
#[derive(Debug, Clone, Copy)]
pub struct Tolerance {
    pub abs: f64,
    pub rel: f64,
    pub max_depth: u32,
}

impl Default for Tolerance {
    fn default() -> Self {
        Tolerance {
            abs: 1e-14,
            rel: 1e-11,
            max_depth: 60,
        }
    }
}

const ORDER: usize = 10;

/// Adaptive bisection with a 10-point rule, splitting first at the given
/// breakpoints (those outside `(a, b)` are ignored). Each panel is accepted
/// when its value agrees with the sum over its two halves.
pub fn adaptive(f: &mut dyn FnMut(f64) -> f64, a: f64, b: f64, breakpoints: &[f64], tol: Tolerance) -> Estimate {
    if !(b > a) {
        return Estimate::default();
    }
    let mut cuts: Vec<f64> = Vec::with_capacity(breakpoints.len() + 2);
    cuts.push(a);
    cuts.extend(breakpoints.iter().copied().filter(|&x| x > a && x < b));
    cuts.push(b);
    cuts.sort_by(|x, y| x.partial_cmp(y).unwrap());
    cuts.dedup();
    let total_len = b - a;
    let pieces: Vec<(f64, f64, f64)> = cuts
        .windows(2)
        .filter(|w| w[1] - w[0] > total_len * 1e-15)
        .map(|w| (w[0], w[1], fixed(ORDER, w[0], w[1], &mut *f)))
        .collect();
    // Panels are judged against the scale of the whole integral, so that
    // refinement toward an integrable endpoint singularity terminates.
    let scale: f64 = pieces.iter().map(|p| p.2.abs()).sum();
    let allowed = tol.abs.max(tol.rel * scale);
    let mut out = Estimate::default();
    for (lo, hi, whole) in pieces {
        out += refine(f, lo, hi, whole, allowed, tol.max_depth, 0);
    }
    out
}

fn refine(f: &mut dyn FnMut(f64) -> f64, a: f64, b: f64, whole: f64, allowed: f64, max_depth: u32, depth: u32) -> Estimate {
    let m = 0.5 * (a + b);
    let left = fixed(ORDER, a, m, &mut *f);
    let right = fixed(ORDER, m, b, &mut *f);
    let split = left + right;
    let err = (split - whole).abs();
    if err <= allowed || depth >= max_depth {
        return Estimate { value: split, error: err };
    }
    refine(f, a, m, left, allowed, max_depth, depth + 1) + refine(f, m, b, right, allowed, max_depth, depth + 1)
}

/// Convenience wrapper with default tolerances.
pub fn integrate(mut f: impl FnMut(f64) -> f64, a: f64, b: f64, breakpoints: &[f64]) -> Estimate {
    adaptive(&mut f, a, b, breakpoints, Tolerance::default())
}
