use serde::{Deserialize, Serialize};

use crate::cellint::Band;
use crate::continuum_energy::{kernel_table, QuadratureSpec, ResidualField};
use crate::domain::{cell_center, AxisBox, CellIndex, DensityField, Dim, Region};
use crate::error::{invalid, Error, Result};
use crate::grid::{Convolver, Grid};
use crate::kernels::ConfinementSpec;
use crate::summation::Neumaier;

/// min over ρ: Ω → [0, 1] of  ∫ g ρ − λ ∬ ρ(x)ρ(y)|x−y|^{−(d+σ)}.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DensityProblem {
    pub d: Dim,
    pub sigma: f64,
    pub g: ConfinementSpec,
    /// λ multiplying the kernel (1 for 𝓣^σ itself).
    pub kernel_scale: f64,
    pub domain: AxisBox,
    pub h: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DescentOptions {
    pub steps: usize,
    pub step_size: f64,
    /// Starting value in every cell of the domain.
    pub initial_value: f64,
    /// KKT tolerance; defaults to 10h.
    pub kkt_tolerance: Option<f64>,
}

impl Default for DescentOptions {
    fn default() -> Self {
        DescentOptions {
            steps: 500,
            step_size: 0.05,
            initial_value: 0.5,
            kkt_tolerance: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DescentTraceRow {
    pub step: usize,
    pub objective: f64,
    pub step_size: f64,
    pub changed_cells: usize,
}

impl DescentTraceRow {
    pub const CSV_HEADER: [&'static str; 4] = ["step", "objective", "step_size", "changed_cells"];

    pub fn csv_row(&self) -> [String; 4] {
        [
            self.step.to_string(),
            format!("{:?}", self.objective),
            format!("{:?}", self.step_size),
            self.changed_cells.to_string(),
        ]
    }
}

/// Sign conditions of the first variation r = g − 2λ∫ρ|x−y|^{−p}:
/// r ≥ −tol where ρ = 0, r ≤ tol where ρ = 1 and |r| ≤ tol in between.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KktReport {
    pub tolerance: f64,
    pub max_violation: f64,
    pub violations: usize,
    pub satisfied: bool,
}

pub fn kkt_report(rho: &[f64], residual: &[f64], tolerance: f64) -> KktReport {
    let mut max_violation: f64 = 0.0;
    let mut violations = 0;
    for (&v, &r) in rho.iter().zip(residual) {
        let excess = if v <= 0.0 {
            (-r).max(0.0)
        } else if v >= 1.0 {
            r.max(0.0)
        } else {
            r.abs()
        };
        if excess > tolerance {
            violations += 1;
        }
        max_violation = max_violation.max(excess);
    }
    KktReport {
        tolerance,
        max_violation,
        violations,
        satisfied: violations == 0,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DensityResult {
    pub rho: DensityField,
    pub objective: f64,
    pub residual: ResidualField,
    pub kkt: KktReport,
    pub converged: bool,
    pub trace: Vec<DescentTraceRow>,
}

struct Discretization {
    grid: Grid,
    conv: Convolver,
    g: Vec<f64>,
    h: f64,
    /// λ h^{2d−p}
    pair_factor: f64,
    vol: f64,
}

impl Discretization {
    fn new(problem: &DensityProblem) -> Result<Self> {
        let d = problem.d;
        let du = d.get();
        let h = problem.h;
        if !(h > 0.0 && h.is_finite()) {
            return Err(invalid("h", "must be positive"));
        }
        if !(problem.sigma < 0.0 && problem.sigma > -d.as_f64()) {
            return Err(Error::NonIntegrableSigma(problem.sigma));
        }
        if !(problem.kernel_scale > 0.0 && problem.kernel_scale.is_finite()) {
            return Err(invalid("kernel_scale", "must be positive"));
        }
        if problem.domain.dim() != d {
            return Err(invalid("domain", "dimension mismatch"));
        }
        let (lo, hi) = problem.domain.bounds();
        let mut origin: CellIndex = [0; 3];
        let mut shape = [1usize; 3];
        for a in 0..du {
            let first = (lo[a] / h - 1e-9).ceil() as i64;
            let last = (hi[a] / h + 1e-9).floor() as i64 - 1;
            if last < first {
                return Err(invalid("domain", "box holds no grid cell"));
            }
            origin[a] = first;
            shape[a] = (last - first + 1) as usize;
        }
        let grid = Grid::zeros(d, origin, shape);
        let p = d.as_f64() + problem.sigma;
        let ext = [shape[0] - 1, shape[1] - 1, shape[2] - 1];
        let table = kernel_table(d, ext, p, Band::FULL, &QuadratureSpec::default())?;
        let conv = Convolver::new(d, grid.shape, &table);
        let g = (0..grid.len()).map(|i| problem.g.eval(&cell_center(d, h, &grid.cell(i)))).collect();
        Ok(Discretization {
            conv,
            g,
            h,
            pair_factor: problem.kernel_scale * h.powf(2.0 * d.as_f64() - p),
            vol: h.powi(du as i32),
            grid,
        })
    }

    /// (objective, potential u = Σ_b κ(b − a) ρ_b).
    fn evaluate(&mut self, rho: &[f64]) -> (f64, Vec<f64>) {
        self.grid.data.copy_from_slice(rho);
        let u = self.conv.apply(&self.grid);
        let mut lin = Neumaier::new();
        let mut quad = Neumaier::new();
        for i in 0..rho.len() {
            if rho[i] != 0.0 {
                lin.add(self.g[i] * rho[i]);
                quad.add(rho[i] * u[i]);
            }
        }
        (self.vol * lin.value() - self.pair_factor * quad.value(), u)
    }

    /// First variation per unit volume.
    fn gradient(&self, u: &[f64]) -> Vec<f64> {
        let f = 2.0 * self.pair_factor / self.vol;
        self.g.iter().zip(u).map(|(g, u)| g - f * u).collect()
    }

    fn touches_boundary(&self, rho: &[f64]) -> bool {
        let d = self.grid.dim.get();
        rho.iter().enumerate().any(|(i, &v)| {
            v > 0.0 && {
                let c = self.grid.cell(i);
                (0..d).any(|a| c[a] == self.grid.origin[a] || c[a] == self.grid.origin[a] + self.grid.shape[a] as i64 - 1)
            }
        })
    }
}

/// Projected gradient descent with per-cell clamping to [0, 1]. A step is
/// accepted only if the objective does not increase; otherwise the step size
/// is halved. Stops when the projection leaves ρ unchanged.
pub fn minimize_density(problem: &DensityProblem, options: &DescentOptions) -> Result<DensityResult> {
    if !(options.step_size > 0.0 && options.step_size.is_finite()) {
        return Err(invalid("step_size", "must be positive"));
    }
    if !(0.0..=1.0).contains(&options.initial_value) {
        return Err(Error::LevelOutOfRange(options.initial_value));
    }
    let mut disc = Discretization::new(problem)?;
    let n = disc.grid.len();
    let mut rho = vec![options.initial_value; n];
    let (mut obj, mut u) = disc.evaluate(&rho);
    let mut tau = options.step_size;
    let mut trace = Vec::new();
    let mut converged = false;
    let min_tau = options.step_size * 1e-12;

    for step in 0..options.steps {
        let grad = disc.gradient(&u);
        let mut accepted = false;
        while tau >= min_tau {
            let cand: Vec<f64> = rho.iter().zip(&grad).map(|(r, g)| (r - tau * g).clamp(0.0, 1.0)).collect();
            let changed = cand.iter().zip(&rho).filter(|(a, b)| a != b).count();
            if changed == 0 {
                converged = true;
                break;
            }
            let (c_obj, c_u) = disc.evaluate(&cand);
            if c_obj <= obj {
                rho = cand;
                obj = c_obj;
                u = c_u;
                trace.push(DescentTraceRow {
                    step,
                    objective: obj,
                    step_size: tau,
                    changed_cells: changed,
                });
                tau = (tau * 1.5).min(options.step_size * 64.0);
                accepted = true;
                break;
            }
            tau *= 0.5;
        }
        if converged || !accepted {
            converged = converged || tau < min_tau;
            break;
        }
    }

    if disc.touches_boundary(&rho) {
        return Err(Error::SupportTouchesBoundary);
    }
    let grad = disc.gradient(&u);
    let tolerance = options.kkt_tolerance.unwrap_or(10.0 * problem.h);
    let kkt = kkt_report(&rho, &grad, tolerance);
    let entries = (0..n)
        .filter(|&i| rho[i] > 0.0)
        .map(|i| (disc.grid.cell(i), rho[i]))
        .collect();
    let field = DensityField::new(problem.d, disc.h, entries)?;
    Ok(DensityResult {
        rho: field,
        objective: obj,
        residual: ResidualField {
            dim: problem.d,
            resolution: disc.h,
            origin: disc.grid.origin,
            shape: disc.grid.shape,
            values: grad,
        },
        kkt,
        converged,
        trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn problem(g: ConfinementSpec, h: f64) -> DensityProblem {
        DensityProblem {
            d: Dim::TWO,
            sigma: -1.0,
            g,
            kernel_scale: 1.0,
            domain: AxisBox::new(Dim::TWO, [-1.0, -1.0, 0.0], [1.0, 1.0, 0.0]),
            h,
        }
    }

    #[test]
    fn huge_confinement_empties_the_field() {
        let p = problem(ConfinementSpec::new(1e6, 0.0, 1.0).unwrap(), 1.0 / 16.0);
        let r = minimize_density(&p, &DescentOptions::default()).unwrap();
        assert!(r.rho.is_empty());
        assert!(r.kkt.satisfied);
        assert_eq!(r.objective, 0.0);
    }

    #[test]
    fn objective_never_increases() {
        let p = problem(ConfinementSpec::new(-2.0, 12.0, 1.0).unwrap(), 1.0 / 16.0);
        let r = minimize_density(&p, &DescentOptions::default()).unwrap();
        assert!(r.trace.windows(2).all(|w| w[1].objective <= w[0].objective));
        assert!(r.converged);
        assert!(!r.rho.is_empty());
    }

    #[test]
    fn kkt_report_signs() {
        let k = kkt_report(&[0.0, 1.0, 0.5], &[0.3, -0.2, 0.01], 0.05);
        assert!(k.satisfied);
        let k = kkt_report(&[0.0, 1.0], &[-0.3, 0.2], 0.05);
        assert_eq!(k.violations, 2);
        assert!((k.max_violation - 0.3).abs() < 1e-15);
    }
}
