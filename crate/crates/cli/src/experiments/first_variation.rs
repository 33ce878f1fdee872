use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use rieszlab::continuum_energy::first_variation_residual;
use rieszlab::kernels::ConfinementSpec;
use rieszlab::optimizer::{kkt_report, minimize_density, shape_of_density, DescentOptions};
use rieszlab::quadrature::integrate;
use rieszlab::Dim;

use super::confined_shape::density_problem;
use super::require_nonempty;
use crate::artifacts::{num, Check, Outcome, Table};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Params {
    pub d: usize,
    pub sigma: f64,
    pub c1: f64,
    pub c2: f64,
    /// Values of λ in  ∫ g ρ − λ ∬ ρρ|x−y|^{−(d+σ)}.
    pub kernel_scales: Vec<f64>,
    pub half_width: f64,
    pub h: f64,
    pub steps: usize,
    pub step_size: f64,
    /// Allowed distance between the fitted and predicted radius, in cells.
    pub radius_tolerance_cells: f64,
}

impl Default for Params {
    fn default() -> Self {
        Params {
            d: 2,
            sigma: -1.0,
            c1: -2.0,
            c2: 12.0,
            kernel_scales: vec![0.5, 1.0],
            half_width: 1.0,
            h: 1.0 / 64.0,
            steps: 500,
            step_size: 0.05,
            radius_tolerance_cells: 2.0,
        }
    }
}

/// In the plane, ∫_{B_R}|x−y|^{−p} dy at a boundary point x equals
/// c_p R^{2−p} with c_p = ∫_{−π/2}^{π/2} (2cos θ)^{2−p}/(2−p) dθ.
pub fn disk_boundary_constant(p: f64) -> f64 {
    let half = std::f64::consts::FRAC_PI_2;
    integrate(|t| (2.0 * t.cos()).powf(2.0 - p) / (2.0 - p), -half, half, &[0.0]).value
}

/// Radius at which the first variation of a disk vanishes on its boundary:
/// c1 + c2 R^{−σ} = 2λ c_p R^{−σ}. Only available for d = 2 with the
/// profile exponent −σ, and when the solution is positive.
pub fn stationary_radius(d: Dim, sigma: f64, c1: f64, c2: f64, lambda: f64) -> Option<f64> {
    if d.get() != 2 {
        return None;
    }
    let cp = disk_boundary_constant(2.0 + sigma);
    let t = -c1 / (c2 - 2.0 * lambda * cp);
    (t > 0.0).then(|| t.powf(-1.0 / sigma))
}

/// Stationarity of the descent output: the residual recomputed from the
/// returned field satisfies the KKT sign pattern, and the support radius
/// matches the radius where the first variation of a disk changes sign.
pub fn run(p: &Params, _seed: u64) -> rieszlab::Result<Outcome> {
    require_nonempty("kernel_scales", &p.kernel_scales)?;
    let d = Dim::new(p.d)?;
    let g = ConfinementSpec::for_sigma(p.c1, p.c2, p.sigma)?;
    let options = DescentOptions {
        steps: p.steps,
        step_size: p.step_size,
        ..Default::default()
    };
    let tolerance = 10.0 * p.h;
    let runs = p
        .kernel_scales
        .par_iter()
        .map(|&lambda| {
            let problem = density_problem(d, p.sigma, g, lambda, p.half_width, p.h);
            let r = minimize_density(&problem, &options)?;
            // g − 2λK∗ρ = λ (g/λ − 2K∗ρ)
            let res = first_variation_residual(d, p.sigma, &r.rho, &g.scaled(1.0 / lambda), r.residual.origin, r.residual.shape)?;
            let values: Vec<f64> = res.values.iter().map(|v| lambda * v).collect();
            let rho: Vec<f64> = (0..values.len()).map(|i| r.rho.get(&res.cell(i))).collect();
            let kkt = kkt_report(&rho, &values, tolerance);
            let shape = shape_of_density(&r.rho)?;
            Ok((r.converged, kkt, shape))
        })
        .collect::<rieszlab::Result<Vec<_>>>()?;

    let mut table = Table::new(&[
        "kernel_scale",
        "converged",
        "kkt_violations",
        "kkt_max_violation",
        "radius",
        "predicted_radius",
        "ball_deficit",
    ]);
    let mut kkt_ok = true;
    let mut radius_ok = true;
    let mut details = Vec::new();
    for (&lambda, (converged, kkt, shape)) in p.kernel_scales.iter().zip(&runs) {
        let predicted = stationary_radius(d, p.sigma, p.c1, p.c2, lambda);
        kkt_ok &= kkt.satisfied;
        if let Some(r) = predicted {
            let off = (shape.radius - r).abs();
            radius_ok &= off <= p.radius_tolerance_cells * p.h;
            details.push(format!("λ={lambda}: radius {} vs {r}", shape.radius));
        }
        table.push(vec![
            num(lambda),
            converged.to_string(),
            kkt.violations.to_string(),
            num(kkt.max_violation),
            num(shape.radius),
            predicted.map(num).unwrap_or_default(),
            num(shape.ball_deficit),
        ]);
    }

    let mut out = Outcome {
        table,
        ..Default::default()
    };
    out.checks.push(Check::new(
        "kkt_sign_pattern",
        kkt_ok,
        format!("residual signs at tolerance 10h = {tolerance}"),
    ));
    out.checks.push(Check::new(
        "support_radius_matches_stationarity",
        radius_ok,
        if details.is_empty() {
            "no closed-form radius for this dimension".to_string()
        } else {
            details.join("; ")
        },
    ));
    Ok(out)
}
