use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use rieszlab::kernels::{gamma_R_zero, gamma_r_sigma};
use rieszlab::quadrature::integrate;
use rieszlab::Dim;

use crate::artifacts::{num, Check, Outcome, Table};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Params {
    pub dims: Vec<usize>,
    pub sigmas: Vec<f64>,
    /// Inner radii r for γ_r^σ.
    pub radii: Vec<f64>,
    /// Outer radii R for γ_R^0.
    pub outer_radii: Vec<f64>,
    pub tolerance: f64,
}

impl Default for Params {
    fn default() -> Self {
        Params {
            dims: vec![1, 2, 3],
            sigmas: vec![0.0, 0.25, 0.5, 0.75],
            radii: vec![0.5, 0.1, 0.01],
            outer_radii: vec![2.0, 10.0, 100.0],
            tolerance: 1e-8,
        }
    }
}

/// Breakpoints at every decade between `a` and `b` help the adaptive rule
/// with the t^{−1−σ} growth near small radii.
fn decades(a: f64, b: f64) -> Vec<f64> {
    let mut out = Vec::new();
    let mut t = a * 10.0;
    while t < b {
        out.push(t);
        t *= 10.0;
    }
    out
}

/// −∫_{B_1 ∖ B_r} |z|^{−(d+σ)} dz by radial quadrature.
pub fn gamma_r_sigma_quadrature(d: Dim, sigma: f64, r: f64) -> f64 {
    let df = d.as_f64();
    let radial = integrate(|t| t.powf(df - 1.0 - (df + sigma)), r, 1.0, &decades(r, 1.0));
    -d.unit_sphere_area() * radial.value
}

/// ∫_{B_R ∖ B_1} |z|^{−d} dz by radial quadrature.
pub fn gamma_r_zero_quadrature(d: Dim, outer: f64) -> f64 {
    let radial = integrate(|t| 1.0 / t, 1.0, outer, &decades(1.0, outer));
    d.unit_sphere_area() * radial.value
}

enum Case {
    Inner { d: Dim, sigma: f64, r: f64 },
    Outer { d: Dim, r: f64 },
}

pub fn run(p: &Params, _seed: u64) -> rieszlab::Result<Outcome> {
    let mut cases = Vec::new();
    for &du in &p.dims {
        let d = Dim::new(du)?;
        for &sigma in &p.sigmas {
            for &r in &p.radii {
                cases.push(Case::Inner { d, sigma, r });
            }
        }
        for &r in &p.outer_radii {
            cases.push(Case::Outer { d, r });
        }
    }
    let rows: Vec<(&str, Dim, f64, f64, f64, f64)> = cases
        .par_iter()
        .map(|c| match *c {
            Case::Inner { d, sigma, r } => Ok(("gamma_r_sigma", d, sigma, r, gamma_r_sigma(d, sigma, r)?, gamma_r_sigma_quadrature(d, sigma, r))),
            Case::Outer { d, r } => Ok(("gamma_R_zero", d, 0.0, r, gamma_R_zero(d, r)?, gamma_r_zero_quadrature(d, r))),
        })
        .collect::<rieszlab::Result<_>>()?;

    let mut table = Table::new(&["constant", "d", "sigma", "radius", "closed_form", "quadrature", "rel_error"]);
    let mut worst: f64 = 0.0;
    for (name, d, sigma, r, closed, quad) in rows {
        let rel = (closed - quad).abs() / quad.abs();
        worst = worst.max(rel);
        table.push(vec![
            name.to_string(),
            d.get().to_string(),
            num(sigma),
            num(r),
            num(closed),
            num(quad),
            num(rel),
        ]);
    }
    let mut out = Outcome {
        table,
        ..Default::default()
    };
    out.metrics.insert("max_rel_error".into(), worst);
    out.checks.push(Check::new(
        "closed_forms_match_quadrature",
        worst <= p.tolerance,
        format!("max relative error {worst:e} (limit {:e})", p.tolerance),
    ));
    Ok(out)
}
