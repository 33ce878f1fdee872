use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use rieszlab::bridge::set_to_measure;
use rieszlab::discrete_energy::energy_renormalized;
use rieszlab::kernels::{gamma_sigma, KernelSpec};
use rieszlab::reference::{fractional_perimeter_ball, j_truncated_ball};
use rieszlab::{Ball, Dim, Error, Region};

use super::{require_nonempty, strictly_decreasing};
use crate::artifacts::{num, Check, Outcome, Table};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Params {
    pub d: usize,
    pub sigma: f64,
    pub radius: f64,
    pub epsilons: Vec<f64>,
    pub final_tolerance: f64,
}

impl Default for Params {
    fn default() -> Self {
        Params {
            d: 2,
            sigma: 0.5,
            radius: 8.0,
            epsilons: vec![0.02, 0.01, 0.005],
            final_tolerance: 0.1,
        }
    }
}

/// Renormalized discrete energies of the recovery measures of a disk E,
/// compared with the limit P^σ(E) − γ^σ|E|. The intermediate Ĵ_{r_ε}(E)
/// column separates the truncation error from the discretization error.
pub fn run(p: &Params, _seed: u64) -> rieszlab::Result<Outcome> {
    require_nonempty("epsilons", &p.epsilons)?;
    let d = Dim::new(p.d)?;
    let disk = Ball::centered(d, p.radius);
    let area = disk.measure();
    let limit = fractional_perimeter_ball(d, p.sigma, p.radius)?.value - gamma_sigma(d, p.sigma)? * area;
    let rows = p
        .epsilons
        .par_iter()
        .map(|&eps| {
            let spec = KernelSpec::regularized_default(d, p.sigma, eps)?;
            let r = spec.r_eps().expect("regularized spec");
            let m = set_to_measure(&disk, &spec)?;
            let f = energy_renormalized(&spec, m.config())?
                .total()
                .ok_or_else(|| Error::InfeasibleInit("recovery configuration overlaps".into()))?;
            let j_hat = j_truncated_ball(d, p.sigma, r, p.radius).value - spec.renormalization_constant() * area;
            Ok((r, m.config().len(), f, j_hat))
        })
        .collect::<rieszlab::Result<Vec<_>>>()?;

    let mut table = Table::new(&[
        "epsilon",
        "r_eps",
        "n",
        "renormalized_energy",
        "truncated_continuum",
        "limit",
        "gap",
        "relative_gap",
    ]);
    let mut gaps = Vec::new();
    for (&eps, &(r, n, f, j_hat)) in p.epsilons.iter().zip(&rows) {
        let gap = (f - limit).abs();
        gaps.push(gap);
        table.push(vec![
            num(eps),
            num(r),
            n.to_string(),
            num(f),
            num(j_hat),
            num(limit),
            num(gap),
            num(gap / limit.abs()),
        ]);
    }
    let last = gaps[gaps.len() - 1] / limit.abs();

    let mut out = Outcome {
        table,
        ..Default::default()
    };
    out.metrics.insert("limit".into(), limit);
    out.metrics.insert("final_relative_gap".into(), last);
    out.checks.push(Check::new(
        "gap_decreasing",
        strictly_decreasing(&gaps),
        format!("gaps {gaps:?}"),
    ));
    out.checks.push(Check::new(
        "final_gap_small",
        last < p.final_tolerance,
        format!("relative gap {last} (limit {})", p.final_tolerance),
    ));
    Ok(out)
}
