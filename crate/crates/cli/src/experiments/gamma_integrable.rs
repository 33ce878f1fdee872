use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use rieszlab::discrete_energy::energy;
use rieszlab::kernels::KernelSpec;
use rieszlab::packing::recovery_in_region;
use rieszlab::reference::riesz_energy_ball;
use rieszlab::{Ball, Dim, Error};

use super::{require_nonempty, strictly_decreasing};
use crate::artifacts::{num, Check, Outcome, Table};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Params {
    pub d: usize,
    pub sigma: f64,
    pub radius: f64,
    pub epsilons: Vec<f64>,
    /// Bound on the relative gap at the last ε.
    pub final_tolerance: f64,
}

impl Default for Params {
    fn default() -> Self {
        Params {
            d: 2,
            sigma: -1.0,
            radius: 1.0,
            epsilons: vec![0.04, 0.02, 0.01],
            final_tolerance: 0.05,
        }
    }
}

/// Lattice recovery configurations of the ball χ_{B_R}: their discrete
/// energies approach the continuum energy of the ball as ε → 0.
pub fn run(p: &Params, _seed: u64) -> rieszlab::Result<Outcome> {
    require_nonempty("epsilons", &p.epsilons)?;
    let d = Dim::new(p.d)?;
    let limit = riesz_energy_ball(d, p.sigma, p.radius)?.value;
    let ball = Ball::centered(d, p.radius);
    let rows = p
        .epsilons
        .par_iter()
        .map(|&eps| {
            let spec = KernelSpec::integrable(d, p.sigma, eps)?;
            let config = recovery_in_region(&ball, 1.0, eps)?;
            let value = energy(&spec, &config)?;
            let total = value
                .total()
                .ok_or_else(|| Error::InfeasibleInit("recovery configuration overlaps".into()))?;
            Ok((config.len(), total))
        })
        .collect::<rieszlab::Result<Vec<_>>>()?;

    let mut table = Table::new(&["epsilon", "n", "discrete_energy", "continuum_energy", "gap", "relative_gap"]);
    let mut gaps = Vec::new();
    for (&eps, &(n, f)) in p.epsilons.iter().zip(&rows) {
        let gap = (f - limit).abs();
        gaps.push(gap);
        table.push(vec![num(eps), n.to_string(), num(f), num(limit), num(gap), num(gap / limit.abs())]);
    }
    let last = gaps.last().copied().unwrap_or(f64::NAN) / limit.abs();

    let mut out = Outcome {
        table,
        ..Default::default()
    };
    out.metrics.insert("continuum_energy".into(), limit);
    out.metrics.insert("final_relative_gap".into(), last);
    out.checks.push(Check::new(
        "gap_strictly_decreasing",
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
