use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use rieszlab::bridge::{energy_bridge_report, measure_to_set, set_to_measure, weak_star_gap, BridgeReport};
use rieszlab::domain::norm;
use rieszlab::kernels::KernelSpec;
use rieszlab::{Ball, Dim};

use super::{require_nonempty, strictly_decreasing};
use crate::artifacts::{num, Check, Outcome, Table};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Params {
    pub d: usize,
    pub sigma: f64,
    /// Radius of the disk whose lattice recovery is bridged; the default
    /// encloses unit area.
    pub radius: f64,
    pub epsilons: Vec<f64>,
    /// Envelope ratios must stay within this factor of the first sweep value.
    pub factor: f64,
}

impl Default for Params {
    fn default() -> Self {
        Params {
            d: 2,
            sigma: 0.5,
            radius: 1.0 / std::f64::consts::PI.sqrt(),
            epsilons: vec![0.02, 0.01, 0.005],
            factor: 3.0,
        }
    }
}

/// Smooth bump supported on the ball of radius `2R`.
fn bump(radius: f64) -> impl Fn(&rieszlab::Point) -> f64 + Sync {
    move |x| {
        let s = norm(x) / (2.0 * radius);
        if s < 1.0 {
            (1.0 - 1.0 / (1.0 - s * s)).exp()
        } else {
            0.0
        }
    }
}

fn within(x: f64, reference: f64, factor: f64) -> bool {
    x <= reference * factor && x >= reference / factor
}

pub fn run(p: &Params, _seed: u64) -> rieszlab::Result<Outcome> {
    require_nonempty("epsilons", &p.epsilons)?;
    let d = Dim::new(p.d)?;
    let disk = Ball::centered(d, p.radius);
    let reports = p
        .epsilons
        .par_iter()
        .map(|&eps| {
            let spec = KernelSpec::regularized_default(d, p.sigma, eps)?;
            let m = set_to_measure(&disk, &spec)?;
            let report = energy_bridge_report(&m, &spec)?;
            let set = measure_to_set(&m, &spec)?;
            let weak = weak_star_gap(&m, &set, bump(p.radius));
            Ok((m.config().len(), report, weak))
        })
        .collect::<rieszlab::Result<Vec<(usize, BridgeReport, f64)>>>()?;

    let mut header: Vec<&str> = BridgeReport::CSV_HEADER.to_vec();
    header.extend(["n", "subdivision", "mass_ratio", "energy_ratio", "weak_star_gap"]);
    let mut table = Table::new(&header);
    let mut mass_ratios = Vec::new();
    let mut energy_ratios = Vec::new();
    let mut renormalized = Vec::new();
    for (n, r, weak) in &reports {
        let mr = r.mass_gap / r.bound_mass;
        let er = r.energy_gap / r.bound_energy;
        mass_ratios.push(mr);
        energy_ratios.push(er);
        renormalized.push(r.renormalized_gap);
        let mut row = r.csv_row().to_vec();
        row.extend([n.to_string(), r.subdivision.to_string(), num(mr), num(er), num(*weak)]);
        table.push(row);
    }

    let mut out = Outcome {
        table,
        ..Default::default()
    };
    let (m0, e0) = (mass_ratios[0], energy_ratios[0]);
    out.checks.push(Check::new(
        "mass_envelope_stable",
        mass_ratios.iter().all(|&x| within(x, m0, p.factor)),
        format!("mass_gap/√(ε/r_ε) = {mass_ratios:?}"),
    ));
    out.checks.push(Check::new(
        "energy_envelope_stable",
        energy_ratios.iter().all(|&x| within(x, e0, p.factor)),
        format!("energy_gap/(|γ|√(ε/r_ε)) = {energy_ratios:?}"),
    ));
    out.checks.push(Check::new(
        "renormalized_gap_strictly_decreasing",
        strictly_decreasing(&renormalized),
        format!("renormalized gaps {renormalized:?}"),
    ));
    out.metrics.insert("final_renormalized_gap".into(), *renormalized.last().unwrap());
    Ok(out)
}
