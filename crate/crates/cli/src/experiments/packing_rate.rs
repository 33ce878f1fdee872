use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use rieszlab::packing::estimate_box_packing;
use rieszlab::Dim;

use crate::artifacts::{num, Check, Outcome, Table};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Params {
    pub d: usize,
    pub box_sides: Vec<f64>,
    pub anneal_budget: usize,
    /// Allowed ratio max/min of (density − C^d)·r across the box sides.
    pub ratio_limit: f64,
    pub slack: f64,
}

impl Default for Params {
    fn default() -> Self {
        Params {
            d: 2,
            box_sides: vec![10.0, 20.0, 40.0],
            anneal_budget: 2000,
            ratio_limit: 4.0,
            slack: 1e-12,
        }
    }
}

/// Box densities C_r^d approach C^d from above at rate 1/r: the excess
/// (C_r^d − C^d)·r should stay within a bounded band.
pub fn run(p: &Params, seed: u64) -> rieszlab::Result<Outcome> {
    let d = Dim::new(p.d)?;
    let c = d.packing_density();
    let runs = p
        .box_sides
        .par_iter()
        .enumerate()
        .map(|(i, &r)| estimate_box_packing(d, r, p.anneal_budget, seed.wrapping_add(i as u64)))
        .collect::<rieszlab::Result<Vec<_>>>()?;

    let mut table = Table::new(&["r", "count", "lattice_count", "density", "excess", "scaled_excess"]);
    let mut scaled = Vec::new();
    let mut above = true;
    for (&r, run) in p.box_sides.iter().zip(&runs) {
        let excess = run.density - c;
        above &= run.density >= c - p.slack;
        scaled.push(excess * r);
        table.push(vec![
            num(r),
            run.count.to_string(),
            run.lattice_count.to_string(),
            num(run.density),
            num(excess),
            num(excess * r),
        ]);
    }
    let hi = scaled.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lo = scaled.iter().copied().fold(f64::INFINITY, f64::min);
    let ratio = if lo > 0.0 { hi / lo } else { f64::INFINITY };

    let mut out = Outcome {
        table,
        ..Default::default()
    };
    out.metrics.insert("packing_density".into(), c);
    out.metrics.insert("scaled_excess_ratio".into(), ratio);
    out.checks.push(Check::new(
        "density_at_least_optimal",
        above,
        format!("every box density ≥ C^d − {:e}", p.slack),
    ));
    out.checks.push(Check::new(
        "excess_decays_like_one_over_r",
        ratio < p.ratio_limit,
        format!("max/min of (density − C^d)·r = {ratio} (limit {})", p.ratio_limit),
    ));
    Ok(out)
}
