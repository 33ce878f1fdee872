use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use rieszlab::kernels::{ConfinementSpec, KernelSpec};
use rieszlab::optimizer::{
    anneal_discrete, minimize_density, shape_of_configuration, shape_of_density, AnnealInit, AnnealSchedule,
    DensityProblem, DescentOptions, Objective, ShapeDiagnostics,
};
use rieszlab::{AxisBox, Dim};

use crate::artifacts::{num, Check, Outcome, Table};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Params {
    pub d: usize,
    pub sigma: f64,
    /// Continuum problem: g = c1 + c2|x|^{−σ} on [−half_width, half_width]^d.
    pub density_c1: f64,
    pub density_c2: f64,
    pub half_width: f64,
    pub h: f64,
    pub steps: usize,
    pub step_size: f64,
    /// Discrete problem: N hard spheres of radius ε under g = c1 + c2|x|^{−σ}.
    pub particles: usize,
    pub epsilon: f64,
    pub anneal_c1: f64,
    pub anneal_c2: f64,
    pub anneal_runs: usize,
    pub epochs: usize,
    pub packing_fraction: f64,
    pub bang_bang_limit: f64,
    pub deficit_limit: f64,
    pub anneal_deficit_limit: f64,
}

impl Default for Params {
    fn default() -> Self {
        let d = Dim::TWO;
        let particles = 200;
        Params {
            d: 2,
            sigma: -1.0,
            density_c1: -2.0,
            density_c2: 12.0,
            half_width: 1.0,
            h: 1.0 / 64.0,
            steps: 500,
            step_size: 0.05,
            particles,
            // total mass π/4, the area of the disk of radius 1/2
            epsilon: (d.packing_density() / (4.0 * particles as f64)).sqrt(),
            anneal_c1: 0.0,
            anneal_c2: 1.0,
            anneal_runs: 5,
            epochs: 200,
            packing_fraction: 0.2,
            bang_bang_limit: 0.1,
            deficit_limit: 0.05,
            anneal_deficit_limit: 0.15,
        }
    }
}

pub fn density_problem(d: Dim, sigma: f64, g: ConfinementSpec, kernel_scale: f64, half_width: f64, h: f64) -> DensityProblem {
    let mut lo = [0.0; 3];
    let mut hi = [0.0; 3];
    for a in 0..d.get() {
        lo[a] = -half_width;
        hi[a] = half_width;
    }
    DensityProblem {
        d,
        sigma,
        g,
        kernel_scale,
        domain: AxisBox::new(d, lo, hi),
        h,
    }
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n == 0 {
        f64::NAN
    } else if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

fn row(kind: &str, seed: Option<u64>, energy: f64, s: &ShapeDiagnostics, kkt: Option<f64>) -> Vec<String> {
    let mut r = vec![kind.to_string(), seed.map(|s| s.to_string()).unwrap_or_default(), num(energy)];
    r.extend(s.csv_row());
    r.push(kkt.map(num).unwrap_or_default());
    r
}

/// Minimizers of the confined energies, continuum and discrete, should be
/// (close to) balls; the continuum one should also be a characteristic
/// function.
pub fn run(p: &Params, seed: u64) -> rieszlab::Result<Outcome> {
    let d = Dim::new(p.d)?;
    let g = ConfinementSpec::for_sigma(p.density_c1, p.density_c2, p.sigma)?;
    let problem = density_problem(d, p.sigma, g, 1.0, p.half_width, p.h);
    let options = DescentOptions {
        steps: p.steps,
        step_size: p.step_size,
        ..Default::default()
    };
    let spec = KernelSpec::integrable(d, p.sigma, p.epsilon)?;
    let ga = ConfinementSpec::for_sigma(p.anneal_c1, p.anneal_c2, p.sigma)?;
    let seeds: Vec<u64> = (0..p.anneal_runs as u64).map(|i| seed.wrapping_add(i)).collect();

    let (density, anneals) = rayon::join(
        || {
            let r = minimize_density(&problem, &options)?;
            let s = shape_of_density(&r.rho)?;
            Ok::<_, rieszlab::Error>((r, s))
        },
        || {
            seeds
                .par_iter()
                .map(|&s| {
                    let schedule = AnnealSchedule {
                        epochs: p.epochs,
                        seed: s,
                        ..Default::default()
                    };
                    let init = AnnealInit::Random {
                        packing_fraction: p.packing_fraction,
                    };
                    let r = anneal_discrete(Objective::Confined, &spec, Some(&ga), p.particles, init, &schedule)?;
                    let shape = shape_of_configuration(&r.best)?;
                    Ok((r.best_energy, shape))
                })
                .collect::<rieszlab::Result<Vec<_>>>()
        },
    );
    let (density, dshape) = density?;
    let anneals = anneals?;

    let mut header = vec!["run", "seed", "energy"];
    header.extend(ShapeDiagnostics::CSV_HEADER);
    header.push("kkt_max_violation");
    let mut table = Table::new(&header);
    table.push(row("density", None, density.objective, &dshape, Some(density.kkt.max_violation)));
    for (&s, (e, shape)) in seeds.iter().zip(&anneals) {
        table.push(row("anneal", Some(s), *e, shape, None));
    }
    let med = median(anneals.iter().map(|(_, s)| s.ball_deficit).collect());

    let mut out = Outcome {
        table,
        ..Default::default()
    };
    out.metrics.insert("density_bang_bang_index".into(), dshape.bang_bang_index);
    out.metrics.insert("density_ball_deficit".into(), dshape.ball_deficit);
    out.metrics.insert("anneal_median_ball_deficit".into(), med);
    out.checks.push(Check::new(
        "density_is_bang_bang",
        dshape.bang_bang_index < p.bang_bang_limit,
        format!("bang_bang_index {} (limit {})", dshape.bang_bang_index, p.bang_bang_limit),
    ));
    out.checks.push(Check::new(
        "density_support_is_ball",
        dshape.ball_deficit < p.deficit_limit,
        format!("ball_deficit {} (limit {})", dshape.ball_deficit, p.deficit_limit),
    ));
    out.checks.push(Check::new(
        "density_kkt",
        density.kkt.satisfied,
        format!(
            "{} violations, max {} at tolerance {}",
            density.kkt.violations, density.kkt.max_violation, density.kkt.tolerance
        ),
    ));
    out.checks.push(Check::new(
        "anneal_median_is_ball",
        !anneals.is_empty() && med < p.anneal_deficit_limit,
        format!("median ball_deficit {med} over {} runs (limit {})", anneals.len(), p.anneal_deficit_limit),
    ));
    Ok(out)
}
