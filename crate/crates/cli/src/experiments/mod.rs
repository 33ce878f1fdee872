//! Built-in experiments. Each one has a parameter struct whose defaults are
//! the published sweep, and a `run` that returns the result table together
//! with its declared checks.

pub mod bridge_sweep;
pub mod confined_shape;
pub mod first_variation;
pub mod gamma_constants;
pub mod gamma_integrable;
pub mod gamma_regularized;
pub mod isoperimetry;
pub mod packing_rate;

use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::artifacts::{write_run, Outcome, RunStatus};
use crate::manifest::{resolve, Manifest};
use crate::{with_threads, CliError, Result};

pub struct ExperimentInfo {
    pub name: &'static str,
    pub summary: &'static str,
}

pub const EXPERIMENTS: [ExperimentInfo; 8] = [
    ExperimentInfo {
        name: "gamma-constants",
        summary: "closed-form renormalization constants against radial quadrature",
    },
    ExperimentInfo {
        name: "packing-rate",
        summary: "box packing densities approach the optimal density at rate 1/r",
    },
    ExperimentInfo {
        name: "gamma-convergence-integrable",
        summary: "discrete energies of disk recoveries converge to the continuum energy",
    },
    ExperimentInfo {
        name: "confined-minimizer-shape",
        summary: "confined minimizers are balls (density descent and annealing)",
    },
    ExperimentInfo {
        name: "first-variation",
        summary: "stationarity of descent outputs and the predicted support radius",
    },
    ExperimentInfo {
        name: "bridge-sweep",
        summary: "measure-to-set bridge gaps against their envelopes",
    },
    ExperimentInfo {
        name: "gamma-convergence-regularized",
        summary: "renormalized discrete energies converge to P^s(E) - g^s|E|",
    },
    ExperimentInfo {
        name: "isoperimetry",
        summary: "the ball minimizes every functional among equal-area shapes",
    },
];

pub(crate) fn strictly_decreasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[1] < w[0])
}

pub(crate) fn require_nonempty<T>(name: &'static str, v: &[T]) -> rieszlab::Result<()> {
    if v.is_empty() {
        return Err(rieszlab::Error::InvalidParameter {
            name,
            reason: "must not be empty".into(),
        });
    }
    Ok(())
}

type Resolved = (Manifest, Box<dyn FnOnce() -> rieszlab::Result<Outcome> + Send>);

fn prepare<P>(m: &Manifest, run: fn(&P, u64) -> rieszlab::Result<Outcome>) -> Result<Resolved>
where
    P: Default + Serialize + DeserializeOwned + Send + 'static,
{
    let (params, table) = resolve::<P>(&m.params)?;
    let resolved = Manifest {
        experiment: m.experiment.clone(),
        seed: m.seed,
        params: table,
    };
    let seed = m.seed;
    Ok((resolved, Box::new(move || run(&params, seed))))
}

/// Expands the manifest's parameters and returns the resolved manifest with
/// a closure that runs the experiment.
pub fn resolve_manifest(m: &Manifest) -> Result<Resolved> {
    match m.experiment.as_str() {
        "gamma-constants" => prepare(m, gamma_constants::run),
        "packing-rate" => prepare(m, packing_rate::run),
        "gamma-convergence-integrable" => prepare(m, gamma_integrable::run),
        "confined-minimizer-shape" => prepare(m, confined_shape::run),
        "first-variation" => prepare(m, first_variation::run),
        "bridge-sweep" => prepare(m, bridge_sweep::run),
        "gamma-convergence-regularized" => prepare(m, gamma_regularized::run),
        "isoperimetry" => prepare(m, isoperimetry::run),
        other => Err(CliError::UnknownExperiment(other.to_string())),
    }
}

/// Runs an experiment on `threads` workers without touching the disk.
pub fn run_in_memory(m: &Manifest, threads: usize) -> Result<(Manifest, rieszlab::Result<Outcome>)> {
    let (resolved, job) = resolve_manifest(m)?;
    Ok((resolved, with_threads(threads, job)))
}

/// Runs an experiment and writes its artifact directory.
pub fn run_experiment(m: &Manifest, out: &Path, threads: usize) -> Result<(RunStatus, Option<Outcome>)> {
    let (resolved, result) = run_in_memory(m, threads)?;
    let result = result.map_err(|e| e.to_string());
    let status = write_run(out, &resolved, &result)?;
    Ok((status, result.ok()))
}
