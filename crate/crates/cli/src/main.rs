use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use rieszlab::bridge::{energy_bridge_report, BridgeReport};
use rieszlab::continuum_energy::{
    default_p0_radii, fractional_perimeter, j_renormalized, p0_perimeter, riesz_energy, riesz_energy_confined,
};
use rieszlab::discrete_energy::{energy, energy_confined, energy_renormalized, EnergyBreakdown, EnergyValue};
use rieszlab::kernels::{ConfinementSpec, KernelSpec};
use rieszlab::optimizer::{
    anneal_discrete, minimize_density, shape_of_configuration, shape_of_density, AnnealInit, AnnealSchedule,
    AnnealTraceRow, DescentOptions, DescentTraceRow, Objective, ShapeDiagnostics,
};
use rieszlab::quadrature::Estimate;
use rieszlab::{Configuration, Dim, PixelSet, ScaledEmpiricalMeasure};
use rieszlab_cli::artifacts::{num, RunStatus, Table};
use rieszlab_cli::experiments::{run_experiment, EXPERIMENTS};
use rieszlab_cli::inputs::{self, Input};
use rieszlab_cli::manifest::Manifest;
use rieszlab_cli::{with_threads, CliError, Result};

#[derive(Parser)]
#[command(name = "rieszlab", version, about = "Discrete and continuum Riesz energies of hard-sphere configurations")]
struct Cli {
    /// Seed for randomized steps (overrides the manifest seed).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads; 0 uses all cores. Results do not depend on it.
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
    /// Output file (single-value verbs) or directory (everything else).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Energy of a configuration, pixel set or density.
    Energy(EnergyArgs),
    /// Fractional perimeter P^s (0 < s < 1) or P^0 (s = 0) of a pixel set.
    Perimeter(PerimeterArgs),
    /// Bridge report for a configuration in the regularized regime.
    Bridge(BridgeArgs),
    /// Simulated annealing over hard-sphere configurations.
    Anneal(AnnealArgs),
    /// Projected gradient descent over densities with values in [0, 1].
    MinimizeDensity(DensityArgs),
    /// Built-in experiments.
    Experiment {
        #[command(subcommand)]
        action: ExperimentCommand,
    },
}

#[derive(Subcommand)]
enum ExperimentCommand {
    /// Run the experiment named in a TOML manifest.
    Run { manifest: PathBuf },
    /// List the built-in experiments.
    List,
}

#[derive(Args)]
struct EnergyArgs {
    input: PathBuf,
    #[arg(long, allow_hyphen_values = true)]
    sigma: f64,
    /// Mesoscale cutoff; defaults to the standard schedule for configurations.
    #[arg(long)]
    r_eps: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    c1: Option<f64>,
    #[arg(long)]
    c2: Option<f64>,
}

#[derive(Args)]
struct PerimeterArgs {
    input: PathBuf,
    #[arg(long)]
    sigma: f64,
}

#[derive(Args)]
struct BridgeArgs {
    input: PathBuf,
    #[arg(long)]
    sigma: f64,
    #[arg(long)]
    r_eps: Option<f64>,
}

#[derive(Clone, Copy, ValueEnum)]
enum ObjectiveArg {
    Energy,
    Confined,
    Renormalized,
}

#[derive(Clone, Copy, ValueEnum)]
enum InitArg {
    Random,
    Lattice,
}

#[derive(Args)]
struct AnnealArgs {
    #[arg(long, default_value_t = 2)]
    d: usize,
    #[arg(long)]
    n: usize,
    #[arg(long, allow_hyphen_values = true)]
    sigma: f64,
    #[arg(long)]
    epsilon: f64,
    #[arg(long)]
    r_eps: Option<f64>,
    #[arg(long, value_enum, default_value_t = ObjectiveArg::Confined)]
    objective: ObjectiveArg,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    c1: f64,
    #[arg(long, default_value_t = 1.0)]
    c2: f64,
    #[arg(long, default_value_t = 200)]
    epochs: usize,
    #[arg(long, value_enum, default_value_t = InitArg::Random)]
    init: InitArg,
    #[arg(long, default_value_t = 0.2)]
    packing_fraction: f64,
}

#[derive(Args)]
struct DensityArgs {
    #[arg(long, default_value_t = 2)]
    d: usize,
    #[arg(long, allow_hyphen_values = true)]
    sigma: f64,
    #[arg(long, allow_hyphen_values = true)]
    c1: f64,
    #[arg(long)]
    c2: f64,
    #[arg(long, default_value_t = 1.0)]
    kernel_scale: f64,
    #[arg(long, default_value_t = 1.0)]
    half_width: f64,
    #[arg(long, default_value_t = 1.0 / 64.0)]
    h: f64,
    #[arg(long, default_value_t = 500)]
    steps: usize,
    #[arg(long, default_value_t = 0.05)]
    step_size: f64,
}

fn emit(table: &Table, out: Option<&Path>) -> Result<()> {
    let bytes = table.to_csv()?;
    match out {
        Some(path) => fs::write(path, bytes).map_err(|source| CliError::Io {
            path: path.display().to_string(),
            source,
        }),
        None => {
            std::io::stdout().write_all(&bytes).expect("stdout");
            Ok(())
        }
    }
}

fn estimate_table(label: &str, e: Estimate) -> Table {
    let mut t = Table::new(&["quantity", "value", "error"]);
    t.push(vec![label.to_string(), num(e.value), num(e.error)]);
    t
}

fn breakdown_table(value: EnergyValue) -> Result<Table> {
    match value {
        EnergyValue::Finite(b) => {
            let mut t = Table::new(&EnergyBreakdown::CSV_HEADER);
            t.push(b.csv_row().to_vec());
            Ok(t)
        }
        EnergyValue::Forbidden { i, j, distance } => {
            Err(rieszlab::Error::HardSphereViolation { i, j, distance }.into())
        }
    }
}

fn regularized_spec(d: Dim, sigma: f64, epsilon: f64, r_eps: Option<f64>) -> rieszlab::Result<KernelSpec> {
    match r_eps {
        Some(r) => KernelSpec::regularized(d, sigma, epsilon, r),
        None => KernelSpec::regularized_default(d, sigma, epsilon),
    }
}

fn confinement(sigma: f64, c1: Option<f64>, c2: Option<f64>) -> rieszlab::Result<Option<ConfinementSpec>> {
    if c1.is_none() && c2.is_none() {
        return Ok(None);
    }
    ConfinementSpec::for_sigma(c1.unwrap_or(0.0), c2.unwrap_or(0.0), sigma).map(Some)
}

fn energy_cmd(a: &EnergyArgs) -> Result<Table> {
    let g = if a.sigma < 0.0 { confinement(a.sigma, a.c1, a.c2)? } else { None };
    match inputs::read(&a.input)? {
        Input::Configuration(c) => {
            let d = c.dim();
            if a.sigma < 0.0 {
                let spec = KernelSpec::integrable(d, a.sigma, c.epsilon())?;
                breakdown_table(match g {
                    Some(g) => energy_confined(&spec, &g, &c)?,
                    None => energy(&spec, &c)?,
                })
            } else {
                let spec = regularized_spec(d, a.sigma, c.epsilon(), a.r_eps)?;
                breakdown_table(energy_renormalized(&spec, &c)?)
            }
        }
        Input::Density(f) => {
            let e = match g {
                Some(g) => riesz_energy_confined(f.dim(), a.sigma, &f, &g)?,
                None => riesz_energy(f.dim(), a.sigma, &f)?,
            };
            Ok(estimate_table("riesz_energy", e))
        }
        Input::PixelSet(s) => {
            if a.sigma < 0.0 {
                let f = rieszlab::DensityField::from_pixel_set(&s, 1.0)?;
                let e = match g {
                    Some(g) => riesz_energy_confined(s.dim(), a.sigma, &f, &g)?,
                    None => riesz_energy(s.dim(), a.sigma, &f)?,
                };
                Ok(estimate_table("riesz_energy", e))
            } else {
                let r = a
                    .r_eps
                    .ok_or_else(|| CliError::Input("--r-eps is required for sets with sigma >= 0".into()))?;
                Ok(estimate_table("j_renormalized", j_renormalized(s.dim(), a.sigma, r, &s)?))
            }
        }
    }
}

fn read_set(path: &Path) -> Result<PixelSet> {
    match inputs::read(path)? {
        Input::PixelSet(s) => Ok(s),
        _ => Err(CliError::Input(format!("{} is not a pixel set", path.display()))),
    }
}

fn read_configuration(path: &Path) -> Result<Configuration> {
    match inputs::read(path)? {
        Input::Configuration(c) => Ok(c),
        _ => Err(CliError::Input(format!("{} is not a configuration", path.display()))),
    }
}

fn perimeter_cmd(a: &PerimeterArgs) -> Result<Table> {
    let s = read_set(&a.input)?;
    if a.sigma == 0.0 {
        Ok(estimate_table("perimeter_zero", p0_perimeter(s.dim(), &s, &default_p0_radii(&s))?))
    } else {
        Ok(estimate_table("perimeter", fractional_perimeter(s.dim(), a.sigma, &s)?))
    }
}

fn bridge_cmd(a: &BridgeArgs) -> Result<Table> {
    let c = read_configuration(&a.input)?;
    let spec = regularized_spec(c.dim(), a.sigma, c.epsilon(), a.r_eps)?;
    let report = energy_bridge_report(&ScaledEmpiricalMeasure::new(c), &spec)?;
    let mut t = Table::new(&BridgeReport::CSV_HEADER);
    t.push(report.csv_row().to_vec());
    Ok(t)
}

fn shape_columns(t: &mut Vec<&'static str>) {
    t.extend(ShapeDiagnostics::CSV_HEADER);
}

fn write_dir_file(dir: &Path, name: &str, bytes: &[u8]) -> Result<()> {
    let path = dir.join(name);
    fs::write(&path, bytes).map_err(|source| CliError::Io {
        path: path.display().to_string(),
        source,
    })
}

fn anneal_cmd(a: &AnnealArgs, seed: u64, out: Option<&Path>) -> Result<()> {
    let d = Dim::new(a.d)?;
    let (objective, spec, g) = match a.objective {
        ObjectiveArg::Energy => (Objective::Energy, KernelSpec::integrable(d, a.sigma, a.epsilon)?, None),
        ObjectiveArg::Confined => (
            Objective::Confined,
            KernelSpec::integrable(d, a.sigma, a.epsilon)?,
            Some(ConfinementSpec::for_sigma(a.c1, a.c2, a.sigma)?),
        ),
        ObjectiveArg::Renormalized => (
            Objective::Renormalized,
            regularized_spec(d, a.sigma, a.epsilon, a.r_eps)?,
            None,
        ),
    };
    let init = match a.init {
        InitArg::Random => AnnealInit::Random {
            packing_fraction: a.packing_fraction,
        },
        InitArg::Lattice => AnnealInit::Lattice,
    };
    let schedule = AnnealSchedule {
        epochs: a.epochs,
        seed,
        ..Default::default()
    };
    let r = anneal_discrete(objective, &spec, g.as_ref(), a.n, init, &schedule)?;
    let shape = shape_of_configuration(&r.best)?;

    let mut header = vec!["n", "initial_energy", "best_energy"];
    shape_columns(&mut header);
    let mut summary = Table::new(&header);
    let mut row = vec![r.best.len().to_string(), num(r.initial_energy), num(r.best_energy)];
    row.extend(shape.csv_row());
    summary.push(row);
    match out {
        None => emit(&summary, None),
        Some(dir) => {
            fs::create_dir_all(dir).map_err(|source| CliError::Io {
                path: dir.display().to_string(),
                source,
            })?;
            let mut trace = Table::new(&AnnealTraceRow::CSV_HEADER);
            for t in &r.trace {
                trace.push(t.csv_row().to_vec());
            }
            write_dir_file(dir, "trace.csv", &trace.to_csv()?)?;
            write_dir_file(dir, "summary.csv", &summary.to_csv()?)?;
            inputs::write(&dir.join("configuration.txt"), &Input::Configuration(r.best))
        }
    }
}

fn density_cmd(a: &DensityArgs, out: Option<&Path>) -> Result<()> {
    let d = Dim::new(a.d)?;
    let g = ConfinementSpec::for_sigma(a.c1, a.c2, a.sigma)?;
    let problem = rieszlab_cli::experiments::confined_shape::density_problem(d, a.sigma, g, a.kernel_scale, a.half_width, a.h);
    let options = DescentOptions {
        steps: a.steps,
        step_size: a.step_size,
        ..Default::default()
    };
    let r = minimize_density(&problem, &options)?;
    let shape = shape_of_density(&r.rho)?;

    let mut header = vec!["objective", "converged", "kkt_satisfied", "kkt_max_violation"];
    shape_columns(&mut header);
    let mut summary = Table::new(&header);
    let mut row = vec![
        num(r.objective),
        r.converged.to_string(),
        r.kkt.satisfied.to_string(),
        num(r.kkt.max_violation),
    ];
    row.extend(shape.csv_row());
    summary.push(row);
    match out {
        None => emit(&summary, None),
        Some(dir) => {
            fs::create_dir_all(dir).map_err(|source| CliError::Io {
                path: dir.display().to_string(),
                source,
            })?;
            let mut trace = Table::new(&DescentTraceRow::CSV_HEADER);
            for t in &r.trace {
                trace.push(t.csv_row().to_vec());
            }
            write_dir_file(dir, "trace.csv", &trace.to_csv()?)?;
            write_dir_file(dir, "summary.csv", &summary.to_csv()?)?;
            inputs::write(&dir.join("density.txt"), &Input::Density(r.rho))
        }
    }
}

fn experiment_cmd(action: &ExperimentCommand, seed: Option<u64>, threads: usize, out: Option<&Path>) -> Result<RunStatus> {
    match action {
        ExperimentCommand::List => {
            for e in &EXPERIMENTS {
                println!("{:<32}{}", e.name, e.summary);
            }
            Ok(RunStatus::Passed)
        }
        ExperimentCommand::Run { manifest } => {
            let text = fs::read_to_string(manifest).map_err(|source| CliError::Io {
                path: manifest.display().to_string(),
                source,
            })?;
            let mut m = Manifest::parse(&text)?;
            if let Some(s) = seed {
                m.seed = s;
            }
            let dir = out.map(Path::to_path_buf).unwrap_or_else(|| PathBuf::from("runs").join(&m.experiment));
            let (status, outcome) = run_experiment(&m, &dir, threads)?;
            if let Some(o) = outcome {
                for c in &o.checks {
                    println!("{} {}: {}", if c.passed { "pass" } else { "FAIL" }, c.name, c.detail);
                }
            }
            println!("{} -> {}", m.experiment, dir.display());
            Ok(status)
        }
    }
}

fn run(cli: Cli) -> Result<RunStatus> {
    let out = cli.out.as_deref();
    let seed = cli.seed.unwrap_or(0);
    let threads = cli.threads;
    match &cli.command {
        Command::Experiment { action } => experiment_cmd(action, cli.seed, threads, out),
        cmd => with_threads(threads, || {
            match cmd {
                Command::Energy(a) => emit(&energy_cmd(a)?, out)?,
                Command::Perimeter(a) => emit(&perimeter_cmd(a)?, out)?,
                Command::Bridge(a) => emit(&bridge_cmd(a)?, out)?,
                Command::Anneal(a) => anneal_cmd(a, seed, out)?,
                Command::MinimizeDensity(a) => density_cmd(a, out)?,
                Command::Experiment { .. } => unreachable!(),
            }
            Ok(RunStatus::Passed)
        }),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(status) => ExitCode::from(status.exit_code() as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(RunStatus::Errored.exit_code() as u8)
        }
    }
}
