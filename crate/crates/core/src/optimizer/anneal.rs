use rand::{Rng, SeedableRng};
use rand_distr::{Distribution, Normal};
use rand_xoshiro::Xoshiro256PlusPlus;
use serde::{Deserialize, Serialize};

use crate::discrete_energy::{energy, energy_confined, energy_renormalized, EnergyValue};
use crate::domain::{dist2, first_violation, Configuration, Point};
use crate::error::{invalid, Error, Result};
use crate::kernels::{ConfinementSpec, KernelSpec};
use crate::neighbors::CellList;
use crate::packing::LatticeSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Objective {
    /// 𝓕_ε^σ
    Energy,
    /// T_ε^σ = 𝓕_ε^σ + 𝓖_ε^σ, integrable regime only.
    Confined,
    /// 𝓕̂_ε^σ, regularized regime only.
    Renormalized,
}

/// Metropolis schedule. `None` fields take the defaults described on each.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnnealSchedule {
    /// Defaults to the median |pair energy| of the initial configuration.
    pub initial_temperature: Option<f64>,
    pub cooling: f64,
    /// Defaults to 50·N.
    pub moves_per_epoch: Option<usize>,
    pub epochs: usize,
    /// Standard deviation of a displacement, in units of ε.
    pub move_scale: f64,
    /// Fraction of proposals that relocate a particle uniformly in the
    /// bounding box of the current configuration.
    pub teleport_fraction: f64,
    pub seed: u64,
}

impl Default for AnnealSchedule {
    fn default() -> Self {
        AnnealSchedule {
            initial_temperature: None,
            cooling: 0.95,
            moves_per_epoch: None,
            epochs: 200,
            move_scale: 0.5,
            teleport_fraction: 0.05,
            seed: 0,
        }
    }
}

impl AnnealSchedule {
    fn validate(&self) -> Result<()> {
        if !(self.cooling > 0.0 && self.cooling < 1.0) {
            return Err(invalid("cooling", format!("{} is not in (0, 1)", self.cooling)));
        }
        if let Some(t) = self.initial_temperature {
            if !(t > 0.0 && t.is_finite()) {
                return Err(invalid("initial_temperature", format!("{t} must be positive")));
            }
        }
        if !(self.move_scale > 0.0 && self.move_scale.is_finite()) {
            return Err(invalid("move_scale", "must be positive"));
        }
        if !(0.0..=1.0).contains(&self.teleport_fraction) {
            return Err(invalid("teleport_fraction", "must lie in [0, 1]"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum AnnealInit {
    Configuration(Configuration),
    /// Raw points, validated against the kernel's ε.
    Points(Vec<Point>),
    /// The N optimal-lattice points (spacing 2ε) nearest the origin.
    Lattice,
    /// Random sequential insertion into a centered cube holding the given
    /// fraction of its volume in ε-balls.
    Random { packing_fraction: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnnealTraceRow {
    pub epoch: usize,
    pub temperature: f64,
    pub best_energy: f64,
    pub acceptance_rate: f64,
}

impl AnnealTraceRow {
    pub const CSV_HEADER: [&'static str; 4] = ["epoch", "temperature", "best_energy", "acceptance_rate"];

    pub fn csv_row(&self) -> [String; 4] {
        [
            self.epoch.to_string(),
            format!("{:?}", self.temperature),
            format!("{:?}", self.best_energy),
            format!("{:?}", self.acceptance_rate),
        ]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnnealResult {
    pub best: Configuration,
    pub best_energy: f64,
    pub initial_energy: f64,
    pub trace: Vec<AnnealTraceRow>,
}

/// Pair potential on squared distances with fast paths for p = 1 and 2.
#[derive(Clone, Copy)]
struct Pair {
    p: f64,
    plateau2: f64,
}

impl Pair {
    fn new(spec: &KernelSpec) -> Self {
        Pair {
            p: spec.exponent(),
            plateau2: spec.r_eps().map_or(0.0, |r| r * r),
        }
    }

    #[inline]
    fn eval(&self, r2: f64) -> f64 {
        if r2 < self.plateau2 {
            0.0
        } else if self.p == 1.0 {
            -1.0 / r2.sqrt()
        } else if self.p == 2.0 {
            -1.0 / r2
        } else {
            -r2.powf(-0.5 * self.p)
        }
    }
}

fn exact_energy(objective: Objective, spec: &KernelSpec, g: &ConfinementSpec, config: &Configuration) -> Result<f64> {
    let v = match objective {
        Objective::Energy => energy(spec, config)?,
        Objective::Confined => energy_confined(spec, g, config)?,
        Objective::Renormalized => energy_renormalized(spec, config)?,
    };
    match v {
        EnergyValue::Finite(b) => Ok(b.total),
        EnergyValue::Forbidden { i, j, distance } => Err(Error::InfeasibleInit(format!(
            "points {i} and {j} at distance {distance}"
        ))),
    }
}

fn initial_points(init: AnnealInit, spec: &KernelSpec, n: usize, rng: &mut Xoshiro256PlusPlus) -> Result<Vec<Point>> {
    let dim = spec.d();
    let eps = spec.epsilon();
    let pts = match init {
        AnnealInit::Configuration(c) => {
            if c.dim() != dim {
                return Err(invalid("init", "dimension mismatch"));
            }
            c.points().to_vec()
        }
        AnnealInit::Points(p) => p,
        AnnealInit::Lattice => {
            let lat = LatticeSpec::optimal(dim, 2.0 * eps)?;
            let mut radius = 2.0 * eps * (n as f64).powf(1.0 / dim.as_f64()) + 4.0 * eps;
            loop {
                let mut pts = crate::packing::lattice_points_in(&lat, &crate::domain::Ball::centered(dim, radius));
                if pts.len() >= n {
                    pts.sort_by(|a, b| {
                        crate::domain::norm(a)
                            .partial_cmp(&crate::domain::norm(b))
                            .unwrap()
                            .then(a.partial_cmp(b).unwrap())
                    });
                    pts.truncate(n);
                    break pts;
                }
                radius *= 1.5;
            }
        }
        AnnealInit::Random { packing_fraction } => {
            if !(packing_fraction > 0.0 && packing_fraction < 0.5) {
                return Err(invalid("packing_fraction", "must lie in (0, 0.5)"));
            }
            let vol = n as f64 * dim.unit_ball_volume() * eps.powi(dim.get() as i32) / packing_fraction;
            let side = vol.powf(1.0 / dim.as_f64());
            let mut pts: Vec<Point> = Vec::with_capacity(n);
            let mut cells = CellList::new(dim, 2.0 * eps);
            let mut attempts = 0usize;
            while pts.len() < n {
                attempts += 1;
                if attempts > 1000 * n + 1000 {
                    return Err(Error::BudgetTooSmall);
                }
                let mut q = [0.0; 3];
                for v in q.iter_mut().take(dim.get()) {
                    *v = (rng.gen::<f64>() - 0.5) * side;
                }
                if !cells.conflicts(&pts, &q, None, 2.0 * eps) {
                    cells.insert(pts.len(), &q);
                    pts.push(q);
                }
            }
            pts
        }
    };
    if pts.len() != n {
        return Err(invalid("n", format!("initial configuration has {} points, expected {n}", pts.len())));
    }
    if let Some((i, j, distance)) = first_violation(dim, &pts, 2.0 * eps) {
        return Err(Error::InfeasibleInit(format!("points {i} and {j} at distance {distance}")));
    }
    Ok(pts)
}

fn median_pair_energy(pair: &Pair, pts: &[Point], w: f64) -> f64 {
    let mut v: Vec<f64> = Vec::new();
    for (i, p) in pts.iter().enumerate() {
        for q in &pts[i + 1..] {
            let e = (2.0 * w * w * pair.eval(dist2(p, q))).abs();
            if e > 0.0 {
                v.push(e);
            }
        }
    }
    if v.is_empty() {
        return w * w;
    }
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    v[v.len() / 2]
}

struct State<'a> {
    pair: Pair,
    g: &'a ConfinementSpec,
    w: f64,
    confined: bool,
}

impl State<'_> {
    /// Energy terms that involve particle `i` placed at `x`.
    fn local(&self, pts: &[Point], i: usize, x: &Point) -> f64 {
        let mut s = 0.0;
        for (j, q) in pts.iter().enumerate() {
            if j != i {
                s += self.pair.eval(dist2(x, q));
            }
        }
        let mut e = 2.0 * self.w * self.w * s;
        if self.confined {
            e += self.w * self.g.eval(x);
        }
        e
    }
}

/// Minimizes the chosen discrete objective over N-point hard-sphere
/// configurations. Every visited state is admissible; the best state seen is
/// returned together with one trace row per epoch.
pub fn anneal_discrete(
    objective: Objective,
    spec: &KernelSpec,
    g: Option<&ConfinementSpec>,
    n: usize,
    init: AnnealInit,
    schedule: &AnnealSchedule,
) -> Result<AnnealResult> {
    schedule.validate()?;
    if n == 0 {
        return Err(invalid("n", "at least one point is required"));
    }
    match objective {
        Objective::Confined if !spec.is_integrable() => {
            return Err(Error::RegimeMismatch("confined objective needs an integrable kernel".into()));
        }
        Objective::Renormalized if spec.is_integrable() => {
            return Err(Error::RegimeMismatch("renormalized objective needs a regularized kernel".into()));
        }
        _ => {}
    }
    let zero = ConfinementSpec::zero();
    let g = g.unwrap_or(&zero);
    let dim = spec.d();
    let du = dim.get();
    let eps = spec.epsilon();
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(schedule.seed);
    let mut pts = initial_points(init, spec, n, &mut rng)?;

    let state = State {
        pair: Pair::new(spec),
        g,
        w: spec.mass_weight(),
        confined: objective == Objective::Confined,
    };
    let init_config = Configuration::new(dim, eps, pts.clone())?;
    let initial_energy = exact_energy(objective, spec, g, &init_config)?;
    let mut current = initial_energy;
    let mut best = initial_energy;
    let mut best_pts = pts.clone();

    let mut temperature = schedule
        .initial_temperature
        .unwrap_or_else(|| median_pair_energy(&state.pair, &pts, state.w));
    let moves = schedule.moves_per_epoch.unwrap_or(50 * n);
    let step = Normal::new(0.0, schedule.move_scale * eps).map_err(|e| invalid("move_scale", e.to_string()))?;
    let mut cells = CellList::build(dim, 2.0 * eps, &pts);
    let mut trace = Vec::with_capacity(schedule.epochs);

    for epoch in 0..schedule.epochs {
        let mut accepted = 0usize;
        for _ in 0..moves {
            let i = rng.gen_range(0..n);
            let old = pts[i];
            let mut q = old;
            if rng.gen::<f64>() < schedule.teleport_fraction {
                let (lo, hi) = bounding(&pts, du, 2.0 * eps);
                for a in 0..du {
                    q[a] = lo[a] + rng.gen::<f64>() * (hi[a] - lo[a]);
                }
            } else {
                for v in q.iter_mut().take(du) {
                    *v += step.sample(&mut rng);
                }
            }
            if cells.conflicts(&pts, &q, Some(i), 2.0 * eps) {
                continue;
            }
            let delta = state.local(&pts, i, &q) - state.local(&pts, i, &old);
            let accept = delta <= 0.0 || rng.gen::<f64>() < (-delta / temperature).exp();
            if accept {
                accepted += 1;
                cells.relocate(i, &old, &q);
                pts[i] = q;
                current += delta;
                if current < best {
                    best = current;
                    best_pts.clone_from(&pts);
                }
            }
        }
        // Resynchronize the running energy to remove accumulated rounding.
        current = exact_energy(objective, spec, g, &Configuration::new(dim, eps, pts.clone())?)?;
        if current < best {
            best = current;
            best_pts.clone_from(&pts);
        }
        trace.push(AnnealTraceRow {
            epoch,
            temperature,
            best_energy: best,
            acceptance_rate: accepted as f64 / moves.max(1) as f64,
        });
        temperature *= schedule.cooling;
    }

    let best_config = Configuration::new(dim, eps, best_pts)?;
    let best_energy = exact_energy(objective, spec, g, &best_config)?;
    if best_energy > initial_energy {
        // Only possible through rounding in the running energy.
        return Ok(AnnealResult {
            best: init_config,
            best_energy: initial_energy,
            initial_energy,
            trace,
        });
    }
    Ok(AnnealResult {
        best: best_config,
        best_energy,
        initial_energy,
        trace,
    })
}

fn bounding(pts: &[Point], d: usize, pad: f64) -> ([f64; 3], [f64; 3]) {
    let mut lo = [f64::INFINITY; 3];
    let mut hi = [f64::NEG_INFINITY; 3];
    for p in pts {
        for a in 0..d {
            lo[a] = lo[a].min(p[a]);
            hi[a] = hi[a].max(p[a]);
        }
    }
    for a in 0..d {
        lo[a] -= pad;
        hi[a] += pad;
    }
    (lo, hi)
}
