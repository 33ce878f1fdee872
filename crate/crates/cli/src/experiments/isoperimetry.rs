use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use rieszlab::continuum_energy::{default_p0_radii, fractional_perimeter, p0_perimeter, riesz_energy};
use rieszlab::quadrature::Estimate;
use rieszlab::{DensityField, Dim, Error, PixelSet, Point, Region};

use crate::artifacts::{num, Check, Outcome, Table};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Params {
    pub h: f64,
    pub measure: f64,
    pub riesz_sigma: f64,
    pub perimeter_sigmas: Vec<f64>,
    pub include_p0: bool,
    /// Inner/outer radius ratio of the annulus.
    pub annulus_ratio: f64,
}

impl Default for Params {
    fn default() -> Self {
        Params {
            h: 1.0 / 128.0,
            measure: 1.0,
            riesz_sigma: -1.0,
            perimeter_sigmas: vec![0.25, 0.5, 0.75],
            include_p0: true,
            annulus_ratio: 0.5,
        }
    }
}

pub const SHAPES: [&str; 5] = ["ball", "square", "rectangle", "l_shape", "annulus"];

/// Planar test shapes of the given area, centred at the origin.
pub fn shape(name: &str, measure: f64, annulus_ratio: f64, h: f64) -> rieszlab::Result<PixelSet> {
    let d = Dim::TWO;
    let ext = 2.0 * measure.sqrt() + 2.0 * h;
    let (lo, hi) = ([-ext; 3], [ext; 3]);
    let r2 = |p: &Point| p[0] * p[0] + p[1] * p[1];
    match name {
        "ball" => {
            let r = (measure / PI).sqrt();
            PixelSet::from_predicate(d, h, lo, hi, |p| r2(p) < r * r)
        }
        "square" => {
            let a = measure.sqrt() / 2.0;
            PixelSet::from_predicate(d, h, lo, hi, |p| p[0].abs() < a && p[1].abs() < a)
        }
        "rectangle" => {
            let a = (2.0 * measure).sqrt() / 2.0;
            PixelSet::from_predicate(d, h, lo, hi, |p| p[0].abs() < a && p[1].abs() < a / 2.0)
        }
        "l_shape" => {
            let a = (measure / 3.0).sqrt();
            PixelSet::from_predicate(d, h, lo, hi, |p| {
                p[0].abs() < a && p[1].abs() < a && !(p[0] > 0.0 && p[1] > 0.0)
            })
        }
        "annulus" => {
            let k = annulus_ratio;
            let outer = (measure / (PI * (1.0 - k * k))).sqrt();
            let inner = k * outer;
            PixelSet::from_predicate(d, h, lo, hi, |p| {
                let q = r2(p);
                q < outer * outer && q >= inner * inner
            })
        }
        _ => Err(Error::InvalidParameter {
            name: "shape",
            reason: format!("unknown shape {name}"),
        }),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Functional {
    Riesz(f64),
    Perimeter(f64),
    P0,
}

impl Functional {
    fn label(&self) -> String {
        match self {
            Functional::Riesz(s) => format!("riesz_energy(sigma={s})"),
            Functional::Perimeter(s) => format!("perimeter(sigma={s})"),
            Functional::P0 => "perimeter_zero".to_string(),
        }
    }

    fn eval(&self, set: &PixelSet) -> rieszlab::Result<Estimate> {
        let d = set.dim();
        match *self {
            Functional::Riesz(s) => riesz_energy(d, s, &DensityField::from_pixel_set(set, 1.0)?),
            Functional::Perimeter(s) => fractional_perimeter(d, s, set),
            Functional::P0 => p0_perimeter(d, set, &default_p0_radii(set)),
        }
    }

    /// Value the functional would take on the set dilated to measure
    /// `target`, using its exact homogeneity.
    fn rescaled(&self, e: Estimate, measure: f64, target: f64) -> Estimate {
        let d = 2.0;
        let t = target / measure;
        match *self {
            Functional::Riesz(s) | Functional::Perimeter(s) => {
                let f = t.powf((d - s) / d);
                Estimate {
                    value: f * e.value,
                    error: f * e.error,
                }
            }
            Functional::P0 => {
                // P^0(λE) = λ^d (P^0(E) − dω_d |E| log λ)
                let log_lambda = t.ln() / d;
                let value = t * (e.value - Dim::TWO.unit_sphere_area() * measure * log_lambda);
                Estimate { value, error: t * e.error }
            }
        }
    }
}

/// Every functional should rank the ball strictly below each other shape
/// of the same measure, by more than the quadrature error estimates.
pub fn run(p: &Params, _seed: u64) -> rieszlab::Result<Outcome> {
    let mut functionals = vec![Functional::Riesz(p.riesz_sigma)];
    functionals.extend(p.perimeter_sigmas.iter().map(|&s| Functional::Perimeter(s)));
    if p.include_p0 {
        functionals.push(Functional::P0);
    }
    let sets = SHAPES
        .par_iter()
        .map(|name| shape(name, p.measure, p.annulus_ratio, p.h))
        .collect::<rieszlab::Result<Vec<_>>>()?;
    let tasks: Vec<(usize, Functional)> = (0..sets.len())
        .flat_map(|i| functionals.iter().map(move |&f| (i, f)))
        .collect();
    let values = tasks
        .par_iter()
        .map(|&(i, f)| f.eval(&sets[i]))
        .collect::<rieszlab::Result<Vec<_>>>()?;

    let ball_measure = sets[0].measure();
    let normalized: Vec<Estimate> = tasks
        .iter()
        .zip(&values)
        .map(|(&(i, f), &e)| f.rescaled(e, sets[i].measure(), ball_measure))
        .collect();

    let mut table = Table::new(&[
        "shape",
        "functional",
        "cells",
        "value",
        "error",
        "normalized",
        "margin_over_ball",
    ]);
    let nf = functionals.len();
    let mut out = Outcome::default();
    let mut worst_margin = f64::INFINITY;
    for (k, &(i, f)) in tasks.iter().enumerate() {
        let ball = normalized[k % nf];
        let here = normalized[k];
        let margin = here.value - ball.value;
        table.push(vec![
            SHAPES[i].to_string(),
            f.label(),
            sets[i].len().to_string(),
            num(values[k].value),
            num(values[k].error),
            num(here.value),
            num(margin),
        ]);
        if i > 0 {
            let allowed = here.error + ball.error;
            worst_margin = worst_margin.min(margin - allowed);
            out.checks.push(Check::new(
                format!("ball_below_{}_{}", SHAPES[i], f.label()),
                margin > allowed,
                format!("margin {margin} against error estimate {allowed}"),
            ));
        }
    }
    out.table = table;
    out.metrics.insert("smallest_margin_beyond_error".into(), worst_margin);
    Ok(out)
}
