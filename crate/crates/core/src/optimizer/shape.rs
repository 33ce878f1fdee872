use serde::{Deserialize, Serialize};

use crate::bridge::smoothed_measure;
use crate::domain::{dist2, Configuration, DensityField, Point, ScaledEmpiricalMeasure};
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::summation::Neumaier;

/// Threshold defining the support S = {ρ > 1/2}.
const SUPPORT_LEVEL: f64 = 0.5;
/// Cells with value in (BAND, 1 − BAND) count as intermediate.
const BAND: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShapeDiagnostics {
    /// |S Δ B| / |S| for the ball B of equal measure centred at the barycentre of S.
    pub ball_deficit: f64,
    /// Fraction of mass carried by cells with value strictly between 0 and 1
    /// (up to a 5% band).
    pub bang_bang_index: f64,
    pub support_measure: f64,
    pub barycenter: Point,
    pub radius: f64,
}

impl ShapeDiagnostics {
    pub const CSV_HEADER: [&'static str; 4] = ["ball_deficit", "bang_bang_index", "support_measure", "radius"];

    pub fn csv_row(&self) -> [String; 4] {
        [
            format!("{:?}", self.ball_deficit),
            format!("{:?}", self.bang_bang_index),
            format!("{:?}", self.support_measure),
            format!("{:?}", self.radius),
        ]
    }
}

pub enum Subject<'a> {
    Configuration(&'a Configuration),
    Density(&'a DensityField),
}

pub fn shape_diagnostics(subject: Subject<'_>) -> Result<ShapeDiagnostics> {
    match subject {
        Subject::Configuration(c) => shape_of_configuration(c),
        Subject::Density(f) => shape_of_density(f),
    }
}

pub fn shape_of_density(field: &DensityField) -> Result<ShapeDiagnostics> {
    let dim = field.dim();
    let d = dim.get();
    let support = field.superlevel_set(SUPPORT_LEVEL);
    if support.is_empty() {
        return Err(Error::EmptySubject);
    }
    let vol = support.cell_volume();
    let measure = support.len() as f64 * vol;

    let mut bary = [0.0; 3];
    for a in 0..d {
        let mut s = Neumaier::new();
        for c in support.cells() {
            s.add(support.center(c)[a]);
        }
        bary[a] = s.value() / support.len() as f64;
    }
    let radius = (measure / dim.unit_ball_volume()).powf(1.0 / d as f64);
    let r2 = radius * radius;

    // |S \ B| counted directly; |B \ S| = |B| − |S ∩ B| with |B| taken as the
    // pixel count of the ball so both sides see the same discretization.
    let h = support.resolution();
    let reach = (radius / h).ceil() as i64 + 1;
    let mut base = [0i64; 3];
    for a in 0..d {
        base[a] = (bary[a] / h).floor() as i64;
    }
    let span = |a: usize| if a < d { -reach..=reach } else { 0..=0 };
    let mut ball_cells = 0usize;
    let mut inside_both = 0usize;
    for i in span(0) {
        for j in span(1) {
            for k in span(2) {
                let c = [base[0] + i, base[1] + j, base[2] + k];
                if dist2(&support.center(&c), &bary) <= r2 {
                    ball_cells += 1;
                    if support.contains_cell(&c) {
                        inside_both += 1;
                    }
                }
            }
        }
    }
    let sym_diff = (support.len() - inside_both) + (ball_cells - inside_both);

    let mut total = Neumaier::new();
    let mut middle = Neumaier::new();
    for (_, v) in field.iter() {
        total.add(v);
        if v > BAND && v < 1.0 - BAND {
            middle.add(v);
        }
    }
    let bang_bang_index = if total.value() > 0.0 { middle.value() / total.value() } else { 0.0 };

    Ok(ShapeDiagnostics {
        ball_deficit: sym_diff as f64 / support.len() as f64,
        bang_bang_index,
        support_measure: measure,
        barycenter: bary,
        radius,
    })
}

/// Runs [`shape_of_density`] on the smoothed measure after averaging it over
/// boxes of side about 2ε, which fills the gaps between neighbouring balls.
pub fn shape_of_configuration(config: &Configuration) -> Result<ShapeDiagnostics> {
    if config.is_empty() {
        return Err(Error::EmptySubject);
    }
    let field = smoothed_measure(&ScaledEmpiricalMeasure::new(config.clone()))?;
    let filtered = box_filter(&field, (config.epsilon() / field.resolution()).round() as usize)?;
    shape_of_density(&filtered)
}

/// Separable moving average of half-width `w` cells.
fn box_filter(field: &DensityField, w: usize) -> Result<DensityField> {
    let dim = field.dim();
    let d = dim.get();
    let base = Grid::from_field(field);
    let mut origin = base.origin;
    let mut shape = base.shape;
    for a in 0..d {
        origin[a] -= w as i64;
        shape[a] += 2 * w;
    }
    let mut g = base.embedded(origin, shape);
    let width = (2 * w + 1) as f64;
    for a in 0..d {
        let stride: usize = g.shape[a + 1..].iter().product();
        let len = g.shape[a];
        let mut out = vec![0.0; g.len()];
        for start in 0..g.len() {
            if (start / stride) % len != 0 {
                continue;
            }
            // running sum along axis a starting at a line origin
            let line: Vec<f64> = (0..len).map(|t| g.data[start + t * stride]).collect();
            let mut prefix = vec![0.0; len + 1];
            for t in 0..len {
                prefix[t + 1] = prefix[t] + line[t];
            }
            for t in 0..len {
                let lo = t.saturating_sub(w);
                let hi = (t + w + 1).min(len);
                out[start + t * stride] = (prefix[hi] - prefix[lo]) / width;
            }
        }
        g.data = out;
    }
    let entries = g.nonzero().into_iter().filter(|(_, v)| *v > 1e-14).collect();
    DensityField::with_cap(dim, field.resolution(), field.cap(), entries)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{Ball, Dim, PixelSet};

    #[test]
    fn pixel_ball_has_small_deficit() {
        let set = PixelSet::from_region(&Ball::centered(Dim::TWO, 1.0), 1.0 / 64.0).unwrap();
        let f = DensityField::from_pixel_set(&set, 1.0).unwrap();
        let s = shape_of_density(&f).unwrap();
        assert!(s.ball_deficit < 0.01, "{}", s.ball_deficit);
        assert_eq!(s.bang_bang_index, 0.0);
        assert!(s.barycenter[0].abs() < 1e-12 && s.barycenter[1].abs() < 1e-12);
    }

    #[test]
    fn square_deficit_is_large() {
        let set = PixelSet::from_predicate(Dim::TWO, 1.0 / 64.0, [-1.0; 3], [1.0; 3], |p| {
            p[0].abs() < 1.0 && p[1].abs() < 1.0
        })
        .unwrap();
        let f = DensityField::from_pixel_set(&set, 1.0).unwrap();
        let s = shape_of_density(&f).unwrap();
        assert!((s.ball_deficit - 0.1813).abs() < 0.01, "{}", s.ball_deficit);
    }

    #[test]
    fn empty_subject_is_an_error() {
        let f = DensityField::new(Dim::TWO, 0.1, vec![]).unwrap();
        assert!(matches!(shape_of_density(&f), Err(Error::EmptySubject)));
    }

    #[test]
    fn box_filter_preserves_mass() {
        let f = DensityField::new(Dim::TWO, 0.5, vec![([0, 0, 0], 1.0), ([3, 1, 0], 0.5)]).unwrap();
        let g = box_filter(&f, 2).unwrap();
        assert!((g.mass() - f.mass()).abs() < 1e-12);
    }
}
