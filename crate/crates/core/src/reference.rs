//! Continuum functionals of balls, reduced to one-dimensional integrals
//! through the covariogram g(t) = |B_R ∩ (B_R + t e_1)|.
//!
//! For a radial kernel k, ∫_B∫_B k(x − y) = dω_d ∫_0^{2R} k(t) g(t) t^{d−1} dt,
//! which gives references independent of any grid.

use crate::domain::Dim;
use crate::error::{Error, Result};
use crate::quadrature::{integrate, Estimate};

/// Covariogram of the ball of radius `r` at distance `t`.
pub fn covariogram(d: Dim, r: f64, t: f64) -> f64 {
    if t >= 2.0 * r {
        return 0.0;
    }
    let t = t.max(0.0);
    match d.get() {
        1 => 2.0 * r - t,
        2 => 2.0 * r * r * (t / (2.0 * r)).acos() - 0.5 * t * (4.0 * r * r - t * t).sqrt(),
        _ => std::f64::consts::PI * (4.0 * r + t) * (2.0 * r - t).powi(2) / 12.0,
    }
}

fn ball_volume(d: Dim, r: f64) -> f64 {
    d.unit_ball_volume() * r.powi(d.get() as i32)
}

/// 𝓕^σ(χ_{B_R}) = −∬ |x−y|^{−(d+σ)} for σ ∈ (−d, 0).
pub fn riesz_energy_ball(d: Dim, sigma: f64, radius: f64) -> Result<Estimate> {
    if !(sigma < 0.0 && sigma > -d.as_f64()) {
        return Err(Error::NonIntegrableSigma(sigma));
    }
    let s = d.unit_sphere_area();
    let e = integrate(|t| covariogram(d, radius, t) * t.powf(-1.0 - sigma), 0.0, 2.0 * radius, &[]);
    Ok(Estimate {
        value: -s * e.value,
        error: s * e.error,
    })
}

/// J_r^σ(B_R) = −∫∫_{|x−y| ≥ r} |x−y|^{−(d+σ)}.
pub fn j_truncated_ball(d: Dim, sigma: f64, r: f64, radius: f64) -> Estimate {
    let s = d.unit_sphere_area();
    let e = integrate(|t| covariogram(d, radius, t) * t.powf(-1.0 - sigma), r, 2.0 * radius, &[]);
    Estimate {
        value: -s * e.value,
        error: s * e.error,
    }
}

/// P^σ(B_R) = ∫_B ∫_{B^c} |x−y|^{−(d+σ)} for σ ∈ (0, 1).
pub fn fractional_perimeter_ball(d: Dim, sigma: f64, radius: f64) -> Result<Estimate> {
    if !(sigma > 0.0 && sigma < 1.0) {
        return Err(Error::SigmaOutOfRange(sigma));
    }
    let vol = ball_volume(d, radius);
    let s = d.unit_sphere_area();
    let e = integrate(|t| (vol - covariogram(d, radius, t)) * t.powf(-1.0 - sigma), 0.0, 2.0 * radius, &[]);
    let tail = vol * (2.0 * radius).powf(-sigma) / sigma;
    Ok(Estimate {
        value: s * (e.value + tail),
        error: s * e.error,
    })
}

/// P^0(B_R) = lim_R' ∫_B ∫_{B_{R'}(x) ∖ B} |x−y|^{−d} − γ_{R'}^0 |B|.
pub fn p0_perimeter_ball(d: Dim, radius: f64) -> Estimate {
    let vol = ball_volume(d, radius);
    let s = d.unit_sphere_area();
    let near = integrate(|t| (vol - covariogram(d, radius, t)) / t, 0.0, 1.0, &[2.0 * radius]);
    let far = integrate(|t| covariogram(d, radius, t) / t, 1.0, (2.0 * radius).max(1.0), &[]);
    Estimate {
        value: s * (near.value - far.value),
        error: s * (near.error + far.error),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn covariogram_endpoints() {
        for d in [Dim::ONE, Dim::TWO, Dim::THREE] {
            let r = 0.7;
            assert!((covariogram(d, r, 0.0) - ball_volume(d, r)).abs() < 1e-14);
            assert_eq!(covariogram(d, r, 1.4), 0.0);
        }
    }

    #[test]
    fn one_dimensional_riesz_of_interval() {
        // −∫_0^1∫_0^1 |x−y|^{−1/2} = −8/3 for the interval of length 1.
        let e = riesz_energy_ball(Dim::ONE, -0.5, 0.5).unwrap();
        assert!((e.value + 8.0 / 3.0).abs() < 1e-9);
        let j = j_truncated_ball(Dim::ONE, 0.0, 0.5, 0.5);
        assert!((j.value + 2.0 * (2f64.ln() - 0.5)).abs() < 1e-10);
    }

    #[test]
    fn perimeter_scaling() {
        let a = fractional_perimeter_ball(Dim::TWO, 0.5, 1.0).unwrap().value;
        let b = fractional_perimeter_ball(Dim::TWO, 0.5, 2.0).unwrap().value;
        assert!((b / a - 2f64.powf(1.5)).abs() < 1e-8);
    }

    #[test]
    fn interval_perimeter_closed_form() {
        // d=1, E=[0,L]: P^σ = 2∫_0^L∫_0^∞ (x+u)^{−1−σ} = 2 L^{1−σ}/(σ(1−σ)).
        let sigma = 0.3;
        let e = fractional_perimeter_ball(Dim::ONE, sigma, 0.5).unwrap().value;
        let exact = 2.0 / (sigma * (1.0 - sigma));
        assert!((e - exact).abs() < 1e-9 * exact);
    }
}
