//! Pair potentials in the integrable (σ < 0) and regularized (σ ∈ [0, 1))
//! regimes, renormalization constants, mesoscale schedules and confinement.

use serde::{Deserialize, Serialize};

use crate::domain::{norm, Dim, Params, Point};
use crate::error::{invalid, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "regime", rename_all = "lowercase")]
pub enum Regime {
    Integrable,
    Regularized { r_eps: f64 },
}

/// Value of a pair potential. Overlapping hard spheres are a separate
/// outcome so that sums never meet a floating infinity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Potential {
    Forbidden,
    Finite(f64),
}

impl Potential {
    pub fn finite(self) -> Option<f64> {
        match self {
            Potential::Finite(v) => Some(v),
            Potential::Forbidden => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Params", into = "Params")]
pub struct KernelSpec {
    params: Params,
}

impl TryFrom<Params> for KernelSpec {
    type Error = Error;
    fn try_from(p: Params) -> Result<Self> {
        KernelSpec::new(p)
    }
}

impl From<KernelSpec> for Params {
    fn from(k: KernelSpec) -> Params {
        k.params
    }
}

impl KernelSpec {
    pub fn new(params: Params) -> Result<Self> {
        // Re-run validation in case the struct was assembled by hand.
        let params = Params::new(params.d, params.sigma, params.epsilon, params.r_eps)?;
        Ok(KernelSpec { params })
    }

    pub fn integrable(d: Dim, sigma: f64, epsilon: f64) -> Result<Self> {
        Self::new(Params::new(d, sigma, epsilon, None)?)
    }

    pub fn regularized(d: Dim, sigma: f64, epsilon: f64, r_eps: f64) -> Result<Self> {
        Self::new(Params::new(d, sigma, epsilon, Some(r_eps))?)
    }

    /// Regularized spec with `r_eps` taken from the default schedule.
    pub fn regularized_default(d: Dim, sigma: f64, epsilon: f64) -> Result<Self> {
        let r = mesoscale_schedule(sigma)?.r_eps(epsilon);
        Self::regularized(d, sigma, epsilon, r)
    }

    pub fn params(&self) -> &Params {
        &self.params
    }

    pub fn d(&self) -> Dim {
        self.params.d
    }

    pub fn sigma(&self) -> f64 {
        self.params.sigma
    }

    pub fn epsilon(&self) -> f64 {
        self.params.epsilon
    }

    pub fn r_eps(&self) -> Option<f64> {
        self.params.r_eps
    }

    pub fn regime(&self) -> Regime {
        match self.params.r_eps {
            None => Regime::Integrable,
            Some(r_eps) => Regime::Regularized { r_eps },
        }
    }

    pub fn is_integrable(&self) -> bool {
        self.params.r_eps.is_none()
    }

    /// Kernel exponent p = d + σ.
    pub fn exponent(&self) -> f64 {
        self.params.d.as_f64() + self.params.sigma
    }

    pub fn mass_weight(&self) -> f64 {
        self.params.mass_weight()
    }

    /// Distance at which the attractive tail starts.
    pub fn tail_start(&self) -> f64 {
        let hard = 2.0 * self.params.epsilon;
        self.params.r_eps.map_or(hard, |r| r.max(hard))
    }

    /// Potential for a pair already known to be admissible (r ≥ 2ε).
    #[inline]
    pub fn admissible_pair(&self, r: f64) -> f64 {
        match self.params.r_eps {
            Some(re) if r < re => 0.0,
            _ => -r.powf(-self.exponent()),
        }
    }

    /// Same as [`admissible_pair`](Self::admissible_pair) from a squared distance.
    #[inline]
    pub fn admissible_pair_sq(&self, r2: f64) -> f64 {
        // Compare the rounded distance so the plateau edge agrees exactly with
        // `admissible_pair`.
        self.admissible_pair(r2.sqrt())
    }

    /// γ_{r_ε}^σ for the regularized regime, 0 otherwise.
    pub fn renormalization_constant(&self) -> f64 {
        match self.params.r_eps {
            None => 0.0,
            Some(r) => gamma_r_sigma(self.params.d, self.params.sigma, r.min(1.0)).unwrap_or(0.0),
        }
    }

    pub fn regime_tag(&self) -> &'static str {
        if self.is_integrable() {
            "integrable"
        } else {
            "regularized"
        }
    }
}

/// f_ε^σ(r): forbidden below 2ε, zero on the plateau [2ε, r_ε) in the
/// regularized regime, and −r^{−(d+σ)} on the tail.
pub fn potential(spec: &KernelSpec, r: f64) -> Potential {
    if r < 2.0 * spec.epsilon() {
        Potential::Forbidden
    } else {
        Potential::Finite(spec.admissible_pair(r))
    }
}

/// γ_r^σ = −∫_{B_1 ∖ B_r} |z|^{−(d+σ)} dz, i.e. dω_d(1 − r^{−σ})/σ, or
/// dω_d log r at σ = 0.
pub fn gamma_r_sigma(d: Dim, sigma: f64, r: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&sigma) {
        return Err(Error::SigmaOutOfRange(sigma));
    }
    if !(r > 0.0 && r <= 1.0) {
        return Err(invalid("r", format!("{r} is not in (0, 1]")));
    }
    let s = d.unit_sphere_area();
    let lr = r.ln();
    if sigma == 0.0 {
        Ok(s * lr)
    } else {
        // 1 − r^{−σ} = −expm1(−σ log r), accurate as σ → 0.
        Ok(-s * (-sigma * lr).exp_m1() / sigma)
    }
}

/// γ_R^0 = ∫_{B_R ∖ B_1} |z|^{−d} dz = dω_d log R.
#[allow(non_snake_case)]
pub fn gamma_R_zero(d: Dim, R: f64) -> Result<f64> {
    if !(R >= 1.0 && R.is_finite()) {
        return Err(invalid("R", format!("{R} must be at least 1")));
    }
    Ok(d.unit_sphere_area() * R.ln())
}

/// γ^σ = ∫_{ℝ^d ∖ B_1} |z|^{−(d+σ)} dz = dω_d/σ for σ ∈ (0, 1).
pub fn gamma_sigma(d: Dim, sigma: f64) -> Result<f64> {
    if !(sigma > 0.0 && sigma < 1.0) {
        return Err(Error::SigmaOutOfRange(sigma));
    }
    Ok(d.unit_sphere_area() / sigma)
}

/// Power-law mesoscale schedule r_ε = ε^exponent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MesoscaleSchedule {
    pub exponent: f64,
}

impl MesoscaleSchedule {
    /// Custom exponent; it must lie in (0, 1/(2σ+1)) so that
    /// ε^{1/(2σ+1)}/r_ε → 0, and in (0, 1) at σ = 0.
    pub fn with_exponent(sigma: f64, exponent: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&sigma) {
            return Err(Error::SigmaOutOfRange(sigma));
        }
        let upper = 1.0 / (2.0 * sigma + 1.0);
        if !(exponent > 0.0 && exponent < upper) {
            return Err(invalid("exponent", format!("{exponent} is not in (0, {upper})")));
        }
        Ok(MesoscaleSchedule { exponent })
    }

    pub fn r_eps(&self, epsilon: f64) -> f64 {
        epsilon.powf(self.exponent)
    }
}

/// Default schedule: exponent 1/(2(2σ+1)) for σ > 0 and 1/2 for σ = 0, half of
/// the critical exponent in both cases.
pub fn mesoscale_schedule(sigma: f64) -> Result<MesoscaleSchedule> {
    if !(0.0..1.0).contains(&sigma) {
        return Err(Error::SigmaOutOfRange(sigma));
    }
    let exponent = if sigma == 0.0 { 0.5 } else { 0.5 / (2.0 * sigma + 1.0) };
    Ok(MesoscaleSchedule { exponent })
}

/// Radial confinement g(x) = c1 + c2·|x|^exponent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConfinementSpec {
    pub c1: f64,
    pub c2: f64,
    pub exponent: f64,
}

impl ConfinementSpec {
    pub fn new(c1: f64, c2: f64, exponent: f64) -> Result<Self> {
        if !(c1.is_finite() && c2.is_finite() && c2 >= 0.0) {
            return Err(invalid("c2", format!("{c2} must be nonnegative")));
        }
        if !(exponent.is_finite() && exponent > 0.0) {
            return Err(invalid("exponent", format!("{exponent} must be positive")));
        }
        Ok(ConfinementSpec { c1, c2, exponent })
    }

    /// The profile paired with the kernel: G(t) = c1 + c2·t^{−σ}, σ < 0.
    pub fn for_sigma(c1: f64, c2: f64, sigma: f64) -> Result<Self> {
        if sigma >= 0.0 {
            return Err(Error::SigmaOutOfRange(sigma));
        }
        Self::new(c1, c2, -sigma)
    }

    pub fn zero() -> Self {
        ConfinementSpec {
            c1: 0.0,
            c2: 0.0,
            exponent: 1.0,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.c1 == 0.0 && self.c2 == 0.0
    }

    #[inline]
    pub fn radial(&self, t: f64) -> f64 {
        if self.c2 == 0.0 {
            self.c1
        } else {
            self.c1 + self.c2 * t.powf(self.exponent)
        }
    }

    #[inline]
    pub fn eval(&self, x: &Point) -> f64 {
        self.radial(norm(x))
    }

    /// Multiplies the profile by λ.
    pub fn scaled(&self, lambda: f64) -> Self {
        ConfinementSpec {
            c1: self.c1 * lambda,
            c2: self.c2 * lambda,
            exponent: self.exponent,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{E, PI};

    #[test]
    fn potential_examples() {
        let k = KernelSpec::integrable(Dim::TWO, -1.0, 0.1).unwrap();
        assert_eq!(potential(&k, 2.0), Potential::Finite(-0.5));
        assert_eq!(potential(&k, 0.19), Potential::Forbidden);
        let k = KernelSpec::regularized(Dim::TWO, 0.5, 0.001, 0.1).unwrap();
        assert_eq!(potential(&k, 0.05), Potential::Finite(0.0));
        let v = potential(&k, 0.5).finite().unwrap();
        assert!((v + 2f64.powf(2.5)).abs() < 1e-12);
    }

    #[test]
    fn gamma_examples() {
        assert_eq!(gamma_r_sigma(Dim::THREE, 0.3, 1.0).unwrap(), 0.0);
        assert!((gamma_r_sigma(Dim::TWO, 0.0, (-1f64).exp()).unwrap() + 2.0 * PI).abs() < 1e-14);
        assert!((gamma_r_sigma(Dim::ONE, 0.5, 0.25).unwrap() + 4.0).abs() < 1e-14);
        assert_eq!(gamma_R_zero(Dim::ONE, 1.0).unwrap(), 0.0);
        assert!((gamma_R_zero(Dim::TWO, E).unwrap() - 2.0 * PI).abs() < 1e-14);
        assert!((gamma_R_zero(Dim::THREE, E * E).unwrap() - 8.0 * PI).abs() < 1e-13);
        assert!(gamma_r_sigma(Dim::TWO, 1.0, 0.5).is_err());
        assert!(gamma_r_sigma(Dim::TWO, 0.5, 0.0).is_err());
    }

    #[test]
    fn gamma_is_continuous_at_zero() {
        for d in [Dim::ONE, Dim::TWO, Dim::THREE] {
            for r in [0.5, 0.1, 0.01] {
                let a = gamma_r_sigma(d, 1e-6, r).unwrap();
                let b = gamma_r_sigma(d, 0.0, r).unwrap();
                assert!(((a - b) / b).abs() < 1e-3);
            }
        }
    }

    #[test]
    fn schedules() {
        let s = mesoscale_schedule(0.5).unwrap();
        assert!((s.r_eps(1e-4) - 0.1).abs() < 1e-14);
        let s0 = mesoscale_schedule(0.0).unwrap();
        let eps = 1e-4;
        let r = s0.r_eps(eps);
        assert!((r - 0.01).abs() < 1e-15);
        let q = eps * r.ln().powi(2) / r;
        assert!((q - 0.2121).abs() < 1e-3);
        assert!(MesoscaleSchedule::with_exponent(0.5, 0.6).is_err());
    }

    #[test]
    fn confinement_profile() {
        let g = ConfinementSpec::for_sigma(-2.0, 12.0, -1.0).unwrap();
        assert_eq!(g.eval(&[0.0; 3]), -2.0);
        assert!((g.eval(&[0.3, 0.4, 0.0]) - 4.0).abs() < 1e-14);
        assert!(ConfinementSpec::for_sigma(0.0, 1.0, 0.5).is_err());
        assert!(ConfinementSpec::zero().is_zero());
    }
}
