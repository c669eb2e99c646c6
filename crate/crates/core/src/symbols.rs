//! Scalar Fourier symbols of the DMKP model family and its presets.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which dissipative multiplier the linear part carries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DissipationKind {
    /// `alpha (xi^4 - xi^2)`: Kuramoto-Sivashinsky type, unstable for `|xi| < 1`.
    Dmkp,
    /// `alpha xi^2`: Burgers viscosity.
    Burgers,
    None,
}

/// Named members of the model family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preset {
    Dmkp,
    Kpb,
    Kp,
    KdvKs,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub alpha: f64,
    pub beta: f64,
    /// Transverse dispersion sign, `+1` or `-1`.
    pub epsilon: f64,
    pub dissipation: DissipationKind,
}

impl Default for ModelParams {
    fn default() -> Self {
        Self::dmkp(1.0, 1.0, 1.0)
    }
}

impl ModelParams {
    pub fn new(alpha: f64, beta: f64, epsilon: f64, dissipation: DissipationKind) -> Result<Self> {
        let p = Self {
            alpha,
            beta,
            epsilon,
            dissipation,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.epsilon != 1.0 && self.epsilon != -1.0 {
            return Err(Error::InvalidArgument(format!(
                "epsilon must be +1 or -1, got {}",
                self.epsilon
            )));
        }
        if !self.alpha.is_finite() || !self.beta.is_finite() {
            return Err(Error::InvalidArgument("alpha and beta must be finite".into()));
        }
        if self.dissipation != DissipationKind::None && self.alpha <= 0.0 {
            return Err(Error::InvalidArgument(format!(
                "alpha must be positive with dissipation, got {}",
                self.alpha
            )));
        }
        Ok(())
    }

    pub fn dmkp(alpha: f64, beta: f64, epsilon: f64) -> Self {
        Self {
            alpha,
            beta,
            epsilon,
            dissipation: DissipationKind::Dmkp,
        }
    }

    /// KP-Burgers: `(1, 0, eps, burgers)`.
    pub fn kpb(epsilon: f64) -> Self {
        Self {
            alpha: 1.0,
            beta: 0.0,
            epsilon,
            dissipation: DissipationKind::Burgers,
        }
    }

    /// Plain KP, no dissipation.
    pub fn kp(epsilon: f64) -> Self {
        Self {
            alpha: 0.0,
            beta: 0.0,
            epsilon,
            dissipation: DissipationKind::None,
        }
    }

    /// KdV-Kuramoto-Sivashinsky; meant for `ny = 1` grids where `eta == 0`.
    pub fn kdv_ks(alpha: f64) -> Self {
        Self {
            alpha,
            beta: 0.0,
            epsilon: 1.0,
            dissipation: DissipationKind::Dmkp,
        }
    }

    pub fn preset(preset: Preset) -> Self {
        match preset {
            Preset::Dmkp => Self::dmkp(1.0, 1.0, 1.0),
            Preset::Kpb => Self::kpb(1.0),
            Preset::Kp => Self::kp(1.0),
            Preset::KdvKs => Self::kdv_ks(1.0),
        }
    }
}

/// `P(xi, eta) = xi^3 - eps eta^2 / xi`, with `P(0, eta) = 0`.
#[inline]
pub fn dispersion(xi: f64, eta: f64, params: &ModelParams) -> f64 {
    if xi == 0.0 {
        0.0
    } else {
        xi * xi * xi - params.epsilon * eta * eta / xi
    }
}

/// Dissipation rate including the `alpha` prefactor.
#[inline]
pub fn dissipation(xi: f64, params: &ModelParams) -> f64 {
    let x2 = xi * xi;
    match params.dissipation {
        DissipationKind::Dmkp => params.alpha * (x2 * x2 - x2),
        DissipationKind::Burgers => params.alpha * x2,
        DissipationKind::None => 0.0,
    }
}

/// Symbol of `Lambda = d_x / 2 + beta d_x^2`: `i xi / 2 - beta xi^2`.
#[inline]
pub fn lambda_symbol(xi: f64, params: &ModelParams) -> Complex64 {
    Complex64::new(-params.beta * xi * xi, 0.5 * xi)
}

/// Modulus majorant `q(xi) = |xi| + xi^2` of the nonlinearity symbol.
#[inline]
pub fn lambda_bound(xi: f64) -> f64 {
    xi.abs() + xi * xi
}

/// Resonance function `P(zeta1) + P(zeta2) - P(zeta)` with `zeta2 = zeta - zeta1`,
/// evaluated in closed form.
pub fn resonance(zeta: (f64, f64), zeta1: (f64, f64), params: &ModelParams) -> Result<f64> {
    let (xi, eta) = zeta;
    let (xi1, eta1) = zeta1;
    let xi2 = xi - xi1;
    if xi == 0.0 || xi1 == 0.0 || xi2 == 0.0 {
        return Err(Error::DegenerateFrequency(format!(
            "resonance needs xi, xi1, xi2 != 0, got ({xi}, {xi1}, {xi2})"
        )));
    }
    Ok(resonance_unchecked(xi, eta, xi1, eta1, params.epsilon))
}

#[inline]
pub(crate) fn resonance_unchecked(xi: f64, eta: f64, xi1: f64, eta1: f64, epsilon: f64) -> f64 {
    let xi2 = xi - xi1;
    let prod = xi * xi1 * xi2;
    let cross = eta * xi1 - eta1 * xi;
    -3.0 * prod - epsilon * cross * cross / prod
}

/// Dissipation gap `rho(xi1) + rho(xi2) - rho(xi)` with `xi2 = xi - xi1`.
pub fn dissipation_gap(xi: f64, xi1: f64, params: &ModelParams) -> f64 {
    let xi2 = xi - xi1;
    match params.dissipation {
        DissipationKind::Dmkp => {
            params.alpha * (-2.0 * xi1 * xi2 * (xi1 * xi1 - xi * xi1 + 2.0 * xi * xi - 1.0))
        }
        _ => dissipation(xi1, params) + dissipation(xi2, params) - dissipation(xi, params),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn unit() -> ModelParams {
        ModelParams::dmkp(1.0, 1.0, 1.0)
    }

    #[test]
    fn dispersion_values() {
        let p = unit();
        assert_eq!(dispersion(1.0, 0.0, &p), 1.0);
        assert_eq!(dispersion(1.0, 0.0, &ModelParams::dmkp(1.0, 1.0, -1.0)), 1.0);
        assert_eq!(dispersion(1.0, 1.0, &p), 0.0);
        assert_eq!(dispersion(1.0, 1.0, &ModelParams::dmkp(1.0, 1.0, -1.0)), 2.0);
        assert_eq!(dispersion(0.0, 5.0, &p), 0.0);
    }

    #[test]
    fn dissipation_values() {
        let p = unit();
        assert_eq!(dissipation(1.0, &p), 0.0);
        assert!((dissipation(2f64.sqrt(), &p) - 2.0).abs() < 1e-14);
        assert!((dissipation(0.5f64.sqrt(), &p) + 0.25).abs() < 1e-15);
        assert_eq!(dissipation(3.0, &ModelParams::kpb(1.0)), 9.0);
        assert_eq!(dissipation(3.0, &ModelParams::kp(1.0)), 0.0);
        // -1/4 <= rho <= 2 on |xi| <= sqrt 2, rho >= 2 beyond
        for i in 0..=2000 {
            let xi = -3.0 + 6.0 * i as f64 / 2000.0;
            let r = dissipation(xi, &p);
            assert!(r >= -0.25 - 1e-15);
            if xi.abs() <= 2f64.sqrt() {
                assert!(r <= 2.0 + 1e-12);
            } else {
                assert!(r >= 2.0 - 1e-12);
            }
        }
    }

    #[test]
    fn lambda_values() {
        assert_eq!(lambda_symbol(0.0, &unit()), Complex64::new(0.0, 0.0));
        assert_eq!(lambda_symbol(1.0, &unit()), Complex64::new(-1.0, 0.5));
    }

    #[test]
    fn resonance_plug_in_and_degenerate() {
        let p = unit();
        // -(3 * 3 * 1 * 2)
        assert_eq!(resonance((3.0, 0.0), (1.0, 0.0), &p).unwrap(), -18.0);
        assert!(resonance((0.0, 1.0), (1.0, 0.0), &p).is_err());
        assert!(resonance((1.0, 1.0), (0.0, 0.0), &p).is_err());
        assert!(resonance((1.0, 1.0), (1.0, 0.0), &p).is_err());
    }

    #[test]
    fn gap_zeros() {
        let p = unit();
        assert_eq!(dissipation_gap(2.5, 0.0, &p), 0.0);
        assert_eq!(dissipation_gap(2.5, 2.5, &p), 0.0);
    }

    #[test]
    fn presets() {
        assert_eq!(ModelParams::preset(Preset::Kpb).dissipation, DissipationKind::Burgers);
        assert_eq!(ModelParams::preset(Preset::Kp).dissipation, DissipationKind::None);
        assert!(ModelParams::preset(Preset::Kp).validate().is_ok());
        assert!(ModelParams::new(0.0, 1.0, 1.0, DissipationKind::Dmkp).is_err());
        assert!(ModelParams::new(1.0, 1.0, 0.5, DissipationKind::Dmkp).is_err());
    }

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / a.abs().max(b.abs()).max(1e-300)
    }

    proptest! {
        #[test]
        fn resonance_matches_dispersion_difference(
            xi in -50.0..50.0f64, eta in -500.0..500.0f64,
            xi1 in -50.0..50.0f64, eta1 in -500.0..500.0f64,
            eps in prop::sample::select(vec![-1.0, 1.0]),
        ) {
            let xi2 = xi - xi1;
            prop_assume!(xi.abs() > 1e-3 && xi1.abs() > 1e-3 && xi2.abs() > 1e-3);
            let p = ModelParams::dmkp(1.0, 1.0, eps);
            let direct = dispersion(xi1, eta1, &p) + dispersion(xi2, eta - eta1, &p) - dispersion(xi, eta, &p);
            let closed = resonance((xi, eta), (xi1, eta1), &p).unwrap();
            // cancellation in the direct route limits agreement to its own conditioning
            let scale = dispersion(xi1, eta1, &p).abs() + dispersion(xi2, eta - eta1, &p).abs() + dispersion(xi, eta, &p).abs();
            prop_assert!((direct - closed).abs() <= 1e-9 * scale.max(closed.abs()));
        }

        #[test]
        fn resonance_symmetric_under_swap(xi in 0.1..20.0f64, eta in -100.0..100.0f64, xi1 in 0.1..20.0f64, eta1 in -100.0..100.0f64) {
            let xi_tot = xi + xi1;
            let p = unit();
            let a = resonance((xi_tot, eta), (xi1, eta1), &p).unwrap();
            let b = resonance((xi_tot, eta), (xi_tot - xi1, eta - eta1), &p).unwrap();
            prop_assert!(rel(a, b) < 1e-12);
        }

        #[test]
        fn gap_matches_dissipation_difference(
            xi in -50.0..50.0f64, xi1 in -50.0..50.0f64, alpha in 0.1..3.0f64,
        ) {
            let p = ModelParams::dmkp(alpha, 1.0, 1.0);
            let direct = dissipation(xi1, &p) + dissipation(xi - xi1, &p) - dissipation(xi, &p);
            let closed = dissipation_gap(xi, xi1, &p);
            let scale = dissipation(xi1, &p).abs() + dissipation(xi - xi1, &p).abs() + dissipation(xi, &p).abs();
            prop_assert!((direct - closed).abs() <= 1e-9 * scale.max(closed.abs()).max(1e-300));
        }

        #[test]
        fn lambda_bounded_by_q(xi in -1e3..1e3f64, beta in prop::sample::select(vec![0.0, 1.0])) {
            let p = ModelParams::dmkp(1.0, beta, 1.0);
            let m = lambda_symbol(xi, &p).norm();
            prop_assert!(m <= lambda_bound(xi) * (1.0 + 1e-15));
            if beta == 1.0 && xi.abs() >= 1.0 {
                prop_assert!(m >= lambda_bound(xi) / 2.0);
            }
        }

        #[test]
        fn dmkp_dissipation_bounded_below(xi in -1e3..1e3f64, alpha in 0.01..10.0f64) {
            let p = ModelParams::dmkp(alpha, 1.0, 1.0);
            prop_assert!(dissipation(xi, &p) >= -alpha / 4.0 * (1.0 + 1e-12));
        }
    }
}
