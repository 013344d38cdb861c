//! Physical relations of the Aw-Rascle-Zhang model.
//!
//! The equilibrium speed follows the Greenshield family
//!
//! ```text
//! V(rho) = v_f * (1 - (rho / rho_max)^gamma)
//! ```
//!
//! and the traffic pressure is tied to it through `p(rho) = V(0) - V(rho)`,
//! so `p(rho) + V(rho) = v_f` holds identically. All quantities are SI:
//! vehicles/m, m/s, s, m.

use crate::error::{ArzError, Result};

/// Physical constants of the ARZ model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParameters {
    rho_max: f64,
    v_free: f64,
    gamma: f64,
    tau: f64,
    length: f64,
}

impl ModelParameters {
    pub fn new(rho_max: f64, v_free: f64, gamma: f64, tau: f64, length: f64) -> Result<Self> {
        let named = [("rho_max", rho_max), ("v_free", v_free), ("gamma", gamma), ("tau", tau), ("length", length)];
        for (name, value) in named {
            if !(value.is_finite() && value > 0.0) {
                return Err(ArzError::Domain(format!("{name} must be finite and positive, got {value}")));
            }
        }
        // gamma < 1 loses strict concavity of Q near rho = 0.
        if gamma < 1.0 {
            return Err(ArzError::Domain(format!("gamma must be >= 1, got {gamma}")));
        }
        Ok(Self { rho_max, v_free, gamma, tau, length })
    }

    /// Reference freeway: 160 veh/km jam density, 40 m/s free speed,
    /// gamma = 1, 60 s relaxation, 500 m segment.
    pub fn table1() -> Self {
        Self { rho_max: 0.16, v_free: 40.0, gamma: 1.0, tau: 60.0, length: 500.0 }
    }

    pub fn rho_max(&self) -> f64 {
        self.rho_max
    }

    pub fn v_free(&self) -> f64 {
        self.v_free
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    /// Pressure coefficient `C0` in `p = C0 * rho^gamma`.
    pub fn pressure_coefficient(&self) -> f64 {
        self.v_free / self.rho_max.powf(self.gamma)
    }

    /// Copy with a different segment length.
    pub fn with_length(&self, length: f64) -> Result<Self> {
        Self::new(self.rho_max, self.v_free, self.gamma, self.tau, length)
    }

    fn check_density(&self, rho: f64) -> Result<()> {
        if rho.is_finite() && (0.0..=self.rho_max).contains(&rho) {
            Ok(())
        } else {
            Err(ArzError::Domain(format!("density {rho} outside [0, {}] veh/m", self.rho_max)))
        }
    }

    pub fn equilibrium_velocity(&self, rho: f64) -> Result<f64> {
        self.check_density(rho)?;
        Ok(self.velocity_raw(rho))
    }

    /// `V'(rho) = -v_f * gamma * rho^(gamma-1) / rho_max^gamma`.
    pub fn equilibrium_velocity_slope(&self, rho: f64) -> Result<f64> {
        self.check_density(rho)?;
        Ok(-self.pressure_slope_raw(rho))
    }

    pub fn pressure(&self, rho: f64) -> Result<f64> {
        self.check_density(rho)?;
        Ok(self.pressure_raw(rho))
    }

    /// `Q(rho) = rho * V(rho)`.
    pub fn equilibrium_flux(&self, rho: f64) -> Result<f64> {
        self.check_density(rho)?;
        Ok(rho * self.velocity_raw(rho))
    }

    // Unchecked variants for the solver inner loops. Callers guarantee
    // physical validity of the state separately.

    #[inline]
    pub(crate) fn velocity_raw(&self, rho: f64) -> f64 {
        self.v_free * (1.0 - (rho / self.rho_max).powf(self.gamma))
    }

    #[inline]
    pub(crate) fn pressure_raw(&self, rho: f64) -> f64 {
        self.v_free * (rho / self.rho_max).powf(self.gamma)
    }

    /// `p'(rho)`.
    #[inline]
    pub(crate) fn pressure_slope_raw(&self, rho: f64) -> f64 {
        if self.gamma == 1.0 {
            self.v_free / self.rho_max
        } else {
            self.v_free * self.gamma * rho.powf(self.gamma - 1.0) / self.rho_max.powf(self.gamma)
        }
    }

    /// Density whose pressure equals `p`; `None` for negative pressure.
    #[inline]
    pub(crate) fn pressure_inverse(&self, p: f64) -> Option<f64> {
        if p.is_finite() && p >= 0.0 {
            Some(self.rho_max * (p / self.v_free).powf(1.0 / self.gamma))
        } else {
            None
        }
    }
}

/// Traffic regime of a setpoint, from the sign of the second characteristic speed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    /// Both characteristic speeds non-negative.
    Free,
    /// `lambda2 < 0`: speed disturbances travel upstream.
    Congested,
}

/// Setpoint `(rho*, v*, q*)` on the equilibrium curve with its characteristic speeds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SteadyState {
    pub rho_star: f64,
    pub v_star: f64,
    pub q_star: f64,
    pub lambda1: f64,
    pub lambda2: f64,
    pub regime: Regime,
}

impl SteadyState {
    /// Builds the setpoint at density `rho_star`, with `v* = V(rho*)`.
    pub fn new(params: &ModelParameters, rho_star: f64) -> Result<Self> {
        if !(rho_star.is_finite() && rho_star > 0.0 && rho_star < params.rho_max) {
            return Err(ArzError::Domain(format!(
                "setpoint density {rho_star} must lie strictly inside (0, {})",
                params.rho_max
            )));
        }
        let v_star = params.velocity_raw(rho_star);
        let q_star = rho_star * v_star;
        let lambda1 = v_star;
        // v* + rho* V'(rho*) = v_f (1 - (1 + gamma) s^gamma), s = rho*/rho_max.
        // This form is exact at the critical density.
        let s = (rho_star / params.rho_max).powf(params.gamma);
        let lambda2 = params.v_free * (1.0 - (1.0 + params.gamma) * s);
        let regime = if lambda2 < 0.0 { Regime::Congested } else { Regime::Free };
        Ok(Self { rho_star, v_star, q_star, lambda1, lambda2, regime })
    }

    pub fn is_congested(&self) -> bool {
        self.regime == Regime::Congested
    }

    pub fn require_congested(&self) -> Result<()> {
        if self.is_congested() {
            Ok(())
        } else {
            Err(ArzError::Regime(format!(
                "setpoint rho* = {} is in free flow (lambda2 = {} >= 0); the observer needs a congested setpoint",
                self.rho_star, self.lambda2
            )))
        }
    }

    /// `max(|lambda1|, |lambda2|)`.
    pub fn max_speed(&self) -> f64 {
        self.lambda1.abs().max(self.lambda2.abs())
    }
}

/// Shorthand for [`SteadyState::new`].
pub fn make_steady_state(params: &ModelParameters, rho_star: f64) -> Result<SteadyState> {
    SteadyState::new(params, rho_star)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn close(a: f64, b: f64, rel: f64) -> bool {
        (a - b).abs() <= rel * b.abs().max(1e-300)
    }

    #[test]
    fn equilibrium_velocity_examples() {
        let p = ModelParameters::table1();
        assert_eq!(p.equilibrium_velocity(0.0).unwrap(), 40.0);
        assert!(close(p.equilibrium_velocity(0.12).unwrap(), 10.0, 1e-12));
        assert_eq!(p.equilibrium_velocity(0.16).unwrap(), 0.0);
        assert!(p.equilibrium_velocity(-0.01).is_err());
        assert!(p.equilibrium_velocity(0.17).is_err());
    }

    #[test]
    fn slope_examples() {
        let p = ModelParameters::table1();
        assert!(close(p.equilibrium_velocity_slope(0.12).unwrap(), -250.0, 1e-12));
        let a = p.equilibrium_velocity_slope(0.01).unwrap();
        let b = p.equilibrium_velocity_slope(0.15).unwrap();
        assert_eq!(a, b);
        let p2 = ModelParameters::new(0.16, 40.0, 2.0, 60.0, 500.0).unwrap();
        assert_eq!(p2.equilibrium_velocity_slope(0.0).unwrap(), 0.0);
    }

    #[test]
    fn pressure_and_flux_examples() {
        let p = ModelParameters::table1();
        assert!(close(p.pressure(0.12).unwrap(), 30.0, 1e-12));
        assert_eq!(p.pressure(0.0).unwrap(), 0.0);
        assert_eq!(p.pressure(0.16).unwrap(), 40.0);
        assert!(close(p.equilibrium_flux(0.12).unwrap(), 1.2, 1e-12));
        assert_eq!(p.equilibrium_flux(0.0).unwrap(), 0.0);
        assert_eq!(p.equilibrium_flux(0.16).unwrap(), 0.0);
        let peak = p.equilibrium_flux(0.08).unwrap();
        for rho in [0.02, 0.05, 0.079, 0.081, 0.12, 0.15] {
            assert!(p.equilibrium_flux(rho).unwrap() < peak);
        }
    }

    #[test]
    fn pressure_coefficient_is_pinned() {
        let p = ModelParameters::new(0.2, 30.0, 2.0, 60.0, 500.0).unwrap();
        assert!(close(p.pressure_coefficient() * 0.1f64.powi(2), p.pressure(0.1).unwrap(), 1e-14));
    }

    #[test]
    fn parameter_validation() {
        assert!(ModelParameters::new(0.16, 40.0, 0.5, 60.0, 500.0).is_err());
        assert!(ModelParameters::new(0.0, 40.0, 1.0, 60.0, 500.0).is_err());
        assert!(ModelParameters::new(0.16, 40.0, 1.0, -1.0, 500.0).is_err());
        assert!(ModelParameters::new(0.16, 40.0, 1.0, 60.0, f64::NAN).is_err());
    }

    #[test]
    fn table1_setpoint() {
        let p = ModelParameters::table1();
        let ss = make_steady_state(&p, 0.12).unwrap();
        assert!(close(ss.v_star, 10.0, 1e-12));
        assert!(close(ss.q_star, 1.2, 1e-12));
        assert!(close(ss.lambda1, 10.0, 1e-12));
        assert!(close(ss.lambda2, -20.0, 1e-12));
        assert_eq!(ss.regime, Regime::Congested);
    }

    #[test]
    fn free_flow_and_critical_setpoints() {
        let p = ModelParameters::table1();
        let free = make_steady_state(&p, 0.04).unwrap();
        assert!(close(free.lambda2, 20.0, 1e-12));
        assert_eq!(free.regime, Regime::Free);
        assert!(free.require_congested().is_err());

        let crit = make_steady_state(&p, 0.16 / 2.0).unwrap();
        assert!(crit.lambda2.abs() < 1e-12);
        assert_eq!(crit.regime, Regime::Free);
    }

    #[test]
    fn setpoint_on_boundary_rejected() {
        let p = ModelParameters::table1();
        assert!(make_steady_state(&p, 0.0).is_err());
        assert!(make_steady_state(&p, 0.16).is_err());
    }

    proptest! {
        #[test]
        fn monotone_velocity_and_pressure(a in 0.0f64..0.16, b in 0.0f64..0.16, gamma in 1.0f64..4.0) {
            prop_assume!((a - b).abs() > 1e-9);
            let p = ModelParameters::new(0.16, 40.0, gamma, 60.0, 500.0).unwrap();
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            prop_assert!(p.equilibrium_velocity(lo).unwrap() > p.equilibrium_velocity(hi).unwrap());
            prop_assert!(p.pressure(lo).unwrap() < p.pressure(hi).unwrap());
        }

        #[test]
        fn pressure_plus_velocity_is_free_speed(rho in 0.0f64..=0.16, gamma in 1.0f64..4.0) {
            let p = ModelParameters::new(0.16, 40.0, gamma, 60.0, 500.0).unwrap();
            let sum = p.pressure(rho).unwrap() + p.equilibrium_velocity(rho).unwrap();
            prop_assert!((sum - 40.0).abs() <= 4.0 * f64::EPSILON * 40.0);
        }

        #[test]
        fn flux_second_difference_negative(rho in 0.01f64..0.158, h in 1e-4f64..1e-3, gamma in 1.0f64..4.0) {
            prop_assume!(rho - h > 0.0 && rho + h < 0.16);
            let p = ModelParameters::new(0.16, 40.0, gamma, 60.0, 500.0).unwrap();
            let q = |r: f64| p.equilibrium_flux(r).unwrap();
            prop_assert!(q(rho - h) - 2.0 * q(rho) + q(rho + h) < 0.0);
        }

        #[test]
        fn lambda2_matches_definition(rho in 0.001f64..0.159, gamma in 1.0f64..4.0) {
            let p = ModelParameters::new(0.16, 40.0, gamma, 60.0, 500.0).unwrap();
            let ss = make_steady_state(&p, rho).unwrap();
            let direct = ss.lambda1 + rho * p.equilibrium_velocity_slope(rho).unwrap();
            prop_assert!((ss.lambda2 - direct).abs() <= 1e-12 * ss.lambda1.abs().max(1.0));
            prop_assert_eq!(ss.regime == Regime::Congested, ss.lambda2 < 0.0);
        }
    }
}
