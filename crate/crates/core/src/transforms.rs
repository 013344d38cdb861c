//! Coordinate changes for the linearized model.
//!
//! Three coordinate systems are used around a congested setpoint:
//!
//! * physical deviations `(q~, v~) = (rho v - q*, v - v*)`,
//! * Riemann variables `(xi1, xi2)` that diagonalize the transport operator,
//!   `xi1` travelling downstream at `lambda1` and `xi2` upstream at `lambda2`,
//! * scaled variables `(w_bar, v_bar) = (exp(x / (tau lambda1)) xi1, xi2)`,
//!   in which the relaxation source reduces to the single coupling `c(x) w_bar`.

use crate::error::{ArzError, Result};
use crate::model::{ModelParameters, SteadyState};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeviationPair {
    pub q_tilde: f64,
    pub v_tilde: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RiemannPair {
    pub xi1: f64,
    pub xi2: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaledPair {
    pub w_bar: f64,
    pub v_bar: f64,
}

/// One sample of the three boundary sensors: inlet flux, outlet flux and
/// outlet speed, all in SI units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryMeasurement {
    pub t: f64,
    pub y_q_in: f64,
    pub y_q_out: f64,
    pub y_v_out: f64,
}

/// Boundary measurements with the setpoint subtracted.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeasuredDeviations {
    pub y_q_in: f64,
    pub y_q_out: f64,
    pub y_v: f64,
}

impl BoundaryMeasurement {
    pub fn new(t: f64, y_q_in: f64, y_q_out: f64, y_v_out: f64) -> Result<Self> {
        if !(t.is_finite() && y_q_in.is_finite() && y_q_out.is_finite() && y_v_out.is_finite()) {
            return Err(ArzError::Data(format!("non-finite measurement at t = {t}")));
        }
        if y_v_out <= 0.0 {
            return Err(ArzError::Data(format!("outlet speed must be positive, got {y_v_out} at t = {t}")));
        }
        if y_q_in < 0.0 || y_q_out < 0.0 {
            return Err(ArzError::Data(format!("negative flux measurement at t = {t}")));
        }
        Ok(Self { t, y_q_in, y_q_out, y_v_out })
    }

    /// Measurements exactly at the setpoint.
    pub fn at_setpoint(ss: &SteadyState, t: f64) -> Self {
        Self { t, y_q_in: ss.q_star, y_q_out: ss.q_star, y_v_out: ss.v_star }
    }

    pub fn deviations(&self, ss: &SteadyState) -> MeasuredDeviations {
        MeasuredDeviations {
            y_q_in: self.y_q_in - ss.q_star,
            y_q_out: self.y_q_out - ss.q_star,
            y_v: self.y_v_out - ss.v_star,
        }
    }
}

fn speed_gap(ss: &SteadyState) -> Result<f64> {
    let gap = ss.lambda1 - ss.lambda2;
    if gap == 0.0 || !gap.is_finite() {
        return Err(ArzError::Domain("degenerate characteristic speeds (lambda1 = lambda2)".into()));
    }
    Ok(gap)
}

fn check_position(p: &ModelParameters, x: f64) -> Result<()> {
    if x.is_finite() && (0.0..=p.length()).contains(&x) {
        Ok(())
    } else {
        Err(ArzError::Domain(format!("position {x} outside [0, {}] m", p.length())))
    }
}

pub fn to_deviation(ss: &SteadyState, rho: f64, v: f64) -> Result<DeviationPair> {
    if !(v > 0.0) {
        return Err(ArzError::Domain(format!("speed must be positive, got {v}")));
    }
    Ok(DeviationPair { q_tilde: rho * v - ss.q_star, v_tilde: v - ss.v_star })
}

/// Inverse of [`to_deviation`]: physical `(rho, v)`.
pub fn from_deviation(ss: &SteadyState, d: DeviationPair) -> Result<(f64, f64)> {
    let v = ss.v_star + d.v_tilde;
    if !(v > 0.0) {
        return Err(ArzError::Domain(format!("reconstructed speed {v} is not positive")));
    }
    Ok(((ss.q_star + d.q_tilde) / v, v))
}

pub fn to_riemann(ss: &SteadyState, d: DeviationPair) -> Result<RiemannPair> {
    let gap = speed_gap(ss)?;
    Ok(RiemannPair { xi1: ss.rho_star * ss.lambda2 / gap * d.v_tilde + d.q_tilde, xi2: ss.q_star / gap * d.v_tilde })
}

pub fn from_riemann(ss: &SteadyState, r: RiemannPair) -> Result<DeviationPair> {
    let gap = speed_gap(ss)?;
    if ss.q_star == 0.0 || ss.lambda1 == 0.0 {
        return Err(ArzError::Domain("inverse Riemann map needs q* != 0 and lambda1 != 0".into()));
    }
    Ok(DeviationPair { q_tilde: r.xi1 - ss.lambda2 / ss.lambda1 * r.xi2, v_tilde: gap / ss.q_star * r.xi2 })
}

#[inline]
fn scale_factor(ss: &SteadyState, p: &ModelParameters, x: f64) -> f64 {
    (x / (p.tau() * ss.lambda1)).exp()
}

pub fn scale(ss: &SteadyState, p: &ModelParameters, x: f64, r: RiemannPair) -> Result<ScaledPair> {
    check_position(p, x)?;
    Ok(ScaledPair { w_bar: scale_factor(ss, p, x) * r.xi1, v_bar: r.xi2 })
}

pub fn unscale(ss: &SteadyState, p: &ModelParameters, x: f64, s: ScaledPair) -> Result<RiemannPair> {
    check_position(p, x)?;
    Ok(RiemannPair { xi1: s.w_bar / scale_factor(ss, p, x), xi2: s.v_bar })
}

/// `c(x) = -(1/tau) exp(-x / (tau lambda1))`, defined for every real `x`.
pub fn coupling_c(ss: &SteadyState, p: &ModelParameters, x: f64) -> f64 {
    -(1.0 / p.tau()) * (-x / (p.tau() * ss.lambda1)).exp()
}

/// `w_bar` at a point from the flux and speed deviations there.
pub fn w_bar_from_deviation(ss: &SteadyState, p: &ModelParameters, x: f64, q_tilde: f64, v_tilde: f64) -> Result<f64> {
    let gap = speed_gap(ss)?;
    Ok(scale_factor(ss, p, x) * (ss.rho_star * ss.lambda2 / gap * v_tilde + q_tilde))
}

/// `w_bar(L, t)` reconstructed from outlet flux and outlet speed measurements.
pub fn boundary_w_at_l(ss: &SteadyState, p: &ModelParameters, m: &BoundaryMeasurement) -> Result<f64> {
    ss.require_congested()?;
    let dev = m.deviations(ss);
    w_bar_from_deviation(ss, p, p.length(), dev.y_q_out, dev.y_v)
}

/// Whole-field map from physical `(rho, v)` at positions `x` to `(w_bar, v_bar)`.
pub fn physical_to_scaled(
    ss: &SteadyState,
    p: &ModelParameters,
    x: &[f64],
    rho: &[f64],
    v: &[f64],
) -> Result<(Vec<f64>, Vec<f64>)> {
    if x.len() != rho.len() || x.len() != v.len() {
        return Err(ArzError::Usage("field arrays have different lengths".into()));
    }
    let mut w_bar = Vec::with_capacity(x.len());
    let mut v_bar = Vec::with_capacity(x.len());
    for ((&xi, &r), &u) in x.iter().zip(rho).zip(v) {
        let s = scale(ss, p, xi, to_riemann(ss, to_deviation(ss, r, u)?)?)?;
        w_bar.push(s.w_bar);
        v_bar.push(s.v_bar);
    }
    Ok((w_bar, v_bar))
}

/// Whole-field map from `(w_bar, v_bar)` back to physical `(rho, v)`.
pub fn scaled_to_physical(
    ss: &SteadyState,
    p: &ModelParameters,
    x: &[f64],
    w_bar: &[f64],
    v_bar: &[f64],
) -> Result<(Vec<f64>, Vec<f64>)> {
    if x.len() != w_bar.len() || x.len() != v_bar.len() {
        return Err(ArzError::Usage("field arrays have different lengths".into()));
    }
    let mut rho = Vec::with_capacity(x.len());
    let mut v = Vec::with_capacity(x.len());
    for ((&xi, &w), &vb) in x.iter().zip(w_bar).zip(v_bar) {
        let r = unscale(ss, p, xi, ScaledPair { w_bar: w, v_bar: vb })?;
        let (rr, u) = from_deviation(ss, from_riemann(ss, r)?)?;
        rho.push(rr);
        v.push(u);
    }
    Ok((rho, v))
}
