//! Boundary observers driven by inlet flux, outlet flux and outlet speed.
//!
//! The linear observer lives in the scaled coordinates `(w_bar, v_bar)`:
//!
//! ```text
//! w_t + lambda1 w_x = r(x) (w_bar(L) - w(L))
//! v_t + lambda2 v_x = c(x) w + s(x) (w_bar(L) - w(L))
//! w(0) = (lambda2/lambda1) v(0) + Y_q,in,    v(L) = q*/(lambda1 - lambda2) Y_v
//! ```
//!
//! The nonlinear observer is a copy of the ARZ plant whose boundaries are fed
//! with the measurements and whose interior receives the same injections,
//! mapped back to `(rho, v)`.

use std::str::FromStr;

use crate::error::{ArzError, Result};
use crate::gains::GainTable;
use crate::grid::Grid;
use crate::model::{ModelParameters, SteadyState};
use crate::solver::{
    from_conservative, lax_wendroff_step, linear_transport_step, to_conservative, BoundaryCells, FieldState,
    ScaledBoundary, SourceFields,
};
use crate::transforms::{boundary_w_at_l, w_bar_from_deviation, BoundaryMeasurement};

/// Observer estimate; same layout and validity bounds as the plant state.
pub type ObserverState = FieldState;

/// Output-injection fields `e_w = -r (w_bar(L) - w_hat(L))`, `e_v = -s (w_bar(L) - w_hat(L))`.
#[derive(Debug, Clone, PartialEq)]
pub struct InjectionFields {
    pub e_w: Vec<f64>,
    pub e_v: Vec<f64>,
}

pub fn injection_fields(gt: &GainTable, w_bar_l: f64, w_hat_l: f64) -> InjectionFields {
    let d = w_bar_l - w_hat_l;
    InjectionFields { e_w: gt.r.iter().map(|&r| -r * d).collect(), e_v: gt.s.iter().map(|&s| -s * d).collect() }
}

/// Spatial factor multiplying `E_w` in the density injection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum InjectionFactor {
    /// Constant `exp(-L / (tau lambda1))`.
    #[default]
    Outlet,
    /// Pointwise `exp(-x / (tau lambda1))`, the factor of the inverse scaling.
    Local,
}

impl InjectionFactor {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Outlet => "outlet",
            Self::Local => "local",
        }
    }
}

impl FromStr for InjectionFactor {
    type Err = ArzError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "outlet" => Ok(Self::Outlet),
            "local" => Ok(Self::Local),
            other => Err(ArzError::Usage(format!("unknown injection factor '{other}' (expected outlet or local)"))),
        }
    }
}

/// `w_hat(L)` from the observer's last cell.
pub fn observer_w_hat_l(ss: &SteadyState, p: &ModelParameters, obs: &ObserverState) -> Result<f64> {
    let n = obs.len();
    if n == 0 {
        return Err(ArzError::Usage("empty observer state".into()));
    }
    w_hat_from_outlet(ss, p, obs.rho[n - 1], obs.v[n - 1])
}

fn w_hat_from_outlet(ss: &SteadyState, p: &ModelParameters, rho: f64, v: f64) -> Result<f64> {
    ss.require_congested()?;
    w_bar_from_deviation(ss, p, p.length(), rho * v - ss.q_star, v - ss.v_star)
}

/// Observer ghost cells: inlet density from the measured flux and the
/// observer's own inlet speed; outlet speed from the measurement, with the
/// downstream invariant `v + p(rho)` carried out of the last cell.
pub fn observer_boundary(p: &ModelParameters, obs: &ObserverState, m: &BoundaryMeasurement) -> Result<BoundaryCells> {
    let n = obs.len();
    if n == 0 {
        return Err(ArzError::Usage("empty observer state".into()));
    }
    let v0 = obs.v[0];
    if !(v0 > 0.0) {
        return Err(ArzError::Blowup { t: obs.t, cell: 0, reason: format!("observer inlet speed {v0}") });
    }
    let pressure = obs.v[n - 1] + p.pressure_raw(obs.rho[n - 1]) - m.y_v_out;
    let right_rho = p.pressure_inverse(pressure).ok_or_else(|| ArzError::Blowup {
        t: obs.t,
        cell: n - 1,
        reason: format!("no admissible outlet density for measured speed {}", m.y_v_out),
    })?;
    Ok(BoundaryCells { left_rho: m.y_q_in / v0, left_v: v0, right_rho, right_v: m.y_v_out })
}

/// Maps scaled-coordinate injections to additive `(rho, v)` sources.
pub fn physical_sources(
    ss: &SteadyState,
    p: &ModelParameters,
    grid: &Grid,
    inj: &InjectionFields,
    factor: InjectionFactor,
) -> SourceFields {
    let n = inj.e_w.len();
    let outlet = (-p.length() / (p.tau() * ss.lambda1)).exp();
    let gap = ss.lambda1 - ss.lambda2;
    let mut out = SourceFields::zeros(n);
    for i in 0..n {
        let f = match factor {
            InjectionFactor::Outlet => outlet,
            InjectionFactor::Local => (-grid.cell_center(i) / (p.tau() * ss.lambda1)).exp(),
        };
        out.rho[i] = -(f * inj.e_w[i] - inj.e_v[i]) / ss.v_star;
        out.v[i] = -gap / ss.q_star * inj.e_v[i];
    }
    out
}

fn check_time(obs_t: f64, m_t: f64, dt: f64) -> Result<()> {
    if (obs_t - m_t).abs() > 1e-9 * dt.max(1.0) {
        return Err(ArzError::Usage(format!("measurement at t = {m_t} does not match observer time {obs_t}")));
    }
    Ok(())
}

/// Advances the nonlinear observer by one time step.
#[allow(clippy::too_many_arguments)]
pub fn nonlinear_observer_step(
    p: &ModelParameters,
    ss: &SteadyState,
    grid: &Grid,
    gt: &GainTable,
    obs: &ObserverState,
    m: &BoundaryMeasurement,
    factor: InjectionFactor,
) -> Result<ObserverState> {
    check_time(obs.t, m.t, grid.dt())?;
    if gt.len() != grid.n_cells() || obs.len() != grid.n_cells() {
        return Err(ArzError::Usage("gain table, observer and grid sizes differ".into()));
    }
    let bc = observer_boundary(p, obs, m)?;
    // Both operands of the injection difference are read at the outlet face.
    let w_hat_l = w_hat_from_outlet(ss, p, bc.right_rho, bc.right_v)?;
    let w_bar_l = boundary_w_at_l(ss, p, m)?;
    let inj = injection_fields(gt, w_bar_l, w_hat_l);
    let sources = physical_sources(ss, p, grid, &inj, factor);
    let next = lax_wendroff_step(p, grid, &to_conservative(p, obs), &bc, Some(&sources), obs.t)?;
    from_conservative(p, &next.state, obs.t + grid.dt())
}

/// Boundary inputs of one linear observer step, all as setpoint deviations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearBoundaryData {
    pub y_q_in: f64,
    pub y_v: f64,
    /// `w_bar(L, t)` reconstructed from the outlet measurements.
    pub w_bar_l: f64,
}

/// One step of the linear observer in scaled coordinates. `w_hat(L)` is read
/// from the last cell.
pub fn linear_observer_step(
    ss: &SteadyState,
    p: &ModelParameters,
    grid: &Grid,
    gt: &GainTable,
    w_hat: &[f64],
    v_hat: &[f64],
    data: LinearBoundaryData,
) -> Result<(Vec<f64>, Vec<f64>)> {
    ss.require_congested()?;
    let n = grid.n_cells();
    if gt.len() != n || w_hat.len() != n || v_hat.len() != n {
        return Err(ArzError::Usage("gain table, estimate and grid sizes differ".into()));
    }
    let inj = injection_fields(gt, data.w_bar_l, w_hat[n - 1]);
    let iw: Vec<f64> = inj.e_w.iter().map(|e| -e).collect();
    let iv: Vec<f64> = inj.e_v.iter().map(|e| -e).collect();
    let bc = ScaledBoundary { y_q_in: data.y_q_in, v_right: ss.q_star / (ss.lambda1 - ss.lambda2) * data.y_v };
    linear_transport_step(ss, p, grid, w_hat, v_hat, bc, Some((&iw, &iv)))
}

/// Pointwise and integrated estimation errors at one instant.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorRecord {
    pub t: f64,
    pub rho_err: Vec<f64>,
    pub v_err: Vec<f64>,
    pub l2_rho: f64,
    pub l2_v: f64,
    pub rel_rho: f64,
    pub rel_v: f64,
}

/// L² norm `sqrt(sum(e^2) dx)`.
pub fn l2_norm(values: &[f64], dx: f64) -> f64 {
    (values.iter().map(|e| e * e).sum::<f64>() * dx).sqrt()
}

/// Errors `plant - estimate`. Relative norms divide by the norm of the
/// setpoint over the domain, `rho* sqrt(L)` and `v* sqrt(L)`.
pub fn estimation_error(plant: &FieldState, obs: &ObserverState, ss: &SteadyState, dx: f64) -> Result<ErrorRecord> {
    if plant.len() != obs.len() {
        return Err(ArzError::Usage(format!("plant has {} cells, observer has {}", plant.len(), obs.len())));
    }
    if (plant.t - obs.t).abs() > 1e-9 * plant.t.abs().max(1.0) {
        return Err(ArzError::Usage(format!("plant time {} differs from observer time {}", plant.t, obs.t)));
    }
    let rho_err: Vec<f64> = plant.rho.iter().zip(&obs.rho).map(|(a, b)| a - b).collect();
    let v_err: Vec<f64> = plant.v.iter().zip(&obs.v).map(|(a, b)| a - b).collect();
    let l2_rho = l2_norm(&rho_err, dx);
    let l2_v = l2_norm(&v_err, dx);
    let root_l = (dx * plant.len() as f64).sqrt();
    Ok(ErrorRecord {
        t: plant.t,
        rel_rho: l2_rho / (ss.rho_star * root_l),
        rel_v: l2_v / (ss.v_star * root_l),
        rho_err,
        v_err,
        l2_rho,
        l2_v,
    })
}
