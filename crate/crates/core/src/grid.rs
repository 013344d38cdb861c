use crate::error::{ArzError, Result};
use crate::model::{ModelParameters, SteadyState};

/// Uniform finite-volume grid on `[0, L]` with a fixed time step.
///
/// Construction enforces the CFL condition `max|lambda| dt / dx <= courant_max <= 1`
/// for the setpoint characteristic speeds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    n_cells: usize,
    dx: f64,
    dt: f64,
    courant_max: f64,
}

/// `dt = safety * dx / max(|lambda1|, |lambda2|)`.
pub fn choose_dt(ss: &SteadyState, dx: f64, safety: f64) -> Result<f64> {
    if !(safety > 0.0 && safety <= 1.0) {
        return Err(ArzError::Domain(format!("courant safety must lie in (0, 1], got {safety}")));
    }
    if !(dx > 0.0 && dx.is_finite()) {
        return Err(ArzError::Domain(format!("dx must be positive, got {dx}")));
    }
    let speed = ss.max_speed();
    if !(speed > 0.0) {
        return Err(ArzError::Domain("setpoint has zero characteristic speeds".into()));
    }
    Ok(safety * dx / speed)
}

impl Grid {
    pub fn new(p: &ModelParameters, ss: &SteadyState, n_cells: usize, dt: f64, courant_max: f64) -> Result<Self> {
        if n_cells < 2 {
            return Err(ArzError::Domain(format!("need at least 2 cells, got {n_cells}")));
        }
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(ArzError::Domain(format!("dt must be positive, got {dt}")));
        }
        if !(courant_max > 0.0 && courant_max <= 1.0) {
            return Err(ArzError::Domain(format!("courant_max must lie in (0, 1], got {courant_max}")));
        }
        let dx = p.length() / n_cells as f64;
        let courant = ss.max_speed() * dt / dx;
        // one ulp of slack so that dt from choose_dt always passes
        if courant > courant_max * (1.0 + 4.0 * f64::EPSILON) {
            return Err(ArzError::Cfl { courant, limit: courant_max });
        }
        Ok(Self { n_cells, dx, dt, courant_max })
    }

    /// Grid whose time step is chosen from the CFL condition with the given safety factor.
    pub fn with_safety(p: &ModelParameters, ss: &SteadyState, n_cells: usize, safety: f64) -> Result<Self> {
        if n_cells < 2 {
            return Err(ArzError::Domain(format!("need at least 2 cells, got {n_cells}")));
        }
        let dx = p.length() / n_cells as f64;
        let dt = choose_dt(ss, dx, safety)?;
        Self::new(p, ss, n_cells, dt, safety)
    }

    pub fn n_cells(&self) -> usize {
        self.n_cells
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn courant_max(&self) -> f64 {
        self.courant_max
    }

    pub fn length(&self) -> f64 {
        self.dx * self.n_cells as f64
    }

    pub fn cell_center(&self, i: usize) -> f64 {
        (i as f64 + 0.5) * self.dx
    }

    pub fn cell_centers(&self) -> Vec<f64> {
        (0..self.n_cells).map(|i| self.cell_center(i)).collect()
    }

    /// Time after `step` steps, computed without accumulation so that
    /// independent runs agree bit for bit.
    pub fn time_at(&self, step: usize) -> f64 {
        step as f64 * self.dt
    }

    /// Number of steps needed to reach `duration`.
    pub fn steps_for(&self, duration: f64) -> usize {
        (duration / self.dt - 1e-9).ceil().max(0.0) as usize
    }
}
