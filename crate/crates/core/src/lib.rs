//! Aw-Rascle-Zhang freeway traffic model with a backstepping boundary observer.
//!
//! The plant is the second-order ARZ system on a road segment `[0, L]`,
//!
//! ```text
//! rho_t + (rho v)_x = 0
//! v_t + (v - rho p'(rho)) v_x = (V(rho) - v) / tau
//! ```
//!
//! with Greenshields-type equilibrium speed `V` and traffic pressure
//! `p = V(0) - V`. The observer reconstructs `(rho, v)` on the whole segment
//! from three boundary sensors (inlet flux, outlet flux, outlet speed), with
//! output-injection gains obtained by backstepping on the linearization
//! around a congested setpoint.
//!
//! Modules, bottom up:
//! - [`model`]: parameters, equilibrium relations, setpoint and regime;
//! - [`transforms`]: deviation, Riemann and scaled coordinates;
//! - [`gains`]: backstepping kernels, injection gains, convergence time;
//! - [`grid`] and [`solver`]: Lax-Wendroff finite-volume integrators;
//! - [`observer`]: linear and nonlinear observers and error norms;
//! - [`harness`]: configuration, measurement replay, runs and CSV output.

// `!(x > 0.0)` is used deliberately so that NaN fails validity checks.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod gains;
pub mod grid;
pub mod harness;
pub mod model;
pub mod observer;
pub mod solver;
pub mod transforms;

pub use error::{ArzError, Result};
pub use gains::{build_gain_table, finite_convergence_time, GainTable, GainVariant};
pub use grid::{choose_dt, Grid};
pub use model::{make_steady_state, ModelParameters, Regime, SteadyState};
pub use observer::{
    estimation_error, injection_fields, nonlinear_observer_step, observer_w_hat_l, InjectionFactor, InjectionFields,
    ObserverState,
};
pub use solver::{apply_plant_bc, initial_condition_sinusoid, lax_wendroff_step, FieldState, SinusoidSpec};
pub use transforms::BoundaryMeasurement;
