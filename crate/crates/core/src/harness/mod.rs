//! Scenario plumbing: configuration, measurement files, run orchestration,
//! metrics and CSV output.

pub mod config;
pub mod measurements;
pub mod metrics;
pub mod output;
pub mod runs;

pub use config::{load_config, parse_config, Interpolation, Mode, ObserverInit, ScenarioConfig};
pub use measurements::{load_measurements, read_measurements, write_measurements, BoundarySeries};
pub use metrics::{detect_convergence_time, ErrorSample};
pub use runs::{
    linear_pair_run, run_closed_loop, run_gains, run_linear_verify, run_plant_only, run_replay, LinearVerifyReport,
    RunReport,
};

/// Formats a float with 17 significant digits, enough to round-trip any `f64`.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}
