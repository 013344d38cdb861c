//! Scenario configuration: a flat `key = value` text file.
//!
//! Blank lines and `#` comments are ignored. Every key is optional and
//! defaults to the reference scenario; unknown or repeated keys are errors.
//!
//! | key                   | default       | meaning                                 |
//! |-----------------------|---------------|-----------------------------------------|
//! | `rho_max_veh_per_km`  | 160           | jam density                             |
//! | `v_free`              | 40            | free-flow speed, m/s                    |
//! | `gamma`               | 1             | pressure exponent, >= 1                 |
//! | `tau`                 | 60            | relaxation time, s                      |
//! | `length`              | 500           | road length, m                          |
//! | `rho_star_veh_per_km` | 120           | setpoint density                        |
//! | `n_cells` / `dx`      | 200 / -       | grid size (give at most one)            |
//! | `courant_safety`      | 0.5           | fraction of the setpoint CFL limit      |
//! | `amp_rho`, `amp_v`    | 0.1           | relative initial sinusoid amplitudes    |
//! | `wavenumber`          | 1             | periods of the initial sinusoid on [0,L]|
//! | `phase`               | 0             | sinusoid phase, rad                     |
//! | `duration`            | 240           | simulated time, s                       |
//! | `snapshot_interval`   | 0.5           | output cadence, s                       |
//! | `injection_factor`    | outlet        | `outlet` or `local`                     |
//! | `observer_ic`         | setpoint      | `setpoint` or `plant`                   |
//! | `gains`               | exact         | `exact` or `published`                  |
//! | `interpolation`       | linear        | measurement interpolation: `linear`, `hold` |
//! | `mode`                | closed_loop   | `closed_loop`, `replay`, `plant_only`, `linear_verify` |

use std::collections::HashSet;
use std::path::Path;
use std::str::FromStr;

use crate::error::{ArzError, Result};
use crate::gains::GainVariant;
use crate::grid::Grid;
use crate::model::{make_steady_state, ModelParameters, SteadyState};
use crate::observer::InjectionFactor;
use crate::solver::SinusoidSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Mode {
    #[default]
    ClosedLoop,
    Replay,
    PlantOnly,
    LinearVerify,
}

impl FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "closed_loop" => Ok(Self::ClosedLoop),
            "replay" => Ok(Self::Replay),
            "plant_only" => Ok(Self::PlantOnly),
            "linear_verify" => Ok(Self::LinearVerify),
            _ => Err("expected closed_loop, replay, plant_only or linear_verify".into()),
        }
    }
}

impl Mode {
    pub fn name(&self) -> &'static str {
        match self {
            Self::ClosedLoop => "closed_loop",
            Self::Replay => "replay",
            Self::PlantOnly => "plant_only",
            Self::LinearVerify => "linear_verify",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ObserverInit {
    #[default]
    Setpoint,
    /// Start from the plant's own initial condition.
    Plant,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Interpolation {
    #[default]
    Linear,
    /// Zero-order hold of the most recent sample.
    Hold,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub params: ModelParameters,
    /// Setpoint density, veh/m.
    pub rho_star: f64,
    pub n_cells: usize,
    pub courant_safety: f64,
    pub initial: SinusoidSpec,
    pub duration: f64,
    pub snapshot_interval: f64,
    pub injection_factor: InjectionFactor,
    pub observer_init: ObserverInit,
    pub gains: GainVariant,
    pub interpolation: Interpolation,
    pub mode: Mode,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            params: ModelParameters::table1(),
            rho_star: 0.12,
            n_cells: 200,
            courant_safety: 0.5,
            initial: SinusoidSpec::default(),
            duration: 240.0,
            snapshot_interval: 0.5,
            injection_factor: InjectionFactor::Outlet,
            observer_init: ObserverInit::Setpoint,
            gains: GainVariant::Exact,
            interpolation: Interpolation::Linear,
            mode: Mode::ClosedLoop,
        }
    }
}

impl ScenarioConfig {
    pub fn steady_state(&self) -> Result<SteadyState> {
        make_steady_state(&self.params, self.rho_star)
    }

    pub fn grid(&self) -> Result<Grid> {
        Grid::with_safety(&self.params, &self.steady_state()?, self.n_cells, self.courant_safety)
    }
}

const KEYS: &[&str] = &[
    "rho_max_veh_per_km",
    "v_free",
    "gamma",
    "tau",
    "length",
    "rho_star_veh_per_km",
    "n_cells",
    "dx",
    "courant_safety",
    "amp_rho",
    "amp_v",
    "wavenumber",
    "phase",
    "duration",
    "snapshot_interval",
    "injection_factor",
    "observer_ic",
    "gains",
    "interpolation",
    "mode",
];

fn value_err(key: &str, message: impl Into<String>) -> ArzError {
    ArzError::ConfigValue { key: key.to_string(), message: message.into() }
}

fn number(key: &str, raw: &str) -> Result<f64> {
    let v: f64 = raw.parse().map_err(|_| value_err(key, format!("'{raw}' is not a number")))?;
    if !v.is_finite() {
        return Err(value_err(key, "must be finite"));
    }
    Ok(v)
}

fn positive(key: &str, raw: &str) -> Result<f64> {
    let v = number(key, raw)?;
    if v <= 0.0 {
        return Err(value_err(key, format!("must be positive, got {v}")));
    }
    Ok(v)
}

pub fn load_config(path: &Path) -> Result<ScenarioConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| ArzError::io(path, e))?;
    parse_config(&text)
}

pub fn parse_config(text: &str) -> Result<ScenarioConfig> {
    let mut entries: Vec<(String, String)> = Vec::new();
    let mut seen = HashSet::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| ArzError::ConfigParse {
            line: line_no,
            message: format!("expected `key = value`, found `{line}`"),
        })?;
        let (key, value) = (key.trim(), value.trim());
        if !KEYS.contains(&key) {
            return Err(ArzError::ConfigParse { line: line_no, message: format!("unknown key `{key}`") });
        }
        if value.is_empty() {
            return Err(ArzError::ConfigParse { line: line_no, message: format!("missing value for `{key}`") });
        }
        if !seen.insert(key.to_string()) {
            return Err(ArzError::ConfigParse { line: line_no, message: format!("duplicate key `{key}`") });
        }
        entries.push((key.to_string(), value.to_string()));
    }

    let mut cfg = ScenarioConfig::default();
    let defaults = ModelParameters::table1();
    let (mut rho_max, mut v_free, mut gamma, mut tau, mut length) =
        (defaults.rho_max(), defaults.v_free(), defaults.gamma(), defaults.tau(), defaults.length());
    let mut rho_star = cfg.rho_star;
    let mut n_cells: Option<usize> = None;
    let mut dx: Option<f64> = None;

    for (key, value) in &entries {
        let k = key.as_str();
        match k {
            "rho_max_veh_per_km" => rho_max = positive(k, value)? / 1000.0,
            "v_free" => v_free = positive(k, value)?,
            "gamma" => {
                gamma = number(k, value)?;
                if gamma < 1.0 {
                    return Err(value_err(k, format!("must be at least 1, got {gamma}")));
                }
            }
            "tau" => tau = positive(k, value)?,
            "length" => length = positive(k, value)?,
            "rho_star_veh_per_km" => rho_star = positive(k, value)? / 1000.0,
            "n_cells" => {
                let n: usize = value.parse().map_err(|_| value_err(k, format!("'{value}' is not a cell count")))?;
                if n < 2 {
                    return Err(value_err(k, "need at least 2 cells"));
                }
                n_cells = Some(n);
            }
            "dx" => dx = Some(positive(k, value)?),
            "courant_safety" => {
                let s = positive(k, value)?;
                if s > 1.0 {
                    return Err(value_err(k, format!("must not exceed 1, got {s}")));
                }
                cfg.courant_safety = s;
            }
            "amp_rho" | "amp_v" => {
                let a = number(k, value)?;
                if !(0.0..0.5).contains(&a) {
                    return Err(value_err(k, format!("must lie in [0, 0.5), got {a}")));
                }
                if k == "amp_rho" {
                    cfg.initial.amp_rho = a;
                } else {
                    cfg.initial.amp_v = a;
                }
            }
            "wavenumber" => cfg.initial.wavenumber = positive(k, value)?,
            "phase" => cfg.initial.phase = number(k, value)?,
            "duration" => cfg.duration = positive(k, value)?,
            "snapshot_interval" => cfg.snapshot_interval = positive(k, value)?,
            "injection_factor" => {
                cfg.injection_factor = value.parse().map_err(|_| value_err(k, "expected outlet or local"))?
            }
            "observer_ic" => {
                cfg.observer_init = match value.as_str() {
                    "setpoint" => ObserverInit::Setpoint,
                    "plant" => ObserverInit::Plant,
                    _ => return Err(value_err(k, "expected setpoint or plant")),
                }
            }
            "gains" => cfg.gains = value.parse().map_err(|_| value_err(k, "expected exact or published"))?,
            "interpolation" => {
                cfg.interpolation = match value.as_str() {
                    "linear" => Interpolation::Linear,
                    "hold" => Interpolation::Hold,
                    _ => return Err(value_err(k, "expected linear or hold")),
                }
            }
            "mode" => cfg.mode = value.parse().map_err(|m: String| value_err(k, m))?,
            _ => unreachable!("key list and match arms disagree"),
        }
    }

    cfg.params = ModelParameters::new(rho_max, v_free, gamma, tau, length)
        .map_err(|e| value_err("rho_max_veh_per_km", e.to_string()))?;
    if rho_star >= rho_max {
        return Err(value_err("rho_star_veh_per_km", "setpoint density must be below the jam density"));
    }
    cfg.rho_star = rho_star;
    cfg.n_cells = match (n_cells, dx) {
        (Some(_), Some(_)) => return Err(value_err("dx", "give either n_cells or dx, not both")),
        (Some(n), None) => n,
        (None, Some(d)) => {
            let n = (length / d).round();
            if n < 2.0 || ((n * d - length) / length).abs() > 1e-9 {
                return Err(value_err("dx", format!("{d} m does not divide the road length {length} m")));
            }
            n as usize
        }
        (None, None) => cfg.n_cells,
    };
    if cfg.initial.amp_rho > 0.0 && rho_star * (1.0 + cfg.initial.amp_rho) >= rho_max {
        return Err(value_err("amp_rho", "perturbed density reaches the jam density"));
    }
    // Surface grid and setpoint problems as configuration errors.
    cfg.grid().map_err(|e| value_err("courant_safety", e.to_string()))?;
    Ok(cfg)
}
