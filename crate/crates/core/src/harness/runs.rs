use std::path::Path;

use super::config::{Mode, ObserverInit, ScenarioConfig};
use super::measurements::{write_measurements, BoundarySeries};
use super::metrics::{detect_convergence_time, oscillation_amplitude, settle_time, ErrorSample, VehicleTracer};
use super::output::{ensure_dir, write_summary, CsvSink, ERROR_HEADER, FIELD_HEADER};
use crate::error::{ArzError, Result};
use crate::gains::{build_gain_table, finite_convergence_time, GainTable, GainVariant};
use crate::grid::Grid;
use crate::model::{ModelParameters, SteadyState};
use crate::observer::{
    estimation_error, l2_norm, linear_observer_step, nonlinear_observer_step, LinearBoundaryData, ObserverState,
};
use crate::solver::{
    apply_plant_bc, from_conservative, initial_condition_sinusoid, lax_wendroff_step, linear_plant_right_value,
    linear_transport_step, mass_balance_residual, to_conservative, FieldState, MassRecord, ScaledBoundary,
};
use crate::transforms::{physical_to_scaled, BoundaryMeasurement};

/// Thresholds reported in run summaries.
pub const CONVERGENCE_THRESHOLDS: [f64; 2] = [0.02, 0.03];

/// Everything a nonlinear run produces besides its files.
#[derive(Debug, Clone)]
pub struct RunReport {
    pub mode: Mode,
    pub steps: usize,
    pub dt: f64,
    pub dx: f64,
    /// Error norms at the snapshot cadence (closed loop only).
    pub errors: Vec<ErrorSample>,
    /// Boundary data used at each step.
    pub measurements: Vec<BoundaryMeasurement>,
    /// Outlet speed of the plant at each step.
    pub outlet_speed: Vec<(f64, f64)>,
    /// Relative discrete mass-balance residual of the plant.
    pub mass_balance_residual: Option<f64>,
    /// Exit time of the vehicle that starts at the inlet at t = 0.
    pub transit_time: Option<f64>,
    pub final_plant: Option<FieldState>,
    pub final_estimate: Option<ObserverState>,
    pub summary: Vec<(String, String)>,
}

impl RunReport {
    fn new(mode: Mode, steps: usize, grid: &Grid) -> Self {
        Self {
            mode,
            steps,
            dt: grid.dt(),
            dx: grid.dx(),
            errors: Vec::new(),
            measurements: Vec::with_capacity(steps),
            outlet_speed: Vec::new(),
            mass_balance_residual: None,
            transit_time: None,
            final_plant: None,
            final_estimate: None,
            summary: Vec::new(),
        }
    }

    pub fn convergence_time(&self, threshold: f64) -> Option<f64> {
        detect_convergence_time(&self.errors, threshold)
    }

    /// Largest relative error at or after time `t`.
    pub fn max_error_after(&self, t: f64) -> Option<f64> {
        self.errors.iter().filter(|e| e.t >= t).map(|e| e.worst_relative()).reduce(f64::max)
    }

    pub fn summary_value(&self, key: &str) -> Option<&str> {
        self.summary.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }
}

struct Context {
    params: ModelParameters,
    ss: SteadyState,
    grid: Grid,
    steps: usize,
    stride: usize,
}

impl Context {
    fn new(cfg: &ScenarioConfig) -> Result<Self> {
        let params = cfg.params;
        let ss = cfg.steady_state()?;
        let grid = cfg.grid()?;
        let steps = grid.steps_for(cfg.duration);
        let stride = ((cfg.snapshot_interval / grid.dt()).round() as usize).max(1);
        Ok(Self { params, ss, grid, steps, stride })
    }

    fn snapshot(&self, k: usize) -> bool {
        k.is_multiple_of(self.stride) || k == self.steps
    }

    fn gains(&self, variant: GainVariant) -> Result<GainTable> {
        build_gain_table(&self.ss, &self.params, &self.grid, variant)
    }

    fn initial_plant(&self, cfg: &ScenarioConfig) -> Result<FieldState> {
        initial_condition_sinusoid(&self.params, &self.ss, &self.grid, &cfg.initial)
    }

    fn initial_observer(&self, cfg: &ScenarioConfig) -> Result<ObserverState> {
        match cfg.observer_init {
            ObserverInit::Setpoint => Ok(FieldState::setpoint(&self.ss, &self.grid)),
            ObserverInit::Plant => self.initial_plant(cfg),
        }
    }

    fn base_summary(&self, cfg: &ScenarioConfig) -> Vec<(String, String)> {
        let mut s = vec![
            ("mode".to_string(), cfg.mode.name().to_string()),
            ("rho_star".into(), self.ss.rho_star.to_string()),
            ("v_star".into(), self.ss.v_star.to_string()),
            ("q_star".into(), self.ss.q_star.to_string()),
            ("lambda1".into(), self.ss.lambda1.to_string()),
            ("lambda2".into(), self.ss.lambda2.to_string()),
            ("regime".into(), format!("{:?}", self.ss.regime)),
            ("n_cells".into(), self.grid.n_cells().to_string()),
            ("dx".into(), self.grid.dx().to_string()),
            ("dt".into(), self.grid.dt().to_string()),
            ("steps".into(), self.steps.to_string()),
            ("duration".into(), self.grid.time_at(self.steps).to_string()),
        ];
        if let Ok(tf) = finite_convergence_time(&self.ss, &self.params) {
            s.push(("t_f".into(), tf.to_string()));
        }
        s
    }
}

struct Sinks {
    plant: Option<CsvSink>,
    estimate: Option<CsvSink>,
    errors: Option<CsvSink>,
}

impl Sinks {
    fn open(out: Option<&Path>, plant: bool, estimate: bool, errors: bool) -> Result<Self> {
        let Some(dir) = out else {
            return Ok(Self { plant: None, estimate: None, errors: None });
        };
        ensure_dir(dir)?;
        let open = |flag: bool, name: &str, header: &[&str]| -> Result<Option<CsvSink>> {
            if flag {
                CsvSink::create(&dir.join(name), header).map(Some)
            } else {
                Ok(None)
            }
        };
        Ok(Self {
            plant: open(plant, "plant.csv", FIELD_HEADER)?,
            estimate: open(estimate, "estimate.csv", FIELD_HEADER)?,
            errors: open(errors, "errors.csv", ERROR_HEADER)?,
        })
    }

    fn finish(self) -> Result<()> {
        for sink in [self.plant, self.estimate, self.errors].into_iter().flatten() {
            sink.finish()?;
        }
        Ok(())
    }
}

/// Largest plant density seen during a run. The constant-inflow boundary can
/// push the inlet density past `rho_max`; this is reported, not rejected.
#[derive(Default)]
struct PeakDensity {
    rho: f64,
    t: f64,
}

impl PeakDensity {
    fn observe(&mut self, state: &FieldState) {
        let m = state.max_density();
        if m > self.rho {
            self.rho = m;
            self.t = state.t;
        }
    }

    fn summarize(&self, p: &ModelParameters, summary: &mut Vec<(String, String)>) {
        summary.push(("max_plant_density".into(), self.rho.to_string()));
        summary.push(("max_plant_density_time".into(), self.t.to_string()));
        summary.push(("plant_exceeded_jam_density".into(), (self.rho >= p.rho_max()).to_string()));
    }
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "none".to_string(), |x| x.to_string())
}

fn measurement_from_plant(bc: &crate::solver::BoundaryCells, t: f64) -> Result<BoundaryMeasurement> {
    BoundaryMeasurement::new(t, bc.inlet_flux(), bc.outlet_flux(), bc.right_v)
}

/// Plant and observer advanced in lockstep; the plant's boundary sensors feed
/// the observer at every step.
pub fn run_closed_loop(cfg: &ScenarioConfig, out: Option<&Path>) -> Result<RunReport> {
    let ctx = Context::new(cfg)?;
    ctx.ss.require_congested()?;
    let gt = ctx.gains(cfg.gains)?;
    let (p, ss, grid) = (&ctx.params, &ctx.ss, &ctx.grid);
    let mut report = RunReport::new(Mode::ClosedLoop, ctx.steps, grid);
    let mut sinks = Sinks::open(out, true, true, true)?;

    let mut plant = ctx.initial_plant(cfg)?;
    let mut obs = ctx.initial_observer(cfg)?;
    let mut mass = Vec::with_capacity(ctx.steps + 1);
    let mut peak = PeakDensity::default();

    for k in 0..=ctx.steps {
        let t = grid.time_at(k);
        plant.t = t;
        peak.observe(&plant);
        obs.t = t;
        if ctx.snapshot(k) {
            let e = estimation_error(&plant, &obs, ss, grid.dx())?;
            let sample = ErrorSample { t, l2_rho: e.l2_rho, l2_v: e.l2_v, rel_rho: e.rel_rho, rel_v: e.rel_v };
            report.errors.push(sample);
            if let Some(s) = sinks.plant.as_mut() {
                s.field(grid, &plant)?;
            }
            if let Some(s) = sinks.estimate.as_mut() {
                s.field(grid, &obs)?;
            }
            if let Some(s) = sinks.errors.as_mut() {
                s.error(&sample)?;
            }
        }
        if k == ctx.steps {
            mass.push(MassRecord { mass: plant.mass(grid.dx()), flux_in: 0.0, flux_out: 0.0 });
            break;
        }
        let bc = apply_plant_bc(p, ss, &plant)?;
        let m = measurement_from_plant(&bc, t)?;
        report.measurements.push(m);
        report.outlet_speed.push((t, bc.right_v));

        let next = lax_wendroff_step(p, grid, &to_conservative(p, &plant), &bc, None, t)?;
        mass.push(MassRecord { mass: plant.mass(grid.dx()), flux_in: next.flux_in, flux_out: next.flux_out });
        obs = nonlinear_observer_step(p, ss, grid, &gt, &obs, &m, cfg.injection_factor)?;
        plant = from_conservative(p, &next.state, grid.time_at(k + 1))?;
    }
    sinks.finish()?;

    report.mass_balance_residual = Some(mass_balance_residual(grid, &mass)? / mass[0].mass);
    let mut summary = ctx.base_summary(cfg);
    summary.push(("gains".into(), cfg.gains.name().into()));
    summary.push(("injection_factor".into(), cfg.injection_factor.name().into()));
    for th in CONVERGENCE_THRESHOLDS {
        summary.push((format!("convergence_time_{th}"), fmt_opt(report.convergence_time(th))));
    }
    let last = report.errors.last().copied();
    summary.push(("final_rel_rho_err".into(), fmt_opt(last.map(|e| e.rel_rho))));
    summary.push(("final_rel_v_err".into(), fmt_opt(last.map(|e| e.rel_v))));
    summary.push(("initial_rel_rho_err".into(), fmt_opt(report.errors.first().map(|e| e.rel_rho))));
    summary.push(("initial_rel_v_err".into(), fmt_opt(report.errors.first().map(|e| e.rel_v))));
    summary.push(("mass_balance_residual".into(), fmt_opt(report.mass_balance_residual)));
    peak.summarize(p, &mut summary);
    report.final_plant = Some(plant);
    report.final_estimate = Some(obs);
    report.summary = summary;
    finish_outputs(out, &report)?;
    Ok(report)
}

/// Observer alone, driven by recorded boundary data.
pub fn run_replay(cfg: &ScenarioConfig, series: &BoundarySeries, out: Option<&Path>) -> Result<RunReport> {
    let ctx = Context::new(cfg)?;
    ctx.ss.require_congested()?;
    let gt = ctx.gains(cfg.gains)?;
    let (p, ss, grid) = (&ctx.params, &ctx.ss, &ctx.grid);
    if ctx.steps > 0 {
        series.require_coverage(0.0, grid.time_at(ctx.steps - 1))?;
    }
    let mut report = RunReport::new(Mode::Replay, ctx.steps, grid);
    let mut sinks = Sinks::open(out, false, true, false)?;
    let mut obs = ctx.initial_observer(cfg)?;

    for k in 0..=ctx.steps {
        let t = grid.time_at(k);
        obs.t = t;
        if ctx.snapshot(k) {
            if let Some(s) = sinks.estimate.as_mut() {
                s.field(grid, &obs)?;
            }
        }
        if k == ctx.steps {
            break;
        }
        let m = series.at(t)?;
        report.measurements.push(m);
        report.outlet_speed.push((t, m.y_v_out));
        obs = nonlinear_observer_step(p, ss, grid, &gt, &obs, &m, cfg.injection_factor)?;
    }
    sinks.finish()?;

    let mut summary = ctx.base_summary(cfg);
    summary.push(("gains".into(), cfg.gains.name().into()));
    summary.push(("injection_factor".into(), cfg.injection_factor.name().into()));
    summary.push(("measurement_rows".into(), series.records().len().to_string()));
    report.final_estimate = Some(obs);
    report.summary = summary;
    finish_outputs(out, &report)?;
    Ok(report)
}

/// Plant alone under the constant-inflow, constant-outflow-density boundaries.
pub fn run_plant_only(cfg: &ScenarioConfig, out: Option<&Path>) -> Result<RunReport> {
    let ctx = Context::new(cfg)?;
    let (p, ss, grid) = (&ctx.params, &ctx.ss, &ctx.grid);
    let mut report = RunReport::new(Mode::PlantOnly, ctx.steps, grid);
    let mut sinks = Sinks::open(out, true, false, false)?;
    let mut plant = ctx.initial_plant(cfg)?;
    let mut mass = Vec::with_capacity(ctx.steps + 1);
    let mut tracer = VehicleTracer::at_inlet();
    let mut peak = PeakDensity::default();

    for k in 0..=ctx.steps {
        let t = grid.time_at(k);
        plant.t = t;
        peak.observe(&plant);
        if ctx.snapshot(k) {
            if let Some(s) = sinks.plant.as_mut() {
                s.field(grid, &plant)?;
            }
        }
        if k == ctx.steps {
            mass.push(MassRecord { mass: plant.mass(grid.dx()), flux_in: 0.0, flux_out: 0.0 });
            break;
        }
        let bc = apply_plant_bc(p, ss, &plant)?;
        let m = measurement_from_plant(&bc, t)?;
        report.measurements.push(m);
        report.outlet_speed.push((t, bc.right_v));
        tracer.advance(grid, &plant);
        let next = lax_wendroff_step(p, grid, &to_conservative(p, &plant), &bc, None, t)?;
        mass.push(MassRecord { mass: plant.mass(grid.dx()), flux_in: next.flux_in, flux_out: next.flux_out });
        plant = from_conservative(p, &next.state, grid.time_at(k + 1))?;
    }
    sinks.finish()?;

    report.mass_balance_residual = Some(mass_balance_residual(grid, &mass)? / mass[0].mass);
    report.transit_time = tracer.exit_time;
    let end = grid.time_at(ctx.steps);
    let early = oscillation_amplitude(&report.outlet_speed, 0.0, 50.0_f64.min(end));
    let late = oscillation_amplitude(&report.outlet_speed, (end - 40.0).max(0.0), end);
    let mut summary = ctx.base_summary(cfg);
    summary.push(("vehicle_transit_time".into(), fmt_opt(report.transit_time)));
    summary.push(("outlet_speed_amplitude_initial".into(), fmt_opt(early)));
    summary.push(("outlet_speed_amplitude_final".into(), fmt_opt(late)));
    summary.push(("mass_balance_residual".into(), fmt_opt(report.mass_balance_residual)));
    peak.summarize(p, &mut summary);
    report.final_plant = Some(plant);
    report.summary = summary;
    finish_outputs(out, &report)?;
    Ok(report)
}

fn finish_outputs(out: Option<&Path>, report: &RunReport) -> Result<()> {
    let Some(dir) = out else { return Ok(()) };
    let path = dir.join("measurements.csv");
    let file = std::fs::File::create(&path).map_err(|e| ArzError::io(&path, e))?;
    write_measurements(std::io::BufWriter::new(file), &report.measurements)?;
    write_summary(&dir.join("summary.txt"), &report.summary)
}

/// Linear plant/observer pair on one grid.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearGridResult {
    pub n_cells: usize,
    pub dx: f64,
    pub dt: f64,
    pub initial_norm: f64,
    /// `(t, (|w_err| + |v_err|) / initial)`, one entry per step including t = 0.
    pub series: Vec<(f64, f64)>,
    /// Relative error at the first step with `t >= t_f`.
    pub rel_at_tf: f64,
    /// Relative error at `t_f + 5 dt`.
    pub rel_at_margin: f64,
}

impl LinearGridResult {
    pub fn settle_time(&self, threshold: f64) -> Option<f64> {
        settle_time(&self.series, threshold)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearVerifyReport {
    pub t_f: f64,
    pub variant: GainVariant,
    pub grids: Vec<LinearGridResult>,
    /// `log2(e_h / e_{h/2})` for consecutive grids.
    pub pairwise_orders: Vec<f64>,
    /// Least-squares slope of `log e` against `log dx`.
    pub fitted_order: f64,
    /// Same run on the coarsest grid with the other gain family, for comparison.
    pub comparison: Option<LinearGridResult>,
    pub summary: Vec<(String, String)>,
}

/// Number of steps past `t_f` at which the linear error is evaluated.
pub const MARGIN_STEPS: usize = 5;

pub fn linear_pair_run(cfg: &ScenarioConfig, n_cells: usize, variant: GainVariant) -> Result<LinearGridResult> {
    let p = cfg.params;
    let ss = cfg.steady_state()?;
    ss.require_congested()?;
    let grid = Grid::with_safety(&p, &ss, n_cells, cfg.courant_safety)?;
    let gt = build_gain_table(&ss, &p, &grid, variant)?;
    let t_f = finite_convergence_time(&ss, &p)?;
    let x = grid.cell_centers();
    let plant0 = initial_condition_sinusoid(&p, &ss, &grid, &cfg.initial)?;
    let (mut w, mut v) = physical_to_scaled(&ss, &p, &x, &plant0.rho, &plant0.v)?;
    let (mut w_hat, mut v_hat) = match cfg.observer_init {
        ObserverInit::Setpoint => (vec![0.0; n_cells], vec![0.0; n_cells]),
        ObserverInit::Plant => (w.clone(), v.clone()),
    };
    let n = n_cells;
    let dx = grid.dx();
    let norm = |w: &[f64], v: &[f64], wh: &[f64], vh: &[f64]| {
        let ew: Vec<f64> = w.iter().zip(wh).map(|(a, b)| a - b).collect();
        let ev: Vec<f64> = v.iter().zip(vh).map(|(a, b)| a - b).collect();
        l2_norm(&ew, dx) + l2_norm(&ev, dx)
    };
    // Reference norm: the plant's own deviation, so that a zero mismatch reports zero.
    let reference = l2_norm(&w, dx) + l2_norm(&v, dx);
    if reference == 0.0 {
        return Err(ArzError::Usage("linear verification needs a non-zero initial perturbation".into()));
    }
    let initial_norm = norm(&w, &v, &w_hat, &v_hat);
    let tf_step = grid.steps_for(t_f);
    let steps = tf_step + MARGIN_STEPS;
    let mut series = Vec::with_capacity(steps + 1);
    series.push((0.0, initial_norm / reference));
    let gap = ss.lambda1 - ss.lambda2;
    for k in 0..steps {
        let w_bar_l = w[n - 1];
        let v_right = linear_plant_right_value(&ss, &p, w_bar_l);
        let data = LinearBoundaryData { y_q_in: 0.0, y_v: v_right * gap / ss.q_star, w_bar_l };
        let (wn, vn) = linear_transport_step(&ss, &p, &grid, &w, &v, ScaledBoundary { y_q_in: 0.0, v_right }, None)?;
        let (whn, vhn) = linear_observer_step(&ss, &p, &grid, &gt, &w_hat, &v_hat, data)?;
        w = wn;
        v = vn;
        w_hat = whn;
        v_hat = vhn;
        series.push((grid.time_at(k + 1), norm(&w, &v, &w_hat, &v_hat) / reference));
    }
    Ok(LinearGridResult {
        n_cells,
        dx,
        dt: grid.dt(),
        initial_norm: initial_norm / reference,
        rel_at_tf: series[tf_step].1,
        rel_at_margin: series[steps].1,
        series,
    })
}

/// Linear convergence study on `n`, `2n` and `4n` cells.
pub fn run_linear_verify(cfg: &ScenarioConfig, out: Option<&Path>) -> Result<LinearVerifyReport> {
    let ss = cfg.steady_state()?;
    ss.require_congested()?;
    let t_f = finite_convergence_time(&ss, &cfg.params)?;
    let grids: Vec<LinearGridResult> =
        [1, 2, 4].iter().map(|&m| linear_pair_run(cfg, cfg.n_cells * m, cfg.gains)).collect::<Result<_>>()?;
    let errs: Vec<f64> = grids.iter().map(|g| g.rel_at_margin).collect();
    let pairwise_orders: Vec<f64> = errs.windows(2).map(|e| (e[0] / e[1]).log2()).collect();
    let fitted_order = {
        let pts: Vec<(f64, f64)> = grids.iter().map(|g| (g.dx.ln(), g.rel_at_margin.ln())).collect();
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / pts.len() as f64;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / pts.len() as f64;
        let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
        sxy / sxx
    };
    let other = match cfg.gains {
        GainVariant::Exact => GainVariant::Published,
        GainVariant::Published => GainVariant::Exact,
    };
    let comparison = Some(linear_pair_run(cfg, cfg.n_cells, other)?);

    let mut summary = vec![
        ("mode".to_string(), Mode::LinearVerify.name().to_string()),
        ("gains".into(), cfg.gains.name().into()),
        ("t_f".into(), t_f.to_string()),
        ("margin_steps".into(), MARGIN_STEPS.to_string()),
    ];
    for g in &grids {
        summary.push((format!("n{}_rel_err_at_t_f", g.n_cells), g.rel_at_tf.to_string()));
        summary.push((format!("n{}_rel_err_at_t_f_plus_margin", g.n_cells), g.rel_at_margin.to_string()));
        summary.push((format!("n{}_settle_time_0.02", g.n_cells), fmt_opt(g.settle_time(0.02))));
    }
    for (i, o) in pairwise_orders.iter().enumerate() {
        summary.push((format!("order_{}_{}", grids[i].n_cells, grids[i + 1].n_cells), o.to_string()));
    }
    summary.push(("fitted_order".into(), fitted_order.to_string()));
    if let Some(c) = &comparison {
        summary.push((
            format!("{}_gains_n{}_rel_err_at_t_f_plus_margin", other.name(), c.n_cells),
            c.rel_at_margin.to_string(),
        ));
    }
    if let Some(dir) = out {
        ensure_dir(dir)?;
        let mut sink = CsvSink::create(&dir.join("linear_errors.csv"), &["n_cells", "t", "rel_err"])?;
        for g in &grids {
            for &(t, e) in &g.series {
                sink.numbers(&[g.n_cells as f64, t, e])?;
            }
        }
        sink.finish()?;
        write_summary(&dir.join("summary.txt"), &summary)?;
    }
    Ok(LinearVerifyReport { t_f, variant: cfg.gains, grids, pairwise_orders, fitted_order, comparison, summary })
}

/// Gain table on the configured grid, optionally written as `gains.csv`.
pub fn run_gains(cfg: &ScenarioConfig, out: Option<&Path>) -> Result<GainTable> {
    let ctx = Context::new(cfg)?;
    let gt = ctx.gains(cfg.gains)?;
    if let Some(dir) = out {
        ensure_dir(dir)?;
        gt.save_csv(&dir.join("gains.csv"))?;
    }
    Ok(gt)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::config::parse_config;

    #[test]
    fn closed_loop_at_setpoint_is_quiet() {
        let cfg = parse_config("amp_rho = 0\namp_v = 0\nduration = 5\nn_cells = 50").unwrap();
        let r = run_closed_loop(&cfg, None).unwrap();
        assert!(r.errors.iter().all(|e| e.worst_relative() < 1e-13));
        assert_eq!(r.convergence_time(0.02), Some(0.0));
        assert!(r.mass_balance_residual.unwrap() < 1e-12);
    }

    #[test]
    fn observer_from_plant_converges_at_zero() {
        let cfg = parse_config("observer_ic = plant\nduration = 20\nn_cells = 100").unwrap();
        let r = run_closed_loop(&cfg, None).unwrap();
        assert_eq!(r.convergence_time(1e-9), Some(0.0));
    }

    #[test]
    fn free_flow_is_rejected_for_estimation() {
        let cfg = parse_config("rho_star_veh_per_km = 40\nduration = 1").unwrap();
        assert!(matches!(run_closed_loop(&cfg, None), Err(ArzError::Regime(_))));
        assert!(run_plant_only(&cfg, None).is_ok());
    }

    #[test]
    fn linear_zero_mismatch_stays_zero() {
        let cfg = parse_config("observer_ic = plant\nn_cells = 50").unwrap();
        let r = linear_pair_run(&cfg, 50, GainVariant::Exact).unwrap();
        assert!(r.series.iter().all(|&(_, e)| e < 1e-13), "max {:?}", r.series.iter().map(|e| e.1).fold(0.0, f64::max));
    }

    #[test]
    fn replay_needs_coverage() {
        let cfg = parse_config("duration = 10\nn_cells = 40").unwrap();
        let ss = cfg.steady_state().unwrap();
        let series = BoundarySeries::new(
            vec![BoundaryMeasurement::at_setpoint(&ss, 0.0), BoundaryMeasurement::at_setpoint(&ss, 5.0)],
            Default::default(),
        )
        .unwrap();
        assert!(matches!(run_replay(&cfg, &series, None), Err(ArzError::Data(_))));
    }
}
