use crate::grid::Grid;
use crate::solver::FieldState;

/// Integrated estimation errors at one recorded instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorSample {
    pub t: f64,
    pub l2_rho: f64,
    pub l2_v: f64,
    pub rel_rho: f64,
    pub rel_v: f64,
}

impl ErrorSample {
    pub fn worst_relative(&self) -> f64 {
        self.rel_rho.max(self.rel_v)
    }
}

/// Earliest recorded time after which both relative errors stay below
/// `threshold` at every later sample; `None` if the last sample is not below it.
pub fn detect_convergence_time(series: &[ErrorSample], threshold: f64) -> Option<f64> {
    let values: Vec<(f64, f64)> = series.iter().map(|s| (s.t, s.worst_relative())).collect();
    settle_time(&values, threshold)
}

/// Same rule for a scalar series of `(t, value)` pairs.
pub fn settle_time(series: &[(f64, f64)], threshold: f64) -> Option<f64> {
    let mut first_good = None;
    for &(t, value) in series.iter().rev() {
        // NaN counts as not converged
        if value < threshold {
            first_good = Some(t);
        } else {
            break;
        }
    }
    first_good
}

/// Half the peak-to-peak range of the samples with `t0 <= t <= t1`.
pub fn oscillation_amplitude(series: &[(f64, f64)], t0: f64, t1: f64) -> Option<f64> {
    let mut window = series.iter().filter(|(t, _)| *t >= t0 && *t <= t1).map(|&(_, v)| v).peekable();
    window.peek()?;
    let (lo, hi) = window.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    Some(0.5 * (hi - lo))
}

/// Follows one vehicle through the velocity field, `dx/dt = v(x, t)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VehicleTracer {
    pub position: f64,
    pub exit_time: Option<f64>,
}

impl VehicleTracer {
    pub fn at_inlet() -> Self {
        Self { position: 0.0, exit_time: None }
    }

    /// Advances by one step using the speed at the current position, linearly
    /// interpolated between cell centers (constant outside them).
    pub fn advance(&mut self, grid: &Grid, state: &FieldState) {
        if self.exit_time.is_some() {
            return;
        }
        let speed = interpolate_cells(grid, &state.v, self.position);
        let dt = grid.dt();
        let next = self.position + dt * speed;
        if next >= grid.length() {
            let fraction = (grid.length() - self.position) / (next - self.position);
            self.exit_time = Some(state.t + fraction * dt);
            self.position = grid.length();
        } else {
            self.position = next;
        }
    }
}

fn interpolate_cells(grid: &Grid, values: &[f64], x: f64) -> f64 {
    let n = values.len();
    let s = x / grid.dx() - 0.5;
    if s <= 0.0 {
        return values[0];
    }
    let i = s.floor() as usize;
    if i + 1 >= n {
        return values[n - 1];
    }
    let theta = s - i as f64;
    values[i] + theta * (values[i + 1] - values[i])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{make_steady_state, ModelParameters};
    use proptest::prelude::*;

    fn sample(t: f64, e: f64) -> ErrorSample {
        ErrorSample { t, l2_rho: e, l2_v: e, rel_rho: e, rel_v: e / 2.0 }
    }

    #[test]
    fn convergence_examples() {
        let below: Vec<_> = (0..10).map(|k| sample(k as f64, 0.01)).collect();
        assert_eq!(detect_convergence_time(&below, 0.03), Some(0.0));
        let diverging: Vec<_> = (0..10).map(|k| sample(k as f64, 0.01 * k as f64)).collect();
        assert_eq!(detect_convergence_time(&diverging, 0.03), None);
        let decaying: Vec<_> = (0..10).map(|k| sample(k as f64, 0.1 / (1.0 + k as f64))).collect();
        // 0.1/(1+k) < 0.03 from k = 3 on
        assert_eq!(detect_convergence_time(&decaying, 0.03), Some(3.0));
        assert_eq!(detect_convergence_time(&[], 0.03), None);
    }

    #[test]
    fn amplitude() {
        let s: Vec<_> = (0..100).map(|k| (k as f64, (k as f64).sin() * 2.0)).collect();
        assert!((oscillation_amplitude(&s, 0.0, 99.0).unwrap() - 2.0).abs() < 1e-2);
        assert!(oscillation_amplitude(&s, 200.0, 300.0).is_none());
    }

    #[test]
    fn tracer_uniform_speed() {
        let p = ModelParameters::table1();
        let ss = make_steady_state(&p, 0.12).unwrap();
        let g = Grid::with_safety(&p, &ss, 200, 0.5).unwrap();
        let mut state = FieldState::setpoint(&ss, &g);
        let mut tr = VehicleTracer::at_inlet();
        let mut k = 0;
        while tr.exit_time.is_none() {
            state.t = g.time_at(k);
            tr.advance(&g, &state);
            k += 1;
        }
        assert!((tr.exit_time.unwrap() - 50.0).abs() < 1e-9);
    }

    proptest! {
        #[test]
        fn convergence_time_monotone_in_threshold(
            values in proptest::collection::vec(0.0f64..0.2, 1..60),
            a in 0.0f64..0.2,
            b in 0.0f64..0.2,
        ) {
            let series: Vec<_> = values.iter().enumerate().map(|(k, &e)| sample(k as f64, e)).collect();
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            match (detect_convergence_time(&series, lo), detect_convergence_time(&series, hi)) {
                (Some(t_lo), Some(t_hi)) => prop_assert!(t_hi <= t_lo),
                (Some(_), None) => prop_assert!(false, "larger threshold lost convergence"),
                _ => {}
            }
        }
    }
}
