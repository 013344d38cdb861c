use arz_core::harness::{linear_pair_run, parse_config, run_closed_loop, run_linear_verify, run_plant_only};
use arz_core::GainVariant;

#[test]
fn observer_started_on_plant_converges_immediately() {
    let cfg = parse_config("observer_ic = plant\nduration = 60").unwrap();
    let r = run_closed_loop(&cfg, None).unwrap();
    assert_eq!(r.convergence_time(0.02), Some(0.0));
    assert!(r.max_error_after(0.0).unwrap() < 1e-10);
}

#[test]
fn closed_loop_errors_shrink() {
    let r = run_closed_loop(&parse_config("").unwrap(), None).unwrap();
    let first = r.errors.first().unwrap();
    let last = r.errors.last().unwrap();
    assert!((first.rel_rho - 0.1 / 2f64.sqrt()).abs() < 1e-3);
    assert!(last.rel_rho < 1e-3 && last.rel_v < 1e-3);
    // convergence time is monotone in the threshold
    let times: Vec<f64> = [0.01, 0.02, 0.03, 0.05].iter().map(|&th| r.convergence_time(th).unwrap()).collect();
    assert!(times.windows(2).all(|w| w[1] <= w[0]), "{times:?}");
}

#[test]
fn alternative_observer_settings_run() {
    for text in ["injection_factor = local", "gains = published"] {
        let cfg = parse_config(&format!("{text}\nduration = 240")).unwrap();
        let r = run_closed_loop(&cfg, None).unwrap();
        let last = r.errors.last().unwrap();
        assert!(last.worst_relative() < 0.05, "{text}: {}", last.worst_relative());
    }
}

#[test]
fn linear_convergence_tracks_t_f_when_road_doubles() {
    let cfg = parse_config("length = 1000\nn_cells = 400").unwrap();
    let r = linear_pair_run(&cfg, 400, GainVariant::Exact).unwrap();
    let settle = r.settle_time(0.02).unwrap();
    let t_f = 150.0;
    // within one transport period L / lambda1
    assert!((settle - t_f).abs() <= 100.0, "settle {settle}");
    assert!(r.rel_at_margin < 0.02);
}

#[test]
fn linear_verify_reports_published_comparison() {
    let cfg = parse_config("").unwrap();
    let r = run_linear_verify(&cfg, None).unwrap();
    assert_eq!(r.grids.len(), 3);
    let published = r.comparison.as_ref().unwrap();
    // The published gains leave a visible residual where the exact ones do not.
    assert!(published.rel_at_margin > 5.0 * r.grids[0].rel_at_margin);
}

#[test]
fn plant_only_duration_and_mass() {
    let r = run_plant_only(&parse_config("duration = 100").unwrap(), None).unwrap();
    assert_eq!(r.steps, 1600);
    assert!(r.mass_balance_residual.unwrap() < 1e-12);
    assert!(r.transit_time.is_some());
}
