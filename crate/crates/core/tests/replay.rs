use arz_core::harness::{
    load_measurements, parse_config, read_measurements, run_closed_loop, run_replay, BoundarySeries, Interpolation,
};
use arz_core::BoundaryMeasurement;

#[test]
fn closed_loop_and_replay_agree_bitwise() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = parse_config("duration = 60\nn_cells = 100").unwrap();
    let cl_dir = dir.path().join("closed");
    let closed = run_closed_loop(&cfg, Some(&cl_dir)).unwrap();

    let series = load_measurements(&cl_dir.join("measurements.csv"), Interpolation::Linear).unwrap();
    assert_eq!(series.records(), closed.measurements.as_slice());
    let rp_dir = dir.path().join("replay");
    let replay = run_replay(&cfg, &series, Some(&rp_dir)).unwrap();

    let a = closed.final_estimate.unwrap();
    let b = replay.final_estimate.unwrap();
    for i in 0..a.len() {
        assert_eq!(a.rho[i].to_bits(), b.rho[i].to_bits());
        assert_eq!(a.v[i].to_bits(), b.v[i].to_bits());
    }
    let ea = std::fs::read(cl_dir.join("estimate.csv")).unwrap();
    let eb = std::fs::read(rp_dir.join("estimate.csv")).unwrap();
    assert!(ea == eb, "estimate.csv differs between closed loop and replay");
}

#[test]
fn replay_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = parse_config("duration = 20\nn_cells = 80").unwrap();
    let src = dir.path().join("src");
    run_closed_loop(&cfg, Some(&src)).unwrap();
    let series = load_measurements(&src.join("measurements.csv"), Interpolation::Linear).unwrap();
    let (d1, d2) = (dir.path().join("r1"), dir.path().join("r2"));
    run_replay(&cfg, &series, Some(&d1)).unwrap();
    run_replay(&cfg, &series, Some(&d2)).unwrap();
    for f in ["estimate.csv", "measurements.csv", "summary.txt"] {
        assert_eq!(std::fs::read(d1.join(f)).unwrap(), std::fs::read(d2.join(f)).unwrap(), "{f}");
    }
}

#[test]
fn setpoint_measurements_keep_observer_at_setpoint() {
    let cfg = parse_config("duration = 240").unwrap();
    let csv = "t,q_in,q_out,v_out\n0,1.2,1.2,10\n240,1.2,1.2,10\n";
    let series = read_measurements(csv.as_bytes(), Interpolation::Linear).unwrap();
    let r = run_replay(&cfg, &series, None).unwrap();
    let est = r.final_estimate.unwrap();
    assert!(est.rho.iter().all(|&x| (x - 0.12).abs() < 1e-12));
    assert!(est.v.iter().all(|&x| (x - 10.0).abs() < 1e-10));
}

#[test]
fn sparse_measurements_are_interpolated() {
    // Resample a closed-loop record every 0.5 s; the observer driven by the
    // interpolated data should still settle near the plant.
    let cfg = parse_config("duration = 120\nn_cells = 100").unwrap();
    let closed = run_closed_loop(&cfg, None).unwrap();
    let sparse: Vec<BoundaryMeasurement> = closed.measurements.iter().step_by(8).copied().collect();
    let mut sparse = sparse;
    let last = *closed.measurements.last().unwrap();
    if sparse.last().unwrap().t < last.t {
        sparse.push(last);
    }
    let series = BoundarySeries::new(sparse.clone(), Interpolation::Linear).unwrap();
    let replay = run_replay(&cfg, &series, None).unwrap();
    let plant = closed.final_plant.unwrap();
    let est = replay.final_estimate.unwrap();
    let err = arz_core::estimation_error(&plant, &est, &cfg.steady_state().unwrap(), cfg.grid().unwrap().dx()).unwrap();
    assert!(err.rel_rho < 0.03 && err.rel_v < 0.03, "{} {}", err.rel_rho, err.rel_v);

    let held = BoundarySeries::new(sparse, Interpolation::Hold).unwrap();
    assert!(run_replay(&cfg, &held, None).is_ok());
}
