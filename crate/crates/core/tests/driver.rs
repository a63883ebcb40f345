mod common;

use brakke_core::driver::*;
use brakke_core::io::config::FlowOverrides;

fn paper(eps: f64, j: u64) -> FlowConfig {
    let o = FlowOverrides { mode: Some(Mode::Paper), eps: Some(eps), j: Some(j), ..Default::default() };
    // resolving checks nothing paper-specific, so build it through the desk defaults
    let mut c = FlowOverrides { mode: Some(Mode::Desk), ..o.clone() }.resolve().unwrap();
    c.mode = Mode::Paper;
    c.dt = paper_time_step(eps, c.kappa).1;
    c
}

#[test]
fn desk_report_is_informational() {
    let c = FlowConfig::desk(0.5, 0.1, 1.0);
    let rep = validate_params(&c, CURVE_DIM).unwrap();
    assert!(!rep.failed().is_empty());
    assert_eq!(rep.conditions.len(), 5);
    assert!(rep.conditions[0].pass.is_none());
}

#[test]
fn coarse_paper_parameters_fail_on_the_first_inequality() {
    let err = validate_params(&paper(0.5, 16), CURVE_DIM).unwrap_err();
    let ConfigError::Paper(names) = err else { panic!("{err:?}") };
    assert!(names.contains("eps^(1/6) <= 1/(2j)"), "{names}");
}

#[test]
fn paper_j16_needs_more_than_small_eps() {
    // ε^{1/6} ≤ 1/32 holds, and so do the power-law and time-step conditions, but the anchor
    // damping inequality needs j^{1/8} far above 16^{1/8}
    let c = paper(0.9 * 32f64.powi(-6), 16);
    let mut desk = c.clone();
    desk.mode = Mode::Desk;
    let rep = validate_params(&desk, CURVE_DIM).unwrap();
    let failed: Vec<&str> = rep.failed().iter().map(|c| c.name.as_str()).collect();
    assert_eq!(failed, vec!["2 j eps^(-kappa) exp(-j^(1/8)) <= 1/(4 j^(1/4))"]);
    assert!(validate_params(&c, CURVE_DIM).is_err());
}

#[test]
fn paper_time_step_is_bracketed() {
    for eps in [0.5, 0.3, 0.1, 0.02] {
        let (p, dt) = paper_time_step(eps, 23);
        let ln_top = 23.0 * f64::ln(eps);
        assert!(dt.ln() <= ln_top + 1e-12 && dt.ln() > ln_top - 2f64.ln());
        assert_eq!(dt, 2f64.powi(-(p as i32)));
    }
}

#[test]
fn desk_j_meets_the_drift_target() {
    let (eps, t) = (0.02, 0.5);
    let j = desk_j(eps, t, 1e-6);
    let drift = |j: u64| 2.0 / (eps * eps) * (-(j as f64).powf(0.125)).exp() * t;
    assert!(drift(j) <= 1e-6);
    assert!(drift(j - 1) > 1e-6 * (1.0 - 1e-9));
    assert_eq!(default_kappa(1), 23);
}

#[test]
fn semantic_errors_name_the_field() {
    let mut c = FlowConfig::desk(0.02, 1e-4, 0.1);
    c.dt = -1.0;
    assert_eq!(c.check().unwrap_err().to_string(), "dt must be positive");
    c.dt = 1e-4;
    c.eps = 1.5;
    assert!(c.check().unwrap_err().to_string().starts_with("eps"));
}

#[test]
fn chord_stays_put() {
    let traj = common::run_builtin("chord", |o| o.t_end = Some(100.0 * 1e-4));
    assert_eq!(traj.entries.len(), 101);
    let first = &traj.snapshots[0].network;
    let last = traj.final_network().unwrap();
    assert!(common::hausdorff(first, last, 20) < 1e-4);
}

#[test]
fn arc_length_decreases() {
    let traj = common::run_builtin("arc-relax", |o| o.t_end = Some(0.03));
    let c = &traj.config;
    let slack = c.dt * c.eps.powf(1.0 / 6.0);
    let lengths: Vec<f64> = traj.records().map(|r| r.length).collect();
    for w in lengths.windows(2) {
        assert!(w[1] <= w[0] + slack, "{} -> {}", w[0], w[1]);
    }
    assert!(lengths[lengths.len() - 1] < lengths[0] - 1e-3);
}

#[test]
fn identical_runs_are_bit_identical() {
    let go = |seed| {
        common::run_builtin("steiner4", |o| {
            o.t_end = Some(20.0 * 1e-4);
            o.jitter = Some(0.2);
            o.seed = Some(seed);
        })
    };
    let (a, b, c) = (go(7), go(7), go(8));
    assert_eq!(a, b);
    let bits = |t: &Trajectory| serde_json::to_string(&t.entries).unwrap();
    assert_eq!(bits(&a), bits(&b));
    assert_ne!(a.snapshots[0], c.snapshots[0]);
}

#[test]
fn static_chord_is_stationary_in_the_first_window() {
    let traj = common::run_builtin("chord", |o| {
        o.t_end = Some(80.0 * 1e-4);
        o.stop_when_stationary = Some(true);
    });
    let w = traj.config.stationarity_window;
    let t = traj.stationary_at.expect("chord should be stationary");
    assert!(t <= (w as f64 - 1.0) * traj.config.dt * (1.0 + 1e-9), "t = {t}");
    assert_eq!(traj.entries.len(), w);
    let recs: Vec<_> = traj.records().cloned().collect();
    assert_eq!(detect_stationarity(&recs, w, traj.config.stationarity_tol), Some(t));
}

#[test]
fn shrinking_circle_is_never_stationary() {
    let traj = common::run_builtin("circle", |o| o.t_end = Some(0.05));
    assert_eq!(traj.stationary_at, None);
    let recs: Vec<_> = traj.records().cloned().collect();
    assert_eq!(detect_stationarity(&recs, 50, 1e-3), None);
    // the normal speed stays near the curvature 1/R ≥ 2
    assert!(recs.iter().all(|r| r.max_normal_speed > 1.9));
}

#[test]
fn invalid_initial_network_is_rejected() {
    let s = brakke_core::io::scenario::builtin("chord").unwrap();
    let (mut net, _) = s.network().unwrap();
    net.edges[0].left = net.edges[0].right;
    let cfg = s.overrides.resolve().unwrap();
    assert!(matches!(run(&cfg, &net), Err(RunError::InvalidInitial(_))));
}
