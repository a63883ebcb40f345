mod common;

use std::f64::consts::PI;

use brakke_core::cutoff::DampingField;
use brakke_core::diagnostics::*;
use brakke_core::geometry::{dj_depth, v2, ConvexDomain, RegionSystem, Vec2};
use brakke_core::io::scenario::{builtin, builtin_scenarios};
use brakke_core::kernel::SmoothingKernel;
use brakke_core::partition::{Edge, LabeledNetwork, Vertex, VertexKind};
use brakke_core::varifold::ScalarField;
use rand::Rng;

/// Junction at the origin with straight spokes to the unit circle at the given angles (degrees).
fn spokes(degrees: &[f64]) -> LabeledNetwork {
    let k = degrees.len();
    let mut vertices = vec![Vertex { pos: Vec2::zeros(), kind: VertexKind::Junction }];
    let mut edges = vec![];
    for (i, d) in degrees.iter().enumerate() {
        let t = d.to_radians();
        vertices.push(Vertex { pos: v2(t.cos(), t.sin()), kind: VertexKind::Anchor });
        let right = if i == 0 { k as u32 } else { i as u32 };
        edges.push(Edge { a: 0, b: i + 1, interior: vec![v2(t.cos(), t.sin()) * 0.5], left: i as u32 + 1, right });
    }
    LabeledNetwork { domain: ConvexDomain::unit_disk(), phases: k as u32, vertices, edges, background: 1 }
}

#[test]
fn symmetric_junction_angles() {
    for scale in [0.0, 0.02, 0.3] {
        let a = junction_angles(&spokes(&[90.0, 210.0, 330.0]), scale);
        assert_eq!(a.len(), 1);
        assert!(a[0].iter().all(|x| (x - 120.0).abs() < 1e-9), "{a:?}");
        let c = junction_angles(&spokes(&[45.0, 135.0, 225.0, 315.0]), scale);
        assert!(c[0].len() == 4 && c[0].iter().all(|x| (x - 90.0).abs() < 1e-9), "{c:?}");
    }
}

#[test]
fn angles_sum_to_a_full_turn() {
    let mut r = common::rng(51);
    for _ in 0..20 {
        let (net, _) = common::random_star(&mut r, 4);
        for scale in [0.0, 0.05] {
            let a = &junction_angles(&net, scale)[0];
            assert!((a.iter().sum::<f64>() - 360.0).abs() < 1e-9);
        }
    }
}

#[test]
fn secant_direction_reaches_along_the_edge() {
    // a bent spoke: first segment along x, then turning up
    let mut net = spokes(&[0.0, 120.0, 240.0]);
    net.edges[0].interior = vec![v2(0.01, 0.0), v2(0.5, 0.5)];
    let a0 = junction_angles(&net, 0.0);
    let a1 = junction_angles(&net, 0.2);
    assert!((a0[0][0] - 120.0).abs() < 1e-9);
    assert!(a1[0][0] < 90.0, "{a1:?}");
}

#[test]
fn chord_residuals_vanish() {
    let traj = common::run_builtin("chord", |o| o.t_end = Some(0.005));
    let t2 = traj.entries.last().unwrap().t;
    let mut checked = 0;
    for f in &traj.family.functions {
        if f.class_a_j > traj.config.j {
            continue;
        }
        let r = brakke_residual(&traj, &f.name, 0.0, t2).unwrap();
        assert!(r.residual.abs() <= r.slack, "{}: {r:?}", f.name);
        checked += 1;
    }
    assert_eq!(checked, traj.family.functions.len());
    let d = dissipation_report(&traj);
    assert!((d.right - 2.0).abs() < 1e-12);
    assert!(d.holds() && (d.left - d.right).abs() <= d.slack, "{d:?}");
}

#[test]
fn circle_saturates_the_inequality() {
    let traj = common::run_builtin("circle", |o| o.t_end = Some(0.02));
    let t2 = traj.entries.last().unwrap().t;
    let r = brakke_residual(&traj, "one", 0.0, t2).unwrap();
    assert!(r.residual <= r.slack);
    assert!(r.residual.abs() <= 0.05 * r.magnitude, "{r:?}");
    // with φ ≡ 1 the residual is the dissipation discrepancy
    let d = dissipation_report(&traj);
    assert!((r.residual - (d.left - d.right)).abs() < 1e-10);
    // the consumed length matches the exact law 2π(R₀ − √(R₀² − 2t)) within the smoothing bias
    let exact = 2.0 * PI * (0.5 - (0.25 - 2.0 * t2).sqrt());
    assert!((d.cumulative_dissipation / exact - 1.0).abs() < 0.02, "{} vs {exact}", d.cumulative_dissipation);
}

#[test]
fn residual_errors() {
    let traj = common::run_builtin("chord", |o| o.t_end = Some(0.001));
    assert!(matches!(brakke_residual(&traj, "nope", 0.0, 0.001), Err(DiagnosticsError::UnknownFunction(_))));
    assert!(matches!(brakke_residual(&traj, "one", 0.001, 0.0), Err(DiagnosticsError::Interval(..))));
    assert!(matches!(brakke_residual(&traj, "one", 0.0, 0.123), Err(DiagnosticsError::NoSnapshot(_))));
}

#[test]
fn records_are_reproducible_from_snapshots() {
    let traj = common::run_builtin("steiner4", |o| o.t_end = Some(0.003));
    let net0 = &traj.snapshots[0].network;
    let c = &traj.config;
    let rs = RegionSystem::new(net0.domain.clone(), c.j, &net0.segments());
    let family = TestFunctionFamily::standard(&net0.domain, &net0.points(), c.j);
    assert_eq!(family, traj.family);
    let probe = Probe::new(net0, SmoothingKernel::new(c.eps, 2).unwrap(), DampingField::from_regions(&rs), family, c.h_quad);
    assert!(traj.snapshots.len() >= 3);
    for s in &traj.snapshots {
        let entry = traj.entries.iter().find(|e| e.epoch == s.epoch).unwrap();
        let (mut rec, _, _) = probe.measure(&s.network, s.t);
        rec.counts = entry.record.counts;
        assert_eq!(rec, entry.record, "epoch {}", s.epoch);
    }
}

#[test]
fn test_function_tags_are_sound() {
    let mut r = common::rng(52);
    let j = 1u64 << 30;
    for s in builtin_scenarios() {
        let (net, _) = s.network().unwrap();
        let dom = &net.domain;
        let family = TestFunctionFamily::standard(dom, &net.points(), j);
        let (lo, hi) = dom.bounding_box();
        for f in &family.functions {
            let bound = f.class_a_j as f64;
            let mut n = 0;
            while n < 10_000 {
                let x = v2(r.gen_range(lo.x..hi.x), r.gen_range(lo.y..hi.y));
                // the whole domain, a superset of the hull region
                if !dom.contains(x) {
                    continue;
                }
                n += 1;
                let v = f.value(x);
                assert!(f.gradient(x).norm() <= bound * v, "{} at {x:?}", f.name);
                assert!(common::sym_norm(&f.hessian(x)) <= bound * v, "{} at {x:?}", f.name);
            }
            if f.radially_nondecreasing {
                let band = dj_depth(j);
                for _ in 0..2000 {
                    let q = dom.boundary_point(r.gen_range(0.0..dom.boundary_period()));
                    let nu = dom.outward_normal(q).unwrap();
                    let x = q - nu * r.gen_range(0.0..band);
                    assert!(f.value(x + nu * 1e-6) >= f.value(x) - 1e-15, "{} at {x:?}", f.name);
                }
            }
        }
    }
}

#[test]
fn family_members() {
    let (net, _) = builtin("chord").unwrap().network().unwrap();
    let fam = TestFunctionFamily::standard(&net.domain, &net.points(), 1 << 20);
    assert_eq!(fam.names(), ["one", "gauss-center", "gauss-offset", "bump", "barrier"]);
    let barrier = &fam.functions[4];
    // the barrier grows away from the network, so it is non-decreasing on the upper boundary
    assert!(barrier.value(v2(0.0, 0.9)) > barrier.value(v2(0.0, 0.1)));
    assert_eq!(barrier.value(v2(0.3, -0.5)), barrier.value(v2(0.0, 0.0)));
}

#[test]
fn empty_half_stays_empty() {
    let traj = common::run_builtin("chord", |o| o.t_end = Some(0.005));
    let b = BarrierTest { normal: v2(0.0, 1.0), offset: 0.0, center: v2(0.0, 0.5), radius: 0.3 };
    let rep = confinement_and_boundary(&traj, 1e-6, Some(&b));
    assert_eq!(rep.barrier_mass, Some(0.0));
    assert_eq!((rep.margin_violations, rep.drift_violations), (0, 0));
}

#[test]
fn initial_margin_is_nonnegative() {
    for s in builtin_scenarios() {
        let traj = common::run_builtin(&s.name, |o| o.t_end = Some(1e-4));
        assert!(traj.entries[0].record.hull_margin >= 0.0, "{}", s.name);
        assert_eq!(traj.entries[0].record.boundary_drift, 0.0);
    }
}

#[test]
fn volume_continuity_oracles() {
    let chord = common::run_builtin("chord", |o| o.t_end = Some(0.005));
    let v = volume_continuity(&chord, 0.0);
    assert!(v.constants.iter().all(|&c| c < 1e-9), "{v:?}");
    // inner area π(R₀² − 2t) changes by 2π Δt, so the ½-Hölder constant is 2π √(span)
    let circle = common::run_builtin("circle", |o| o.t_end = Some(0.01));
    let v = volume_continuity(&circle, 0.0);
    let span = circle.entries.last().unwrap().t;
    let oracle = 2.0 * PI * span.sqrt();
    assert!((v.constants[1] / oracle - 1.0).abs() < 0.02, "{} vs {oracle}", v.constants[1]);
    assert!((v.constants[0] / oracle - 1.0).abs() < 0.02);
}

#[test]
fn quadrature_budget_formula() {
    assert!((quadrature_budget(0.005, 0.005, 2.0, 0.5) - 10.0 * (0.005 + 0.005 * 0.005) * 2.0 * 0.5).abs() < 1e-15);
}
