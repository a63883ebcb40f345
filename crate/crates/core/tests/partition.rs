mod common;

use std::f64::consts::PI;

use brakke_core::geometry::{v2, ConvexDomain, Vec2};
use brakke_core::partition::{LabeledNetwork, ViolationKind};
use proptest::prelude::*;
use rand::Rng;

#[test]
fn diameter_splits_the_disk_in_halves() {
    let net = common::chord(v2(-1.0, 0.0), v2(1.0, 0.0), 2, 1);
    assert!(net.validate().is_empty());
    let a = net.phase_areas().unwrap().areas;
    assert!((a[0] - PI / 2.0).abs() < 1e-12 && (a[1] - PI / 2.0).abs() < 1e-12, "{a:?}");
}

#[test]
fn empty_network_is_background() {
    let d = ConvexDomain::ellipse(Vec2::zeros(), 1.5, 0.5).unwrap();
    let net = LabeledNetwork::empty(d.clone(), 3, 1);
    assert_eq!(net.phase_areas().unwrap().areas, vec![d.area(), 0.0, 0.0]);
}

#[test]
fn violations_are_named() {
    let same = common::chord(v2(-1.0, 0.0), v2(1.0, 0.0), 1, 1);
    assert!(same.validate().iter().any(|v| v.kind == ViolationKind::PhaseSeparation));
    let mut cross = common::chord(v2(-1.0, 0.0), v2(1.0, 0.0), 1, 2);
    let other = common::chord(v2(0.0, -1.0), v2(0.0, 1.0), 1, 2);
    let off = cross.vertices.len();
    cross.vertices.extend(other.vertices);
    cross.edges.extend(other.edges.into_iter().map(|mut e| {
        e.a += off;
        e.b += off;
        e
    }));
    assert!(cross.validate().iter().any(|v| v.kind == ViolationKind::Embeddedness));
    let mut off_boundary = common::chord(v2(-1.0, 0.0), v2(0.9, 0.0), 1, 2);
    off_boundary.vertices[1].pos = v2(0.9, 0.0);
    assert!(off_boundary.validate().iter().any(|v| v.kind == ViolationKind::AnchorPlacement));
}

#[test]
fn random_stars_are_valid() {
    let mut r = common::rng(31);
    for k in 3..=5 {
        for _ in 0..20 {
            let (net, _) = common::random_star(&mut r, k);
            assert!(net.validate().is_empty(), "{:?}", net.validate());
        }
    }
}

#[test]
fn phase_areas_match_monte_carlo() {
    let mut r = common::rng(32);
    let (net, sectors) = common::random_star(&mut r, 4);
    let areas = net.phase_areas().unwrap().areas;
    let n = 1_000_000;
    let mut hits = vec![0usize; sectors.len()];
    let mut inside = 0usize;
    while inside < n {
        let p = v2(r.gen_range(-1.0..1.0), r.gen_range(-1.0..1.0));
        if p.norm_squared() >= 1.0 {
            continue;
        }
        inside += 1;
        if let Some(k) = sectors.iter().position(|s| common::in_polygon(s, p)) {
            hits[k] += 1;
        }
    }
    for (k, &h) in hits.iter().enumerate() {
        let frac = h as f64 / n as f64;
        let est = PI * frac;
        let sigma = PI * (frac * (1.0 - frac) / n as f64).sqrt();
        assert!((areas[k] - est).abs() <= 3.0 * sigma, "phase {}: {} vs {est} ± {sigma}", k + 1, areas[k]);
    }
}

#[test]
fn labels_agree_with_sectors() {
    let mut r = common::rng(33);
    let (net, sectors) = common::random_star(&mut r, 3);
    for _ in 0..2000 {
        let p = v2(r.gen_range(-0.99..0.99), r.gen_range(-0.99..0.99));
        if p.norm() >= 0.99 {
            continue;
        }
        let Some(k) = sectors.iter().position(|s| common::in_polygon(s, p)) else { continue };
        // skip points hugging a spoke
        if net.segments().iter().any(|s| s.distance(p) < 1e-6) {
            continue;
        }
        assert_eq!(net.label_at(p), k as u32 + 1, "p={p:?}");
    }
}

#[test]
fn faces_carry_the_phase_areas() {
    let mut r = common::rng(34);
    let (net, _) = common::random_star(&mut r, 5);
    let areas = net.phase_areas().unwrap().areas;
    let mut by_label = vec![0.0; 5];
    for f in net.faces() {
        assert!(f.consistent);
        by_label[f.label as usize - 1] += f.area;
    }
    for (a, b) in areas.iter().zip(&by_label) {
        assert!((a - b).abs() < 1e-9, "{areas:?} vs {by_label:?}");
    }
}

#[test]
fn resample_examples() {
    let net = common::line(v2(0.0, 0.0), v2(1.0, 0.0), 1);
    let fine = net.resample(0.25);
    assert_eq!(fine.edges[0].interior.len(), 3);
    assert_eq!(fine.resample(0.25), fine);
}

proptest! {
    #[test]
    fn resample_keeps_length(seed in 0u64..1000, h in 0.01..0.3f64) {
        let mut r = common::rng(seed);
        let (net, _) = common::random_star(&mut r, 3);
        let fine = net.resample(h);
        prop_assert!((fine.length() - net.length()).abs() < 1e-12);
        prop_assert!(fine.segments().iter().all(|s| s.length() <= h * (1.0 + 1e-12)));
        prop_assert_eq!(fine.resample(h), fine.clone());
    }

    #[test]
    fn areas_sum_to_the_domain(seed in 0u64..1000, k in 3usize..6) {
        let mut r = common::rng(seed);
        let (net, _) = common::random_star(&mut r, k);
        let a = net.phase_areas().unwrap().areas;
        prop_assert!(a.iter().all(|&x| x > 0.0));
        prop_assert!((a.iter().sum::<f64>() - PI).abs() < 1e-12);
    }
}
