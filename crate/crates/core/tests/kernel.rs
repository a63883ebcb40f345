mod common;

use brakke_core::kernel::{SmoothingKernel, GRADIENT_BOUND_C};
use nalgebra::{Vector2, Vector3};
use proptest::prelude::*;
use rand::Rng;

#[test]
fn kernel_integrates_to_one() {
    let t0 = std::time::Instant::now();
    for eps in [0.02, 0.05, 0.1, 0.3] {
        for dim in [2, 3] {
            let k = SmoothingKernel::new(eps, dim).unwrap();
            let m = common::kernel_mass(&k);
            assert!((m - 1.0).abs() < 1e-8, "eps={eps} dim={dim} mass={m}");
        }
    }
    assert!(t0.elapsed().as_secs_f64() < 1.0);
}

#[test]
fn planar_grid_sum_agrees() {
    // the trapezoid rule on a fine Cartesian grid is spectrally accurate for this smooth kernel
    let k = SmoothingKernel::new(0.1, 2).unwrap();
    let n = 800;
    let h = 2.0 / n as f64;
    let mut s = 0.0;
    for i in 0..=n {
        for l in 0..=n {
            s += k.eval(&Vector2::new(-1.0 + i as f64 * h, -1.0 + l as f64 * h));
        }
    }
    assert!((s * h * h - 1.0).abs() < 1e-8, "{}", s * h * h);
}

#[test]
fn normalization_constants() {
    let k = SmoothingKernel::new(0.05, 2).unwrap();
    assert!((k.c_eps() - 1.0).abs() < 1e-9);
    let wide = SmoothingKernel::new(0.5, 2).unwrap();
    // the cut removes at least the planar Gaussian mass beyond radius 1, e^{-1/(2ε²)}
    assert!(wide.c_eps() > 1.0 / (1.0 - (-2.0f64).exp()));
    // and at most the mass beyond radius 1/2
    assert!(wide.c_eps() < 1.0 / (1.0 - (-0.5f64).exp()));
}

#[test]
fn center_value_is_the_gaussian_peak() {
    for (eps, dim) in [(0.05, 2), (0.2, 3)] {
        let k = SmoothingKernel::new(eps, dim).unwrap();
        let peak = k.c_eps() * (2.0 * std::f64::consts::PI * eps * eps).powf(-(dim as f64) / 2.0);
        assert!((k.center_value() - peak).abs() <= 1e-12 * peak);
        let at0 = if dim == 2 { k.eval(&Vector2::zeros()) } else { k.eval(&Vector3::zeros()) };
        assert_eq!(at0, k.center_value());
    }
}

#[test]
fn gradient_matches_finite_differences() {
    let mut r = common::rng(11);
    let step = 1e-6;
    for _ in 0..50 {
        let eps = r.gen_range(0.05..0.5);
        let k = SmoothingKernel::new(eps, 2).unwrap();
        // stay where the kernel is not negligible so relative errors are meaningful
        let rad = r.gen_range(0.0..(3.0 * eps).min(0.98));
        let th = r.gen_range(0.0..std::f64::consts::TAU);
        let x = Vector2::new(rad * th.cos(), rad * th.sin());
        let g = k.eval_grad(&x);
        let fd = Vector2::new(
            (k.eval(&(x + Vector2::new(step, 0.0))) - k.eval(&(x - Vector2::new(step, 0.0)))) / (2.0 * step),
            (k.eval(&(x + Vector2::new(0.0, step))) - k.eval(&(x - Vector2::new(0.0, step)))) / (2.0 * step),
        );
        let scale = g.norm().max(1e-3 * k.center_value() / eps);
        assert!((g - fd).norm() / scale < 1e-5, "x={x:?} eps={eps} g={g:?} fd={fd:?}");
    }
}

#[test]
fn hessian_matches_gradient_differences() {
    let mut r = common::rng(12);
    let step = 1e-6;
    for _ in 0..50 {
        let eps = r.gen_range(0.1..0.5);
        let k = SmoothingKernel::new(eps, 3).unwrap();
        let x = Vector3::new(r.gen_range(-0.5..0.5), r.gen_range(-0.5..0.5), r.gen_range(-0.5..0.5));
        let h = k.eval_hess(&x);
        for c in 0..3 {
            let mut e = Vector3::zeros();
            e[c] = step;
            let col = (k.eval_grad(&(x + e)) - k.eval_grad(&(x - e))) / (2.0 * step);
            let scale = h.norm().max(k.center_value() / (eps * eps) * 1e-3);
            assert!((h.column(c) - col).norm() / scale < 1e-5);
        }
    }
}

#[test]
fn vanishes_outside_the_unit_ball() {
    let k = SmoothingKernel::new(0.4, 2).unwrap();
    for x in [Vector2::new(1.0, 0.0), Vector2::new(0.8, 0.8), Vector2::new(-3.0, 0.0)] {
        assert_eq!(k.eval(&x), 0.0);
        assert_eq!(k.eval_grad(&x), Vector2::zeros());
    }
}

#[test]
fn invalid_parameters() {
    assert!(SmoothingKernel::new(0.0, 2).is_err());
    assert!(SmoothingKernel::new(1.0, 2).is_err());
    assert!(SmoothingKernel::new(0.1, 4).is_err());
}

proptest! {
    #[test]
    fn gradient_bound_holds(eps in 0.02..0.95f64, rad in 0.0..1.2f64, th in 0.0..6.283f64) {
        let k = SmoothingKernel::new(eps, 2).unwrap();
        let x = Vector2::new(rad * th.cos(), rad * th.sin());
        let band = if (0.5..=1.0).contains(&rad) { GRADIENT_BOUND_C * (-1.0 / eps).exp() } else { 0.0 };
        let bound = rad / (eps * eps) * k.eval(&x) + band;
        prop_assert!(k.eval_grad(&x).norm() <= bound * (1.0 + 1e-12) + 1e-300);
    }

    #[test]
    fn radial_nonnegative_and_decreasing(eps in 0.02..0.9f64, a in 0.0..1.1f64, b in 0.0..1.1f64) {
        let k = SmoothingKernel::new(eps, 2).unwrap();
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let (fl, fh) = (k.eval(&Vector2::new(lo, 0.0)), k.eval(&Vector2::new(0.0, hi)));
        prop_assert!(fh >= 0.0);
        prop_assert!(fh <= fl);
    }
}
