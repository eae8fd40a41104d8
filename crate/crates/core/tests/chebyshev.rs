mod common;

use common::{cheb_t_trig, cheb_tbar_trig, integrate, integrate_weighted, open_grid};
use kpm_core::cheb::{chebyshev_t, chebyshev_u, normalized_t, weighted_integral};
use kpm_core::rng;
use kpm_core::ChebyshevSeries;
use rand::Rng;

#[test]
fn first_kind_bounded_by_one_up_to_degree_128() {
    for k in 0..=128 {
        for x in open_grid(1000).chain([-1.0, 1.0]) {
            let t = chebyshev_t(k, x).unwrap();
            assert!(t.abs() <= 1.0 + 1e-9, "T_{k}({x}) = {t}");
        }
    }
}

#[test]
fn second_kind_bounded_by_k_plus_one() {
    for k in -1..=128i64 {
        for x in open_grid(1000).chain([-1.0, 1.0]) {
            let u = chebyshev_u(k, x).unwrap();
            assert!(u.abs() <= (k + 1) as f64 + 1e-9, "U_{k}({x}) = {u}");
        }
    }
}

#[test]
fn recurrence_matches_trigonometric_form() {
    for k in [0, 1, 2, 7, 33, 100] {
        for x in open_grid(257) {
            assert!((chebyshev_t(k, x).unwrap() - cheb_t_trig(k, x)).abs() < 1e-11);
            assert!((normalized_t(k, x).unwrap() - cheb_tbar_trig(k, x)).abs() < 1e-11);
        }
    }
}

#[test]
fn weighted_integral_matches_adaptive_quadrature() {
    let mut r = rng::stream(2024, 0);
    let lo = -1.0 + 1e-6;
    let hi = 1.0 - 1e-6;
    for trial in 0..200 {
        let k = r.gen_range(0..=100usize);
        let mut a = r.gen_range(lo..hi);
        let mut b = r.gen_range(lo..hi);
        if a > b {
            core::mem::swap(&mut a, &mut b);
        }
        if b - a < 1e-9 {
            continue;
        }
        let closed = weighted_integral(k, a, b).unwrap();
        let quad = integrate(|x| cheb_t_trig(k, x) / (1.0 - x * x).sqrt(), a, b, 1e-13);
        assert!((closed - quad).abs() <= 1e-10, "trial {trial}: k={k} [{a}, {b}] closed {closed} quad {quad}");
    }
}

#[test]
fn weighted_integral_of_t2_on_unit_interval_is_zero() {
    // The printed form −cos(k·arcsin x)/k would give 1 here.
    let closed = weighted_integral(2, 0.0, 1.0).unwrap();
    let quad = integrate_weighted(|x| if x > 0.0 { cheb_t_trig(2, x) } else { 0.0 }, 1e-12);
    assert!(closed.abs() < 1e-15);
    assert!(quad.abs() < 1e-9);
}

#[test]
fn weighted_integral_is_additive() {
    let mut r = rng::stream(5, 0);
    for _ in 0..100 {
        let k = r.gen_range(0..60usize);
        let mut p = [r.gen_range(-1.0..1.0), r.gen_range(-1.0..1.0), r.gen_range(-1.0..1.0)];
        p.sort_by(f64::total_cmp);
        if p[1] - p[0] < 1e-9 || p[2] - p[1] < 1e-9 {
            continue;
        }
        let whole = weighted_integral(k, p[0], p[2]).unwrap();
        let parts = weighted_integral(k, p[0], p[1]).unwrap() + weighted_integral(k, p[1], p[2]).unwrap();
        assert!((whole - parts).abs() < 1e-14);
    }
}

#[test]
fn normalized_polynomials_are_orthonormal_under_w() {
    for i in 0..=20 {
        for j in 0..=20 {
            let ip = integrate_weighted(|x| cheb_tbar_trig(i, x) * normalized_t(j, x).unwrap(), 1e-12);
            let want = if i == j { 1.0 } else { 0.0 };
            assert!((ip - want).abs() < 1e-8, "<T̄_{i}, T̄_{j}>_w = {ip}");
        }
    }
}

#[test]
fn series_integral_matches_quadrature() {
    let series = ChebyshevSeries::new(vec![0.7, -0.3, 0.25, 0.1, -0.05, 0.02]).unwrap();
    for (a, b) in [(-0.9, 0.4), (-0.2, 0.95), (0.1, 0.3)] {
        let closed = series.weighted_integral(a, b).unwrap();
        let quad = integrate(|x| series.eval(x).unwrap() / (1.0 - x * x).sqrt(), a, b, 1e-13);
        assert!((closed - quad).abs() < 1e-10);
    }
}

#[test]
fn out_of_domain_arguments_are_errors() {
    assert!(chebyshev_t(3, 1.0 + 1e-6).is_err());
    assert!(chebyshev_u(3, -1.0 - 1e-6).is_err());
    assert!(weighted_integral(1, 0.5, 0.5).is_err());
    assert!(weighted_integral(1, -2.0, 0.5).is_err());
    assert!(chebyshev_t(3, 1.0 + 1e-13).is_ok());
}
