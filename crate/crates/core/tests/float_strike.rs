mod common;

use cev_asian::float_strike::{
    cumulant_float, jf_closed_form, jf_series, jf_small_kappa, rate_float_cev, rate_float_sqrt, solve_theta_c, ATM_WINDOW,
};
use cev_asian::model::{Branch, ModelParams};
use cev_asian::rate_sqrt::{cumulant_sqrt, rate_sqrt};
use common::{golden_max, linspace, rel, rk4};
use proptest::prelude::*;

fn sqrt_params(s0: f64, sigma: f64) -> ModelParams {
    ModelParams::driftless(s0, sigma, 0.5).unwrap()
}

/// Scaled Riccati equation for the joint transform of the average and the terminal value.
fn riccati_oracle(theta: f64, kappa: f64, m: &ModelParams) -> f64 {
    let s2 = m.sigma * m.sigma;
    let y = rk4(
        |_, y| vec![0.5 * s2 * y[0] * y[0] + theta],
        &[-theta * kappa],
        1.0,
        20_000,
    );
    y[0] * m.s0
}

#[test]
fn cumulant_at_origin_and_kappa_zero() {
    let m = sqrt_params(1.3, 0.6);
    assert_eq!(cumulant_float(0.0, 1.5, &m), 0.0);
    let tc = std::f64::consts::PI.powi(2) / (2.0 * 0.36);
    for th in linspace(-30.0, tc * 0.999, 57) {
        let a = cumulant_float(th, 0.0, &m);
        let b = cumulant_sqrt(th, &m);
        assert!((a - b).abs() <= 1e-12 * (1.0 + b.abs()), "{th}: {a} vs {b}");
    }
    assert!(cumulant_float(tc * 1.001, 0.0, &m).is_infinite());
}

#[test]
fn cumulant_matches_riccati() {
    let m = sqrt_params(1.0, 0.7);
    let v = cumulant_float(-2.0, 1.5, &m);
    assert!(rel(v, riccati_oracle(-2.0, 1.5, &m)) < 1e-10);
    assert!(rel(v, 3.484_364_312_349_454_41) < 1e-13, "{v}");
    for &(th, k) in &[(1.0, 1.5), (3.0, 0.7), (-4.0, 0.5), (0.5, 2.0)] {
        let a = cumulant_float(th, k, &m);
        let b = riccati_oracle(th, k, &m);
        assert!(rel(a, b) < 1e-9, "{th} {k}: {a} vs {b}");
    }
}

#[test]
fn theta_c_root() {
    let m = sqrt_params(1.0, 1.0);
    let tc = solve_theta_c(1.0, &m);
    // Bisection on F(x) = x - atan(x) - pi/2 with x = sqrt(theta/2).
    let f = |x: f64| x - x.atan() - std::f64::consts::FRAC_PI_2;
    let (mut lo, mut hi) = (0.0f64, 10.0f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let oracle = 2.0 * lo * lo;
    assert!(rel(tc, oracle) < 1e-14);
    assert!(rel(tc, 15.661_928_922_475_959_3) < 1e-14);
    let u = (tc / 2.0).sqrt();
    assert!(f(u).abs() <= 1e-13);
    assert!(solve_theta_c(2.0, &m) > tc);
    let m2 = sqrt_params(1.0, 0.4);
    let tc0 = solve_theta_c(0.0, &m2);
    assert!(rel(tc0, std::f64::consts::PI.powi(2) / (2.0 * 0.16)) < 1e-14);
}

#[test]
fn atm_and_branches() {
    let m = sqrt_params(1.0, 0.7);
    let r = rate_float_sqrt(1.0, &m).unwrap();
    assert_eq!(r.value, 0.0);
    assert_eq!(r.diag.branch, Branch::Atm);
    assert_eq!(rate_float_sqrt(1.5, &m).unwrap().diag.branch, Branch::Put);
    assert_eq!(rate_float_sqrt(0.5, &m).unwrap().diag.branch, Branch::Call);
    assert!(rate_float_sqrt(0.0, &m).is_err());
    let cev = ModelParams::driftless(1.0, 0.7, 0.75).unwrap();
    assert!(rate_float_sqrt(1.5, &cev).is_err());
}

#[test]
fn series_near_atm() {
    let m = sqrt_params(1.0, 1.0);
    for &x in &[0.1f64, -0.1, 0.05, -0.05] {
        let v = rate_float_sqrt(x.exp(), &m).unwrap().value;
        let t = 1.5 * x * x - 33.0 / 20.0 * x.powi(3) + 5809.0 / 5600.0 * x.powi(4);
        assert!((v - t).abs() <= x.abs().powi(5), "{x}: {v} vs {t}");
        assert!((v - jf_series(x.exp())).abs() <= x.abs().powi(5));
    }
}

#[test]
fn atm_window_continuity() {
    let m = sqrt_params(1.0, 1.0);
    for &s in &[1.0f64, -1.0] {
        let inside = rate_float_sqrt((s * ATM_WINDOW * 0.999).exp(), &m).unwrap().value;
        let outside = rate_float_sqrt((s * ATM_WINDOW * 1.001).exp(), &m).unwrap().value;
        let ratio = outside / inside;
        let expected = (1.001f64 / 0.999).powi(2);
        assert!((ratio - expected).abs() < 1e-4, "{s}: {ratio}");
    }
}

#[test]
fn legendre_oracle() {
    let m = sqrt_params(1.0, 0.7);
    let closed = rate_float_sqrt(1.5, &m).unwrap().value;
    let tc = solve_theta_c(1.5, &m);
    let (_, best) = golden_max(|t| -cumulant_float(t, 1.5, &m), -50.0, tc * (1.0 - 1e-12), 200);
    assert!(rel(closed, best) < 1e-9, "{closed} vs {best}");
    assert!(rel(closed, 0.328_718_913_512_797_447) < 1e-12, "{closed}");
}

#[test]
fn legendre_duality_grid() {
    for &(s0, sigma) in &[(1.0, 0.7), (2.5, 0.3)] {
        let m = sqrt_params(s0, sigma);
        for &k in &[0.3, 0.5, 0.7, 0.9, 0.99, 1.01, 1.1, 1.5, 2.0, 3.0, 5.0] {
            let closed = rate_float_sqrt(k, &m).unwrap().value;
            let (a, b) = if k > 1.0 {
                (0.0, solve_theta_c(k, &m) * (1.0 - 1e-12))
            } else {
                (-400.0 / (sigma * sigma), 0.0)
            };
            let (_, best) = golden_max(|t| -cumulant_float(t, k, &m), a, b, 300);
            assert!(rel(closed, best) < 1e-7, "k {k}: {closed} vs {best}");
        }
    }
}

#[test]
fn shape_on_grid() {
    let m = sqrt_params(1.0, 1.0);
    let below: Vec<f64> = linspace(0.05, 0.999, 120)
        .into_iter()
        .map(|k| rate_float_sqrt(k, &m).unwrap().value)
        .collect();
    assert!(below.windows(2).all(|w| w[1] < w[0]));
    let above: Vec<f64> = linspace(1.001, 20.0, 120)
        .into_iter()
        .map(|k| rate_float_sqrt(k, &m).unwrap().value)
        .collect();
    assert!(above.windows(2).all(|w| w[1] > w[0]));
    assert!(below.iter().chain(above.iter()).all(|&v| v > 0.0));
}

#[test]
fn floating_differs_from_fixed() {
    let m = sqrt_params(1.0, 1.0);
    for &k in &[0.5, 2.0] {
        let f = rate_float_sqrt(k, &m).unwrap().value;
        let x = rate_sqrt(k, &m).unwrap().value;
        assert!((f - x).abs() > 1e-3, "{k}: {f} vs {x}");
    }
}

#[test]
fn variational_floating() {
    let half = sqrt_params(1.0, 0.7);
    let v = rate_float_cev(1.5, &half).unwrap().value;
    let c = rate_float_sqrt(1.5, &half).unwrap().value;
    assert!(rel(v, c) < 1e-3, "{v} vs {c}");
    let m = ModelParams::driftless(1.0, 0.3, 0.75).unwrap();
    assert_eq!(rate_float_cev(1.0, &m).unwrap().value, 0.0);
    let r = rate_float_cev(0.7, &m).unwrap();
    assert!(r.diag.converged && !r.diag.floor_active);
    assert!(rel(r.value, 2.693_853_632_856_167_3) < 1e-8, "{}", r.value);
}

proptest! {
    #[test]
    fn scaling_in_s0_over_sigma2(k in 0.1f64..8.0, s0 in 0.2f64..5.0, sigma in 0.1f64..2.0) {
        prop_assume!((k - 1.0).abs() > 1e-3);
        let unit = rate_float_sqrt(k, &sqrt_params(1.0, 1.0)).unwrap().value;
        let v = rate_float_sqrt(k, &sqrt_params(s0, sigma)).unwrap().value;
        prop_assert!(v > 0.0);
        prop_assert!(rel(v * sigma * sigma / s0, unit) < 1e-12);
    }
}

#[test]
fn small_kappa_large_root_form() {
    for &k in &[0.08, 0.07] {
        let (closed, _) = jf_closed_form(k).unwrap();
        assert!(rel(jf_small_kappa(k).0, closed) < 1e-9, "{k}");
    }
    let mut prev = f64::INFINITY;
    for &k in &linspace(1e-3, 0.2, 2000) {
        let (j, z) = jf_closed_form(k).unwrap();
        assert!(j.is_finite() && j < prev, "{k}: {j}");
        assert!(rel(j, 2.0 * z) < 0.2, "{k}");
        prev = j;
    }
    let m = sqrt_params(1.0, 1.0);
    for &k in &[0.01, 0.03] {
        let closed = rate_float_sqrt(k, &m).unwrap().value;
        let (_, best) = golden_max(|t| -cumulant_float(t, k, &m), -1e5, 0.0, 400);
        assert!(rel(closed, best) < 1e-7, "{k}: {closed} vs {best}");
    }
}
