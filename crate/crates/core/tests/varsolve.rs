mod common;

use cev_asian::float_strike::rate_float_sqrt;
use cev_asian::model::ModelParams;
use cev_asian::rate_cev::rate_cev;
use cev_asian::rate_sqrt::rate_sqrt;
use cev_asian::varsolve::{
    action, lagrange_constant, minimize_fixed, minimize_fixed_with, minimize_float,
    minimize_float_with, PathGrid, VarSolveConfig,
};
use common::{rel, simpson};

fn params(s0: f64, sigma: f64, beta: f64) -> ModelParams {
    ModelParams::driftless(s0, sigma, beta).unwrap()
}

fn grid_cases() -> Vec<(f64, f64, f64, f64)> {
    // (beta, K/S0, sigma, S0)
    vec![
        (0.5, 0.3, 0.5, 1.0),
        (0.5, 0.8, 1.0, 2.0),
        (0.5, 1.5, 0.5, 1.0),
        (0.5, 3.0, 0.3, 1.0),
        (0.6, 0.5, 0.4, 1.0),
        (0.6, 2.0, 0.4, 3.0),
        (0.75, 0.6, 1.0, 1.0),
        (0.75, 1.2, 0.2, 1.0),
        (0.7, 1.5, 0.3, 1.0),
        (0.9, 0.7, 0.4, 0.5),
        (0.9, 3.0, 0.4, 1.0),
        (0.95, 1.1, 0.25, 1.0),
    ]
}

#[test]
fn constant_path_has_zero_action() {
    let m = params(1.7, 0.4, 0.75);
    assert_eq!(action(&PathGrid::constant(1.7, 100), &m), 0.0);
}

#[test]
fn linear_path_action_second_order() {
    let s0 = 1.3;
    let sigma = 0.6;
    let m = params(s0, sigma, 0.5);
    let exact = s0 / (2.0 * sigma * sigma) * std::f64::consts::LN_2;
    let a = |n: usize| action(&PathGrid::from_fn(n, |t| s0 * (1.0 + t)), &m);
    for &n in &[100usize, 200, 400, 800] {
        let err = (a(n) - exact).abs();
        let scaled = err * (n * n) as f64;
        assert!(scaled < 0.1, "n = {n}: err {err:e}");
    }
    let (a4, a8, a16) = (a(400), a(800), a(1600));
    let d1 = (a4 - a8).abs();
    let d2 = (a8 - a16).abs();
    // Richardson ratio of a second-order scheme is 4 up to higher-order terms.
    assert!((d1 / d2 - 4.0).abs() < 1e-3, "ratio {}", d1 / d2);
}

#[test]
fn sqrt_model_fixed_strike() {
    let m = params(1.0, 0.5, 0.5);
    let v = minimize_fixed(1.5, &m).unwrap();
    let closed = rate_sqrt(1.5, &m).unwrap().value;
    assert!(v.converged);
    assert!(rel(v.value, closed) < 1e-4, "{} vs {closed}", v.value);
}

#[test]
fn cev_fixed_strike_put() {
    let m = params(1.0, 1.0, 0.75);
    let v = minimize_fixed(0.6, &m).unwrap();
    let closed = rate_cev(0.6, &m).unwrap().value;
    assert!(rel(v.value, closed) < 1e-4, "{} vs {closed}", v.value);
}

#[test]
fn near_feasible_constant_path() {
    let m = params(1.0, 0.5, 0.75);
    let v = minimize_fixed(1.0 + 1e-9, &m).unwrap();
    assert!(v.value.abs() <= 1e-12, "{}", v.value);
    assert_eq!(minimize_fixed(1.0, &m).unwrap().value, 0.0);
}

#[test]
fn oracle_grid_matches_closed_forms() {
    for (beta, k, sigma, s0) in grid_cases() {
        let m = params(s0, sigma, beta);
        let v = minimize_fixed(k * s0, &m).unwrap();
        let closed = rate_cev(k * s0, &m).unwrap().value;
        assert!(v.converged);
        assert!(
            rel(v.value, closed) < 1e-4,
            "beta {beta} k {k}: {} vs {closed}",
            v.value
        );
    }
}

#[test]
fn grid_refinement() {
    let coarse = VarSolveConfig {
        n: 400,
        ..Default::default()
    };
    for (beta, k, sigma, s0) in grid_cases() {
        let m = params(s0, sigma, beta);
        let a = minimize_fixed_with(k * s0, &m, &coarse).unwrap().value;
        let b = minimize_fixed(k * s0, &m).unwrap().value;
        assert!(rel(a, b) < 1e-4, "beta {beta} k {k}: {a} vs {b}");
    }
    for &(beta, kappa) in &[(0.5, 2.0), (0.75, 0.7), (0.9, 0.8)] {
        let m = params(1.0, 0.3, beta);
        let a = minimize_float_with(kappa, &m, &coarse).unwrap().value;
        let b = minimize_float(kappa, &m).unwrap().value;
        assert!(rel(a, b) < 1e-4, "beta {beta} kappa {kappa}: {a} vs {b}");
    }
}

#[test]
fn optimal_paths_are_monotone_and_off_the_floor() {
    for (beta, k, sigma, s0) in grid_cases() {
        let m = params(s0, sigma, beta);
        let v = minimize_fixed(k * s0, &m).unwrap();
        assert!(v.path.is_monotone(), "beta {beta} k {k}");
        let p = &v.path.values;
        if k > 1.0 {
            assert!(p[p.len() - 1] > p[0]);
        } else {
            assert!(p[p.len() - 1] < p[0]);
        }
        assert!(!v.floor_active, "beta {beta} k {k}");
        assert!(v.constraint_residual.abs() <= 1e-10 * s0.max(1.0));
        assert_eq!(p[0], s0);
    }
}

/// Integral of `dy / sqrt(y^p - y1^p)` over `[y1, 1]` for puts, `[1, y1]` for calls.
fn a_integral(y1: f64, p: f64) -> f64 {
    let c = y1.powf(p);
    if y1 < 1.0 {
        let f = |u: f64| {
            if u == 0.0 {
                return 2.0 * (1.0 - y1) / (p * y1.powf(p - 1.0) * (1.0 - y1)).sqrt();
            }
            let y = y1 + (1.0 - y1) * u * u;
            2.0 * (1.0 - y1) * u / (y.powf(p) - c).sqrt()
        };
        simpson(&f, 0.0, 1.0, 1e-12)
    } else {
        let f = |u: f64| {
            if u == 0.0 {
                return 2.0 * (y1 - 1.0) / (p * y1.powf(p - 1.0) * (y1 - 1.0)).sqrt();
            }
            let y = y1 - (y1 - 1.0) * u * u;
            2.0 * (y1 - 1.0) * u / (c - y.powf(p)).sqrt()
        };
        simpson(&f, 0.0, 1.0, 1e-12)
    }
}

#[test]
fn lagrange_multiplier_consistency() {
    for &(beta, k, sigma) in &[
        (0.5, 1.5, 0.5),
        (0.75, 0.6, 1.0),
        (0.7, 1.5, 0.3),
        (0.6, 0.3, 0.5),
        (0.9, 3.0, 0.4),
    ] {
        let m = params(1.0, sigma, beta);
        let v = minimize_fixed(k, &m).unwrap();
        let x = rate_cev(k, &m).unwrap().diag.x_star;
        let g1 = v.path.values[v.path.n];
        assert!(rel(g1, x) < 1e-3, "terminal {g1} vs {x}");
        let gamma = beta / (1.0 - beta);
        let y1 = x.powf(1.0 - beta);
        let a = a_integral(y1, gamma + 1.0);
        let expected = a * a / (2.0 * (1.0 - beta)) * if k < 1.0 { 1.0 } else { -1.0 };
        let c = lagrange_constant(v.lambda, &m);
        assert!(rel(c, expected) < 1e-2, "beta {beta} k {k}: {c} vs {expected}");
    }
}

#[test]
fn shooting_agrees_with_direct_minimum() {
    for &(beta, k, sigma) in &[(0.5, 1.5, 0.5), (0.75, 0.6, 1.0), (0.9, 3.0, 0.4)] {
        let m = params(1.0, sigma, beta);
        let v = minimize_fixed(k, &m).unwrap();
        let s = v.shooting_value.expect("shooting solution");
        assert!(rel(s, v.value) < 1e-3, "{s} vs {}", v.value);
    }
}

#[test]
fn floating_sqrt_model() {
    let m = params(1.0, 0.5, 0.5);
    let v = minimize_float(2.0, &m).unwrap();
    let closed = rate_float_sqrt(2.0, &m).unwrap().value;
    assert!(rel(v.value, closed) < 1e-3, "{} vs {closed}", v.value);
    assert_eq!(minimize_float(1.0, &m).unwrap().value, 0.0);
}

#[test]
fn floating_regression() {
    let m = params(1.0, 0.3, 0.9);
    let v = minimize_float(0.8, &m).unwrap();
    assert!(v.converged && !v.floor_active);
    assert!(rel(v.value, 0.905_493_987_041_173_5) < 1e-8, "{}", v.value);
    let p = &v.path.values;
    // Floating calls trade a dip in the average against a higher terminal value.
    assert!(p[v.path.n] > p[0]);
    assert!(v.path.mean() <= 0.8 * p[v.path.n] + 1e-10);
}
