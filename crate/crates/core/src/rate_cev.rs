//! Fixed-strike rate function for the CEV model with `beta` in `[1/2, 1)`.

use std::f64::consts::PI;

use crate::error::{domain, Error, Result};
use crate::model::{Branch, ModelParams, RateResult, SQRT_BETA_TOL};
use crate::rate_sqrt::{self, ATM_WINDOW};
use crate::solve::{brent_min, brent_root, expand_lower, expand_upper};
use crate::specfun::{hyp2f1, log_gamma};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CevRateDiag {
    /// Internal variable `x`; the minimizer `phi` or `chi` for the alternative representation.
    /// At beta = 1/2 deep puts this underflows to zero.
    pub x_star: f64,
    pub branch: Branch,
    /// Residual of the defining equation relative to `K/S0`.
    pub residual: f64,
}

fn is_half(beta: f64) -> bool {
    (beta - 0.5).abs() < SQRT_BETA_TOL
}

fn check_beta(beta: f64) -> Result<()> {
    if !(0.5..1.0).contains(&beta) {
        return Err(domain(format!("beta must lie in [0.5, 1), got {beta}")));
    }
    Ok(())
}

/// The pair `(a+, b+)` for `0 < x <= 1`.
pub fn ab_plus(x: f64, beta: f64) -> Result<(f64, f64)> {
    check_beta(beta)?;
    if !(x > 0.0 && x <= 1.0) {
        return Err(domain(format!("ab_plus requires 0 < x <= 1, got {x}")));
    }
    if x == 1.0 {
        return Ok((0.0, 0.0));
    }
    if is_half(beta) {
        let s = ((1.0 - x) / x).sqrt();
        let h = s.asinh();
        return Ok((2.0 * h, (1.0 - x).sqrt() - x * h));
    }
    ab_plus_hyp(x, beta)
}

fn ab_plus_hyp(x: f64, beta: f64) -> Result<(f64, f64)> {
    if x == 1.0 {
        return Ok((0.0, 0.0));
    }
    let z = 1.0 - 1.0 / x;
    let xb = x.powf(-beta);
    let w = 1.0 - x;
    let a = 2.0 * xb * w.sqrt() * hyp2f1(beta, 0.5, 1.5, z)?;
    let b = 2.0 / 3.0 * xb * w * w.sqrt() * hyp2f1(beta, 1.5, 2.5, z)?;
    Ok((a, b))
}

/// The pair `(a-, b-)` for `x >= 1`.
pub fn ab_minus(x: f64, beta: f64) -> Result<(f64, f64)> {
    check_beta(beta)?;
    if !(x >= 1.0 && x.is_finite()) {
        return Err(domain(format!("ab_minus requires x >= 1, got {x}")));
    }
    if x == 1.0 {
        return Ok((0.0, 0.0));
    }
    if is_half(beta) {
        let s = (1.0 - 1.0 / x).sqrt();
        let h = s.asin();
        return Ok((2.0 * h, x * h - (x - 1.0).sqrt()));
    }
    ab_minus_hyp(x, beta)
}

fn ab_minus_hyp(x: f64, beta: f64) -> Result<(f64, f64)> {
    if x == 1.0 {
        return Ok((0.0, 0.0));
    }
    let z = 1.0 - 1.0 / x;
    let xb = x.powf(-beta);
    let w = x - 1.0;
    let a = 2.0 * xb * w.sqrt() * hyp2f1(beta, 0.5, 1.5, z)?;
    let b = 2.0 / 3.0 * xb * w * w.sqrt() * hyp2f1(beta, 1.5, 2.5, z)?;
    Ok((a, b))
}

/// `(S0^{1-beta}/sigma)^{-1}` times the put-side integral `int_chi^1 z^-beta sqrt(z - chi) dz`.
pub fn g_plus(chi: f64, beta: f64) -> Result<f64> {
    Ok(ab_plus(chi, beta)?.1)
}

/// `(S0^{1-beta}/sigma)^{-1}` times the call-side integral `int_1^phi z^-beta sqrt(phi - z) dz`.
pub fn g_minus(phi: f64, beta: f64) -> Result<f64> {
    Ok(ab_minus(phi, beta)?.1)
}

fn atm_result(k: f64, params: &ModelParams) -> Option<RateResult<CevRateDiag>> {
    let ratio = k / params.s0;
    if ratio == 1.0 {
        return Some(RateResult {
            value: 0.0,
            diag: CevRateDiag {
                x_star: 1.0,
                branch: Branch::Atm,
                residual: 0.0,
            },
        });
    }
    let lm = ratio.ln();
    if lm.abs() < ATM_WINDOW {
        // Linearized root of the defining equation: K/S0 - 1 = (2/3)(x - 1).
        let x_star = 1.0 + 1.5 * (ratio - 1.0);
        let branch = if ratio > 1.0 { Branch::Call } else { Branch::Put };
        return Some(RateResult {
            value: rate_cev_taylor(k, params),
            diag: CevRateDiag {
                x_star,
                branch,
                residual: 0.0,
            },
        });
    }
    None
}

fn check_strike(k: f64) -> Result<()> {
    if !(k.is_finite() && k > 0.0) {
        return Err(domain(format!("strike must be positive, got {k}")));
    }
    Ok(())
}

fn half_scale(params: &ModelParams) -> f64 {
    0.5 * params.rate_scale()
}

/// Rate function of the time average under the CEV model.
pub fn rate_cev(k: f64, params: &ModelParams) -> Result<RateResult<CevRateDiag>> {
    params.validate()?;
    check_strike(k)?;
    if params.is_sqrt() {
        let r = rate_sqrt::rate_sqrt(k, &ModelParams { beta: 0.5, ..*params })?;
        let x_star = match r.diag.branch {
            Branch::Put => r.diag.x.cosh().powi(-2),
            Branch::Call => r.diag.x.cos().powi(-2),
            Branch::Atm => 1.0,
        };
        return Ok(RateResult {
            value: r.value,
            diag: CevRateDiag {
                x_star,
                branch: r.diag.branch,
                residual: r.diag.residual,
            },
        });
    }
    solve_general(k, params, ab_plus, ab_minus)
}

/// The general-`beta` route evaluated with hypergeometric functions even at `beta = 1/2`.
pub fn rate_cev_hypergeometric(k: f64, params: &ModelParams) -> Result<RateResult<CevRateDiag>> {
    params.validate()?;
    check_strike(k)?;
    solve_general(k, params, ab_plus_hyp, ab_minus_hyp)
}

type AbFn = fn(f64, f64) -> Result<(f64, f64)>;

fn solve_general(
    k: f64,
    params: &ModelParams,
    ab_plus: AbFn,
    ab_minus: AbFn,
) -> Result<RateResult<CevRateDiag>> {
    if let Some(r) = atm_result(k, params) {
        return Ok(r);
    }
    let beta = params.beta;
    let ratio = k / params.s0;
    if ratio < 1.0 {
        let f = |x: f64| match ab_plus(x, beta) {
            Ok((a, b)) => x + b / a - ratio,
            Err(_) => f64::NAN,
        };
        let (lo, hi) = expand_lower(f, 1e-10, 1.0 - 1e-12, 10.0, 1e-300)?;
        let root = brent_root(f, lo, hi, 1e-17 * lo)?;
        let (a, b) = ab_plus(root.x, beta)?;
        Ok(RateResult {
            value: half_scale(params) * a * b,
            diag: CevRateDiag {
                x_star: root.x,
                branch: Branch::Put,
                residual: root.residual / ratio,
            },
        })
    } else {
        let f = |x: f64| match ab_minus(x, beta) {
            Ok((a, b)) => x - b / a - ratio,
            Err(_) => f64::NAN,
        };
        let (lo, hi) = expand_upper(f, 1.0 + 1e-12, 2.0, 2.0, 1e300)?;
        let root = brent_root(f, lo, hi, 1e-16 * hi)?;
        let (a, b) = ab_minus(root.x, beta)?;
        Ok(RateResult {
            value: half_scale(params) * a * b,
            diag: CevRateDiag {
                x_star: root.x,
                branch: Branch::Call,
                residual: root.residual / ratio,
            },
        })
    }
}

/// Rate function through the one-dimensional infimum representation.
pub fn rate_cev_alt(k: f64, params: &ModelParams) -> Result<RateResult<CevRateDiag>> {
    params.validate()?;
    check_strike(k)?;
    let ratio = k / params.s0;
    if ratio == 1.0 {
        return Err(domain("alternative representation is defined away from the money"));
    }
    let beta = params.beta;
    let scale = half_scale(params);
    let (branch, grid, objective): (Branch, Vec<f64>, Box<dyn Fn(f64) -> f64>) = if ratio > 1.0 {
        // Search in s = ln(phi - K/S0).
        let span = ratio - 1.0;
        let grid = (0..=300)
            .map(|j| (span.ln() - 30.0) + 45.0 * j as f64 / 300.0)
            .collect();
        let obj = move |s: f64| {
            let d = s.exp();
            match g_minus(ratio + d, beta) {
                Ok(g) => g * g / d,
                Err(_) => f64::INFINITY,
            }
        };
        (Branch::Call, grid, Box::new(obj))
    } else {
        // Search in s = ln(chi / (K/S0 - chi)).
        let grid = (0..=400)
            .map(|j| -140.0 + 170.0 * j as f64 / 400.0)
            .collect();
        let obj = move |s: f64| {
            let t = 1.0 / (1.0 + (-s).exp());
            let chi = ratio * t;
            let gap = ratio * (1.0 - t);
            match g_plus(chi, beta) {
                Ok(g) if chi > 0.0 && gap > 0.0 => g * g / gap,
                _ => f64::INFINITY,
            }
        };
        (Branch::Put, grid, Box::new(obj))
    };
    let vals: Vec<f64> = grid.iter().map(|&s| objective(s)).collect();
    let (imin, _) = vals
        .iter()
        .enumerate()
        .fold((0, f64::INFINITY), |acc, (i, &v)| if v < acc.1 { (i, v) } else { acc });
    if imin == 0 || imin == grid.len() - 1 {
        return Err(Error::MinimizerAtBoundary { at: grid[imin] });
    }
    let m = brent_min(&objective, grid[imin - 1], grid[imin + 1], 1e-12)?;
    let x_star = match branch {
        Branch::Call => ratio + m.x.exp(),
        _ => ratio / (1.0 + (-m.x).exp()),
    };
    Ok(RateResult {
        value: scale * m.fx,
        diag: CevRateDiag {
            x_star,
            branch,
            residual: 0.0,
        },
    })
}

/// Fourth-order expansion in `log(K/S0)` around the money.
pub fn rate_cev_taylor(k: f64, params: &ModelParams) -> f64 {
    let x = (k / params.s0).ln();
    let g = 1.0 - params.beta;
    let c3 = -0.3 + 1.8 * g;
    let c4 = 109.0 / 1400.0 - 117.0 / 350.0 * g + 198.0 / 175.0 * g * g;
    params.rate_scale() * x * x * (1.5 + x * (c3 + x * c4))
}

/// Leading large-strike behaviour of the rate function.
pub fn rate_cev_large_strike(k: f64, params: &ModelParams) -> Result<f64> {
    params.validate()?;
    if !(k > params.s0) {
        return Err(domain(format!("large-strike limit requires K > S0, got {k}")));
    }
    let b = params.beta;
    let g = 1.0 - b;
    let lg = 2.0 * log_gamma(g)? - 2.0 * log_gamma(1.5 - b)?;
    let coef = PI * lg.exp() / (3.0 - 2.0 * b);
    Ok(half_scale(params) * coef * ((3.0 - 2.0 * b) / (2.0 * g) * k / params.s0).powf(2.0 * g))
}

/// Leading small-strike behaviour of the rate function.
pub fn rate_cev_small_strike(k: f64, params: &ModelParams) -> Result<f64> {
    params.validate()?;
    if !(k > 0.0 && k < params.s0) {
        return Err(domain(format!(
            "small-strike limit requires 0 < K < S0, got {k}"
        )));
    }
    let d = 3.0 - 2.0 * params.beta;
    Ok(params.s0 / k * 2.0 * params.rate_scale() / (d * d))
}
