//! Square-root model (beta = 1/2): cumulant limit, rate function and its asymptotics.

use std::f64::consts::{FRAC_PI_2, PI};

use crate::error::{domain, Result};
use crate::model::{Branch, ModelParams, RateResult};
use crate::solve::{brent_root, expand_upper};

/// Half-width of the log-moneyness window where the Taylor expansion is used.
pub const ATM_WINDOW: f64 = 1e-5;

const X_MIN: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SqrtRateDiag {
    /// Root of the defining equation; zero at the money.
    pub x: f64,
    /// Maximizer of the Legendre transform.
    pub theta_star: f64,
    pub branch: Branch,
    /// Residual of the defining equation relative to `K/S0`.
    pub residual: f64,
}

/// `sinh(y)/y - 1`.
pub(crate) fn sinhc_m1(y: f64) -> f64 {
    if y.abs() >= 1.0 {
        return y.sinh() / y - 1.0;
    }
    let y2 = y * y;
    let mut term = y2 / 6.0;
    let mut sum = 0.0f64;
    let mut k = 2.0;
    while term.abs() > 1e-18 * sum.abs() {
        sum += term;
        term *= y2 / ((2.0 * k) * (2.0 * k + 1.0));
        k += 1.0;
    }
    sum
}

/// `1 - sin(y)/y`.
pub(crate) fn sinc_m1(y: f64) -> f64 {
    if y.abs() >= 1.0 {
        return 1.0 - y.sin() / y;
    }
    let y2 = y * y;
    let mut term = y2 / 6.0;
    let mut sum = 0.0f64;
    let mut k = 2.0;
    while term.abs() > 1e-18 * sum.abs() {
        sum += term;
        term *= -y2 / ((2.0 * k) * (2.0 * k + 1.0));
        k += 1.0;
    }
    sum
}

/// Short-maturity limit of the scaled cumulant generating function of the average.
///
/// Uses `s0` and `sigma` of `params` as the square-root model; returns `+inf`
/// past the explosion point `pi^2 / (2 sigma^2)`.
pub fn cumulant_sqrt(theta: f64, params: &ModelParams) -> f64 {
    let s = params.sigma;
    if theta == 0.0 {
        0.0
    } else if theta > 0.0 {
        if theta >= PI * PI / (2.0 * s * s) {
            return f64::INFINITY;
        }
        let q = (2.0 * theta).sqrt();
        q / s * (0.5 * s * q).tan() * params.s0
    } else {
        let q = (-2.0 * theta).sqrt();
        -q / s * (0.5 * s * q).tanh() * params.s0
    }
}

fn put_lhs(x: f64) -> f64 {
    let c = x.cosh();
    0.5 / (c * c) + x.tanh() / (2.0 * x)
}

fn call_lhs(x: f64) -> f64 {
    let c = x.cos();
    0.5 / (c * c) + x.tan() / (2.0 * x)
}

fn put_value(x: f64) -> f64 {
    let c = x.cosh();
    if x < 0.5 {
        x * x / (c * c) * sinhc_m1(2.0 * x)
    } else {
        x * x.tanh() - x * x / (c * c)
    }
}

fn call_value(x: f64) -> f64 {
    let c = x.cos();
    x * x / (c * c) * sinc_m1(2.0 * x)
}

/// Fourth-order expansion in `log(K/S0)` around the money.
pub fn rate_sqrt_taylor(k: f64, params: &ModelParams) -> f64 {
    let x = (k / params.s0).ln();
    params.s0 / (params.sigma * params.sigma)
        * x
        * x
        * (1.5 + x * (0.6 + x * 271.0 / 1400.0))
}

fn require_sqrt(params: &ModelParams) -> Result<()> {
    params.validate()?;
    if !params.is_sqrt() {
        return Err(domain(format!(
            "square-root model requires beta = 0.5, got {}",
            params.beta
        )));
    }
    Ok(())
}

/// Rate function of the time average for the square-root model.
pub fn rate_sqrt(k: f64, params: &ModelParams) -> Result<RateResult<SqrtRateDiag>> {
    require_sqrt(params)?;
    if !(k.is_finite() && k > 0.0) {
        return Err(domain(format!("strike must be positive, got {k}")));
    }
    let ratio = k / params.s0;
    let s2 = params.sigma * params.sigma;
    let scale = params.s0 / s2;
    if ratio == 1.0 {
        return Ok(RateResult {
            value: 0.0,
            diag: SqrtRateDiag {
                x: 0.0,
                theta_star: 0.0,
                branch: Branch::Atm,
                residual: 0.0,
            },
        });
    }
    let lm = ratio.ln();
    if lm.abs() < ATM_WINDOW {
        let x = (1.5 * (ratio - 1.0).abs()).sqrt();
        let (branch, theta_star) = if ratio > 1.0 {
            (Branch::Call, 2.0 * x * x / s2)
        } else {
            (Branch::Put, -2.0 * x * x / s2)
        };
        return Ok(RateResult {
            value: rate_sqrt_taylor(k, params),
            diag: SqrtRateDiag {
                x,
                theta_star,
                branch,
                residual: 0.0,
            },
        });
    }
    if ratio > 1.0 {
        let f = |x: f64| call_lhs(x) - ratio;
        let root = brent_root(f, X_MIN, FRAC_PI_2 - X_MIN, 1e-16)?;
        Ok(RateResult {
            value: scale * call_value(root.x),
            diag: SqrtRateDiag {
                x: root.x,
                theta_star: 2.0 * root.x * root.x / s2,
                branch: Branch::Call,
                residual: root.residual / ratio,
            },
        })
    } else {
        let f = |x: f64| put_lhs(x) - ratio;
        let (lo, hi) = expand_upper(f, X_MIN, 1.0, 2.0, 1e300)?;
        let root = brent_root(f, lo, hi, 1e-16 * hi)?;
        Ok(RateResult {
            value: scale * put_value(root.x),
            diag: SqrtRateDiag {
                x: root.x,
                theta_star: -2.0 * root.x * root.x / s2,
                branch: Branch::Put,
                residual: root.residual / ratio,
            },
        })
    }
}

/// Leading large-strike behaviour `pi^2 K / (2 sigma^2)`.
pub fn rate_sqrt_large_strike(k: f64, params: &ModelParams) -> Result<f64> {
    if !(k > params.s0) {
        return Err(domain(format!("large-strike limit requires K > S0, got {k}")));
    }
    Ok(PI * PI * k / (2.0 * params.sigma * params.sigma))
}

/// Leading small-strike behaviour `S0^2 / (2 sigma^2 K)`.
pub fn rate_sqrt_small_strike(k: f64, params: &ModelParams) -> Result<f64> {
    if !(k > 0.0 && k < params.s0) {
        return Err(domain(format!(
            "small-strike limit requires 0 < K < S0, got {k}"
        )));
    }
    Ok(params.s0 * params.s0 / (2.0 * params.sigma * params.sigma * k))
}
