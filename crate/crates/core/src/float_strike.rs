//! Floating-strike rate function: closed form in the square-root model, variational otherwise.

use std::f64::consts::{FRAC_PI_2, PI};

use crate::error::{domain, Error, Result};
use crate::model::{Branch, ModelParams, RateResult};
use crate::solve::{brent_root, expand_upper};
use crate::varsolve::{self, VarSolveConfig};

/// Half-width of the `ln(kappa)` window where the series expansion is used.
pub const ATM_WINDOW: f64 = 1e-5;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FloatRateDiag {
    pub z_star: f64,
    pub theta_c: f64,
    /// `Put` for `kappa > 1`, `Call` for `kappa < 1`.
    pub branch: Branch,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FloatCevDiag {
    pub lambda: f64,
    pub converged: bool,
    pub floor_active: bool,
    pub shooting_value: Option<f64>,
}

fn check_kappa(kappa: f64) -> Result<()> {
    if !(kappa.is_finite() && kappa > 0.0) {
        return Err(domain(format!("kappa must be positive, got {kappa}")));
    }
    Ok(())
}

/// Explosion point of the floating-strike cumulant: `u - atan(kappa u) = pi/2`, `theta_c = 2u^2/sigma^2`.
pub fn solve_theta_c(kappa: f64, params: &ModelParams) -> f64 {
    let f = |u: f64| u - (kappa * u).atan() - FRAC_PI_2;
    let u = brent_root(f, FRAC_PI_2, PI, 1e-16)
        .map(|r| r.x)
        .unwrap_or(FRAC_PI_2);
    2.0 * u * u / (params.sigma * params.sigma)
}

/// Short-maturity cumulant limit of `int S dt - kappa S_T` in the square-root model.
///
/// For `theta < 0` the hyperbolic branch is evaluated through the addition
/// formula, so it stays defined when `sigma kappa sqrt(-theta/2) >= 1`; past the
/// pole of that expression the cumulant is `+inf`.
pub fn cumulant_float(theta: f64, kappa: f64, params: &ModelParams) -> f64 {
    let s = params.sigma;
    let s2 = s * s;
    if theta == 0.0 {
        return 0.0;
    }
    if theta > 0.0 {
        if theta >= solve_theta_c(kappa, params) {
            return f64::INFINITY;
        }
        let u = s * (0.5 * theta).sqrt();
        2.0 * u / s2 * (u - (kappa * u).atan()).tan() * params.s0
    } else {
        let v = s * (-0.5 * theta).sqrt();
        let t = v.tanh();
        let den = 1.0 - kappa * v * t;
        if den <= 0.0 {
            return f64::INFINITY;
        }
        -2.0 * v / s2 * (t - kappa * v) / den * params.s0
    }
}

/// Three-term expansion of the dimensionless floating rate in `ln(kappa)`.
pub fn jf_series(kappa: f64) -> f64 {
    let x = kappa.ln();
    x * x * (1.5 + x * (-33.0 / 20.0 + x * 5809.0 / 5600.0))
}

/// Stationarity condition for `kappa > 1`, divided by `cos^2 z`.
fn eqz_trig(z: f64, kappa: f64) -> f64 {
    let c = z.cos();
    let kz2 = kappa * kappa * z * z;
    (1.0 + kz2) / (c * c) + (1.0 - kz2) * z.tan() / z - 2.0 * kappa
}

/// Stationarity condition for `kappa < 1`, divided by `cosh^2 z`.
fn eqz_hyp(z: f64, kappa: f64) -> f64 {
    let c = z.cosh();
    let kz2 = kappa * kappa * z * z;
    (1.0 - kz2) / (c * c) + (1.0 + kz2) * z.tanh() / z - 2.0 * kappa
}

fn count_sign_changes<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, n: usize) -> usize {
    let mut prev = f(lo);
    let mut count = 0;
    for i in 1..=n {
        let x = lo + (hi - lo) * i as f64 / n as f64;
        let v = f(x);
        if v.signum() != prev.signum() {
            count += 1;
        }
        prev = v;
    }
    count
}

/// Root size above which `jf_closed_form` switches to `jf_small_kappa`.
pub const SMALL_KAPPA_Z: f64 = 16.0;

/// Large-root form for small `kappa`, where `tanh z` is 1 to working precision:
/// `kappa z = 1 - 2 e^{-z}` and `J_f = 2 z / (1 + 2 e^{-z})`, error `O(z e^{-2z})`.
pub fn jf_small_kappa(kappa: f64) -> (f64, f64) {
    let mut z = 1.0 / kappa;
    for _ in 0..100 {
        let next = (1.0 - 2.0 * (-z).exp()) / kappa;
        if next == z {
            break;
        }
        z = next;
    }
    (2.0 * z / (1.0 + 2.0 * (-z).exp()), z)
}

/// `J_f(kappa)`, the floating rate function in units of `S0 / sigma^2`, and its root `z`.
pub fn jf_closed_form(kappa: f64) -> Result<(f64, f64)> {
    check_kappa(kappa)?;
    if kappa == 1.0 {
        return Ok((0.0, 0.0));
    }
    let eps = 1e-12;
    if kappa > 1.0 {
        // Numerator kappa z - tan z vanishes at z1 < pi/2.
        let z1 = brent_root(|z| kappa * z - z.tan(), eps, FRAC_PI_2 - eps, 1e-16)?.x;
        let f = |z: f64| eqz_trig(z, kappa);
        let hi = z1 * (1.0 - 1e-12);
        if count_sign_changes(f, eps, hi, 400) > 1 {
            log::warn!("multiple stationary points for kappa = {kappa}; taking the bracketed root");
        }
        let z = brent_root(f, eps, hi, 1e-16)?.x;
        let t = z.tan();
        Ok((2.0 * z * (kappa * z - t) / (1.0 + kappa * z * t), z))
    } else {
        // Denominator 1 - kappa z tanh z and numerator tanh z - kappa z; tanh z0 = kappa z0 bounds the root.
        let g = |z: f64| z.tanh() - kappa * z;
        let (lo, hi) = expand_upper(g, eps, 2.0, 2.0, 1e300)?;
        let z0 = brent_root(g, lo.max(eps), hi, 1e-16 * hi)?.x;
        let f = |z: f64| eqz_hyp(z, kappa);
        let hi = z0 * (1.0 - 1e-12);
        if z0 >= SMALL_KAPPA_Z || f(hi) >= 0.0 {
            return Ok(jf_small_kappa(kappa));
        }
        if count_sign_changes(f, eps, hi, 400) > 1 {
            log::warn!("multiple stationary points for kappa = {kappa}; taking the bracketed root");
        }
        let z = brent_root(f, eps, hi, 1e-16 * hi)?.x;
        let t = z.tanh();
        Ok((2.0 * z * (t - kappa * z) / (1.0 - kappa * z * t), z))
    }
}

/// Floating-strike rate function in the square-root model.
pub fn rate_float_sqrt(kappa: f64, params: &ModelParams) -> Result<RateResult<FloatRateDiag>> {
    params.validate()?;
    if !params.is_sqrt() {
        return Err(domain(format!(
            "closed-form floating rate requires beta = 0.5, got {}",
            params.beta
        )));
    }
    check_kappa(kappa)?;
    let theta_c = solve_theta_c(kappa, params);
    let scale = params.s0 / (params.sigma * params.sigma);
    let lk = kappa.ln();
    let branch = if kappa > 1.0 {
        Branch::Put
    } else if kappa < 1.0 {
        Branch::Call
    } else {
        Branch::Atm
    };
    let (jf, z) = if kappa == 1.0 {
        (0.0, 0.0)
    } else if lk.abs() < ATM_WINDOW {
        (jf_series(kappa), (1.5 * (kappa - 1.0).abs()).sqrt())
    } else {
        jf_closed_form(kappa)?
    };
    Ok(RateResult {
        value: scale * jf,
        diag: FloatRateDiag {
            z_star: z,
            theta_c,
            branch,
        },
    })
}

/// Floating-strike rate function for general `beta` from the variational problem.
pub fn rate_float_cev(kappa: f64, params: &ModelParams) -> Result<RateResult<FloatCevDiag>> {
    rate_float_cev_with(kappa, params, &VarSolveConfig::default())
}

pub fn rate_float_cev_with(
    kappa: f64,
    params: &ModelParams,
    cfg: &VarSolveConfig,
) -> Result<RateResult<FloatCevDiag>> {
    params.validate()?;
    check_kappa(kappa)?;
    let r = varsolve::minimize_float_with(kappa, params, cfg)?;
    if !r.converged {
        return Err(Error::NonConvergence {
            what: "floating-strike variational solve",
            iterations: r.iterations,
        });
    }
    if params.is_sqrt() && kappa != 1.0 {
        let closed = rate_float_sqrt(kappa, params)?.value;
        if closed > 0.0 && ((r.value - closed) / closed).abs() > 1e-3 {
            log::warn!(
                "variational floating rate {} disagrees with closed form {closed}",
                r.value
            );
        }
    }
    Ok(RateResult {
        value: r.value,
        diag: FloatCevDiag {
            lambda: r.lambda,
            converged: r.converged,
            floor_active: r.floor_active,
            shooting_value: r.shooting_value,
        },
    })
}

/// Floating-strike rate using the closed form when available.
pub fn rate_float(kappa: f64, params: &ModelParams) -> Result<f64> {
    if params.is_sqrt() {
        Ok(rate_float_sqrt(kappa, params)?.value)
    } else {
        Ok(rate_float_cev(kappa, params)?.value)
    }
}
