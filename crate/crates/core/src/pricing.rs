//! Short-maturity Asian option prices from rate functions.
//!
//! Fixed strikes use a Black–Scholes shaped formula on the average with the
//! equivalent log-normal volatility; floating strikes use a zero-strike
//! Bachelier formula on `kappa S_T - A_T`.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::float_strike::{rate_float_cev, rate_float_sqrt};
use crate::model::{ModelParams, OptionSpec, Side, Style};
use crate::rate_cev::rate_cev;
use crate::specfun::{norm_cdf, norm_pdf};
use crate::varsolve;

/// `|log(K/S0)|` (or `|log kappa|`) below which the at-the-money formulas are used.
pub const ATM_THRESHOLD: f64 = 1e-5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VolKind {
    Lognormal,
    Normal,
}

/// Where the rate function feeding the equivalent volatility comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RateSource {
    #[default]
    ClosedForm,
    Variational,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PricingOptions {
    pub source: RateSource,
    /// Center the log-normal volatility on `A(T)` instead of `S0`, keeping the `S0` prefactor.
    pub forward_centered: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PricingResult {
    pub price: f64,
    pub equiv_vol: f64,
    pub vol_kind: VolKind,
    /// `d1` for fixed strikes, `d` for floating strikes.
    pub d1: f64,
    /// `None` for floating strikes.
    pub d2: Option<f64>,
    /// `A(T)` for fixed strikes, `F_f(T)` for floating strikes.
    pub forward: f64,
    pub atm: bool,
    /// Floating-strike volatility outside the square-root model.
    pub extrapolated: bool,
}

/// `(e^x - 1)/x`, with the series near zero.
fn expm1_ratio(x: f64) -> f64 {
    if x.abs() < 1e-12 {
        1.0 + x * (0.5 + x / 6.0)
    } else {
        x.exp_m1() / x
    }
}

/// Expected average `A(T) = S0 (e^{(r-q)T} - 1)/((r-q)T)`.
pub fn average_forward(params: &ModelParams, t: f64) -> f64 {
    params.s0 * expm1_ratio(params.carry() * t)
}

/// Forward of `kappa S_T - A_T`.
pub fn floating_forward(kappa: f64, params: &ModelParams, t: f64) -> f64 {
    let x = params.carry() * t;
    params.s0 * (kappa * x.exp() - expm1_ratio(x))
}

fn fixed_rate(k: f64, params: &ModelParams, source: RateSource) -> Result<f64> {
    match source {
        RateSource::ClosedForm => Ok(rate_cev(k, params)?.value),
        RateSource::Variational => Ok(varsolve::minimize_fixed(k, params)?.value),
    }
}

/// ATM level and its quadratic expansion in `x = log(K/S0)`.
fn lognormal_series(x: f64, params: &ModelParams) -> f64 {
    let b = params.beta - 1.0;
    let c1 = 0.1 + 0.6 * b;
    let c2 = -23.0 / 2100.0 + 12.0 / 175.0 * b + 57.0 / 350.0 * b * b;
    atm_lognormal_vol(params) * (1.0 + x * (c1 + x * c2))
}

/// `sigma S0^{beta-1} / sqrt(3)`.
pub fn atm_lognormal_vol(params: &ModelParams) -> f64 {
    params.sigma * params.s0.powf(params.beta - 1.0) / 3f64.sqrt()
}

/// Equivalent log-normal volatility `sqrt(log^2(K/S0) / (2 I(K, S0)))`.
pub fn equiv_lognormal_vol(k: f64, params: &ModelParams) -> Result<f64> {
    equiv_lognormal_vol_with(k, params, RateSource::ClosedForm)
}

pub fn equiv_lognormal_vol_with(k: f64, params: &ModelParams, source: RateSource) -> Result<f64> {
    params.validate()?;
    if !(k.is_finite() && k > 0.0) {
        return Err(domain(format!("strike must be positive, got {k}")));
    }
    let x = (k / params.s0).ln();
    if x.abs() < ATM_THRESHOLD {
        return Ok(lognormal_series(x, params));
    }
    let rate = fixed_rate(k, params, source)?;
    Ok((x * x / (2.0 * rate)).sqrt())
}

fn forward_centered_vol(k: f64, a: f64, params: &ModelParams, source: RateSource) -> Result<f64> {
    let x = (k / a).ln();
    if x.abs() < ATM_THRESHOLD {
        return Ok(lognormal_series(x, params));
    }
    // Same shape in K/A(T), same S0 prefactor.
    let rate = fixed_rate(k * params.s0 / a, params, source)?;
    Ok((x * x / (2.0 * rate)).sqrt())
}

/// Leading-order ATM price `sigma S0^beta sqrt(T / (6 pi))`.
pub fn atm_price(params: &ModelParams, t: f64) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    params.sigma * params.s0.powf(params.beta) * (t / (6.0 * std::f64::consts::PI)).sqrt()
}

/// Black–Scholes shaped price on the average given `A(T)` and `Sigma`.
pub fn black_on_average(side: Side, a: f64, k: f64, vol: f64, r: f64, t: f64) -> (f64, f64, f64) {
    let sd = vol * t.sqrt();
    let d1 = ((a / k).ln() + 0.5 * sd * sd) / sd;
    let d2 = d1 - sd;
    let df = (-r * t).exp();
    let price = match side {
        Side::Call => df * (a * norm_cdf(d1) - k * norm_cdf(d2)),
        Side::Put => df * (k * norm_cdf(-d2) - a * norm_cdf(-d1)),
    };
    (price, d1, d2)
}

pub fn price_fixed(spec: &OptionSpec, params: &ModelParams) -> Result<PricingResult> {
    price_fixed_with(spec, params, &PricingOptions::default())
}

pub fn price_fixed_with(
    spec: &OptionSpec,
    params: &ModelParams,
    opts: &PricingOptions,
) -> Result<PricingResult> {
    params.validate()?;
    spec.validate()?;
    if spec.style != Style::Fixed {
        return Err(domain("price_fixed needs a fixed-strike contract"));
    }
    let t = spec.maturity;
    let k = spec.strike;
    let a = average_forward(params, t);
    let vol = if opts.forward_centered {
        forward_centered_vol(k, a, params, opts.source)?
    } else {
        equiv_lognormal_vol_with(k, params, opts.source)?
    };
    let (price, d1, d2) = black_on_average(spec.side, a, k, vol, params.r, t);
    Ok(PricingResult {
        price,
        equiv_vol: vol,
        vol_kind: VolKind::Lognormal,
        d1,
        d2: Some(d2),
        forward: a,
        atm: (k / params.s0).ln().abs() < ATM_THRESHOLD,
        extrapolated: false,
    })
}

/// `sigma S0^beta / sqrt(3)`, the ATM normal volatility.
pub fn atm_normal_vol(params: &ModelParams) -> f64 {
    params.sigma * params.s0.powf(params.beta) / 3f64.sqrt()
}

/// Equivalent normal volatility `|kappa - 1| S0 / sqrt(2 I_f(kappa))`.
///
/// At `beta = 1/2` this is `sigma |kappa - 1| sqrt(S0 / (2 J_f))`.
pub fn equiv_normal_vol(kappa: f64, params: &ModelParams) -> Result<f64> {
    equiv_normal_vol_with(kappa, params, RateSource::ClosedForm)
}

pub fn equiv_normal_vol_with(kappa: f64, params: &ModelParams, source: RateSource) -> Result<f64> {
    params.validate()?;
    if !(kappa.is_finite() && kappa > 0.0) {
        return Err(domain(format!("kappa must be positive, got {kappa}")));
    }
    if kappa == 1.0 {
        return Ok(atm_normal_vol(params));
    }
    let closed = params.is_sqrt() && source == RateSource::ClosedForm;
    if !closed && kappa.ln().abs() < ATM_THRESHOLD {
        return Ok(atm_normal_vol(params));
    }
    let rate = if closed {
        rate_float_sqrt(kappa, params)?.value
    } else {
        rate_float_cev(kappa, params)?.value
    };
    Ok((kappa - 1.0).abs() * params.s0 / (2.0 * rate).sqrt())
}

pub fn price_floating(spec: &OptionSpec, params: &ModelParams) -> Result<PricingResult> {
    price_floating_with(spec, params, &PricingOptions::default())
}

pub fn price_floating_with(
    spec: &OptionSpec,
    params: &ModelParams,
    opts: &PricingOptions,
) -> Result<PricingResult> {
    params.validate()?;
    spec.validate()?;
    if spec.style != Style::Floating {
        return Err(domain("price_floating needs a floating-strike contract"));
    }
    let t = spec.maturity;
    let kappa = spec.strike;
    let f = floating_forward(kappa, params, t);
    let vol = equiv_normal_vol_with(kappa, params, opts.source)?;
    let sd = vol * t.sqrt();
    let d = f / sd;
    let df = (-params.r * t).exp();
    let price = match spec.side {
        Side::Call => df * (f * norm_cdf(d) + sd * norm_pdf(d)),
        Side::Put => df * (-f * norm_cdf(-d) + sd * norm_pdf(d)),
    };
    Ok(PricingResult {
        price,
        equiv_vol: vol,
        vol_kind: VolKind::Normal,
        d1: d,
        d2: None,
        forward: f,
        atm: kappa.ln().abs() < ATM_THRESHOLD,
        extrapolated: !params.is_sqrt(),
    })
}

/// Dispatch on the contract style.
pub fn price(spec: &OptionSpec, params: &ModelParams, opts: &PricingOptions) -> Result<PricingResult> {
    match spec.style {
        Style::Fixed => price_fixed_with(spec, params, opts),
        Style::Floating => price_floating_with(spec, params, opts),
    }
}

/// `C - P - e^{-rT} (A(T) - K)`.
pub fn parity_gap(call: f64, put: f64, k: f64, params: &ModelParams, t: f64) -> f64 {
    call - put - (-params.r * t).exp() * (average_forward(params, t) - k)
}
