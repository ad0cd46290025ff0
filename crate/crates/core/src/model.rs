//! Model and contract types shared by every pricing route.

use serde::{Deserialize, Serialize};

use std::fmt;
use std::str::FromStr;

use crate::error::{domain, Error, Result};

/// Elasticities closer than this to one half are treated as the square-root model.
pub const SQRT_BETA_TOL: f64 = 1e-7;

/// Parameters of the CEV diffusion `dS = (r - q) S dt + sigma S^beta dW`.
///
/// `sigma` carries units of price^(1-beta) per square-root time; `r` and `q`
/// are continuously compounded rates per unit time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub s0: f64,
    pub sigma: f64,
    pub beta: f64,
    pub r: f64,
    pub q: f64,
}

impl ModelParams {
    pub fn new(s0: f64, sigma: f64, beta: f64, r: f64, q: f64) -> Result<Self> {
        let p = ModelParams {
            s0,
            sigma,
            beta,
            r,
            q,
        };
        p.validate()?;
        Ok(p)
    }

    /// Driftless parameters, the natural setting for rate functions.
    pub fn driftless(s0: f64, sigma: f64, beta: f64) -> Result<Self> {
        Self::new(s0, sigma, beta, 0.0, 0.0)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.s0.is_finite() && self.s0 > 0.0) {
            return Err(domain(format!("s0 must be positive, got {}", self.s0)));
        }
        if !(self.sigma.is_finite() && self.sigma > 0.0) {
            return Err(domain(format!("sigma must be positive, got {}", self.sigma)));
        }
        if !(self.beta >= 0.5 && self.beta < 1.0) {
            return Err(domain(format!("beta must lie in [0.5, 1), got {}", self.beta)));
        }
        if !(self.r.is_finite() && self.q.is_finite()) {
            return Err(domain("rates must be finite"));
        }
        Ok(())
    }

    pub fn is_sqrt(&self) -> bool {
        (self.beta - 0.5).abs() < SQRT_BETA_TOL
    }

    /// `S0^{2(1-beta)} / sigma^2`, the natural unit of the rate function.
    pub fn rate_scale(&self) -> f64 {
        self.s0.powf(2.0 * (1.0 - self.beta)) / (self.sigma * self.sigma)
    }

    /// Net carry `r - q`.
    pub fn carry(&self) -> f64 {
        self.r - self.q
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Call,
    Put,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Style {
    Fixed,
    Floating,
}

impl Side {
    pub fn as_str(self) -> &'static str {
        match self {
            Side::Call => "call",
            Side::Put => "put",
        }
    }
}

impl Style {
    pub fn as_str(self) -> &'static str {
        match self {
            Style::Fixed => "fixed",
            Style::Floating => "floating",
        }
    }
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl fmt::Display for Style {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Side {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "call" | "c" => Ok(Side::Call),
            "put" | "p" => Ok(Side::Put),
            other => Err(domain(format!("unknown side {other:?}"))),
        }
    }
}

impl FromStr for Style {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "fixed" => Ok(Style::Fixed),
            "floating" | "float" => Ok(Style::Floating),
            other => Err(domain(format!("unknown style {other:?}"))),
        }
    }
}

/// An Asian option with continuous arithmetic averaging.
///
/// For `Style::Fixed`, `strike` is the price `K`; for `Style::Floating` it is
/// the dimensionless multiplier `kappa` applied to the terminal price.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptionSpec {
    pub style: Style,
    pub side: Side,
    pub strike: f64,
    pub maturity: f64,
}

impl OptionSpec {
    pub fn fixed(side: Side, strike: f64, maturity: f64) -> Self {
        OptionSpec {
            style: Style::Fixed,
            side,
            strike,
            maturity,
        }
    }

    pub fn floating(side: Side, kappa: f64, maturity: f64) -> Self {
        OptionSpec {
            style: Style::Floating,
            side,
            strike: kappa,
            maturity,
        }
    }

    /// Fixed strikes must be positive; a floating multiplier may be zero.
    pub fn validate(&self) -> Result<()> {
        let ok = match self.style {
            Style::Fixed => self.strike > 0.0,
            Style::Floating => self.strike >= 0.0,
        };
        if !(self.strike.is_finite() && ok) {
            return Err(domain(format!("invalid strike {}", self.strike)));
        }
        if !(self.maturity.is_finite() && self.maturity > 0.0) {
            return Err(domain(format!(
                "maturity must be positive, got {}",
                self.maturity
            )));
        }
        Ok(())
    }
}

/// Which side of the money a rate function was evaluated on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Branch {
    Put,
    Call,
    Atm,
}

/// A rate-function value together with solver diagnostics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateResult<D> {
    pub value: f64,
    pub diag: D,
}
