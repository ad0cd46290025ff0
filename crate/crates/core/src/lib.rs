//! Short-maturity asymptotics for Asian options under the CEV model.
//!
//! Rate functions for fixed and floating strikes, the resulting price and
//! equivalent-volatility approximations, and Monte Carlo and variational
//! oracles used to check them.

pub mod bench;
pub mod error;
pub mod float_strike;
pub mod mc;
pub mod model;
pub mod pricing;
pub mod rate_cev;
pub mod rate_sqrt;
pub mod solve;
pub mod varsolve;
pub mod specfun;

pub use error::{Error, Result};
pub use model::{Branch, ModelParams, OptionSpec, RateResult, Side, Style};
