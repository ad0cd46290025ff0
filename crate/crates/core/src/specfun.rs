//! Gauss hypergeometric function, gamma function and the standard normal law.

use std::f64::consts::PI;

use crate::error::{domain, Error, Result};

const SERIES_TOL: f64 = 1e-16;
const SERIES_BUDGET: usize = 10_000;
const DEGENERATE_TOL: f64 = 1e-8;
const PERTURBATION: f64 = 1e-7;

/// Arguments of `2F1(a, b; c; z)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HypArgs {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub z: f64,
}

impl HypArgs {
    pub fn new(a: f64, b: f64, c: f64, z: f64) -> Self {
        HypArgs { a, b, c, z }
    }

    pub fn validate(&self) -> Result<()> {
        let HypArgs { a, b, c, z } = *self;
        if !(a.is_finite() && b.is_finite() && c.is_finite() && z.is_finite()) {
            return Err(domain("2F1 arguments must be finite"));
        }
        if z >= 1.0 {
            return Err(domain(format!("2F1 requires z < 1, got {z}")));
        }
        if is_nonpositive_int(c) {
            return Err(domain(format!("2F1 undefined for c = {c}")));
        }
        Ok(())
    }

    pub fn eval(&self) -> Result<f64> {
        hyp2f1(self.a, self.b, self.c, self.z)
    }
}

fn is_nonpositive_int(x: f64) -> bool {
    x <= 0.0 && x == x.round()
}

fn near_int(x: f64) -> bool {
    (x - x.round()).abs() < DEGENERATE_TOL
}

/// Neumaier-compensated accumulator.
#[derive(Default, Clone, Copy)]
pub(crate) struct KahanSum {
    sum: f64,
    comp: f64,
}

impl KahanSum {
    pub(crate) fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub(crate) fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Gauss hypergeometric function `2F1(a, b; c; z)` for real `z < 1`.
pub fn hyp2f1(a: f64, b: f64, c: f64, z: f64) -> Result<f64> {
    HypArgs::new(a, b, c, z).validate()?;
    if z == 0.0 {
        return Ok(1.0);
    }
    if z.abs() <= 0.5 {
        series(a, b, c, z)
    } else if z > 0.5 {
        near_one(a, b, c, z)
    } else if z >= -1.0 {
        // Pfaff: the new argument z/(z-1) lies in [1/3, 1/2].
        let w = z / (z - 1.0);
        Ok((1.0 - z).powf(-a) * series(a, c - b, c, w)?)
    } else {
        large_negative(a, b, c, z)
    }
}

/// Rough number of terms the direct series needs at `z`, or `None` past the budget.
fn terms_needed(a: f64, b: f64, c: f64, z: f64) -> Option<usize> {
    let r = z.abs();
    if r >= 1.0 {
        return None;
    }
    let growth = (a + b - c - 1.0).max(0.0);
    let n = (10.0 - SERIES_TOL.ln()) / -r.ln() * (1.0 + growth);
    (n < 0.9 * SERIES_BUDGET as f64).then_some(n as usize)
}

fn series(a: f64, b: f64, c: f64, z: f64) -> Result<f64> {
    let rho = z.abs();
    let mut acc = KahanSum::default();
    let mut term = 1.0;
    acc.add(term);
    for n in 0..SERIES_BUDGET {
        let nf = n as f64;
        term *= (a + nf) * (b + nf) / ((c + nf) * (nf + 1.0)) * z;
        acc.add(term);
        if term == 0.0 {
            return Ok(acc.value());
        }
        // Once the term ratio has settled below one, bound the geometric tail.
        let ratio = ((a + nf + 1.0) * (b + nf + 1.0) / ((c + nf + 1.0) * (nf + 2.0)) * z).abs();
        let q = ratio.max(rho);
        if q < 1.0 && nf > (a.abs() + b.abs() + c.abs()) {
            let tail = term.abs() * q / (1.0 - q);
            if tail <= SERIES_TOL * acc.value().abs() {
                return Ok(acc.value());
            }
        }
    }
    Err(Error::NonConvergence {
        what: "2F1 power series",
        iterations: SERIES_BUDGET,
    })
}

fn near_one(a: f64, b: f64, c: f64, z: f64) -> Result<f64> {
    if near_int(c - a - b) {
        if terms_needed(a, b, c, z).is_some() {
            if let Ok(v) = series(a, b, c, z) {
                return Ok(v);
            }
        }
        log::debug!("2F1({a}, {b}; {c}; {z}): degenerate c-a-b, averaging perturbed a");
        let lo = connection_near_one(a - PERTURBATION, b, c, z)?;
        let hi = connection_near_one(a + PERTURBATION, b, c, z)?;
        return Ok(0.5 * (lo + hi));
    }
    connection_near_one(a, b, c, z)
}

// Abramowitz & Stegun 15.3.6.
fn connection_near_one(a: f64, b: f64, c: f64, z: f64) -> Result<f64> {
    let w = 1.0 - z;
    let s = c - a - b;
    let g1 = gamma(c) * gamma(s) * rgamma(c - a) * rgamma(c - b);
    let g2 = gamma(c) * gamma(-s) * rgamma(a) * rgamma(b);
    let f1 = if g1 == 0.0 { 0.0 } else { series(a, b, 1.0 - s, w)? };
    let f2 = if g2 == 0.0 {
        0.0
    } else {
        series(c - a, c - b, s + 1.0, w)?
    };
    Ok(g1 * f1 + w.powf(s) * g2 * f2)
}

fn large_negative(a: f64, b: f64, c: f64, z: f64) -> Result<f64> {
    if near_int(b - a) {
        // Pfaff maps z to (1/2, 1) where the remaining function is itself degenerate.
        let w = z / (z - 1.0);
        if terms_needed(a, c - b, c, w).is_some() {
            if let Ok(v) = series(a, c - b, c, w) {
                return Ok((1.0 - z).powf(-a) * v);
            }
        }
        log::debug!("2F1({a}, {b}; {c}; {z}): degenerate b-a, averaging perturbed a");
        let lo = connection_large_negative(a - PERTURBATION, b, c, z)?;
        let hi = connection_large_negative(a + PERTURBATION, b, c, z)?;
        return Ok(0.5 * (lo + hi));
    }
    connection_large_negative(a, b, c, z)
}

// Abramowitz & Stegun 15.3.8.
fn connection_large_negative(a: f64, b: f64, c: f64, z: f64) -> Result<f64> {
    let w = 1.0 / (1.0 - z);
    let g1 = gamma(c) * gamma(b - a) * rgamma(b) * rgamma(c - a);
    let g2 = gamma(c) * gamma(a - b) * rgamma(a) * rgamma(c - b);
    let f1 = if g1 == 0.0 {
        0.0
    } else {
        series(a, c - b, a - b + 1.0, w)?
    };
    let f2 = if g2 == 0.0 {
        0.0
    } else {
        series(b, c - a, b - a + 1.0, w)?
    };
    Ok(w.powf(a) * g1 * f1 + w.powf(b) * g2 * f2)
}

const LANCZOS_G: f64 = 5.242_187_5;
const LANCZOS: [f64; 14] = [
    57.156_235_665_862_923_5,
    -59.597_960_355_475_491_2,
    14.136_097_974_741_747_1,
    -0.491_913_816_097_620_199,
    0.339_946_499_848_118_887e-4,
    0.465_236_289_270_485_756e-4,
    -0.983_744_753_048_795_646e-4,
    0.158_088_703_224_912_494e-3,
    -0.210_264_441_724_104_883e-3,
    0.217_439_618_115_212_643e-3,
    -0.164_318_106_536_763_890e-3,
    0.844_182_239_838_527_433e-4,
    -0.261_908_384_015_814_087e-4,
    0.368_991_826_595_316_234e-5,
];

fn ln_gamma_pos(x: f64) -> f64 {
    let t = x + LANCZOS_G;
    let t = (x + 0.5) * t.ln() - t;
    let mut ser = 0.999_999_999_999_997_092;
    let mut y = x;
    for c in LANCZOS {
        y += 1.0;
        ser += c / y;
    }
    t + (2.506_628_274_631_000_5 * ser / x).ln()
}

/// `ln Gamma(x)` for `x > 0`.
pub fn log_gamma(x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(domain(format!("log_gamma requires x > 0, got {x}")));
    }
    if x == 1.0 || x == 2.0 {
        return Ok(0.0);
    }
    Ok(ln_gamma_pos(x))
}

/// `sin(pi x)` with exact zeros at the integers.
fn sin_pi(x: f64) -> f64 {
    let r = x - 2.0 * (0.5 * x).floor();
    if r == 0.0 || r == 1.0 {
        return 0.0;
    }
    (PI * r).sin()
}

/// Gamma function; infinite at the non-positive integers.
pub fn gamma(x: f64) -> f64 {
    if is_nonpositive_int(x) {
        return f64::INFINITY;
    }
    if x < 0.5 {
        return PI / (sin_pi(x) * gamma(1.0 - x));
    }
    if x == x.round() && x <= 171.0 {
        let mut p = 1.0;
        let mut k = 2.0;
        while k < x {
            p *= k;
            k += 1.0;
        }
        return p;
    }
    ln_gamma_pos(x).exp()
}

/// `1 / Gamma(x)`, zero at the poles.
pub fn rgamma(x: f64) -> f64 {
    if is_nonpositive_int(x) {
        return 0.0;
    }
    if x < 0.5 {
        return sin_pi(x) * gamma(1.0 - x) / PI;
    }
    1.0 / gamma(x)
}

/// Standard normal density.
pub fn norm_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
}

/// Standard normal distribution function.
pub fn norm_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
}
