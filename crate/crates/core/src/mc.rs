//! Monte Carlo simulation of CEV paths with continuous-average payoffs.
//!
//! Each sample (a path, or an antithetic pair) draws from its own ChaCha8
//! stream keyed by `(seed, sample index)`, and partial sums are merged in a
//! fixed block order, so estimates do not depend on the thread count.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::model::{ModelParams, OptionSpec, Side, Style};
use crate::specfun::KahanSum;

const BLOCK: usize = 512;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    /// Euler step on `max(S, 0)`, absorbed at the first non-positive value.
    #[default]
    EulerFullTruncation,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McConfig {
    pub n_paths: usize,
    /// Time steps per unit maturity; a run uses `ceil(n_steps * T)` steps.
    pub n_steps: usize,
    pub seed: u64,
    pub scheme: Scheme,
    /// With antithetics `n_paths` is rounded up to an even count.
    pub antithetic: bool,
}

impl Default for McConfig {
    fn default() -> Self {
        McConfig {
            n_paths: 100_000,
            n_steps: 1000,
            seed: 0,
            scheme: Scheme::EulerFullTruncation,
            antithetic: true,
        }
    }
}

impl McConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_paths == 0 || self.n_steps == 0 {
            return Err(domain("n_paths and n_steps must be at least 1"));
        }
        Ok(())
    }

    pub fn steps_for(&self, t: f64) -> usize {
        ((self.n_steps as f64 * t).ceil() as usize).max(1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub n_absorbed: usize,
    pub n_paths: usize,
    pub n_steps: usize,
}

#[derive(Default, Clone, Copy)]
struct Partial {
    n: usize,
    sum: KahanSum,
    sumsq: KahanSum,
}

struct Stepper {
    s0: f64,
    mu_dt: f64,
    vol_sqdt: f64,
    beta: f64,
    sqrt_model: bool,
    steps: usize,
}

impl Stepper {
    /// Returns (time average, terminal value, absorbed).
    fn run(&self, z: &[f64], sign: f64) -> (f64, f64, bool) {
        let mut s = self.s0;
        let mut acc = 0.5 * s;
        let mut absorbed = false;
        for &zi in z {
            if !absorbed {
                let diffusion = if self.sqrt_model {
                    s.max(0.0).sqrt()
                } else {
                    s.max(0.0).powf(self.beta)
                };
                s += self.mu_dt * s + self.vol_sqdt * diffusion * sign * zi;
                if s <= 0.0 {
                    s = 0.0;
                    absorbed = true;
                }
            }
            acc += s;
        }
        acc -= 0.5 * s;
        (acc / self.steps as f64, s, absorbed)
    }
}

fn check_inputs(params: &ModelParams, t: f64, cfg: &McConfig) -> Result<()> {
    params.validate()?;
    cfg.validate()?;
    if !(t.is_finite() && t > 0.0) {
        return Err(domain(format!("maturity must be positive, got {t}")));
    }
    Ok(())
}

fn stepper(params: &ModelParams, t: f64, steps: usize) -> Stepper {
    let dt = t / steps as f64;
    Stepper {
        s0: params.s0,
        mu_dt: params.carry() * dt,
        vol_sqdt: params.sigma * dt.sqrt(),
        beta: params.beta,
        sqrt_model: params.is_sqrt(),
        steps,
    }
}

fn sample_count(cfg: &McConfig) -> usize {
    if cfg.antithetic {
        cfg.n_paths.div_ceil(2)
    } else {
        cfg.n_paths
    }
}

/// Runs `per_sample` on each sample's normals and merges `K` statistics in block order.
fn accumulate<const K: usize, G>(samples: usize, n_normals: usize, seed: u64, per_sample: G) -> ([Partial; K], usize)
where
    G: Fn(&[f64]) -> ([f64; K], usize) + Sync,
{
    let n_blocks = samples.div_ceil(BLOCK);
    let blocks: Vec<([Partial; K], usize)> = (0..n_blocks)
        .into_par_iter()
        .map(|b| {
            let mut p = [Partial::default(); K];
            let mut absorbed = 0;
            let mut z = vec![0.0; n_normals];
            for i in b * BLOCK..((b + 1) * BLOCK).min(samples) {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(i as u64);
                for zi in z.iter_mut() {
                    *zi = rng.sample(StandardNormal);
                }
                let (x, ab) = per_sample(&z);
                absorbed += ab;
                for (pk, &xk) in p.iter_mut().zip(x.iter()) {
                    pk.n += 1;
                    pk.sum.add(xk);
                    pk.sumsq.add(xk * xk);
                }
            }
            (p, absorbed)
        })
        .collect();
    let mut total = [Partial::default(); K];
    let mut absorbed = 0;
    for (p, ab) in &blocks {
        for (t, pk) in total.iter_mut().zip(p.iter()) {
            t.n += pk.n;
            t.sum.add(pk.sum.value());
            t.sumsq.add(pk.sumsq.value());
        }
        absorbed += ab;
    }
    (total, absorbed)
}

fn estimate(p: &Partial, absorbed: usize, cfg: &McConfig, steps: usize) -> McEstimate {
    let n = p.n as f64;
    let mean = p.sum.value() / n;
    let var = if p.n > 1 {
        ((p.sumsq.value() - n * mean * mean) / (n - 1.0)).max(0.0)
    } else {
        0.0
    };
    McEstimate {
        mean,
        std_error: (var / n).sqrt(),
        n_absorbed: absorbed,
        n_paths: if cfg.antithetic { 2 * p.n } else { p.n },
        n_steps: steps,
    }
}

/// Undiscounted expectation of `f(average, terminal)` over simulated paths.
pub fn simulate_functional<F>(params: &ModelParams, t: f64, cfg: &McConfig, f: F) -> Result<McEstimate>
where
    F: Fn(f64, f64) -> f64 + Sync,
{
    check_inputs(params, t, cfg)?;
    let steps = cfg.steps_for(t);
    let st = stepper(params, t, steps);
    let (p, absorbed) = accumulate::<1, _>(sample_count(cfg), steps, cfg.seed, |z| {
        let (a, s, ab) = st.run(z, 1.0);
        let mut x = f(a, s);
        let mut n_ab = ab as usize;
        if cfg.antithetic {
            let (a2, s2, ab2) = st.run(z, -1.0);
            x = 0.5 * (x + f(a2, s2));
            n_ab += ab2 as usize;
        }
        ([x], n_ab)
    });
    Ok(estimate(&p[0], absorbed, cfg, steps))
}

/// Coarse and fine estimates of `f` driven by the same Brownian increments.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Refinement {
    pub coarse: McEstimate,
    pub fine: McEstimate,
    /// `fine - coarse`, estimated pathwise.
    pub gap: McEstimate,
}

/// Compares `cfg.n_steps` against twice as many steps with coupled increments.
pub fn refinement_gap<F>(params: &ModelParams, t: f64, cfg: &McConfig, f: F) -> Result<Refinement>
where
    F: Fn(f64, f64) -> f64 + Sync,
{
    check_inputs(params, t, cfg)?;
    let coarse_steps = cfg.steps_for(t);
    let fine_steps = 2 * coarse_steps;
    let fine = stepper(params, t, fine_steps);
    let coarse = stepper(params, t, coarse_steps);
    let signs: &[f64] = if cfg.antithetic { &[1.0, -1.0] } else { &[1.0] };
    let (p, absorbed) = accumulate::<3, _>(sample_count(cfg), fine_steps, cfg.seed, |z| {
        let zc: Vec<f64> = z
            .chunks_exact(2)
            .map(|w| (w[0] + w[1]) * std::f64::consts::FRAC_1_SQRT_2)
            .collect();
        let (mut xf, mut xc, mut n_ab) = (0.0, 0.0, 0);
        for &sg in signs {
            let (a, s, ab) = fine.run(z, sg);
            xf += f(a, s);
            n_ab += ab as usize;
            let (a, s, _) = coarse.run(&zc, sg);
            xc += f(a, s);
        }
        let w = signs.len() as f64;
        ([xc / w, xf / w, (xf - xc) / w], n_ab)
    });
    Ok(Refinement {
        coarse: estimate(&p[0], absorbed, cfg, coarse_steps),
        fine: estimate(&p[1], absorbed, cfg, fine_steps),
        gap: estimate(&p[2], absorbed, cfg, fine_steps),
    })
}

fn discounted(mut e: McEstimate, r: f64, t: f64) -> McEstimate {
    let df = (-r * t).exp();
    e.mean *= df;
    e.std_error *= df;
    e
}

/// Fixed-strike Asian option, `e^{-rT} E[(A_T - K)^+]` or its put.
pub fn simulate_asian(spec: &OptionSpec, params: &ModelParams, cfg: &McConfig) -> Result<McEstimate> {
    spec.validate()?;
    if spec.style != Style::Fixed {
        return Err(domain("simulate_asian needs a fixed-strike contract"));
    }
    let k = spec.strike;
    let e = match spec.side {
        Side::Call => simulate_functional(params, spec.maturity, cfg, |a, _| (a - k).max(0.0))?,
        Side::Put => simulate_functional(params, spec.maturity, cfg, |a, _| (k - a).max(0.0))?,
    };
    Ok(discounted(e, params.r, spec.maturity))
}

/// Floating-strike Asian option, `e^{-rT} E[(kappa S_T - A_T)^+]` or its put.
pub fn simulate_floating(spec: &OptionSpec, params: &ModelParams, cfg: &McConfig) -> Result<McEstimate> {
    spec.validate()?;
    if spec.style != Style::Floating {
        return Err(domain("simulate_floating needs a floating-strike contract"));
    }
    let kappa = spec.strike;
    let e = match spec.side {
        Side::Call => {
            simulate_functional(params, spec.maturity, cfg, |a, s| (kappa * s - a).max(0.0))?
        }
        Side::Put => {
            simulate_functional(params, spec.maturity, cfg, |a, s| (a - kappa * s).max(0.0))?
        }
    };
    Ok(discounted(e, params.r, spec.maturity))
}

pub fn simulate(spec: &OptionSpec, params: &ModelParams, cfg: &McConfig) -> Result<McEstimate> {
    match spec.style {
        Style::Fixed => simulate_asian(spec, params, cfg),
        Style::Floating => simulate_floating(spec, params, cfg),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McRatePoint {
    pub maturity: f64,
    pub estimate: McEstimate,
    /// `-T log(price)`; `None` when no simulated path finished in the money.
    pub rate: Option<f64>,
}

/// Empirical `-T log C(T)` for the out-of-the-money option at strike `K`.
pub fn rate_from_mc(k: f64, params: &ModelParams, ts: &[f64], cfg: &McConfig) -> Result<Vec<McRatePoint>> {
    let side = if k >= params.s0 { Side::Call } else { Side::Put };
    ts.iter()
        .map(|&t| {
            let e = simulate_asian(&OptionSpec::fixed(side, k, t), params, cfg)?;
            let rate = if e.mean > 0.0 {
                Some(-t * e.mean.ln())
            } else {
                log::warn!("no in-the-money paths at T = {t}, K = {k}");
                None
            };
            Ok(McRatePoint {
                maturity: t,
                estimate: e,
                rate,
            })
        })
        .collect()
}
