//! Direct numerical solution of the path-space variational problems behind the rate functions.
//!
//! Paths are discretized on a uniform grid over `[0, 1]` with `g(0) = S0`; the
//! action is minimized under a single linear constraint (the average strike
//! condition, or the floating-strike condition) by Newton's method on the KKT
//! system. An Euler-Lagrange shooting solution provides the starting path.

use crate::error::{domain, Result};
use crate::model::ModelParams;
use crate::solve::brent_root;

#[derive(Debug, Clone, PartialEq)]
pub struct PathGrid {
    pub n: usize,
    /// `g(i / n)` for `i = 0..=n`.
    pub values: Vec<f64>,
}

impl PathGrid {
    pub fn from_fn<F: Fn(f64) -> f64>(n: usize, f: F) -> Self {
        PathGrid {
            n,
            values: (0..=n).map(|i| f(i as f64 / n as f64)).collect(),
        }
    }

    pub fn constant(s0: f64, n: usize) -> Self {
        Self::from_fn(n, |_| s0)
    }

    pub fn h(&self) -> f64 {
        1.0 / self.n as f64
    }

    /// Trapezoid approximation of `int_0^1 g dt`.
    pub fn mean(&self) -> f64 {
        let v = &self.values;
        self.h() * (v.iter().sum::<f64>() - 0.5 * (v[0] + v[self.n]))
    }

    pub fn is_monotone(&self) -> bool {
        let inc = self.values.windows(2).all(|w| w[1] >= w[0]);
        let dec = self.values.windows(2).all(|w| w[1] <= w[0]);
        inc || dec
    }
}

#[derive(Debug, Clone, Copy)]
pub struct VarSolveConfig {
    pub n: usize,
    pub max_iter: usize,
    pub constraint_tol: f64,
    /// Path floor as a fraction of `S0`.
    pub floor: f64,
}

impl Default for VarSolveConfig {
    fn default() -> Self {
        VarSolveConfig {
            n: 800,
            max_iter: 10_000,
            constraint_tol: 1e-10,
            floor: 1e-9,
        }
    }
}

#[derive(Debug, Clone)]
pub struct VarResult {
    /// Minimized action.
    pub value: f64,
    /// Multiplier of the constraint, in the convention `L = F - lambda * (constraint)`.
    pub lambda: f64,
    pub converged: bool,
    pub iterations: usize,
    /// Action of the Euler-Lagrange shooting solution, when shooting succeeded.
    pub shooting_value: Option<f64>,
    pub floor_active: bool,
    pub constraint_residual: f64,
    pub path: PathGrid,
}

#[derive(Debug, Clone, Copy)]
enum Constraint {
    /// `int g = k`.
    Fixed(f64),
    /// `int g = kappa g(1)`.
    Floating(f64),
}

/// Midpoint discretization of `(1/2) int g'^2 / (sigma^2 g^{2 beta}) dt` with forward differences.
pub fn action(path: &PathGrid, params: &ModelParams) -> f64 {
    let c0 = 1.0 / (2.0 * params.sigma * params.sigma * path.h());
    path.values
        .windows(2)
        .map(|w| {
            let d = w[1] - w[0];
            let m = 0.5 * (w[0] + w[1]);
            c0 * d * d * m.powf(-2.0 * params.beta)
        })
        .sum()
}

fn constraint_vector(c: Constraint, n: usize, s0: f64) -> (Vec<f64>, f64) {
    let h = 1.0 / n as f64;
    let mut v = vec![h; n];
    match c {
        Constraint::Fixed(k) => {
            v[n - 1] = 0.5 * h;
            (v, k - 0.5 * h * s0)
        }
        Constraint::Floating(kappa) => {
            v[n - 1] = 0.5 * h - kappa;
            (v, -0.5 * h * s0)
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Solves a symmetric tridiagonal system; `None` unless every pivot is positive.
fn thomas(diag: &[f64], off: &[f64], shift: f64, rhs: &[f64]) -> Option<Vec<f64>> {
    let n = diag.len();
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    let mut piv = diag[0] + shift;
    if !(piv > 0.0) {
        return None;
    }
    c[0] = if n > 1 { off[0] / piv } else { 0.0 };
    d[0] = rhs[0] / piv;
    for i in 1..n {
        piv = diag[i] + shift - off[i - 1] * c[i - 1];
        if !(piv > 0.0) {
            return None;
        }
        if i < n - 1 {
            c[i] = off[i] / piv;
        }
        d[i] = (rhs[i] - off[i - 1] * d[i - 1]) / piv;
    }
    for i in (0..n - 1).rev() {
        d[i] -= c[i] * d[i + 1];
    }
    Some(d)
}

struct Problem<'a> {
    params: &'a ModelParams,
    n: usize,
    c0: f64,
}

impl Problem<'_> {
    fn value(&self, g: &[f64]) -> f64 {
        let b2 = -2.0 * self.params.beta;
        g.windows(2)
            .map(|w| {
                let d = w[1] - w[0];
                self.c0 * d * d * (0.5 * (w[0] + w[1])).powf(b2)
            })
            .sum()
    }

    /// Gradient and tridiagonal Hessian with respect to `g[1..=n]`.
    fn derivatives(&self, g: &[f64]) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        let n = self.n;
        let b = self.params.beta;
        let mut grad = vec![0.0; n];
        let mut diag = vec![0.0; n];
        let mut off = vec![0.0; n.saturating_sub(1)];
        for i in 0..n {
            let (u, v) = (g[i], g[i + 1]);
            let d = v - u;
            let m = 0.5 * (u + v);
            let p = m.powf(-2.0 * b);
            let p1 = -2.0 * b * p / m;
            let p2 = 2.0 * b * (2.0 * b + 1.0) * p / (m * m);
            let c0 = self.c0;
            let gu = c0 * (-2.0 * d * p + 0.5 * d * d * p1);
            let gv = c0 * (2.0 * d * p + 0.5 * d * d * p1);
            let huu = c0 * (2.0 * p - 2.0 * d * p1 + 0.25 * d * d * p2);
            let hvv = c0 * (2.0 * p + 2.0 * d * p1 + 0.25 * d * d * p2);
            let huv = c0 * (-2.0 * p + 0.25 * d * d * p2);
            if i >= 1 {
                grad[i - 1] += gu;
                diag[i - 1] += huu;
                off[i - 1] += huv;
            }
            grad[i] += gv;
            diag[i] += hvv;
        }
        (grad, diag, off)
    }
}

/// Net outcome of a shooting run: `(g(1), g'(1), int g, action)` plus the sampled path.
struct Shot {
    end: [f64; 4],
    path: Vec<f64>,
}

fn shoot(v: f64, lambda: f64, params: &ModelParams, n: usize) -> Option<Shot> {
    let (b, s2) = (params.beta, params.sigma * params.sigma);
    let rhs = |y: &[f64; 4]| -> [f64; 4] {
        let (g, gp) = (y[0], y[1]);
        let gb = g.powf(2.0 * b);
        [gp, b * gp * gp / g - lambda * s2 * gb, g, 0.5 * gp * gp / (s2 * gb)]
    };
    let h = 1.0 / n as f64;
    let mut y = [params.s0, v, 0.0, 0.0];
    let mut path = Vec::with_capacity(n + 1);
    path.push(y[0]);
    let step = |y: &[f64; 4], k: &[f64; 4], s: f64| -> [f64; 4] {
        [y[0] + s * k[0], y[1] + s * k[1], y[2] + s * k[2], y[3] + s * k[3]]
    };
    for _ in 0..n {
        let k1 = rhs(&y);
        let y2 = step(&y, &k1, 0.5 * h);
        if !(y2[0] > 0.0) {
            return None;
        }
        let k2 = rhs(&y2);
        let y3 = step(&y, &k2, 0.5 * h);
        if !(y3[0] > 0.0) {
            return None;
        }
        let k3 = rhs(&y3);
        let y4 = step(&y, &k3, h);
        if !(y4[0] > 0.0) {
            return None;
        }
        let k4 = rhs(&y4);
        for j in 0..4 {
            y[j] += h / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
        }
        if !(y[0] > 0.0 && y.iter().all(|x| x.is_finite())) {
            return None;
        }
        path.push(y[0]);
    }
    Some(Shot { end: y, path })
}

fn shooting_residual(shot: &Shot, c: Constraint, params: &ModelParams) -> [f64; 2] {
    let [g1, gp1, int_g, _] = shot.end;
    let s0 = params.s0;
    match c {
        Constraint::Fixed(k) => [gp1 / s0, (int_g - k) / s0],
        Constraint::Floating(kappa) => [gp1 / s0, (int_g - kappa * g1) / s0],
    }
}

/// Floating transversality is folded into the residual via the multiplier.
fn residual_for(shot: &Shot, lambda: f64, c: Constraint, params: &ModelParams) -> [f64; 2] {
    let mut r = shooting_residual(shot, c, params);
    if let Constraint::Floating(kappa) = c {
        let g1 = shot.end[0];
        let s2 = params.sigma * params.sigma;
        r[0] += lambda * kappa * s2 * g1.powf(2.0 * params.beta) / params.s0;
    }
    r
}

/// Small-deviation solution of the Euler-Lagrange system: `(g'(0), lambda)`.
fn linear_guess(c: Constraint, params: &ModelParams) -> (f64, f64) {
    let s0 = params.s0;
    let unit = params.sigma * params.sigma * s0.powf(2.0 * params.beta);
    match c {
        Constraint::Fixed(k) => {
            let v = 3.0 * (k - s0);
            (v, v / unit)
        }
        Constraint::Floating(kappa) => {
            let a = s0 * (1.0 - kappa) / (kappa - kappa * kappa - 1.0 / 3.0);
            (a * (1.0 - kappa), a / unit)
        }
    }
}

fn newton_shoot(
    c: Constraint,
    start: (f64, f64),
    params: &ModelParams,
    n: usize,
) -> Option<(f64, f64, Shot)> {
    let (mut v, mut lam) = start;
    let eval = |v: f64, lam: f64| -> Option<([f64; 2], Shot)> {
        let shot = shoot(v, lam, params, n)?;
        let r = residual_for(&shot, lam, c, params);
        r.iter().all(|x| x.is_finite()).then_some((r, shot))
    };
    let (mut r, mut shot) = eval(v, lam)?;
    for _ in 0..60 {
        let norm = r[0].abs().max(r[1].abs());
        if norm < 1e-12 {
            return Some((v, lam, shot));
        }
        let hv = 1e-7 * v.abs().max(1e-3 * params.s0);
        let hl = 1e-7 * lam.abs().max(1e-6);
        let (rv, _) = eval(v + hv, lam)?;
        let (rl, _) = eval(v, lam + hl)?;
        let j = [
            [(rv[0] - r[0]) / hv, (rl[0] - r[0]) / hl],
            [(rv[1] - r[1]) / hv, (rl[1] - r[1]) / hl],
        ];
        let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
        if det == 0.0 || !det.is_finite() {
            return None;
        }
        let dv = -(j[1][1] * r[0] - j[0][1] * r[1]) / det;
        let dl = -(-j[1][0] * r[0] + j[0][0] * r[1]) / det;
        let mut t = 1.0;
        let mut accepted = false;
        for _ in 0..30 {
            if let Some((rn, sn)) = eval(v + t * dv, lam + t * dl) {
                if rn[0].abs().max(rn[1].abs()) < norm {
                    v += t * dv;
                    lam += t * dl;
                    r = rn;
                    shot = sn;
                    accepted = true;
                    break;
                }
            }
            t *= 0.5;
        }
        if !accepted {
            return None;
        }
    }
    None
}

/// Euler-Lagrange shooting with continuation from the money.
fn shooting(c: Constraint, params: &ModelParams, n: usize) -> Option<(f64, Shot)> {
    for &stages in &[1usize, 8, 32] {
        let s0 = params.s0;
        let at = |j: usize| -> Constraint {
            let f = j as f64 / stages as f64;
            match c {
                Constraint::Fixed(k) => Constraint::Fixed(s0 + (k - s0) * f),
                Constraint::Floating(kappa) => Constraint::Floating(1.0 + (kappa - 1.0) * f),
            }
        };
        let mut guess = linear_guess(at(1), params);
        let mut out = None;
        for j in 1..=stages {
            match newton_shoot(at(j), guess, params, n) {
                Some((v, lam, shot)) => {
                    guess = (v, lam);
                    out = Some((lam, shot));
                }
                None => {
                    out = None;
                    break;
                }
            }
        }
        if out.is_some() {
            return out;
        }
    }
    None
}

/// Exponential path roughly satisfying the constraint.
fn exponential_guess(c: Constraint, params: &ModelParams, n: usize) -> Vec<f64> {
    let s0 = params.s0;
    let mean_factor = |c: f64| if c.abs() < 1e-8 { 1.0 + 0.5 * c } else { c.exp_m1() / c };
    let f = |rate: f64| match c {
        Constraint::Fixed(k) => mean_factor(rate) - k / s0,
        Constraint::Floating(kappa) => mean_factor(-rate) - kappa,
    };
    let rate = brent_root(f, -60.0, 60.0, 1e-14).map(|r| r.x).unwrap_or(0.0);
    (0..=n).map(|i| s0 * (rate * i as f64 / n as f64).exp()).collect()
}

fn solve(c: Constraint, params: &ModelParams, cfg: &VarSolveConfig) -> Result<VarResult> {
    params.validate()?;
    let n = cfg.n;
    if n < 2 {
        return Err(domain("grid needs at least two intervals"));
    }
    let s0 = params.s0;
    let floor = cfg.floor * s0;
    let (cvec, target) = constraint_vector(c, n, s0);

    let shot = shooting(c, params, n);
    let shooting_value = shot.as_ref().map(|(_, s)| s.end[3]);
    let (mut g, mut lambda) = match shot {
        Some((lam, s)) => (s.path, lam),
        None => {
            log::warn!("shooting failed for {c:?}; starting from an exponential path");
            (exponential_guess(c, params, n), 0.0)
        }
    };

    // Make the starting path exactly feasible along a direction that keeps g(0) fixed.
    let ramp: Vec<f64> = (1..=n).map(|i| i as f64 / n as f64).collect();
    let quad: Vec<f64> = ramp.iter().map(|t| t * t).collect();
    let dir = if dot(&cvec, &ramp).abs() > dot(&cvec, &quad).abs() { ramp } else { quad };
    let gap = target - dot(&cvec, &g[1..]);
    let alpha = gap / dot(&cvec, &dir);
    for (gi, di) in g[1..].iter_mut().zip(&dir) {
        *gi = (*gi + alpha * di).max(2.0 * floor);
    }

    let prob = Problem {
        params,
        n,
        c0: 1.0 / (2.0 * params.sigma * params.sigma / n as f64),
    };
    let mut f = prob.value(&g);
    let mut converged = false;
    let mut iterations = 0;
    let mut stalls = 0;
    while iterations < cfg.max_iter {
        iterations += 1;
        let (grad, diag, off) = prob.derivatives(&g);
        let r: Vec<f64> = grad.iter().zip(&cvec).map(|(gr, ci)| gr - lambda * ci).collect();
        let neg_r: Vec<f64> = r.iter().map(|x| -x).collect();
        let scale = diag.iter().fold(0.0f64, |m, d| m.max(d.abs()));
        let mut shift = 0.0;
        let (u, w) = loop {
            if let (Some(u), Some(w)) = (
                thomas(&diag, &off, shift, &neg_r),
                thomas(&diag, &off, shift, &cvec),
            ) {
                break (u, w);
            }
            shift = if shift == 0.0 { 1e-10 * scale } else { shift * 10.0 };
        };
        let infeas = target - dot(&cvec, &g[1..]);
        let dl = (infeas - dot(&cvec, &u)) / dot(&cvec, &w);
        let dg: Vec<f64> = u.iter().zip(&w).map(|(ui, wi)| ui + dl * wi).collect();
        let slope = dot(&grad, &dg);
        let step_max = dg.iter().fold(0.0f64, |m, d| m.max(d.abs())) / s0;
        if step_max < 1e-13 && infeas.abs() <= cfg.constraint_tol * s0 {
            lambda += dl;
            converged = true;
            break;
        }
        // Fraction-to-boundary rule keeps the path above the floor.
        let mut t = 1.0f64;
        for (gi, di) in g[1..].iter().zip(&dg) {
            if *di < 0.0 {
                t = t.min(0.99 * (gi - floor) / -di);
            }
        }
        let mut accepted = false;
        let mut trial = g.clone();
        for _ in 0..60 {
            for (j, di) in dg.iter().enumerate() {
                trial[j + 1] = g[j + 1] + t * di;
            }
            let ft = prob.value(&trial);
            if ft.is_finite() && ft <= f + 1e-4 * t * slope.min(0.0) + 1e-15 * f.abs() {
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        lambda += dl;
        if !accepted {
            stalls += 1;
            if stalls > 3 {
                break;
            }
            continue;
        }
        let f_new = prob.value(&trial);
        g = trial;
        if (f - f_new).abs() <= 1e-16 * f.abs() && step_max < 1e-9 {
            stalls += 1;
        }
        f = f_new;
        if stalls > 3 {
            converged = infeas.abs() <= cfg.constraint_tol * s0;
            break;
        }
    }
    let constraint_residual = dot(&cvec, &g[1..]) - target;
    let floor_active = g.iter().any(|&x| x <= floor * (1.0 + 1e-6));
    if floor_active {
        log::warn!("path floor is active at the optimum for {c:?}");
    }
    if !converged {
        log::warn!("variational solve for {c:?} stopped after {iterations} iterations");
    }
    if let Some(sv) = shooting_value {
        if f > 0.0 && ((sv - f) / f).abs() > 1e-3 {
            log::warn!("shooting value {sv} differs from direct minimum {f}");
        }
    }
    Ok(VarResult {
        value: f,
        lambda,
        converged,
        iterations,
        shooting_value,
        floor_active,
        constraint_residual,
        path: PathGrid { n, values: g },
    })
}

fn trivial(params: &ModelParams, n: usize) -> VarResult {
    VarResult {
        value: 0.0,
        lambda: 0.0,
        converged: true,
        iterations: 0,
        shooting_value: Some(0.0),
        floor_active: false,
        constraint_residual: 0.0,
        path: PathGrid::constant(params.s0, n),
    }
}

/// Minimizes the action subject to `int g = K` (active form of the strike constraint).
pub fn minimize_fixed(k: f64, params: &ModelParams) -> Result<VarResult> {
    minimize_fixed_with(k, params, &VarSolveConfig::default())
}

pub fn minimize_fixed_with(k: f64, params: &ModelParams, cfg: &VarSolveConfig) -> Result<VarResult> {
    if !(k.is_finite() && k > 0.0) {
        return Err(domain(format!("strike must be positive, got {k}")));
    }
    if k == params.s0 {
        return Ok(trivial(params, cfg.n));
    }
    solve(Constraint::Fixed(k), params, cfg)
}

/// Minimizes the action subject to `int g = kappa g(1)`.
pub fn minimize_float(kappa: f64, params: &ModelParams) -> Result<VarResult> {
    minimize_float_with(kappa, params, &VarSolveConfig::default())
}

pub fn minimize_float_with(
    kappa: f64,
    params: &ModelParams,
    cfg: &VarSolveConfig,
) -> Result<VarResult> {
    if !(kappa.is_finite() && kappa > 0.0) {
        return Err(domain(format!("kappa must be positive, got {kappa}")));
    }
    if kappa == 1.0 {
        return Ok(trivial(params, cfg.n));
    }
    solve(Constraint::Floating(kappa), params, cfg)
}

/// `C = -lambda sigma^2 (1 - beta) S0^{2 beta - 1}`, the first integral fixed by the multiplier.
pub fn lagrange_constant(lambda: f64, params: &ModelParams) -> f64 {
    -lambda * params.sigma * params.sigma * (1.0 - params.beta) * params.s0.powf(2.0 * params.beta - 1.0)
}
