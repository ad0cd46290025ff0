//! Curve data for the rate-function and volatility plots.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use cev_asian::float_strike::{jf_series, rate_float_sqrt};
use cev_asian::model::ModelParams;
use cev_asian::pricing::equiv_lognormal_vol;
use cev_asian::rate_cev::{rate_cev, rate_cev_taylor};
use cev_asian::Result;

/// `n` points on `[lo, hi]` that include `mid` exactly.
pub fn grid_through(lo: f64, mid: f64, hi: f64, n: usize) -> Vec<f64> {
    let left = ((n as f64) * (mid - lo) / (hi - lo)).round().max(1.0) as usize;
    let right = n.saturating_sub(left + 1).max(1);
    let mut g: Vec<f64> = (0..left)
        .map(|i| lo + (mid - lo) * i as f64 / left as f64)
        .collect();
    g.push(mid);
    g.extend((1..=right).map(|i| mid + (hi - mid) * i as f64 / right as f64));
    g
}

fn unit(beta: f64) -> ModelParams {
    ModelParams::driftless(1.0, 1.0, beta).expect("unit model")
}

fn write_csv(path: &Path, header: &str, rows: &[Vec<f64>]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "{header}")?;
    for r in rows {
        let line: Vec<String> = r.iter().map(|v| v.to_string()).collect();
        writeln!(w, "{}", line.join(","))?;
    }
    w.flush()?;
    Ok(())
}

/// Square-root model rate in units of `S0/sigma^2` with its three-term expansion.
pub fn figure1(n: usize) -> Result<Vec<Vec<f64>>> {
    let m = unit(0.5);
    grid_through(0.05, 1.0, 3.0, n)
        .into_iter()
        .map(|k| Ok(vec![k, k.ln(), rate_cev(k, &m)?.value, rate_cev_taylor(k, &m)]))
        .collect()
}

/// Rate function in units of `S0^{2(1-beta)}/sigma^2` for three elasticities.
pub fn figure2(n: usize) -> Result<Vec<Vec<f64>>> {
    let ms = [unit(0.5), unit(2.0 / 3.0), unit(5.0 / 6.0)];
    grid_through(0.05, 1.0, 3.0, n)
        .into_iter()
        .map(|k| {
            let mut row = vec![k];
            for m in &ms {
                row.push(rate_cev(k, m)?.value);
            }
            Ok(row)
        })
        .collect()
}

/// Floating rate `J_f`, its three-term expansion, and the fixed-strike rate at `K = kappa S0`.
pub fn figure3(n: usize) -> Result<Vec<Vec<f64>>> {
    let m = unit(0.5);
    grid_through(0.05, 1.0, 3.0, n)
        .into_iter()
        .map(|k| {
            Ok(vec![
                k,
                rate_float_sqrt(k, &m)?.value,
                jf_series(k),
                rate_cev(k, &m)?.value,
            ])
        })
        .collect()
}

/// `Sigma_LN / (sigma S0^{beta-1})` against `log(K/S0)`.
pub fn figure4(n: usize) -> Result<Vec<Vec<f64>>> {
    let ms = [unit(0.5), unit(2.0 / 3.0), unit(5.0 / 6.0)];
    grid_through(-1.0, 0.0, 1.0, n)
        .into_iter()
        .map(|x| {
            let mut row = vec![x];
            for m in &ms {
                row.push(equiv_lognormal_vol(x.exp(), m)?);
            }
            Ok(row)
        })
        .collect()
}

pub fn write_all(dir: &Path, n: usize) -> Result<Vec<PathBuf>> {
    let files = [
        (
            "figure1.csv",
            "K_over_S0,log_K_over_S0,I_scaled,I_taylor3",
            figure1(n)?,
        ),
        (
            "figure2.csv",
            "K_over_S0,I_beta_half,I_beta_two_thirds,I_beta_five_sixths",
            figure2(n)?,
        ),
        ("figure3.csv", "kappa,J_f,J_f_series3,I_fixed_scaled", figure3(n)?),
        (
            "figure4.csv",
            "x,sigma_ln_beta_half,sigma_ln_beta_two_thirds,sigma_ln_beta_five_sixths",
            figure4(n)?,
        ),
    ];
    let mut out = Vec::new();
    for (name, header, rows) in files {
        let p = dir.join(name);
        write_csv(&p, header, &rows)?;
        out.push(p);
    }
    Ok(out)
}
