//! `cev-asian` command-line tool.
//!
//! Exit status: 0 on success, 1 when a benchmark tolerance fails, 2 on invalid
//! flags, 3 when a computation fails.

mod figures;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use cev_asian::bench::{self, BenchReport};
use cev_asian::float_strike::{rate_float_cev_with, rate_float_sqrt};
use cev_asian::mc::{self, McConfig};
use cev_asian::model::{ModelParams, OptionSpec, Side, Style};
use cev_asian::pricing::{self, PricingOptions, RateSource};
use cev_asian::rate_cev::{rate_cev, rate_cev_alt, rate_cev_taylor};
use cev_asian::varsolve::{self, VarSolveConfig};
use cev_asian::Error;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

#[derive(Parser)]
#[command(name = "cev-asian", version, about = "Short-maturity Asian options in the CEV model")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Price a fixed- or floating-strike Asian option.
    Price(PriceArgs),
    /// Evaluate the fixed-strike rate function I(K, S0).
    Rate(RateArgs),
    /// Equivalent log-normal volatility over a log-strike grid, as CSV.
    VolCurve(VolCurveArgs),
    /// Floating-strike rate function, normal volatility and optional price.
    Float(FloatArgs),
    /// Monte Carlo estimate of an Asian option price.
    Mc(McArgs),
    /// Reproduce the benchmark tables or run a scenario file.
    Bench(BenchArgs),
    /// Write the curve data behind the rate-function and volatility plots.
    Figures(FiguresArgs),
}

#[derive(Args, Clone)]
struct ModelArgs {
    /// Spot price S0 (currency units).
    #[arg(long)]
    s0: f64,
    /// CEV volatility sigma (price^(1-beta) per sqrt(year)).
    #[arg(long)]
    sigma: f64,
    /// CEV elasticity beta in [0.5, 1); required.
    #[arg(long)]
    beta: f64,
    /// Risk-free rate r (per year, continuous).
    #[arg(long, default_value_t = 0.0)]
    r: f64,
    /// Dividend yield q (per year, continuous).
    #[arg(long, default_value_t = 0.0)]
    q: f64,
}

impl ModelArgs {
    fn params(&self) -> Result<ModelParams, Fail> {
        ModelParams::new(self.s0, self.sigma, self.beta, self.r, self.q).map_err(Fail::Usage)
    }
}

#[derive(Args, Clone)]
struct McFlags {
    /// Number of Monte Carlo paths.
    #[arg(long, default_value_t = 100_000)]
    paths: usize,
    /// Time steps per year of maturity.
    #[arg(long, default_value_t = 1000)]
    steps: usize,
    /// Seed of the path streams.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Disable antithetic pairing.
    #[arg(long)]
    no_antithetic: bool,
}

impl McFlags {
    fn config(&self) -> Result<McConfig, Fail> {
        let c = McConfig {
            n_paths: self.paths,
            n_steps: self.steps,
            seed: self.seed,
            antithetic: !self.no_antithetic,
            ..Default::default()
        };
        c.validate().map_err(Fail::Usage)?;
        Ok(c)
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum SideArg {
    Call,
    Put,
}

impl From<SideArg> for Side {
    fn from(s: SideArg) -> Side {
        match s {
            SideArg::Call => Side::Call,
            SideArg::Put => Side::Put,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum StyleArg {
    Fixed,
    Floating,
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum EngineArg {
    Asympt,
    Mc,
    Varsolve,
}

#[derive(Args)]
struct PriceArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// Strike K (currency) for fixed style, multiplier kappa (dimensionless) for floating.
    #[arg(long)]
    strike: f64,
    /// Maturity T (years).
    #[arg(long)]
    maturity: f64,
    /// Option side.
    #[arg(long, value_enum, default_value = "call")]
    side: SideArg,
    /// Fixed strike K or floating multiplier kappa.
    #[arg(long, value_enum, default_value = "fixed")]
    style: StyleArg,
    /// asympt: closed-form rate; varsolve: variational rate; mc: simulation.
    #[arg(long, value_enum, default_value = "asympt")]
    engine: EngineArg,
    /// Center the log-normal volatility on A(T) (fixed strikes).
    #[arg(long)]
    forward_centered: bool,
    #[command(flatten)]
    mc: McFlags,
    /// Emit a JSON record with full precision.
    #[arg(long)]
    json: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum RateMethod {
    Closed,
    Alt,
    Varsolve,
    Taylor,
}

#[derive(Args)]
struct RateArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// Strike K (currency).
    #[arg(long)]
    strike: f64,
    /// closed: hypergeometric closed form; alt: integral form; varsolve: path minimisation; taylor: quartic series.
    #[arg(long, value_enum, default_value = "closed")]
    method: RateMethod,
    /// Path grid intervals for the variational method.
    #[arg(long, default_value_t = 800, value_parser = clap::value_parser!(u64).range(2..))]
    grid: u64,
    /// Emit a JSON record with full precision.
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct VolCurveArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// Lowest log-strike x = log(K/S0) (dimensionless).
    #[arg(long, default_value_t = -0.5, allow_hyphen_values = true)]
    from: f64,
    /// Highest log-strike (dimensionless).
    #[arg(long, default_value_t = 0.5, allow_hyphen_values = true)]
    to: f64,
    /// Number of grid points.
    #[arg(long, default_value_t = 201)]
    points: usize,
}

#[derive(Args)]
struct FloatArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// Multiplier kappa on the terminal price (dimensionless).
    #[arg(long)]
    kappa: f64,
    /// Maturity T (years); prints the Bachelier price when given.
    #[arg(long)]
    maturity: Option<f64>,
    /// Option side.
    #[arg(long, value_enum, default_value = "call")]
    side: SideArg,
    /// Use the variational solver even at beta = 1/2.
    #[arg(long)]
    varsolve: bool,
    /// Emit a JSON record with full precision.
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct McArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// Strike K (currency) or multiplier kappa (floating).
    #[arg(long)]
    strike: f64,
    /// Maturity T (years).
    #[arg(long)]
    maturity: f64,
    /// Option side.
    #[arg(long, value_enum, default_value = "call")]
    side: SideArg,
    /// Fixed strike K or floating multiplier kappa.
    #[arg(long, value_enum, default_value = "fixed")]
    style: StyleArg,
    #[command(flatten)]
    mc: McFlags,
    /// Also report -T log(price) at these maturities (years, comma separated).
    #[arg(long, value_delimiter = ',')]
    rate_maturities: Vec<f64>,
    /// Emit a JSON record with full precision.
    #[arg(long)]
    json: bool,
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum Table {
    Table1,
    Table2,
    Floating,
    All,
}

#[derive(Args)]
struct BenchArgs {
    /// Built-in table to reproduce.
    #[arg(long, value_enum, default_value = "all", conflicts_with = "scenarios")]
    table: Table,
    /// Scenario CSV to run instead of a built-in table.
    #[arg(long)]
    scenarios: Option<PathBuf>,
    /// Write the results CSV here instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    mc: McFlags,
}

#[derive(Args)]
struct FiguresArgs {
    /// Output directory (created if missing).
    #[arg(long)]
    out: PathBuf,
    /// Grid points per curve (at least 200).
    #[arg(long, default_value_t = 400, value_parser = clap::value_parser!(u64).range(200..))]
    points: u64,
}

enum Fail {
    Usage(Error),
    Compute(Error),
    Tolerance(Vec<String>),
}

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail::Compute(e)
    }
}

impl From<std::io::Error> for Fail {
    fn from(e: std::io::Error) -> Self {
        Fail::Compute(e.into())
    }
}

fn f6(x: f64) -> String {
    format!("{x:.6}")
}

fn emit_json(v: serde_json::Value) -> Result<(), Fail> {
    println!("{}", serde_json::to_string_pretty(&v).expect("json"));
    Ok(())
}

fn contract(style: StyleArg, side: SideArg, strike: f64, t: f64) -> Result<OptionSpec, Fail> {
    let spec = match style {
        StyleArg::Fixed => OptionSpec::fixed(side.into(), strike, t),
        StyleArg::Floating => OptionSpec::floating(side.into(), strike, t),
    };
    spec.validate().map_err(Fail::Usage)?;
    Ok(spec)
}

fn cmd_price(a: PriceArgs) -> Result<(), Fail> {
    let m = a.model.params()?;
    let spec = contract(a.style, a.side, a.strike, a.maturity)?;
    if spec.style == Style::Floating && spec.strike == 0.0 && a.engine != EngineArg::Mc {
        return Err(Fail::Usage(Error::Domain("kappa must be positive".into())));
    }
    if a.engine == EngineArg::Mc {
        let e = mc::simulate(&spec, &m, &a.mc.config()?)?;
        if a.json {
            return emit_json(json!({ "engine": "mc", "spec": spec, "params": m, "estimate": e }));
        }
        println!("price      {}", f6(e.mean));
        println!("std_error  {}", f6(e.std_error));
        println!("paths      {}", e.n_paths);
        println!("steps      {}", e.n_steps);
        println!("absorbed   {}", e.n_absorbed);
        return Ok(());
    }
    let opts = PricingOptions {
        source: if a.engine == EngineArg::Varsolve {
            RateSource::Variational
        } else {
            RateSource::ClosedForm
        },
        forward_centered: a.forward_centered,
    };
    let p = pricing::price(&spec, &m, &opts)?;
    let lead = pricing::atm_price(&m, spec.maturity);
    if a.json {
        return emit_json(json!({
            "engine": if a.engine == EngineArg::Varsolve { "varsolve" } else { "asympt" },
            "spec": spec,
            "params": m,
            "result": p,
            "atm_leading_price": if p.atm { Some(lead) } else { None },
        }));
    }
    println!("price      {}", f6(p.price));
    let kind = match p.vol_kind {
        pricing::VolKind::Lognormal => "lognormal",
        pricing::VolKind::Normal => "normal",
    };
    println!("equiv_vol  {} ({kind})", f6(p.equiv_vol));
    match p.d2 {
        Some(d2) => {
            println!("d1         {}", f6(p.d1));
            println!("d2         {}", f6(d2));
        }
        None => println!("d          {}", f6(p.d1)),
    }
    println!("forward    {}", f6(p.forward));
    if p.atm {
        println!("atm        leading order sigma S0^beta sqrt(T/(6 pi)) = {}", f6(lead));
    }
    if p.extrapolated {
        println!("note       normal volatility extrapolated beyond beta = 1/2");
    }
    Ok(())
}

fn cmd_rate(a: RateArgs) -> Result<(), Fail> {
    let m = a.model.params()?;
    if !(a.strike.is_finite() && a.strike > 0.0) {
        return Err(Fail::Usage(Error::Domain("strike must be positive".into())));
    }
    let (value, extra) = match a.method {
        RateMethod::Closed => {
            let r = rate_cev(a.strike, &m)?;
            (r.value, json!({ "x_star": r.diag.x_star, "branch": r.diag.branch, "residual": r.diag.residual }))
        }
        RateMethod::Alt => {
            let r = rate_cev_alt(a.strike, &m)?;
            (r.value, json!({ "x_star": r.diag.x_star, "branch": r.diag.branch }))
        }
        RateMethod::Taylor => (rate_cev_taylor(a.strike, &m), json!({})),
        RateMethod::Varsolve => {
            let cfg = VarSolveConfig {
                n: a.grid as usize,
                ..Default::default()
            };
            let r = varsolve::minimize_fixed_with(a.strike, &m, &cfg)?;
            (
                r.value,
                json!({ "lambda": r.lambda, "converged": r.converged, "iterations": r.iterations,
                        "shooting_value": r.shooting_value, "floor_active": r.floor_active }),
            )
        }
    };
    if a.json {
        return emit_json(json!({ "strike": a.strike, "params": m, "rate": value, "diag": extra }));
    }
    println!("rate       {}", f6(value));
    println!("scaled     {}", f6(value / m.rate_scale()));
    Ok(())
}

fn cmd_vol_curve(a: VolCurveArgs) -> Result<(), Fail> {
    let m = a.model.params()?;
    if a.points < 2 || !(a.from < a.to) {
        return Err(Fail::Usage(Error::Domain("need --from < --to and --points >= 2".into())));
    }
    let mut out = std::io::stdout().lock();
    writeln!(out, "x,K,sigma_ln,sigma_ln_over_sigma_s0_beta_minus_1")?;
    let unit = m.sigma * m.s0.powf(m.beta - 1.0);
    for i in 0..a.points {
        let x = a.from + (a.to - a.from) * i as f64 / (a.points - 1) as f64;
        let k = m.s0 * x.exp();
        let v = pricing::equiv_lognormal_vol(k, &m)?;
        writeln!(out, "{x},{k},{v},{}", v / unit)?;
    }
    Ok(())
}

fn cmd_float(a: FloatArgs) -> Result<(), Fail> {
    let m = a.model.params()?;
    if !(a.kappa.is_finite() && a.kappa > 0.0) {
        return Err(Fail::Usage(Error::Domain("kappa must be positive".into())));
    }
    if let Some(t) = a.maturity {
        if !(t.is_finite() && t > 0.0) {
            return Err(Fail::Usage(Error::Domain("maturity must be positive".into())));
        }
    }
    let (rate, z_star) = if a.varsolve || !m.is_sqrt() {
        (rate_float_cev_with(a.kappa, &m, &VarSolveConfig::default())?.value, None)
    } else {
        let r = rate_float_sqrt(a.kappa, &m)?;
        (r.value, Some(r.diag.z_star))
    };
    let source = if a.varsolve {
        RateSource::Variational
    } else {
        RateSource::ClosedForm
    };
    let vol = pricing::equiv_normal_vol_with(a.kappa, &m, source)?;
    let priced = match a.maturity {
        Some(t) => {
            let opts = PricingOptions {
                source,
                ..Default::default()
            };
            Some(pricing::price_floating_with(&OptionSpec::floating(a.side.into(), a.kappa, t), &m, &opts)?)
        }
        None => None,
    };
    if a.json {
        return emit_json(json!({
            "kappa": a.kappa, "params": m, "rate": rate, "z_star": z_star,
            "equiv_normal_vol": vol, "result": priced,
        }));
    }
    println!("rate       {}", f6(rate));
    if m.is_sqrt() {
        println!("j_f        {}", f6(rate * m.sigma * m.sigma / m.s0));
    }
    println!("normal_vol {}", f6(vol));
    if let Some(p) = priced {
        println!("price      {}", f6(p.price));
        println!("d          {}", f6(p.d1));
        println!("forward    {}", f6(p.forward));
    }
    Ok(())
}

fn cmd_mc(a: McArgs) -> Result<(), Fail> {
    let m = a.model.params()?;
    let spec = contract(a.style, a.side, a.strike, a.maturity)?;
    let cfg = a.mc.config()?;
    if a.rate_maturities.iter().any(|t| !(t.is_finite() && *t > 0.0)) {
        return Err(Fail::Usage(Error::Domain("rate maturities must be positive".into())));
    }
    let e = mc::simulate(&spec, &m, &cfg)?;
    let rates = if a.rate_maturities.is_empty() {
        Vec::new()
    } else {
        mc::rate_from_mc(a.strike, &m, &a.rate_maturities, &cfg)?
    };
    if a.json {
        return emit_json(json!({ "spec": spec, "params": m, "config": cfg, "estimate": e, "rates": rates }));
    }
    println!("price      {}", f6(e.mean));
    println!("std_error  {}", f6(e.std_error));
    println!("paths      {}", e.n_paths);
    println!("steps      {}", e.n_steps);
    println!("absorbed   {}", e.n_absorbed);
    for p in &rates {
        match p.rate {
            Some(r) => println!("rate T={}  {}", p.maturity, f6(r)),
            None => println!("rate T={}  gap (no paths in the money)", p.maturity),
        }
    }
    Ok(())
}

fn cmd_bench(a: BenchArgs) -> Result<(), Fail> {
    let cfg = a.mc.config()?;
    let (rows, failures) = if let Some(path) = &a.scenarios {
        let scenarios = bench::read_scenarios(path).map_err(|e| match e {
            Error::Parse { .. } | Error::UnknownEngine(_) => Fail::Usage(e),
            other => Fail::Compute(other),
        })?;
        (bench::run_scenarios(&scenarios, &cfg)?, Vec::new())
    } else {
        let mut reports: Vec<BenchReport> = Vec::new();
        if matches!(a.table, Table::Table1 | Table::All) {
            reports.push(bench::run_table1()?);
        }
        if matches!(a.table, Table::Table2 | Table::All) {
            reports.push(bench::run_table2()?);
        }
        if matches!(a.table, Table::Floating | Table::All) {
            reports.push(bench::run_floating()?);
        }
        let mut rows = Vec::new();
        let mut failures = Vec::new();
        for r in reports {
            rows.extend(r.rows);
            failures.extend(r.failures);
        }
        (rows, failures)
    };
    let csv = bench::rows_to_csv(&rows)?;
    match &a.out {
        Some(p) => std::fs::write(p, csv)?,
        None => print!("{csv}"),
    }
    if failures.is_empty() {
        Ok(())
    } else {
        Err(Fail::Tolerance(failures))
    }
}

fn cmd_figures(a: FiguresArgs) -> Result<(), Fail> {
    std::fs::create_dir_all(&a.out)?;
    for name in figures::write_all(&a.out, a.points as usize)? {
        println!("{}", name.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let res = match cli.command {
        Command::Price(a) => cmd_price(a),
        Command::Rate(a) => cmd_rate(a),
        Command::VolCurve(a) => cmd_vol_curve(a),
        Command::Float(a) => cmd_float(a),
        Command::Mc(a) => cmd_mc(a),
        Command::Bench(a) => cmd_bench(a),
        Command::Figures(a) => cmd_figures(a),
    };
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(Fail::Tolerance(f)) => {
            for msg in f {
                eprintln!("tolerance: {msg}");
            }
            ExitCode::from(1)
        }
        Err(Fail::Usage(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(Fail::Compute(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(3)
        }
    }
}
