mod common;

use cev_asian::model::{ModelParams, OptionSpec, Side};
use cev_asian::pricing::{
    atm_lognormal_vol, atm_price, average_forward, equiv_lognormal_vol, equiv_normal_vol,
    floating_forward, parity_gap, price_fixed, price_fixed_with, price_floating, PricingOptions,
    RateSource, VolKind,
};
use cev_asian::rate_sqrt::rate_sqrt;
use common::{linspace, rel};
use proptest::prelude::*;

fn call(k: f64, t: f64) -> OptionSpec {
    OptionSpec::fixed(Side::Call, k, t)
}

#[test]
fn average_forward_values() {
    let m = ModelParams::new(2.0, 0.3, 0.5, 0.05, 0.0).unwrap();
    let a = average_forward(&m, 1.0);
    assert!((a - 2.0 * 0.05f64.exp_m1() / 0.05).abs() < 1e-15, "{a}");
    assert!((a - 2.050_843_855).abs() < 1e-9, "{a}");
    let flat = ModelParams::new(2.0, 0.3, 0.5, 0.03, 0.03).unwrap();
    assert_eq!(average_forward(&flat, 3.0), 2.0);
    for &t in &[1e-3, 1e-5, 1e-7] {
        let d = average_forward(&m, t) - 2.0;
        assert!((d / t - 0.05).abs() < 1e-3);
    }
}

#[test]
fn atm_lognormal_level() {
    for &beta in &[0.5, 0.7, 0.9] {
        let m = ModelParams::driftless(1.7, 0.4, beta).unwrap();
        let v = equiv_lognormal_vol(1.7, &m).unwrap();
        let expected = 0.4 * 1.7f64.powf(beta - 1.0) / 3f64.sqrt();
        assert!(rel(v, expected) < 1e-15);
        assert_eq!(v, atm_lognormal_vol(&m));
    }
}

fn fd_coefficients(m: &ModelParams, h: f64) -> (f64, f64) {
    let s0 = m.s0;
    let v = |x: f64| equiv_lognormal_vol(s0 * x.exp(), m).unwrap();
    let (up, mid, dn) = (v(h), atm_lognormal_vol(m), v(-h));
    ((up - dn) / (2.0 * h * mid), (up + dn - 2.0 * mid) / (2.0 * h * h * mid))
}

#[test]
fn sqrt_model_smile_shape() {
    let m = ModelParams::driftless(1.0, 0.5, 0.5).unwrap();
    let (skew, curv) = fd_coefficients(&m, 0.01);
    assert!((skew + 0.2).abs() < 1e-5, "{skew}");
    assert!((curv + 19.0 / 4200.0).abs() < 1e-5, "{curv}");
}

#[test]
fn skew_vanishes_at_five_sixths() {
    let m = ModelParams::driftless(1.0, 0.3, 5.0 / 6.0).unwrap();
    let (skew, curv) = fd_coefficients(&m, 0.01);
    assert!(skew.abs() <= 1e-3, "{skew}");
    assert!(curv < 0.0);
}

#[test]
fn paper_price_examples() {
    // Table 1 cases 1 and 7, Table 2 case 1.
    let cases = [
        (2.0, 2.0, 0.02, 0.14, 1.0, 0.055474),
        (2.0, 2.0, 0.05, 0.71, 2.0, 0.350516),
        (2.0, 2.0, 0.05, 0.71, 0.1, 0.075354),
    ];
    for (s0, k, r, sigma, t, expected) in cases {
        let m = ModelParams::new(s0, sigma, 0.5, r, 0.0).unwrap();
        let p = price_fixed(&call(k, t), &m).unwrap();
        assert!((p.price - expected).abs() <= 5e-7, "{} vs {expected}", p.price);
        assert_eq!(p.vol_kind, VolKind::Lognormal);
        assert!(p.atm);
    }
}

#[test]
fn forward_centered_variant() {
    let fpp3 = [
        (2.0, 2.0, 0.02, 0.14, 1.0, 0.055562),
        (2.0, 2.0, 0.18, 0.42, 1.0, 0.217874),
        (2.0, 2.0, 0.0125, 0.35, 2.0, 0.170926),
        (1.9, 2.0, 0.05, 0.69, 1.0, 0.190834),
        (2.0, 2.0, 0.05, 0.72, 1.0, 0.251121),
        (2.1, 2.0, 0.05, 0.72, 1.0, 0.308715),
        (2.0, 2.0, 0.05, 0.71, 2.0, 0.353197),
    ];
    let opts = PricingOptions {
        forward_centered: true,
        ..Default::default()
    };
    for (s0, k, r, sigma, t, reference) in fpp3 {
        let m = ModelParams::new(s0, sigma, 0.5, r, 0.0).unwrap();
        let p = price_fixed_with(&call(k, t), &m, &opts).unwrap().price;
        assert!(rel(p, reference) < 1e-3, "{p} vs {reference}");
    }
}

#[test]
fn atm_price_formula() {
    let m = ModelParams::new(2.0, 0.71, 0.5, 0.05, 0.0).unwrap();
    let v = atm_price(&m, 0.1);
    let expected = 0.71 * 2f64.sqrt() * (0.1 / (6.0 * std::f64::consts::PI)).sqrt();
    assert!((v - expected).abs() < 1e-16);
    assert!((v - 0.073_135).abs() < 1e-6, "{v}");
    for &beta in &[0.5, 0.75] {
        let m = ModelParams::new(1.5, 0.4, beta, 0.03, 0.01).unwrap();
        let ratio = price_fixed(&call(1.5, 1e-3), &m).unwrap().price / atm_price(&m, 1e-3);
        assert!((ratio - 1.0).abs() < 1e-2, "{ratio}");
    }
}

#[test]
fn short_maturity_rate_limit() {
    let m = ModelParams::driftless(1.0, 0.5, 0.5).unwrap();
    let rate = rate_sqrt(0.7, &m).unwrap().value;
    let errs: Vec<f64> = [0.1, 0.01, 0.001]
        .iter()
        .map(|&t| {
            let p = price_fixed(&OptionSpec::fixed(Side::Put, 0.7, t), &m).unwrap().price;
            assert!(p > 0.0);
            ((-t * p.ln() - rate) / rate).abs()
        })
        .collect();
    assert!(errs.windows(2).all(|w| w[1] < w[0]), "{errs:?}");
    assert!(errs[2] <= 0.02, "{errs:?}");
}

#[test]
fn monotone_in_strike() {
    let m = ModelParams::new(2.0, 0.4, 0.7, 0.03, 0.0).unwrap();
    let ks = linspace(1.0, 3.0, 81);
    let calls: Vec<f64> = ks
        .iter()
        .map(|&k| price_fixed(&call(k, 0.5), &m).unwrap().price)
        .collect();
    let puts: Vec<f64> = ks
        .iter()
        .map(|&k| price_fixed(&OptionSpec::fixed(Side::Put, k, 0.5), &m).unwrap().price)
        .collect();
    assert!(calls.windows(2).all(|w| w[1] < w[0]));
    assert!(puts.windows(2).all(|w| w[1] > w[0]));
    assert!(calls.iter().chain(puts.iter()).all(|&p| p >= 0.0));
}

#[test]
fn parity_at_forward_strike() {
    let m = ModelParams::new(2.0, 0.4, 0.5, 0.05, 0.0).unwrap();
    let a = average_forward(&m, 1.0);
    let c = price_fixed(&call(a, 1.0), &m).unwrap().price;
    let p = price_fixed(&OptionSpec::fixed(Side::Put, a, 1.0), &m).unwrap().price;
    assert!((c - p).abs() < 1e-15);
}

#[test]
fn variational_source_matches() {
    let m = ModelParams::new(1.0, 0.3, 0.75, 0.02, 0.0).unwrap();
    let opts = PricingOptions {
        source: RateSource::Variational,
        ..Default::default()
    };
    for &k in &[0.8, 1.2] {
        let a = price_fixed(&call(k, 0.5), &m).unwrap().price;
        let b = price_fixed_with(&call(k, 0.5), &m, &opts).unwrap().price;
        assert!(rel(a, b) < 1e-4, "{a} vs {b}");
    }
}

#[test]
fn fmr_floating_case() {
    let m = ModelParams::new(1.0, 0.7, 0.5, 0.04, 0.0).unwrap();
    let p = price_floating(&OptionSpec::floating(Side::Put, 1.0, 1.0), &m).unwrap();
    assert!((p.price - 0.14524).abs() <= 5e-6, "{}", p.price);
    assert!(rel(p.price, 0.14376) < 0.011);
    assert_eq!(p.vol_kind, VolKind::Normal);
    assert!(p.d2.is_none() && !p.extrapolated);
}

#[test]
fn normal_vol_atm_and_limit() {
    let m = ModelParams::driftless(1.7, 0.6, 0.5).unwrap();
    let atm = 0.6 * (1.7f64 / 3.0).sqrt();
    assert!(rel(equiv_normal_vol(1.0, &m).unwrap(), atm) < 1e-15);
    for &k in &[1.0 + 1e-4, 1.0 - 1e-4, 1.0 + 1e-6] {
        let v = equiv_normal_vol(k, &m).unwrap();
        assert!(rel(v, atm) < 2e-4, "{k}: {v}");
    }
    for &t in &[1e-4, 1e-6] {
        let p = price_floating(&OptionSpec::floating(Side::Call, 1.0, t), &m).unwrap().price;
        let limit = atm / (2.0 * std::f64::consts::PI).sqrt();
        assert!(rel(p / t.sqrt(), limit) < 1e-12);
    }
    assert!(equiv_normal_vol(0.0, &m).is_err());
}

#[test]
fn normal_vol_direct_formula() {
    let m = ModelParams::driftless(1.0, 0.7, 0.5).unwrap();
    let jf: f64 = 0.161_072_267_621_270_78;
    let expected = 0.7 * 0.5 * (1.0 / (2.0 * jf)).sqrt();
    assert!(rel(equiv_normal_vol(1.5, &m).unwrap(), expected) < 1e-12);
}

#[test]
fn general_beta_floating_is_flagged() {
    let m = ModelParams::new(1.0, 0.3, 0.75, 0.02, 0.0).unwrap();
    let p = price_floating(&OptionSpec::floating(Side::Call, 1.1, 0.25), &m).unwrap();
    assert!(p.extrapolated && p.price > 0.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn fixed_parity(
        s0 in 0.5f64..5.0,
        k_rel in 0.5f64..2.0,
        sigma in 0.05f64..1.0,
        beta in 0.5f64..0.95,
        r in -0.02f64..0.2,
        q in 0.0f64..0.1,
        t in 0.05f64..3.0,
    ) {
        let m = ModelParams::new(s0, sigma * s0.powf(1.0 - beta), beta, r, q).unwrap();
        let k = k_rel * s0;
        let c = price_fixed(&call(k, t), &m).unwrap().price;
        let p = price_fixed(&OptionSpec::fixed(Side::Put, k, t), &m).unwrap().price;
        prop_assert!(c >= 0.0 && p >= 0.0);
        prop_assert!(parity_gap(c, p, k, &m, t).abs() <= 1e-13);
    }

    #[test]
    fn floating_parity(kappa in 0.3f64..3.0, sigma in 0.1f64..1.0, r in 0.0f64..0.1, t in 0.05f64..2.0) {
        let m = ModelParams::new(1.0, sigma, 0.5, r, 0.0).unwrap();
        let c = price_floating(&OptionSpec::floating(Side::Call, kappa, t), &m).unwrap().price;
        let p = price_floating(&OptionSpec::floating(Side::Put, kappa, t), &m).unwrap().price;
        let f = floating_forward(kappa, &m, t);
        prop_assert!((c - p - (-r * t).exp() * f).abs() <= 1e-13);
    }
}
