//! Browser demo: chain draws on a two-dimensional region, chi-squared tail
//! estimates against the exact value, and Imhof's integral against the same.
//!
//! The plain functions return `Result<_, String>` so they can be tested on
//! the host; the `#[wasm_bindgen]` wrappers convert errors to JS exceptions.

use std::f64::consts::LN_10;

use smallp_core::baselines::imhof;
use smallp_core::ce::mcmc_ce;
use smallp_core::samplers::run_chain;
use smallp_core::specialfn::{chisq_sf_inv, LogProb};
use smallp_core::{ChainConfig, SamplerKind, TailProblem};
use wasm_bindgen::prelude::*;

/// Largest chain the page may ask for.
pub const MAX_DRAWS: usize = 200_000;

/// Draws from `N(0, I_2)` restricted to `l1 y1^2 + l2 y2^2 >= q`, flattened
/// as `[y1, y2, y1, y2, ...]`.
pub fn region_draws(
    l1: f64,
    l2: f64,
    q: f64,
    sampler: &str,
    n: usize,
    seed: u32,
) -> Result<Vec<f64>, String> {
    if n == 0 || n > MAX_DRAWS {
        return Err(format!("draw count must be in 1..={MAX_DRAWS}"));
    }
    let kind: SamplerKind = sampler
        .parse()
        .map_err(|e: smallp_core::Error| e.to_string())?;
    let problem = TailProblem::quadform(vec![l1, l2], q).map_err(|e| e.to_string())?;
    let cfg = ChainConfig {
        burn_in: 200,
        n_samples: n,
        sampler: Some(kind),
        seed: seed as u64,
        ..Default::default()
    };
    let draws = run_chain(&problem, &cfg).map_err(|e| e.to_string())?;
    Ok(draws.row_iter().flat_map(|r| [r[0], r[1]]).collect())
}

fn chisq_threshold(df: u32, log10_p: f64) -> Result<f64, String> {
    if df == 0 || df > 200 {
        return Err("degrees of freedom must be in 1..=200".into());
    }
    let lp = LogProb::from_log10(log10_p).map_err(|e| e.to_string())?;
    chisq_sf_inv(df, lp).map_err(|e| e.to_string())
}

/// One MCMC-CE estimate of a chi-squared tail; a small JSON object with the
/// threshold, the estimate and the exact value on the log10 scale.
pub fn chisq_estimate(
    df: u32,
    log10_p: f64,
    n: usize,
    m: usize,
    seed: u32,
) -> Result<String, String> {
    if n == 0 || m == 0 || n > MAX_DRAWS || m > MAX_DRAWS {
        return Err(format!("sample sizes must be in 1..={MAX_DRAWS}"));
    }
    let q = chisq_threshold(df, log10_p)?;
    let problem = TailProblem::chisq(df as usize, q).map_err(|e| e.to_string())?;
    let cfg = ChainConfig {
        n_samples: n,
        seed: seed as u64,
        ..Default::default()
    };
    let est = mcmc_ce(&problem, &cfg, m).map_err(|e| e.to_string())?;
    let rel_err = ((est.log10_p - log10_p) * LN_10).exp() - 1.0;
    Ok(format!(
        "{{\"q\":{q},\"log10_p\":{},\"exact_log10_p\":{log10_p},\"rel_error\":{rel_err},\"rel_se\":{},\"hits\":{}}}",
        json_num(est.log10_p),
        json_num(est.rel_se),
        est.n_proposal_hits
    ))
}

/// Imhof's integral at the exact chi-squared threshold.
pub fn imhof_check(df: u32, log10_p: f64) -> Result<String, String> {
    let q = chisq_threshold(df, log10_p)?;
    let p = imhof(&vec![1.0; df as usize], q).map_err(|e| e.to_string())?;
    let log10 = if p > 0.0 {
        p.log10()
    } else {
        f64::NEG_INFINITY
    };
    let rel_err = ((log10 - log10_p) * LN_10).exp() - 1.0;
    Ok(format!(
        "{{\"q\":{q},\"p\":{p:e},\"log10_p\":{},\"exact_log10_p\":{log10_p},\"rel_error\":{}}}",
        json_num(log10),
        json_num(rel_err)
    ))
}

fn json_num(x: f64) -> String {
    if x.is_finite() {
        x.to_string()
    } else {
        format!("\"{x}\"")
    }
}

#[wasm_bindgen]
pub fn chain_samples(
    l1: f64,
    l2: f64,
    q: f64,
    sampler: &str,
    n: usize,
    seed: u32,
) -> Result<Vec<f64>, JsError> {
    region_draws(l1, l2, q, sampler, n, seed).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn chisq_tail(df: u32, log10_p: f64, n: usize, m: usize, seed: u32) -> Result<String, JsError> {
    chisq_estimate(df, log10_p, n, m, seed).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn imhof_vs_truth(df: u32, log10_p: f64) -> Result<String, JsError> {
    imhof_check(df, log10_p).map_err(|e| JsError::new(&e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn draws_are_pairs_in_region() {
        let d = region_draws(1.0, 0.25, 9.0, "hmc", 500, 1).unwrap();
        assert_eq!(d.len(), 1000);
        for p in d.chunks(2) {
            assert!(p[0] * p[0] + 0.25 * p[1] * p[1] >= 9.0);
        }
        assert!(region_draws(1.0, 1.0, 4.0, "metropolis", 10, 1).is_err());
        assert!(region_draws(1.0, 1.0, 4.0, "gibbs", 0, 1).is_err());
    }

    #[test]
    fn estimate_json_is_well_formed() {
        let s = chisq_estimate(3, -8.0, 5000, 5000, 2).unwrap();
        assert!(s.starts_with('{') && s.ends_with('}'));
        let field = |k: &str| -> f64 {
            let rest = &s[s.find(&format!("\"{k}\":")).unwrap() + k.len() + 3..];
            rest[..rest.find([',', '}']).unwrap()].parse().unwrap()
        };
        assert!((field("log10_p") + 8.0).abs() < 0.1);
        assert!(field("rel_error").abs() < 0.25);
    }

    #[test]
    fn imhof_breaks_deep() {
        assert!(imhof_check(2, -4.0)
            .unwrap()
            .contains("\"exact_log10_p\":-4"));
        let deep = imhof_check(2, -40.0).unwrap();
        assert!(!deep.contains("\"log10_p\":-40"));
        assert!(imhof_check(0, -4.0).is_err());
    }
}
