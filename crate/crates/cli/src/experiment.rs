//! Replicated experiments over a list of targets.

use std::f64::consts::LN_10;
use std::time::Instant;

use rayon::prelude::*;
use smallp_core::baselines::{brute_force_mc, brute_force_two_sided_ratio, imhof};
use smallp_core::ce::{mcmc_ce, multilevel_ce};
use smallp_core::reduce::ratio_to_linear;
use smallp_core::rng::{derive_seed, stream_rng, PILOT_STREAM};
use smallp_core::specialfn::{
    cauchy_sf_inv, chisq_sf_inv, log_cauchy_sf, log_chisq_sf, log_sum_exp, LogProb,
};
use smallp_core::{ChainConfig, EstimateStatus, Method, SamplerKind, TailProblem};

use crate::report::{compute_metrics, fmt_g, MetricsRow};
use crate::CliError;

/// Relative error beyond which an Imhof row is flagged as outside its
/// reliable range.
pub const IMHOF_FLAG_ARE: f64 = 0.1;

#[derive(Debug, Clone, PartialEq)]
pub enum ProblemSpec {
    /// `sum lambda_i chi^2_1`.
    Quadform { lambdas: Vec<f64> },
    /// Ratio of group means `y1 / y2`.
    Ratio {
        n1: usize,
        n2: usize,
        mu: f64,
        sigma: f64,
        both_orthants: bool,
        two_sided_mc: bool,
    },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Truth {
    ChiSq(u32),
    Cauchy,
    Log10(f64),
}

impl std::str::FromStr for Truth {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("cauchy") {
            return Ok(Truth::Cauchy);
        }
        if let Some(df) = s.strip_prefix("chisq:") {
            return df
                .parse::<u32>()
                .map(Truth::ChiSq)
                .map_err(|_| format!("bad degrees of freedom in '{s}'"));
        }
        if let Some(v) = s.strip_prefix("log10:") {
            return v
                .parse::<f64>()
                .map(Truth::Log10)
                .map_err(|_| format!("bad log10 value in '{s}'"));
        }
        Err(format!(
            "unknown truth '{s}' (expected chisq:<df>, cauchy or log10:<x>)"
        ))
    }
}

impl Truth {
    /// `ln p` at threshold `q`.
    pub fn ln_p(&self, q: f64) -> f64 {
        match *self {
            Truth::ChiSq(df) => log_chisq_sf(df, q).ln(),
            Truth::Cauchy => log_cauchy_sf(q).ln(),
            Truth::Log10(v) => v * LN_10,
        }
    }

    /// Threshold with tail probability `exp(ln_p)`, when the law is known.
    pub fn threshold(&self, ln_p: f64) -> Result<f64, CliError> {
        let lp = LogProb::from_ln(ln_p).map_err(|e| CliError::Config(e.to_string()))?;
        match *self {
            Truth::ChiSq(df) => {
                chisq_sf_inv(df, lp).map_err(|e| CliError::Numerical(e.to_string()))
            }
            Truth::Cauchy => Ok(cauchy_sf_inv(lp)),
            Truth::Log10(_) => Err(CliError::Config(
                "targets need a chisq or cauchy truth".into(),
            )),
        }
    }
}

/// One row to compute: a threshold and optionally its true `ln p`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Target {
    pub q: f64,
    pub truth_ln: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub problem: ProblemSpec,
    pub targets: Vec<Target>,
    pub method: Method,
    pub replicates: usize,
    pub n: usize,
    pub m: usize,
    pub burn_in: usize,
    pub seed: u64,
    pub sampler: Option<SamplerKind>,
    pub rho: f64,
    pub timing: bool,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<(), CliError> {
        if self.replicates == 0 {
            return Err(CliError::Config("--reps must be at least 1".into()));
        }
        if self.n == 0 || self.m == 0 {
            return Err(CliError::Config("--n and --m must be at least 1".into()));
        }
        if self.targets.is_empty() {
            return Err(CliError::Config(
                "no thresholds given (use --q or --targets)".into(),
            ));
        }
        if !(self.rho > 0.0 && self.rho < 1.0) {
            return Err(CliError::Config(format!(
                "--rho must lie in (0, 1), got {}",
                self.rho
            )));
        }
        match (&self.problem, self.method) {
            (ProblemSpec::Ratio { .. }, Method::Imhof) => Err(CliError::Config(
                "imhof applies to quadratic forms only".into(),
            )),
            (
                ProblemSpec::Ratio {
                    two_sided_mc: true, ..
                },
                m,
            ) if m != Method::BruteMc => Err(CliError::Config(
                "--two-sided is a plain Monte Carlo option (--method mc)".into(),
            )),
            _ => Ok(()),
        }
    }
}

/// Targets from a list of `log10 p` values and a known law.
pub fn targets_from_log10(truth: Truth, log10_ps: &[f64]) -> Result<Vec<Target>, CliError> {
    log10_ps
        .iter()
        .map(|&l| {
            let ln_p = l * LN_10;
            Ok(Target {
                q: truth.threshold(ln_p)?,
                truth_ln: Some(ln_p),
            })
        })
        .collect()
}

/// Outcome of one replicate.
struct Replicate {
    ln_p: f64,
    unreliable: bool,
}

/// Runs every target and returns one row per target, in order.
///
/// Replicates run in parallel; each uses its own seed derived from the master
/// seed, the target index and the replicate index, so the output does not
/// depend on thread scheduling.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Vec<MetricsRow>, CliError> {
    cfg.validate()?;
    let mut rows = Vec::with_capacity(cfg.targets.len());
    for (ti, target) in cfg.targets.iter().enumerate() {
        let start = Instant::now();
        let target_seed = derive_seed(cfg.seed, ti as u64);
        let reps = if cfg.method == Method::Imhof {
            1
        } else {
            cfg.replicates
        };
        let results: Vec<Result<Replicate, CliError>> = (0..reps)
            .into_par_iter()
            .map(|r| run_replicate(cfg, target.q, derive_seed(target_seed, r as u64)))
            .collect();
        let mut ln_ps = Vec::with_capacity(reps);
        let mut unreliable = 0;
        for res in results {
            let rep = res?;
            unreliable += rep.unreliable as usize;
            ln_ps.push(rep.ln_p);
        }
        let seconds = if cfg.timing {
            start.elapsed().as_secs_f64()
        } else {
            0.0
        };
        let row = compute_metrics(&ln_ps, target.truth_ln, seconds);
        if unreliable > 0 {
            eprintln!(
                "note: q={}: {unreliable} of {reps} replicates had no proposal hits (estimate 0)",
                target.q
            );
        }
        if cfg.method == Method::Imhof {
            let bad =
                !row.mean_log10_p.is_finite() || row.are.is_some_and(|a| !(a <= IMHOF_FLAG_ARE));
            if bad {
                eprintln!(
                    "note: q={}: imhof result {} is outside the method's reliable range",
                    target.q,
                    fmt_g(10f64.powf(row.mean_log10_p), 6)
                );
            }
        }
        rows.push(row);
    }
    Ok(rows)
}

fn run_replicate(cfg: &ExperimentConfig, q: f64, seed: u64) -> Result<Replicate, CliError> {
    let numerical = |e: smallp_core::Error| CliError::Numerical(e.to_string());
    let config_err = |e: smallp_core::Error| CliError::Config(e.to_string());
    match &cfg.problem {
        ProblemSpec::Quadform { lambdas } => {
            if cfg.method == Method::Imhof {
                let p = imhof(lambdas, q).map_err(numerical)?;
                return Ok(Replicate {
                    ln_p: p.ln(),
                    unreliable: false,
                });
            }
            let problem = TailProblem::quadform(lambdas.clone(), q).map_err(config_err)?;
            estimate_one(cfg, &problem, seed)
        }
        ProblemSpec::Ratio {
            n1,
            n2,
            mu,
            sigma,
            both_orthants,
            two_sided_mc,
        } => {
            if *two_sided_mc {
                let mut rng = stream_rng(seed, PILOT_STREAM);
                let est = brute_force_two_sided_ratio(q, *n1, *n2, *mu, *sigma, cfg.m, &mut rng)
                    .map_err(config_err)?;
                return Ok(Replicate {
                    ln_p: est.ln_p(),
                    unreliable: est.status == EstimateStatus::Unreliable,
                });
            }
            let problems =
                ratio_to_linear(q, *n1, *n2, *mu, *sigma, *both_orthants).map_err(config_err)?;
            let mut parts = Vec::with_capacity(problems.len());
            let mut unreliable = false;
            for (k, problem) in problems.iter().enumerate() {
                let rep = estimate_one(cfg, problem, derive_seed(seed, k as u64))?;
                unreliable |= rep.unreliable;
                parts.push(rep.ln_p);
            }
            let ln_p = log_sum_exp(&parts).map_err(numerical)?;
            Ok(Replicate { ln_p, unreliable })
        }
    }
}

fn estimate_one(
    cfg: &ExperimentConfig,
    problem: &TailProblem,
    seed: u64,
) -> Result<Replicate, CliError> {
    let numerical = |e: smallp_core::Error| CliError::Numerical(e.to_string());
    let est = match cfg.method {
        Method::McmcCe => {
            let chain = ChainConfig {
                burn_in: cfg.burn_in,
                n_samples: cfg.n,
                sampler: cfg.sampler,
                seed,
                ..Default::default()
            };
            mcmc_ce(problem, &chain, cfg.m).map_err(numerical)?
        }
        Method::MultilevelCe => {
            multilevel_ce(problem, cfg.rho, cfg.n, cfg.m, seed).map_err(numerical)?
        }
        Method::BruteMc => {
            let mut rng = stream_rng(seed, PILOT_STREAM);
            brute_force_mc(problem, cfg.m, &mut rng).map_err(numerical)?
        }
        Method::Imhof => {
            return Err(CliError::Config(
                "imhof applies to quadratic forms only".into(),
            ))
        }
    };
    Ok(Replicate {
        ln_p: est.ln_p(),
        unreliable: est.status == EstimateStatus::Unreliable,
    })
}
