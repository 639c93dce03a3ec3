//! Cross-entropy proposal fitting and importance sampling.
//!
//! [`mcmc_ce`] draws from the truncated base law with a Markov chain and fits
//! a Gaussian to those draws; [`multilevel_ce`] reaches the event through a
//! ladder of intermediate levels instead. Both finish with a plain
//! importance-sampling pass whose average is formed in log space.

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use crate::error::{Error, Result};
use crate::model::{ChainConfig, Method, MvnParams, TailEstimate, TailProblem};
use crate::rng::{stream_rng, MULTILEVEL_STREAM, PILOT_STREAM, PROPOSAL_STREAM};
use crate::samplers::run_chain;
use crate::specialfn::log_sum_exp;

/// Relative diagonal inflation applied to every fitted covariance.
pub const FIT_RIDGE: f64 = 1e-10;

/// Screening rule: a pilot estimate above this with enough hits is returned
/// directly.
pub const PILOT_CUTOFF: f64 = 1e-3;
pub const PILOT_MIN_HITS: usize = 30;

pub const MULTILEVEL_MAX_ITER: usize = 100;
pub const MULTILEVEL_STALL: usize = 5;

/// Gaussian maximum-likelihood fit to the rows of `samples`.
///
/// Each variance is inflated by a relative `1e-10`; a variance that is
/// exactly zero is replaced by `1e-10` times the mean variance (or `1e-10`
/// when every variance is zero).
pub fn fit_mle(samples: &DMatrix<f64>) -> Result<MvnParams> {
    let n = samples.nrows();
    if n < 2 {
        return Err(Error::InvalidArgument(format!(
            "need at least 2 samples, got {n}"
        )));
    }
    if samples.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("samples"));
    }
    let mean = samples.row_mean().transpose();
    let mut centered = samples.clone();
    for mut row in centered.row_iter_mut() {
        row -= mean.transpose();
    }
    let cov = centered.tr_mul(&centered) / n as f64;
    finish_fit(mean, cov)
}

/// Weighted fit; `log_weights` need not be normalized. Rows with weight
/// `-inf` are ignored.
pub fn fit_weighted_mle(samples: &DMatrix<f64>, log_weights: &[f64]) -> Result<MvnParams> {
    if samples.nrows() != log_weights.len() {
        return Err(Error::DimensionMismatch {
            expected: samples.nrows(),
            got: log_weights.len(),
        });
    }
    let lse = log_sum_exp(log_weights)?;
    if !lse.is_finite() {
        return Err(Error::NonFinite("weighted fit normalizer"));
    }
    let w: Vec<f64> = log_weights.iter().map(|lw| (lw - lse).exp()).collect();
    let d = samples.ncols();
    let mut mean = DVector::zeros(d);
    for (i, &wi) in w.iter().enumerate() {
        if wi > 0.0 {
            mean.axpy(wi, &samples.row(i).transpose(), 1.0);
        }
    }
    let mut cov = DMatrix::zeros(d, d);
    for (i, &wi) in w.iter().enumerate() {
        if wi > 0.0 {
            let r = samples.row(i).transpose() - &mean;
            cov.ger(wi, &r, &r, 1.0);
        }
    }
    finish_fit(mean, cov)
}

fn finish_fit(mean: DVector<f64>, mut cov: DMatrix<f64>) -> Result<MvnParams> {
    let d = cov.nrows();
    let avg_var = cov.trace() / d as f64;
    let floor = if avg_var > 0.0 {
        FIT_RIDGE * avg_var
    } else {
        FIT_RIDGE
    };
    for i in 0..d {
        let v = cov[(i, i)];
        cov[(i, i)] = if v > 0.0 {
            v * (1.0 + FIT_RIDGE)
        } else {
            floor
        };
    }
    MvnParams::new(mean, cov)
}

/// Log importance weights of the proposal draws that hit the region.
#[derive(Debug, Clone)]
pub struct IsSample {
    pub log_weights: Vec<f64>,
    pub m: usize,
}

impl IsSample {
    /// `ln p_hat = logsumexp(w) - ln m`.
    pub fn ln_p(&self) -> f64 {
        if self.log_weights.is_empty() {
            return f64::NEG_INFINITY;
        }
        log_sum_exp(&self.log_weights).unwrap_or(f64::NEG_INFINITY) - (self.m as f64).ln()
    }

    /// The same average formed in linear space; only meaningful when the
    /// weights are representable.
    pub fn linear_p(&self) -> f64 {
        self.log_weights.iter().map(|w| w.exp()).sum::<f64>() / self.m as f64
    }

    /// Relative standard error of `p_hat` from the normalized weights.
    pub fn rel_se(&self) -> f64 {
        if self.log_weights.is_empty() || self.m < 2 {
            return f64::NAN;
        }
        let lse = log_sum_exp(&self.log_weights).unwrap_or(f64::NEG_INFINITY);
        let s2: f64 = self
            .log_weights
            .iter()
            .map(|w| (2.0 * (w - lse)).exp())
            .sum();
        let m = self.m as f64;
        ((m * s2 - 1.0).max(0.0) / (m - 1.0)).sqrt()
    }

    pub fn max_log_weight(&self) -> Option<f64> {
        self.log_weights.iter().copied().reduce(f64::max)
    }

    pub fn into_estimate(self, method: Method) -> TailEstimate {
        let mut est = TailEstimate::from_ln(
            self.ln_p(),
            self.rel_se(),
            self.log_weights.len(),
            self.m,
            method,
        );
        est.max_log_weight = self.max_log_weight();
        est
    }
}

/// Draws `m` proposal samples and keeps `ln f0(y) - ln f(y)` for the hits.
pub fn importance_sample<R: Rng + ?Sized>(
    problem: &TailProblem,
    proposal: &MvnParams,
    m: usize,
    rng: &mut R,
) -> Result<IsSample> {
    if m == 0 {
        return Err(Error::InvalidArgument("m must be at least 1".into()));
    }
    if proposal.dim() != problem.dim() {
        return Err(Error::DimensionMismatch {
            expected: problem.dim(),
            got: proposal.dim(),
        });
    }
    let theta0 = problem.theta0();
    let mut log_weights = Vec::new();
    for _ in 0..m {
        let y = proposal.sample(rng);
        if !problem.contains(y.as_slice()) {
            continue;
        }
        let lw = theta0.log_density_slice(y.as_slice()) - proposal.log_density_slice(y.as_slice());
        if !lw.is_finite() {
            return Err(Error::NonFinite("importance weight"));
        }
        log_weights.push(lw);
    }
    Ok(IsSample { log_weights, m })
}

/// Importance-sampling estimate of the problem's probability under `proposal`.
pub fn is_estimate<R: Rng + ?Sized>(
    problem: &TailProblem,
    proposal: &MvnParams,
    m: usize,
    rng: &mut R,
) -> Result<TailEstimate> {
    let mut est = importance_sample(problem, proposal, m, rng)?.into_estimate(Method::McmcCe);
    est.proposal = Some(proposal.clone());
    Ok(est)
}

/// MCMC-CE: chain on the truncated base law, Gaussian fit, importance
/// sampling with `m` draws.
///
/// The chain uses the chain stream of `cfg.seed` and the importance pass an
/// independent proposal stream of the same seed.
pub fn mcmc_ce(problem: &TailProblem, cfg: &ChainConfig, m: usize) -> Result<TailEstimate> {
    let draws = run_chain(problem, cfg)?;
    let proposal = fit_mle(&draws)?;
    let mut rng = stream_rng(cfg.seed, PROPOSAL_STREAM);
    is_estimate(problem, &proposal, m, &mut rng)
}

/// Plain Monte Carlo under the base law.
pub fn pilot_mc<R: Rng + ?Sized>(
    problem: &TailProblem,
    n: usize,
    rng: &mut R,
) -> Result<TailEstimate> {
    if n == 0 {
        return Err(Error::InvalidArgument("n must be at least 1".into()));
    }
    let theta0 = problem.theta0();
    let hits = (0..n)
        .filter(|_| problem.contains(theta0.sample(rng).as_slice()))
        .count();
    let p = hits as f64 / n as f64;
    let rel_se = if hits > 0 {
        ((1.0 - p) / (n as f64 * p)).sqrt()
    } else {
        f64::NAN
    };
    Ok(TailEstimate::from_ln(
        p.ln(),
        rel_se,
        hits,
        n,
        Method::BruteMc,
    ))
}

/// Screens with `pilot_n` plain draws and falls back to [`mcmc_ce`] when the
/// event is rare.
pub fn screened_estimate(
    problem: &TailProblem,
    cfg: &ChainConfig,
    m: usize,
    pilot_n: usize,
) -> Result<TailEstimate> {
    if pilot_n > 0 {
        let mut rng = stream_rng(cfg.seed, PILOT_STREAM);
        let pilot = pilot_mc(problem, pilot_n, &mut rng)?;
        if pilot.p > PILOT_CUTOFF && pilot.n_proposal_hits >= PILOT_MIN_HITS {
            return Ok(pilot);
        }
    }
    mcmc_ce(problem, cfg, m)
}

/// Multilevel cross-entropy.
///
/// Each round draws `n` points from the current proposal, raises the level to
/// the `(1 - rho)` sample quantile of the score (capped at the target), and
/// refits by weighted maximum likelihood on the points above the level. The
/// final proposal is used for an importance pass of `m` draws.
pub fn multilevel_ce(
    problem: &TailProblem,
    rho: f64,
    n: usize,
    m: usize,
    seed: u64,
) -> Result<TailEstimate> {
    if !(rho > 0.0 && rho < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "rho must lie in (0, 1), got {rho}"
        )));
    }
    if n < 2 {
        return Err(Error::InvalidArgument("n must be at least 2".into()));
    }
    let d = problem.dim();
    let theta0 = problem.theta0();
    let constraint = problem.constraint();
    let mut theta = theta0.clone();
    let mut best_level = f64::NEG_INFINITY;
    let mut stalled = 0;
    let mut draws = DMatrix::zeros(n, d);
    let mut scores = vec![0.0; n];
    for iter in 0..MULTILEVEL_MAX_ITER {
        let mut rng = stream_rng(seed, MULTILEVEL_STREAM + iter as u64);
        for (i, score) in scores.iter_mut().enumerate() {
            let y = theta.sample(&mut rng);
            *score = constraint.score(y.as_slice());
            draws.set_row(i, &y.transpose());
        }
        let mut sorted = scores.clone();
        sorted.sort_by(f64::total_cmp);
        let idx = (((1.0 - rho) * n as f64).ceil() as usize).clamp(1, n) - 1;
        let reached = sorted[idx] >= 0.0;
        let level = if reached { 0.0 } else { sorted[idx] };

        let mut log_w = vec![f64::NEG_INFINITY; n];
        let mut elite = 0;
        for i in 0..n {
            if scores[i] >= level {
                let y = draws.row(i).transpose();
                log_w[i] =
                    theta0.log_density_slice(y.as_slice()) - theta.log_density_slice(y.as_slice());
                elite += 1;
            }
        }
        if elite < 2 {
            return Err(Error::MultilevelDegeneracy(format!(
                "only {elite} draws reached level {level} at iteration {iter}"
            )));
        }
        theta = fit_weighted_mle(&draws, &log_w).map_err(|e| {
            Error::MultilevelDegeneracy(format!("weighted fit failed at iteration {iter}: {e}"))
        })?;
        if reached {
            let mut rng = stream_rng(seed, PROPOSAL_STREAM);
            let mut est = importance_sample(problem, &theta, m, &mut rng)?
                .into_estimate(Method::MultilevelCe);
            est.proposal = Some(theta);
            return Ok(est);
        }
        if level > best_level {
            best_level = level;
            stalled = 0;
        } else {
            stalled += 1;
            if stalled >= MULTILEVEL_STALL {
                return Err(Error::MultilevelDegeneracy(format!(
                    "level stuck at {best_level} for {MULTILEVEL_STALL} iterations"
                )));
            }
        }
    }
    Err(Error::MultilevelDegeneracy(format!(
        "target not reached in {MULTILEVEL_MAX_ITER} iterations"
    )))
}
