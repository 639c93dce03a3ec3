//! Markov chains whose stationary law is the base normal truncated to the
//! rare-event region, i.e. the zero-variance importance density.
//!
//! Three kernels are provided. All of them keep the state inside the region
//! at every step: a proposal that lands outside because of floating-point
//! rounding is redrawn or, failing that, the old state is kept.

mod gibbs;
mod hit_and_run;
mod hmc;

pub use gibbs::{conditional_support, Gibbs};
pub use hit_and_run::{line_support, HitAndRun};
pub use hmc::{Hmc, HmcPath};

pub use crate::model::SamplerKind;

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use crate::error::{Error, Result};
use crate::model::{ChainConfig, TailProblem};
use crate::rng::{stream_rng, CHAIN_STREAM};

/// Upper bound on redraws when a one-dimensional draw rounds onto the wrong
/// side of a boundary.
const MAX_REDRAWS: usize = 64;

/// Position of a chain. The position is always inside the region.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainState {
    current: DVector<f64>,
    steps_taken: usize,
}

impl ChainState {
    /// Starts at the constraint's feasible point.
    pub fn new(problem: &TailProblem) -> Self {
        Self {
            current: problem.constraint().feasible_point().clone(),
            steps_taken: 0,
        }
    }

    pub fn at(problem: &TailProblem, point: DVector<f64>) -> Result<Self> {
        if point.len() != problem.dim() {
            return Err(Error::DimensionMismatch {
                expected: problem.dim(),
                got: point.len(),
            });
        }
        if !problem.contains(point.as_slice()) {
            return Err(Error::InvalidArgument(
                "chain start is outside the region".into(),
            ));
        }
        Ok(Self {
            current: point,
            steps_taken: 0,
        })
    }

    pub fn current(&self) -> &DVector<f64> {
        &self.current
    }

    pub fn steps_taken(&self) -> usize {
        self.steps_taken
    }
}

/// A prepared transition kernel for one problem.
#[derive(Debug, Clone)]
pub enum Kernel {
    Gibbs(Gibbs),
    HitAndRun(HitAndRun),
    Hmc(Hmc),
}

impl Kernel {
    pub fn new(problem: &TailProblem, kind: SamplerKind, hmc_travel_time: f64) -> Result<Self> {
        Ok(match kind {
            SamplerKind::Gibbs => Kernel::Gibbs(Gibbs::new(problem)),
            SamplerKind::HitAndRun => Kernel::HitAndRun(HitAndRun::new(problem)),
            SamplerKind::Hmc => Kernel::Hmc(Hmc::new(problem, hmc_travel_time)?),
        })
    }

    /// One transition in place.
    pub fn step<R: Rng + ?Sized>(&self, y: &mut DVector<f64>, rng: &mut R) -> Result<()> {
        match self {
            Kernel::Gibbs(k) => k.step(y.as_mut_slice(), rng),
            Kernel::HitAndRun(k) => k.step(y.as_mut_slice(), rng),
            Kernel::Hmc(k) => k.step(y, rng),
        }
    }

    pub fn advance<R: Rng + ?Sized>(&self, state: &mut ChainState, rng: &mut R) -> Result<()> {
        self.step(&mut state.current, rng)?;
        state.steps_taken += 1;
        if state.current.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("chain state"));
        }
        Ok(())
    }
}

/// One systematic-scan Gibbs sweep.
pub fn gibbs_step<R: Rng + ?Sized>(
    state: &mut ChainState,
    problem: &TailProblem,
    rng: &mut R,
) -> Result<()> {
    Kernel::Gibbs(Gibbs::new(problem)).advance(state, rng)
}

/// One hit-and-run move along a uniformly random direction.
pub fn hit_and_run_step<R: Rng + ?Sized>(
    state: &mut ChainState,
    problem: &TailProblem,
    rng: &mut R,
) -> Result<()> {
    Kernel::HitAndRun(HitAndRun::new(problem)).advance(state, rng)
}

/// One exact-HMC trajectory of length `travel_time`.
pub fn hmc_step<R: Rng + ?Sized>(
    state: &mut ChainState,
    problem: &TailProblem,
    rng: &mut R,
    travel_time: f64,
) -> Result<()> {
    Kernel::Hmc(Hmc::new(problem, travel_time)?).advance(state, rng)
}

/// Runs `burn_in + n_samples` transitions from the feasible point and returns
/// the last `n_samples` states as rows of an `n_samples x d` matrix.
///
/// Draws come from the chain stream of `config.seed`.
pub fn run_chain(problem: &TailProblem, config: &ChainConfig) -> Result<DMatrix<f64>> {
    let mut rng = stream_rng(config.seed, CHAIN_STREAM);
    run_chain_with_rng(problem, config, &mut rng)
}

pub fn run_chain_with_rng<R: Rng + ?Sized>(
    problem: &TailProblem,
    config: &ChainConfig,
    rng: &mut R,
) -> Result<DMatrix<f64>> {
    config.validate()?;
    let kind = config.sampler.unwrap_or_else(|| problem.default_sampler());
    let kernel = Kernel::new(problem, kind, config.hmc_travel_time)?;
    let mut state = ChainState::new(problem);
    if !problem.contains(state.current.as_slice()) {
        return Err(Error::InvalidArgument(
            "feasible point is outside the region".into(),
        ));
    }
    for _ in 0..config.burn_in {
        kernel.advance(&mut state, rng)?;
    }
    let d = problem.dim();
    let mut out = DMatrix::zeros(config.n_samples, d);
    for i in 0..config.n_samples {
        kernel.advance(&mut state, rng)?;
        if !problem.contains(state.current.as_slice()) {
            return Err(Error::Internal(format!(
                "{kind} left the region at step {}",
                state.steps_taken
            )));
        }
        for j in 0..d {
            out[(i, j)] = state.current[j];
        }
    }
    Ok(out)
}

/// Conditional mean and standard deviation of coordinate `i` given the rest.
fn conditional_normal(theta0: &crate::model::MvnParams, y: &[f64], i: usize) -> (f64, f64) {
    if theta0.is_standard() {
        return (0.0, 1.0);
    }
    let p = theta0.precision();
    let mu = theta0.mean();
    let pii = p[(i, i)];
    let mut acc = 0.0;
    for (j, &yj) in y.iter().enumerate() {
        if j != i {
            acc += p[(i, j)] * (yj - mu[j]);
        }
    }
    (mu[i] - acc / pii, 1.0 / pii.sqrt())
}
