//! Estimation of extremely small tail probabilities `Pr[T(Y) >= q]` for
//! quadratic-form and ratio statistics of multivariate normal vectors.
//!
//! The main estimator draws a Markov chain from the base density truncated to
//! the rare-event region, fits a Gaussian proposal to those draws by maximum
//! likelihood (the cross-entropy optimal member of the family), and then runs
//! plain importance sampling with the fitted proposal. All probability
//! arithmetic happens in log space so estimates far below `1e-300` survive.
//!
//! Module map:
//!
//! - [`model`]: distributions, constraints, problems, estimates.
//! - [`specialfn`]: log-space tail functions and truncated-normal draws.
//! - [`samplers`]: Gibbs, hit-and-run and exact HMC chains on the region.
//! - [`ce`]: proposal fitting, importance sampling, the estimators.
//! - [`reduce`]: turning applied statistics into canonical problems.
//! - [`baselines`]: brute-force Monte Carlo and Imhof's integral.

pub mod baselines;
pub mod ce;
pub mod error;
pub mod model;
pub mod reduce;
pub mod rng;
pub mod samplers;
pub mod specialfn;

pub use error::{Error, Result};
pub use model::{
    ChainConfig, Constraint, EstimateStatus, LinearSystem, Method, MvnParams, QuadExterior,
    TailEstimate, TailProblem,
};
pub use samplers::SamplerKind;
