//! Problem and result types.
//!
//! A [`TailProblem`] pairs a base Gaussian law with a [`Constraint`] describing
//! the rare-event region. Everything downstream (samplers, estimators,
//! reductions) speaks in terms of these types.

use std::f64::consts::LN_10;
use std::fmt;
use std::str::FromStr;

use nalgebra::{Cholesky, DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const LN_2PI: f64 = 1.837_877_066_409_345_5;

/// Relative size of the diagonal ridge used to rescue near-singular
/// covariances.
pub const RIDGE_FACTOR: f64 = 1e-10;

/// Multivariate normal parameters with the Cholesky factor and log-determinant
/// cached at construction.
#[derive(Debug, Clone, PartialEq)]
pub struct MvnParams {
    mean: DVector<f64>,
    cov: DMatrix<f64>,
    chol: DMatrix<f64>,
    precision: DMatrix<f64>,
    log_det: f64,
    standard: bool,
}

impl MvnParams {
    /// Builds the law `N(mean, cov)`.
    ///
    /// If the plain Cholesky factorization fails, a ridge of
    /// `1e-10 * trace / d` is added to the diagonal and the factorization is
    /// retried once; the stored covariance then includes the ridge.
    pub fn new(mean: DVector<f64>, cov: DMatrix<f64>) -> Result<Self> {
        let d = mean.len();
        if d == 0 {
            return Err(Error::InvalidArgument(
                "zero-dimensional distribution".into(),
            ));
        }
        if cov.nrows() != d || cov.ncols() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: cov.nrows(),
            });
        }
        if mean.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("mean"));
        }
        if cov.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("covariance"));
        }
        let scale = cov.amax();
        for i in 0..d {
            for j in (i + 1)..d {
                if (cov[(i, j)] - cov[(j, i)]).abs() > 1e-12 * scale {
                    return Err(Error::NotSymmetric);
                }
            }
        }
        let mut cov = (&cov + cov.transpose()) * 0.5;

        let chol = match Cholesky::new(cov.clone()) {
            Some(c) => c,
            None => {
                let ridge = RIDGE_FACTOR * cov.trace() / d as f64;
                if !(ridge > 0.0) {
                    return Err(Error::NotPositiveDefinite);
                }
                for i in 0..d {
                    cov[(i, i)] += ridge;
                }
                Cholesky::new(cov.clone()).ok_or(Error::NotPositiveDefinite)?
            }
        };
        let l = chol.l();
        let log_det = 2.0 * l.diagonal().iter().map(|v| v.ln()).sum::<f64>();
        if !log_det.is_finite() {
            return Err(Error::NotPositiveDefinite);
        }
        let precision = chol.inverse();
        let standard = mean.iter().all(|&v| v == 0.0) && cov == DMatrix::identity(d, d);
        Ok(Self {
            mean,
            cov,
            chol: l,
            precision,
            log_det,
            standard,
        })
    }

    /// The standard normal law on `R^d`.
    pub fn standard(d: usize) -> Self {
        Self {
            mean: DVector::zeros(d),
            cov: DMatrix::identity(d, d),
            chol: DMatrix::identity(d, d),
            precision: DMatrix::identity(d, d),
            log_det: 0.0,
            standard: true,
        }
    }

    /// Independent coordinates with the given means and variances.
    pub fn diagonal(mean: DVector<f64>, variances: &[f64]) -> Result<Self> {
        if variances.len() != mean.len() {
            return Err(Error::DimensionMismatch {
                expected: mean.len(),
                got: variances.len(),
            });
        }
        if variances.iter().any(|&v| !(v > 0.0) || !v.is_finite()) {
            return Err(Error::InvalidArgument(
                "variances must be positive and finite".into(),
            ));
        }
        Self::new(
            mean,
            DMatrix::from_diagonal(&DVector::from_column_slice(variances)),
        )
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    pub fn cov(&self) -> &DMatrix<f64> {
        &self.cov
    }

    /// Lower-triangular factor `L` with `L L^T = cov`.
    pub fn chol(&self) -> &DMatrix<f64> {
        &self.chol
    }

    pub fn precision(&self) -> &DMatrix<f64> {
        &self.precision
    }

    pub fn log_det(&self) -> f64 {
        self.log_det
    }

    /// True when this is exactly `N(0, I)`; lets samplers skip the transforms.
    pub fn is_standard(&self) -> bool {
        self.standard
    }

    /// `ln f(y)`.
    pub fn log_density(&self, y: &DVector<f64>) -> Result<f64> {
        self.check_dim(y.len())?;
        Ok(self.log_density_slice(y.as_slice()))
    }

    pub(crate) fn log_density_slice(&self, y: &[f64]) -> f64 {
        let d = self.dim();
        let maha = if self.standard {
            y.iter().map(|v| v * v).sum::<f64>()
        } else {
            let mut z = vec![0.0; d];
            self.forward_solve(y, &mut z);
            z.iter().map(|v| v * v).sum::<f64>()
        };
        -0.5 * (d as f64 * LN_2PI + self.log_det + maha)
    }

    /// `z = L^{-1} (y - mean)`.
    pub fn whiten(&self, y: &[f64]) -> DVector<f64> {
        let mut z = vec![0.0; self.dim()];
        self.forward_solve(y, &mut z);
        DVector::from_vec(z)
    }

    /// `y = mean + L z`.
    #[allow(clippy::needless_range_loop)]
    pub fn unwhiten(&self, z: &[f64]) -> DVector<f64> {
        if self.standard {
            return DVector::from_column_slice(z);
        }
        let d = self.dim();
        let mut y = self.mean.clone();
        for j in 0..d {
            let zj = z[j];
            if zj == 0.0 {
                continue;
            }
            for i in j..d {
                y[i] += self.chol[(i, j)] * zj;
            }
        }
        y
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> DVector<f64> {
        let z: Vec<f64> = (0..self.dim())
            .map(|_| rng.sample(StandardNormal))
            .collect();
        self.unwhiten(&z)
    }

    #[allow(clippy::needless_range_loop)]
    fn forward_solve(&self, y: &[f64], z: &mut [f64]) {
        let d = self.dim();
        for i in 0..d {
            let mut acc = y[i] - self.mean[i];
            for j in 0..i {
                acc -= self.chol[(i, j)] * z[j];
            }
            z[i] = acc / self.chol[(i, i)];
        }
    }

    fn check_dim(&self, got: usize) -> Result<()> {
        if got != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got,
            });
        }
        Ok(())
    }
}

/// `{y : sum_i lambda_i y_i^2 >= q}`.
///
/// Internally the region is held in unit form `sum_i w_i y_i^2 >= 1` with
/// `w = lambda / q`, so problems that differ only by a joint rescaling of
/// `lambda` and `q` share one representation.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadExterior {
    lambdas: DVector<f64>,
    q: f64,
    unit_weights: DVector<f64>,
    feasible: DVector<f64>,
}

impl QuadExterior {
    pub fn new(lambdas: Vec<f64>, q: f64) -> Result<Self> {
        if lambdas.is_empty() {
            return Err(Error::InvalidArgument("no eigenvalues".into()));
        }
        if lambdas.iter().any(|&l| !(l > 0.0) || !l.is_finite()) {
            return Err(Error::InvalidArgument(
                "eigenvalues must be positive and finite".into(),
            ));
        }
        if !(q > 0.0) || !q.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "threshold must be positive, got {q}"
            )));
        }
        let lambdas = DVector::from_vec(lambdas);
        let unit_weights = lambdas.map(|l| l / q);
        // Highest-density boundary point: along the axis with the largest weight.
        let k = unit_weights.imax();
        let mut feasible = DVector::zeros(lambdas.len());
        feasible[k] = 1.01 / unit_weights[k].sqrt();
        Ok(Self {
            lambdas,
            q,
            unit_weights,
            feasible,
        })
    }

    pub fn with_feasible_point(mut self, point: DVector<f64>) -> Result<Self> {
        if point.len() != self.lambdas.len() {
            return Err(Error::DimensionMismatch {
                expected: self.lambdas.len(),
                got: point.len(),
            });
        }
        if !(self.unit_form(point.as_slice()) > 1.0) {
            return Err(Error::InvalidArgument(
                "feasible point is not strictly inside the region".into(),
            ));
        }
        self.feasible = point;
        Ok(self)
    }

    pub fn lambdas(&self) -> &DVector<f64> {
        &self.lambdas
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    /// `lambda / q`.
    pub fn unit_weights(&self) -> &DVector<f64> {
        &self.unit_weights
    }

    pub fn dim(&self) -> usize {
        self.lambdas.len()
    }

    /// `sum_i lambda_i y_i^2`.
    pub fn statistic(&self, y: &[f64]) -> f64 {
        self.lambdas.iter().zip(y).map(|(l, v)| l * v * v).sum()
    }

    /// `sum_i (lambda_i / q) y_i^2`; the region is where this is at least 1.
    pub fn unit_form(&self, y: &[f64]) -> f64 {
        self.unit_weights
            .iter()
            .zip(y)
            .map(|(w, v)| w * v * v)
            .sum()
    }
}

/// `{y : (C y)_i > 0 for every row i}`. A matrix with no rows is the whole
/// space.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearSystem {
    c: DMatrix<f64>,
    feasible: DVector<f64>,
}

impl LinearSystem {
    pub fn new(c: DMatrix<f64>, feasible_point: DVector<f64>) -> Result<Self> {
        if c.ncols() != feasible_point.len() {
            return Err(Error::DimensionMismatch {
                expected: c.ncols(),
                got: feasible_point.len(),
            });
        }
        if c.ncols() == 0 {
            return Err(Error::InvalidArgument("zero-dimensional constraint".into()));
        }
        if c.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("constraint matrix"));
        }
        let sys = Self {
            c,
            feasible: feasible_point,
        };
        if !sys.contains(sys.feasible.as_slice()) {
            return Err(Error::InvalidArgument(
                "feasible point violates C y > 0".into(),
            ));
        }
        Ok(sys)
    }

    pub fn whole_space(d: usize) -> Self {
        Self {
            c: DMatrix::zeros(0, d),
            feasible: DVector::zeros(d),
        }
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.c
    }

    pub fn dim(&self) -> usize {
        self.c.ncols()
    }

    /// `min_i (C y)_i`, or `+inf` when there are no rows.
    pub fn margin(&self, y: &[f64]) -> f64 {
        let mut best = f64::INFINITY;
        for r in 0..self.c.nrows() {
            let mut acc = 0.0;
            for (j, v) in y.iter().enumerate() {
                acc += self.c[(r, j)] * v;
            }
            best = best.min(acc);
        }
        best
    }

    pub fn contains(&self, y: &[f64]) -> bool {
        self.margin(y) > 0.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Constraint {
    QuadExterior(QuadExterior),
    LinearSystem(LinearSystem),
}

impl Constraint {
    pub fn dim(&self) -> usize {
        match self {
            Constraint::QuadExterior(c) => c.dim(),
            Constraint::LinearSystem(c) => c.dim(),
        }
    }

    pub fn feasible_point(&self) -> &DVector<f64> {
        match self {
            Constraint::QuadExterior(c) => &c.feasible,
            Constraint::LinearSystem(c) => &c.feasible,
        }
    }

    pub fn contains(&self, y: &[f64]) -> bool {
        match self {
            Constraint::QuadExterior(c) => c.unit_form(y) >= 1.0,
            Constraint::LinearSystem(c) => c.contains(y),
        }
    }

    /// The reported statistic: `sum lambda y^2` or `min (C y)`.
    pub fn statistic(&self, y: &[f64]) -> f64 {
        match self {
            Constraint::QuadExterior(c) => c.statistic(y),
            Constraint::LinearSystem(c) => c.margin(y),
        }
    }

    /// Scale-free score whose event level is 0: `sum w y^2 - 1` or `min (C y)`.
    pub fn score(&self, y: &[f64]) -> f64 {
        match self {
            Constraint::QuadExterior(c) => c.unit_form(y) - 1.0,
            Constraint::LinearSystem(c) => c.margin(y),
        }
    }
}

/// `Pr[Y in region]` for `Y ~ theta0`.
#[derive(Debug, Clone, PartialEq)]
pub struct TailProblem {
    theta0: MvnParams,
    constraint: Constraint,
}

impl TailProblem {
    pub fn new(theta0: MvnParams, constraint: Constraint) -> Result<Self> {
        if theta0.dim() != constraint.dim() {
            return Err(Error::DimensionMismatch {
                expected: theta0.dim(),
                got: constraint.dim(),
            });
        }
        Ok(Self { theta0, constraint })
    }

    /// `Pr[sum lambda_i Y_i^2 >= q]` with `Y ~ N(0, I)`.
    pub fn quadform(lambdas: Vec<f64>, q: f64) -> Result<Self> {
        let c = QuadExterior::new(lambdas, q)?;
        Self::new(MvnParams::standard(c.dim()), Constraint::QuadExterior(c))
    }

    /// `Pr[chi^2_df >= q]`.
    pub fn chisq(df: usize, q: f64) -> Result<Self> {
        Self::quadform(vec![1.0; df], q)
    }

    pub fn theta0(&self) -> &MvnParams {
        &self.theta0
    }

    pub fn constraint(&self) -> &Constraint {
        &self.constraint
    }

    pub fn dim(&self) -> usize {
        self.theta0.dim()
    }

    pub fn statistic(&self, y: &DVector<f64>) -> Result<f64> {
        self.check_dim(y.len())?;
        Ok(self.constraint.statistic(y.as_slice()))
    }

    pub fn contains(&self, y: &[f64]) -> bool {
        self.constraint.contains(y)
    }

    /// Gibbs for polyhedral regions, exact HMC for quadratic ones.
    pub fn default_sampler(&self) -> SamplerKind {
        match self.constraint {
            Constraint::QuadExterior(_) => SamplerKind::Hmc,
            Constraint::LinearSystem(_) => SamplerKind::Gibbs,
        }
    }

    fn check_dim(&self, got: usize) -> Result<()> {
        if got != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got,
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SamplerKind {
    Gibbs,
    HitAndRun,
    Hmc,
}

impl FromStr for SamplerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "gibbs" => Ok(SamplerKind::Gibbs),
            "hitrun" | "hit-and-run" | "hit_and_run" => Ok(SamplerKind::HitAndRun),
            "hmc" => Ok(SamplerKind::Hmc),
            other => Err(Error::InvalidArgument(format!("unknown sampler '{other}'"))),
        }
    }
}

impl fmt::Display for SamplerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SamplerKind::Gibbs => "gibbs",
            SamplerKind::HitAndRun => "hitrun",
            SamplerKind::Hmc => "hmc",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChainConfig {
    pub burn_in: usize,
    pub n_samples: usize,
    /// `None` picks [`TailProblem::default_sampler`].
    pub sampler: Option<SamplerKind>,
    pub seed: u64,
    pub hmc_travel_time: f64,
}

impl Default for ChainConfig {
    fn default() -> Self {
        Self {
            burn_in: 1000,
            n_samples: 10_000,
            sampler: None,
            seed: 0,
            hmc_travel_time: std::f64::consts::FRAC_PI_2,
        }
    }
}

impl ChainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_samples == 0 {
            return Err(Error::InvalidArgument(
                "n_samples must be at least 1".into(),
            ));
        }
        if !(self.hmc_travel_time > 0.0) || !self.hmc_travel_time.is_finite() {
            return Err(Error::InvalidArgument(
                "hmc travel time must be positive".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    McmcCe,
    MultilevelCe,
    BruteMc,
    Imhof,
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "mcmc-ce" => Ok(Method::McmcCe),
            "multilevel-ce" => Ok(Method::MultilevelCe),
            "mc" | "brute-mc" => Ok(Method::BruteMc),
            "imhof" => Ok(Method::Imhof),
            other => Err(Error::InvalidArgument(format!("unknown method '{other}'"))),
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::McmcCe => "mcmc-ce",
            Method::MultilevelCe => "multilevel-ce",
            Method::BruteMc => "mc",
            Method::Imhof => "imhof",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimateStatus {
    Ok,
    /// No proposal draw reached the region; the estimate is `p = 0`.
    Unreliable,
}

/// A tail-probability estimate. `log10_p` is authoritative; `p` underflows to
/// zero below roughly `1e-308`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TailEstimate {
    pub log10_p: f64,
    pub p: f64,
    /// Estimated relative standard error of `p`.
    pub rel_se: f64,
    pub n_proposal_hits: usize,
    pub n_draws: usize,
    pub method: Method,
    pub status: EstimateStatus,
    /// Largest log importance weight among hits, when weights were used.
    pub max_log_weight: Option<f64>,
    /// The fitted proposal for the CE estimators.
    #[serde(skip)]
    pub proposal: Option<MvnParams>,
}

impl TailEstimate {
    pub fn from_ln(ln_p: f64, rel_se: f64, hits: usize, n_draws: usize, method: Method) -> Self {
        let status = if hits == 0 {
            EstimateStatus::Unreliable
        } else {
            EstimateStatus::Ok
        };
        Self {
            log10_p: ln_p / LN_10,
            p: ln_p.exp(),
            rel_se,
            n_proposal_hits: hits,
            n_draws,
            method,
            status,
            max_log_weight: None,
            proposal: None,
        }
    }

    pub fn ln_p(&self) -> f64 {
        self.log10_p * LN_10
    }
}
