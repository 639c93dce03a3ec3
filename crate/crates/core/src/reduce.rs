//! Reductions from applied statistics to canonical tail problems.
//!
//! A Gram-matrix score statistic `r' Z W Z' r` with `r ~ N(0, I)` has the law
//! of `sum_i lambda_i chi^2_1`, where the `lambda_i` are the positive
//! eigenvalues of `Z W Z'`. A ratio of two normal group means exceeding `q`
//! is a pair of half-plane constraints on a bivariate normal.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};
use crate::model::{Constraint, LinearSystem, MvnParams, TailProblem};

/// Eigenvalues below this fraction of the largest are treated as zero.
pub const EIGEN_DROP: f64 = 1e-12;

/// Eigenvalues (descending, all positive) and the observed statistic.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadformInputs {
    pub lambdas: Vec<f64>,
    pub q_obs: f64,
}

impl QuadformInputs {
    pub fn problem(&self) -> Result<TailProblem> {
        TailProblem::quadform(self.lambdas.clone(), self.q_obs)
    }
}

/// Builds the quadratic-form problem for `Q = r' Z W Z' r`, divided by `n`
/// when `scale_by_n` is set (the divisor applies to both the statistic and the
/// eigenvalues, so the null law is unchanged).
///
/// `features` is `n x k`, `residual` has length `n`, `weights` (if given) has
/// length `k`. The eigen-decomposition is done on whichever of the `k x k` or
/// `n x n` Gram matrices is smaller.
pub fn quadform_from_matrices(
    features: &DMatrix<f64>,
    residual: &DVector<f64>,
    weights: Option<&DVector<f64>>,
    scale_by_n: bool,
) -> Result<QuadformInputs> {
    let (n, k) = features.shape();
    if residual.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: residual.len(),
        });
    }
    if n == 0 || k == 0 {
        return Err(Error::DegenerateStatistic("empty feature matrix".into()));
    }
    if features
        .iter()
        .chain(residual.iter())
        .any(|v| !v.is_finite())
    {
        return Err(Error::NonFinite("feature matrix or residual"));
    }
    let w = match weights {
        Some(w) => {
            if w.len() != k {
                return Err(Error::DimensionMismatch {
                    expected: k,
                    got: w.len(),
                });
            }
            if w.iter().any(|&v| !(v > 0.0) || !v.is_finite()) {
                return Err(Error::InvalidArgument("weights must be positive".into()));
            }
            w.clone()
        }
        None => DVector::from_element(k, 1.0),
    };
    let divisor = if scale_by_n { n as f64 } else { 1.0 };

    let zr = features.tr_mul(residual);
    let q_obs = zr
        .iter()
        .zip(w.iter())
        .map(|(a, wi)| wi * a * a)
        .sum::<f64>()
        / divisor;

    let gram = if k <= n {
        let sw = w.map(f64::sqrt);
        let zs = features * DMatrix::from_diagonal(&sw);
        zs.tr_mul(&zs)
    } else {
        features * DMatrix::from_diagonal(&w) * features.transpose()
    };
    let eig = SymmetricEigen::new(gram).eigenvalues;
    let max = eig.iter().copied().fold(0.0, f64::max);
    if !(max > 0.0) {
        return Err(Error::DegenerateStatistic(
            "all eigenvalues are zero".into(),
        ));
    }
    let mut lambdas: Vec<f64> = eig
        .iter()
        .copied()
        .filter(|&l| l > EIGEN_DROP * max)
        .map(|l| l / divisor)
        .collect();
    lambdas.sort_by(|a, b| b.total_cmp(a));
    Ok(QuadformInputs { lambdas, q_obs })
}

/// Problems for `Pr(y1 / y2 >= q)` with `y1 ~ N(mu, sigma^2/n1)` and
/// `y2 ~ N(mu, sigma^2/n2)` independent.
///
/// The first problem is the positive orthant `{y2 > 0, y1 - q y2 > 0}`. With
/// `both_orthants` the mirrored set `{y2 < 0, y1 - q y2 < 0}` is added; the
/// tail probability is then the sum of the two estimates.
pub fn ratio_to_linear(
    q_ratio: f64,
    n1: usize,
    n2: usize,
    mu: f64,
    sigma: f64,
    both_orthants: bool,
) -> Result<Vec<TailProblem>> {
    if !q_ratio.is_finite() || !mu.is_finite() {
        return Err(Error::NonFinite("ratio threshold or mean"));
    }
    if !(sigma > 0.0) || !sigma.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "sigma must be positive, got {sigma}"
        )));
    }
    if n1 == 0 || n2 == 0 {
        return Err(Error::InvalidArgument(
            "group sizes must be at least 1".into(),
        ));
    }
    let s1 = sigma / (n1 as f64).sqrt();
    let s2 = sigma / (n2 as f64).sqrt();
    let theta0 = MvnParams::diagonal(DVector::from_vec(vec![mu, mu]), &[s1 * s1, s2 * s2])?;

    let c1 = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, -q_ratio]);
    let start = if q_ratio > 0.0 {
        DVector::from_vec(vec![s1, s1 / (2.0 * q_ratio)])
    } else {
        DVector::from_vec(vec![s1, s2])
    };
    let mut out = vec![TailProblem::new(
        theta0.clone(),
        Constraint::LinearSystem(LinearSystem::new(c1.clone(), start.clone())?),
    )?];
    if both_orthants {
        out.push(TailProblem::new(
            theta0,
            Constraint::LinearSystem(LinearSystem::new(-c1, -start)?),
        )?);
    }
    Ok(out)
}

/// Grand mean and pooled within-group standard deviation of two samples.
pub fn pooled_moments(group1: &[f64], group2: &[f64]) -> Result<(f64, f64)> {
    let (n1, n2) = (group1.len(), group2.len());
    if n1 == 0 || n2 == 0 || n1 + n2 < 3 {
        return Err(Error::InvalidArgument(
            "need two nonempty groups with at least 3 values".into(),
        ));
    }
    let mean = |g: &[f64]| g.iter().sum::<f64>() / g.len() as f64;
    let (m1, m2) = (mean(group1), mean(group2));
    let ss = group1.iter().map(|x| (x - m1).powi(2)).sum::<f64>()
        + group2.iter().map(|x| (x - m2).powi(2)).sum::<f64>();
    let grand = (m1 * n1 as f64 + m2 * n2 as f64) / (n1 + n2) as f64;
    Ok((grand, (ss / (n1 + n2 - 2) as f64).sqrt()))
}
