use rand::Rng;

use super::{conditional_normal, MAX_REDRAWS};
use crate::error::{Error, Result};
use crate::model::{Constraint, TailProblem};
use crate::specialfn::{sample_trunc_normal, TruncSet};

/// Systematic-scan Gibbs sampler. Each coordinate is redrawn from its exact
/// conditional: a truncated univariate normal on the slice of the region.
#[derive(Debug, Clone)]
pub struct Gibbs {
    problem: TailProblem,
}

impl Gibbs {
    pub fn new(problem: &TailProblem) -> Self {
        Self {
            problem: problem.clone(),
        }
    }

    pub fn step<R: Rng + ?Sized>(&self, y: &mut [f64], rng: &mut R) -> Result<()> {
        let theta0 = self.problem.theta0();
        let constraint = self.problem.constraint();
        for i in 0..y.len() {
            let support = conditional_support(&self.problem, y, i)?;
            let (m, s) = conditional_normal(theta0, y, i);
            let z_set = support.standardize(m, s);
            if let TruncSet::Interval { lo, hi } = z_set {
                // interval narrower than the rounding of its standardization
                if !(lo < hi) {
                    continue;
                }
            }
            let old = y[i];
            let mut accepted = false;
            for _ in 0..MAX_REDRAWS {
                y[i] = m + s * sample_trunc_normal(z_set, rng)?;
                if constraint.contains(y) {
                    accepted = true;
                    break;
                }
            }
            if !accepted {
                y[i] = old;
            }
        }
        Ok(())
    }
}

/// Set of values `t` such that `y` with `y[i] = t` stays in the region, in
/// the original coordinates.
pub fn conditional_support(problem: &TailProblem, y: &[f64], i: usize) -> Result<TruncSet> {
    match problem.constraint() {
        Constraint::QuadExterior(c) => {
            let w = c.unit_weights();
            let rest: f64 = y
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .map(|(j, v)| w[j] * v * v)
                .sum();
            let r = 1.0 - rest;
            if r <= 0.0 {
                Ok(TruncSet::full())
            } else {
                Ok(TruncSet::two_tail((r / w[i]).sqrt()))
            }
        }
        Constraint::LinearSystem(c) => {
            let cm = c.matrix();
            let mut lo = f64::NEG_INFINITY;
            let mut hi = f64::INFINITY;
            for r in 0..cm.nrows() {
                let cri = cm[(r, i)];
                let s: f64 = y
                    .iter()
                    .enumerate()
                    .filter(|&(j, _)| j != i)
                    .map(|(j, v)| cm[(r, j)] * v)
                    .sum();
                if cri > 0.0 {
                    lo = lo.max(-s / cri);
                } else if cri < 0.0 {
                    hi = hi.min(-s / cri);
                } else if s <= 0.0 {
                    return Err(Error::Internal(format!(
                        "row {r} is violated independently of coordinate {i}"
                    )));
                }
            }
            if !(lo < hi) {
                return Err(Error::Internal(format!(
                    "empty conditional support for coordinate {i}"
                )));
            }
            Ok(TruncSet::interval(lo, hi))
        }
    }
}
