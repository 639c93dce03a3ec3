use rand::Rng;
use rand_distr::StandardNormal;

use super::MAX_REDRAWS;
use crate::error::Result;
use crate::model::{Constraint, TailProblem};
use crate::specialfn::{sample_trunc_normal, TruncSet};

/// Hit-and-run: pick a uniform direction, then draw exactly from the base
/// density restricted to the feasible part of that line.
#[derive(Debug, Clone)]
pub struct HitAndRun {
    problem: TailProblem,
}

impl HitAndRun {
    pub fn new(problem: &TailProblem) -> Self {
        Self {
            problem: problem.clone(),
        }
    }

    pub fn step<R: Rng + ?Sized>(&self, y: &mut [f64], rng: &mut R) -> Result<()> {
        let d = y.len();
        let u = random_direction(d, rng);
        let theta0 = self.problem.theta0();

        // Slice of the base density along y + t u is N(m, s^2).
        let (m, s) = if theta0.is_standard() {
            let uy: f64 = u.iter().zip(y.iter()).map(|(a, b)| a * b).sum();
            (-uy, 1.0)
        } else {
            let p = theta0.precision();
            let mu = theta0.mean();
            let mut upu = 0.0;
            let mut upr = 0.0;
            for i in 0..d {
                for j in 0..d {
                    upu += u[i] * p[(i, j)] * u[j];
                    upr += u[i] * p[(i, j)] * (y[j] - mu[j]);
                }
            }
            (-upr / upu, 1.0 / upu.sqrt())
        };

        let support = line_support(&self.problem, y, &u);
        let z_set = support.standardize(m, s);
        if let TruncSet::Interval { lo, hi } = z_set {
            if !(lo < hi) {
                return Ok(());
            }
        }
        let constraint = self.problem.constraint();
        let mut cand = y.to_vec();
        for _ in 0..MAX_REDRAWS {
            let t = m + s * sample_trunc_normal(z_set, rng)?;
            for i in 0..d {
                cand[i] = y[i] + t * u[i];
            }
            if constraint.contains(&cand) {
                y.copy_from_slice(&cand);
                return Ok(());
            }
        }
        Ok(())
    }
}

fn random_direction<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-150 {
            return v.into_iter().map(|x| x / norm).collect();
        }
    }
}

/// Set of `t` with `y + t u` in the region.
pub fn line_support(problem: &TailProblem, y: &[f64], u: &[f64]) -> TruncSet {
    match problem.constraint() {
        Constraint::QuadExterior(c) => {
            let w = c.unit_weights();
            let (mut a, mut b, mut c0) = (0.0, 0.0, -1.0);
            for i in 0..y.len() {
                a += w[i] * u[i] * u[i];
                b += w[i] * y[i] * u[i];
                c0 += w[i] * y[i] * y[i];
            }
            // a t^2 + 2 b t + c0 >= 0
            let disc = b * b - a * c0;
            if disc <= 0.0 || a <= 0.0 {
                return TruncSet::full();
            }
            let root = -(b + b.signum() * disc.sqrt());
            if root == 0.0 {
                return TruncSet::full();
            }
            let r1 = root / a;
            let r2 = c0 / root;
            TruncSet::Exterior {
                lo: r1.min(r2),
                hi: r1.max(r2),
            }
        }
        Constraint::LinearSystem(c) => {
            let cm = c.matrix();
            let mut lo = f64::NEG_INFINITY;
            let mut hi = f64::INFINITY;
            for r in 0..cm.nrows() {
                let mut cu = 0.0;
                let mut cy = 0.0;
                for j in 0..y.len() {
                    cu += cm[(r, j)] * u[j];
                    cy += cm[(r, j)] * y[j];
                }
                if cu > 0.0 {
                    lo = lo.max(-cy / cu);
                } else if cu < 0.0 {
                    hi = hi.min(-cy / cu);
                }
            }
            TruncSet::interval(lo, hi)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{LinearSystem, MvnParams};
    use nalgebra::{DMatrix, DVector};

    #[test]
    fn line_supports_from_examples() {
        let c = LinearSystem::new(
            DMatrix::from_row_slice(1, 2, &[1.0, 0.0]),
            DVector::from_vec(vec![1.0, 0.0]),
        )
        .unwrap();
        let p = TailProblem::new(MvnParams::standard(2), Constraint::LinearSystem(c)).unwrap();
        assert_eq!(
            line_support(&p, &[1.0, 0.0], &[1.0, 0.0]),
            TruncSet::interval(-1.0, f64::INFINITY)
        );

        let p = TailProblem::quadform(vec![1.0, 1.0], 4.0).unwrap();
        match line_support(&p, &[3.0, 0.0], &[1.0, 0.0]) {
            TruncSet::Exterior { lo, hi } => {
                assert!((lo + 5.0).abs() < 1e-12);
                assert!((hi + 1.0).abs() < 1e-12);
            }
            other => panic!("unexpected {other:?}"),
        }
        assert_eq!(line_support(&p, &[0.0, 3.0], &[1.0, 0.0]), TruncSet::full());
    }
}
