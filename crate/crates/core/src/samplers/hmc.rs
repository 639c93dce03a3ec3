use std::f64::consts::{PI, TAU};

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::model::{Constraint, MvnParams, TailProblem};

/// Reflection budget per trajectory.
pub const MAX_REFLECTIONS: usize = 1000;

const GRID_STEP: f64 = PI / 64.0;
const ROOT_TOL: f64 = 1e-12;
const MIN_HIT_TIME: f64 = 1e-12;

/// Exact Hamiltonian Monte Carlo for a truncated Gaussian.
///
/// In whitened coordinates `z` the Hamiltonian flow is `z(t) = a cos t + b sin t`,
/// so the only numerical work is locating wall hits. The momentum is
/// reflected about the wall normal at each hit.
#[derive(Debug, Clone)]
pub struct Hmc {
    theta0: MvnParams,
    constraint: Constraint,
    travel_time: f64,
    walls: Walls,
    centrally_symmetric: bool,
}

#[derive(Debug, Clone)]
enum Walls {
    /// `F z + g > 0` row by row.
    Linear { f: DMatrix<f64>, g: DVector<f64> },
    /// `z' A z + 2 h' z + c >= 1`; `diag` is set when `A` is diagonal and
    /// `h = 0`.
    Quad {
        a: DMatrix<f64>,
        diag: Option<DVector<f64>>,
        h: DVector<f64>,
        c: f64,
    },
}

/// Endpoint of a deterministic trajectory in whitened coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct HmcPath {
    pub position: DVector<f64>,
    pub velocity: DVector<f64>,
    pub reflections: usize,
}

impl Hmc {
    pub fn new(problem: &TailProblem, travel_time: f64) -> Result<Self> {
        if !(travel_time > 0.0) || !travel_time.is_finite() {
            return Err(Error::InvalidArgument(
                "travel time must be positive".into(),
            ));
        }
        let theta0 = problem.theta0().clone();
        let l = theta0.chol();
        let mu = theta0.mean();
        let (walls, centrally_symmetric) = match problem.constraint() {
            Constraint::LinearSystem(c) => {
                let f = c.matrix() * l;
                let g = c.matrix() * mu;
                (Walls::Linear { f, g }, false)
            }
            Constraint::QuadExterior(c) => {
                let w = c.unit_weights();
                let zero_mean = mu.iter().all(|&v| v == 0.0);
                if theta0.is_standard() {
                    let d = w.len();
                    let a = DMatrix::from_diagonal(w);
                    (
                        Walls::Quad {
                            a,
                            diag: Some(w.clone()),
                            h: DVector::zeros(d),
                            c: 0.0,
                        },
                        true,
                    )
                } else {
                    let omega = DMatrix::from_diagonal(w);
                    let a = l.transpose() * &omega * l;
                    let h = l.transpose() * (&omega * mu);
                    let c = mu.dot(&(&omega * mu));
                    (
                        Walls::Quad {
                            a,
                            diag: None,
                            h,
                            c,
                        },
                        zero_mean,
                    )
                }
            }
        };
        Ok(Self {
            theta0,
            constraint: problem.constraint().clone(),
            travel_time,
            walls,
            centrally_symmetric,
        })
    }

    pub fn travel_time(&self) -> f64 {
        self.travel_time
    }

    /// One transition: fresh momentum, exact trajectory, then (for centrally
    /// symmetric problems) a random sign flip so that disconnected
    /// components of the region communicate. A trajectory that exceeds
    /// [`MAX_REFLECTIONS`] is rejected and the state is kept.
    pub fn step<R: Rng + ?Sized>(&self, y: &mut DVector<f64>, rng: &mut R) -> Result<()> {
        let z0 = if self.theta0.is_standard() {
            y.clone()
        } else {
            self.theta0.whiten(y.as_slice())
        };
        let p0 = DVector::from_iterator(
            z0.len(),
            (0..z0.len()).map(|_| rng.sample::<f64, _>(StandardNormal)),
        );
        // A trajectory and its time reversal reflect equally often, so
        // rejecting over-budget trajectories keeps the kernel reversible.
        let path = match self.integrate(&z0, &p0, self.travel_time) {
            Ok(path) => path,
            Err(Error::TooManyReflections(_)) => return Ok(()),
            Err(e) => return Err(e),
        };
        let mut next = self.theta0.unwhiten(path.position.as_slice());
        if self.centrally_symmetric && rng.random::<bool>() {
            next.neg_mut();
        }
        if next.iter().all(|v| v.is_finite()) && self.constraint.contains(next.as_slice()) {
            *y = next;
        }
        Ok(())
    }

    /// Follows the reflected trajectory from `(z0, p0)` for `time`.
    pub fn integrate(&self, z0: &DVector<f64>, p0: &DVector<f64>, time: f64) -> Result<HmcPath> {
        let mut a = z0.clone();
        let mut b = p0.clone();
        let mut remaining = time;
        let mut reflections = 0;
        loop {
            match self.first_hit(&a, &b, remaining) {
                None => {
                    let (s, c) = remaining.sin_cos();
                    let position = &a * c + &b * s;
                    let velocity = &b * c - &a * s;
                    return Ok(HmcPath {
                        position,
                        velocity,
                        reflections,
                    });
                }
                Some((t, normal_row)) => {
                    let (s, c) = t.sin_cos();
                    let pos = &a * c + &b * s;
                    let mut vel = &b * c - &a * s;
                    let n = self.normal(&pos, normal_row);
                    let nn = n.norm_squared();
                    if nn > 0.0 {
                        let k = 2.0 * vel.dot(&n) / nn;
                        vel.axpy(-k, &n, 1.0);
                    }
                    a = pos;
                    b = vel;
                    remaining -= t;
                    reflections += 1;
                    if reflections > MAX_REFLECTIONS {
                        return Err(Error::TooManyReflections(MAX_REFLECTIONS));
                    }
                }
            }
        }
    }

    /// Outward-agnostic wall normal at `z`; only its direction matters.
    fn normal(&self, z: &DVector<f64>, row: usize) -> DVector<f64> {
        match &self.walls {
            Walls::Linear { f, .. } => f.row(row).transpose(),
            Walls::Quad { a, diag, h, .. } => match diag {
                Some(w) => z.component_mul(w),
                None => a * z + h,
            },
        }
    }

    fn first_hit(
        &self,
        a: &DVector<f64>,
        b: &DVector<f64>,
        remaining: f64,
    ) -> Option<(f64, usize)> {
        match &self.walls {
            Walls::Linear { f, g } => {
                let fa = f * a;
                let fb = f * b;
                let mut best: Option<(f64, usize)> = None;
                for r in 0..f.nrows() {
                    if let Some(t) = linear_hit_time(fa[r], fb[r], g[r]) {
                        if t > MIN_HIT_TIME && t < remaining && best.is_none_or(|(bt, _)| t < bt) {
                            best = Some((t, r));
                        }
                    }
                }
                best
            }
            Walls::Quad { a: am, diag, h, c } => {
                let (aa, bb, ab) = match diag {
                    Some(w) => {
                        let mut s = (0.0, 0.0, 0.0);
                        for i in 0..a.len() {
                            s.0 += w[i] * a[i] * a[i];
                            s.1 += w[i] * b[i] * b[i];
                            s.2 += w[i] * a[i] * b[i];
                        }
                        s
                    }
                    None => {
                        let am_a = am * a;
                        (a.dot(&am_a), b.dot(&(am * b)), b.dot(&am_a))
                    }
                };
                let trig = QuadTrig::new(aa, bb, ab, h.dot(a), h.dot(b), *c);
                trig.first_exit(remaining).map(|t| (t, 0))
            }
        }
    }
}

/// Earliest `t` in `[0, 2 pi)` where `u cos t + v sin t + g` crosses zero going
/// down, if any.
fn linear_hit_time(u: f64, v: f64, g: f64) -> Option<f64> {
    let r = u.hypot(v);
    if r == 0.0 || r < g.abs() {
        return None;
    }
    let phi = v.atan2(u);
    let t = (phi + (-g / r).clamp(-1.0, 1.0).acos()).rem_euclid(TAU);
    Some(t)
}

/// `f(t) = k0 + k1 cos t + k2 sin t + k3 cos 2t + k4 sin 2t`, the unit form
/// minus one along the trajectory.
#[derive(Debug, Clone, Copy)]
struct QuadTrig {
    k: [f64; 5],
}

impl QuadTrig {
    fn new(aa: f64, bb: f64, ab: f64, ha: f64, hb: f64, c: f64) -> Self {
        Self {
            k: [
                c - 1.0 + 0.5 * (aa + bb),
                2.0 * ha,
                2.0 * hb,
                0.5 * (aa - bb),
                ab,
            ],
        }
    }

    fn value(&self, t: f64) -> f64 {
        let (s, c) = t.sin_cos();
        let (s2, c2) = (2.0 * t).sin_cos();
        self.k[0] + self.k[1] * c + self.k[2] * s + self.k[3] * c2 + self.k[4] * s2
    }

    fn deriv(&self, t: f64) -> f64 {
        let (s, c) = t.sin_cos();
        let (s2, c2) = (2.0 * t).sin_cos();
        -self.k[1] * s + self.k[2] * c - 2.0 * self.k[3] * s2 + 2.0 * self.k[4] * c2
    }

    /// Earliest exit time in `(0, remaining)`: grid scan for sign changes
    /// and for interior minima that dip below zero, then bisection. Returns
    /// the inside endpoint of the final bracket.
    fn first_exit(&self, remaining: f64) -> Option<f64> {
        let mut t_prev = 0.0;
        let mut d_prev = self.deriv(0.0);
        let mut j = 1;
        while t_prev < remaining {
            let t = (j as f64 * GRID_STEP).min(remaining);
            let f = self.value(t);
            let d = self.deriv(t);
            if f < 0.0 {
                return self.bisect(t_prev, t);
            }
            if d_prev < 0.0 && d > 0.0 {
                let tm = self.argmin(t_prev, t);
                if self.value(tm) < 0.0 {
                    return self.bisect(t_prev, tm);
                }
            }
            t_prev = t;
            d_prev = d;
            j += 1;
        }
        None
    }

    fn bisect(&self, mut lo: f64, mut hi: f64) -> Option<f64> {
        while hi - lo > ROOT_TOL {
            let mid = 0.5 * (lo + hi);
            if self.value(mid) >= 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        if lo <= MIN_HIT_TIME {
            // Exit immediately after a reflection: report the outside end so
            // progress is made; the reflection fixes the direction.
            return Some(hi.max(2.0 * MIN_HIT_TIME));
        }
        Some(lo)
    }

    fn argmin(&self, mut lo: f64, mut hi: f64) -> f64 {
        while hi - lo > ROOT_TOL {
            let mid = 0.5 * (lo + hi);
            if self.deriv(mid) < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }
}
