//! Reference estimators: plain Monte Carlo and Imhof's inversion integral.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::ce::pilot_mc;
use crate::error::{Error, Result};
use crate::model::{Method, TailEstimate, TailProblem};

/// Plain Monte Carlo proportion of `m` base draws in the region.
pub fn brute_force_mc<R: Rng + ?Sized>(
    problem: &TailProblem,
    m: usize,
    rng: &mut R,
) -> Result<TailEstimate> {
    pilot_mc(problem, m, rng)
}

/// Two-sided Monte Carlo p-value for the ratio of group means:
/// `2 min(Pr(y1/y2 >= q), Pr(y1/y2 <= q))` estimated from `m` pairs.
pub fn brute_force_two_sided_ratio<R: Rng + ?Sized>(
    q_ratio: f64,
    n1: usize,
    n2: usize,
    mu: f64,
    sigma: f64,
    m: usize,
    rng: &mut R,
) -> Result<TailEstimate> {
    if m == 0 {
        return Err(Error::InvalidArgument("m must be at least 1".into()));
    }
    if !(sigma > 0.0) || n1 == 0 || n2 == 0 {
        return Err(Error::InvalidArgument(
            "need sigma > 0 and positive group sizes".into(),
        ));
    }
    let s1 = sigma / (n1 as f64).sqrt();
    let s2 = sigma / (n2 as f64).sqrt();
    let (mut above, mut below) = (0usize, 0usize);
    for _ in 0..m {
        let y1 = mu + s1 * rng.sample::<f64, _>(StandardNormal);
        let y2 = mu + s2 * rng.sample::<f64, _>(StandardNormal);
        let r = y1 / y2;
        if r >= q_ratio {
            above += 1;
        }
        if r <= q_ratio {
            below += 1;
        }
    }
    let hits = above.min(below);
    let one_sided = hits as f64 / m as f64;
    let p = (2.0 * one_sided).min(1.0);
    let rel_se = if hits > 0 {
        ((1.0 - one_sided) / (m as f64 * one_sided)).sqrt()
    } else {
        f64::NAN
    };
    Ok(TailEstimate::from_ln(
        p.ln(),
        rel_se,
        hits,
        m,
        Method::BruteMc,
    ))
}

/// Panel budget for the oscillatory tail of the Imhof integral.
pub const IMHOF_MAX_PANELS: usize = 200_000;
const QUAD_TOL: f64 = 1e-14;
const EULER_DEPTH: usize = 24;

/// `Pr(sum lambda_i chi^2_1 >= q)` by Imhof's formula
/// `1/2 + (1/pi) int_0^inf sin(theta(u)) / (u rho(u)) du`.
///
/// The integral is split at the point beyond which `theta` decreases
/// monotonically. The head is integrated adaptively; the tail is summed over
/// half-periods between zeros of `sin(theta)` and the alternating partial sums
/// are accelerated by repeated averaging. The result is in linear space, so
/// its absolute error floor (around `1e-15`) makes it useless for tiny `p`.
pub fn imhof(lambdas: &[f64], q: f64) -> Result<f64> {
    if lambdas.is_empty() || lambdas.iter().any(|&l| !(l > 0.0) || !l.is_finite()) {
        return Err(Error::InvalidArgument(
            "eigenvalues must be positive and finite".into(),
        ));
    }
    if !q.is_finite() {
        return Err(Error::NonFinite("threshold"));
    }
    if q <= 0.0 {
        return Ok(1.0);
    }
    let f = Imhof { lambdas, q };
    let u_star = f.turning_point();
    let head = if u_star > 0.0 {
        adaptive_gk(&|u| f.integrand(u), 0.0, u_star, QUAD_TOL, 0)?
    } else {
        0.0
    };

    // zeros of sin(theta) beyond u_star
    let theta_star = f.theta(u_star);
    let mut k = (theta_star / PI).floor();
    if k * PI >= theta_star {
        k -= 1.0;
    }
    let mut lo = u_star;
    let mut partial = head;
    let mut sums: Vec<f64> = Vec::with_capacity(EULER_DEPTH + 1);
    let mut last_acc: Option<f64> = None;
    for panel in 0..IMHOF_MAX_PANELS {
        let hi = f.solve_theta(k * PI, lo);
        partial += adaptive_gk(&|u| f.integrand(u), lo, hi, QUAD_TOL, 0)?;
        sums.push(partial);
        if sums.len() > EULER_DEPTH {
            sums.remove(0);
        }
        if sums.len() == EULER_DEPTH {
            let acc = euler_average(&sums);
            if let Some(prev) = last_acc {
                if (acc - prev).abs() < 1e-15 && panel > 2 * EULER_DEPTH {
                    let p = 0.5 + acc / PI;
                    return if p.is_finite() {
                        Ok(p)
                    } else {
                        Err(Error::NonFinite("imhof result"))
                    };
                }
            }
            last_acc = Some(acc);
        }
        lo = hi;
        k -= 1.0;
    }
    Err(Error::NoConvergence(format!(
        "imhof integral after {IMHOF_MAX_PANELS} panels"
    )))
}

/// Repeated pairwise averaging of consecutive partial sums.
fn euler_average(sums: &[f64]) -> f64 {
    let mut v = sums.to_vec();
    while v.len() > 1 {
        for i in 0..v.len() - 1 {
            v[i] = 0.5 * (v[i] + v[i + 1]);
        }
        v.pop();
    }
    v[0]
}

struct Imhof<'a> {
    lambdas: &'a [f64],
    q: f64,
}

impl Imhof<'_> {
    fn theta(&self, u: f64) -> f64 {
        0.5 * self.lambdas.iter().map(|l| (l * u).atan()).sum::<f64>() - 0.5 * self.q * u
    }

    fn theta_prime(&self, u: f64) -> f64 {
        0.5 * self
            .lambdas
            .iter()
            .map(|l| l / (1.0 + l * l * u * u))
            .sum::<f64>()
            - 0.5 * self.q
    }

    fn integrand(&self, u: f64) -> f64 {
        if u == 0.0 {
            return 0.5 * (self.lambdas.iter().sum::<f64>() - self.q);
        }
        let ln_rho = 0.25
            * self
                .lambdas
                .iter()
                .map(|l| (l * l * u * u).ln_1p())
                .sum::<f64>();
        self.theta(u).sin() / (u * ln_rho.exp())
    }

    /// The `u` where `theta'` changes sign, or 0 when it never is positive.
    fn turning_point(&self) -> f64 {
        if self.theta_prime(0.0) <= 0.0 {
            return 0.0;
        }
        let mut lo = 0.0;
        let mut hi = 1.0;
        while self.theta_prime(hi) > 0.0 {
            lo = hi;
            hi *= 2.0;
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if self.theta_prime(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= 1e-15 * hi {
                break;
            }
        }
        hi
    }

    /// `u > from` with `theta(u) = target`; `theta` is decreasing there.
    fn solve_theta(&self, target: f64, from: f64) -> f64 {
        let mut lo = from;
        let mut step = 2.0 * PI / self.q;
        let mut hi = from + step;
        while self.theta(hi) > target {
            lo = hi;
            step *= 2.0;
            hi = from + step;
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if self.theta(mid) > target {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= 1e-15 * hi.max(1e-300) {
                break;
            }
        }
        0.5 * (lo + hi)
    }
}

const GK_NODES: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.000_000_000_000_000_000_000_000_000_000_000,
];
const GK_WEIGHTS: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];
const G_WEIGHTS: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

/// Kronrod estimate and its difference from the embedded Gauss rule.
fn gk15(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kronrod = GK_WEIGHTS[7] * fc;
    let mut gauss = G_WEIGHTS[3] * fc;
    for i in 0..7 {
        let x = h * GK_NODES[i];
        let s = f(c - x) + f(c + x);
        kronrod += GK_WEIGHTS[i] * s;
        if i % 2 == 1 {
            gauss += G_WEIGHTS[i / 2] * s;
        }
    }
    (kronrod * h, (kronrod - gauss).abs() * h)
}

fn adaptive_gk(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64, depth: usize) -> Result<f64> {
    let (val, err) = gk15(f, a, b);
    if !val.is_finite() {
        return Err(Error::NonFinite("imhof integrand"));
    }
    if err <= tol || (b - a) <= 1e-14 * a.abs().max(1.0) {
        return Ok(val);
    }
    if depth >= 50 {
        return Err(Error::NoConvergence("adaptive quadrature depth".into()));
    }
    let m = 0.5 * (a + b);
    Ok(adaptive_gk(f, a, m, 0.5 * tol, depth + 1)? + adaptive_gk(f, m, b, 0.5 * tol, depth + 1)?)
}
