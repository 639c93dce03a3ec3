use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use smallp_core::reduce::ratio_to_linear;
use smallp_core::rng::{stream_rng, CHAIN_STREAM};
use smallp_core::samplers::{run_chain, ChainState, Hmc, Kernel};
use smallp_core::specialfn::normal_hazard;
use smallp_core::{ChainConfig, Constraint, LinearSystem, MvnParams, SamplerKind, TailProblem};

const ALL: [SamplerKind; 3] = [SamplerKind::Gibbs, SamplerKind::HitAndRun, SamplerKind::Hmc];

fn correlated_orthant() -> TailProblem {
    let cov = DMatrix::from_row_slice(2, 2, &[1.0, 0.6, 0.6, 2.0]);
    let theta0 = MvnParams::new(DVector::from_vec(vec![0.5, -1.0]), cov).unwrap();
    let c = DMatrix::from_row_slice(2, 2, &[1.0, -1.0, 0.0, 1.0]);
    let sys = LinearSystem::new(c, DVector::from_vec(vec![5.0, 4.0])).unwrap();
    TailProblem::new(theta0, Constraint::LinearSystem(sys)).unwrap()
}

fn chain(problem: &TailProblem, kind: SamplerKind, n: usize, seed: u64) -> DMatrix<f64> {
    let cfg = ChainConfig {
        n_samples: n,
        sampler: Some(kind),
        seed,
        ..Default::default()
    };
    run_chain(problem, &cfg).unwrap()
}

#[test]
fn every_draw_is_inside() {
    let problems = [
        TailProblem::quadform(vec![3.0, 1.0, 0.2, 0.05], 60.0).unwrap(),
        correlated_orthant(),
        ratio_to_linear(1e4, 3, 2, 0.1, 2.0, true)
            .unwrap()
            .remove(1),
    ];
    for problem in &problems {
        for kind in ALL {
            let d = chain(problem, kind, 20_000, 4);
            for r in d.row_iter() {
                assert!(
                    problem.contains(r.transpose().as_slice()),
                    "{kind} left the region"
                );
            }
        }
    }
}

#[test]
fn half_line_moments() {
    // Y ~ N(0, 1) restricted to Y > 2.5 through a shifted mean.
    let a = 2.5;
    let theta0 = MvnParams::new(DVector::from_element(1, -a), DMatrix::identity(1, 1)).unwrap();
    let sys = LinearSystem::new(DMatrix::identity(1, 1), DVector::from_element(1, 0.5)).unwrap();
    let problem = TailProblem::new(theta0, Constraint::LinearSystem(sys)).unwrap();
    let h = normal_hazard(a);
    let var = 1.0 + a * h - h * h;
    for kind in ALL {
        let d = chain(&problem, kind, 40_000, 6);
        let mean = d.column(0).iter().map(|v| v + a).sum::<f64>() / d.nrows() as f64;
        // Independent draws in 1-D for Gibbs and hit-and-run; HMC mixes fast here.
        let se = (var / d.nrows() as f64).sqrt();
        assert!((mean - h).abs() < 5.0 * se, "{kind}: {mean} vs {h}");
    }
}

#[test]
fn seeds_fix_the_chain() {
    let problem = correlated_orthant();
    for kind in ALL {
        let a = chain(&problem, kind, 500, 12);
        let b = chain(&problem, kind, 500, 12);
        let c = chain(&problem, kind, 500, 13);
        assert_eq!(a, b);
        assert_ne!(a, c);
    }
}

#[test]
fn kernel_advances_state() {
    let problem = TailProblem::chisq(3, 30.0).unwrap();
    let kernel = Kernel::new(&problem, SamplerKind::Hmc, std::f64::consts::FRAC_PI_2).unwrap();
    let mut state = ChainState::new(&problem);
    let mut rng = stream_rng(1, CHAIN_STREAM);
    for _ in 0..50 {
        kernel.advance(&mut state, &mut rng).unwrap();
    }
    assert_eq!(state.steps_taken(), 50);
    assert!(problem.contains(state.current().as_slice()));
}

#[test]
fn state_must_start_inside() {
    let problem = TailProblem::chisq(2, 10.0).unwrap();
    assert!(ChainState::at(&problem, DVector::from_vec(vec![0.1, 0.1])).is_err());
    assert!(ChainState::at(&problem, DVector::from_vec(vec![4.0, 0.0])).is_ok());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn hmc_trajectories_conserve_energy_and_stay_outside(
        l in proptest::collection::vec(0.05f64..5.0, 1..5),
        q_scale in 1.0f64..40.0,
        seed in any::<u64>(),
    ) {
        let q = q_scale * l.iter().sum::<f64>();
        let problem = TailProblem::quadform(l, q).unwrap();
        let hmc = Hmc::new(&problem, 3.0).unwrap();
        let z0 = problem.constraint().feasible_point().clone();
        let p0 = MvnParams::standard(problem.dim()).sample(&mut stream_rng(seed, 0));
        let path = hmc.integrate(&z0, &p0, 3.0).unwrap();
        let e0 = z0.norm_squared() + p0.norm_squared();
        let e1 = path.position.norm_squared() + path.velocity.norm_squared();
        prop_assert!((e1 - e0).abs() <= 1e-9 * e0);
        let u = match problem.constraint() {
            Constraint::QuadExterior(c) => c.unit_form(path.position.as_slice()),
            Constraint::LinearSystem(_) => unreachable!(),
        };
        prop_assert!(u >= 1.0 - 1e-9);
    }

    #[test]
    fn hmc_reverses(seed in any::<u64>(), t in 0.1f64..4.0) {
        let problem = TailProblem::quadform(vec![1.0, 0.4], 12.0).unwrap();
        let hmc = Hmc::new(&problem, t).unwrap();
        let z0 = DVector::from_vec(vec![4.0, 0.5]);
        let p0 = MvnParams::standard(2).sample(&mut stream_rng(seed, 0));
        let fwd = hmc.integrate(&z0, &p0, t).unwrap();
        let back = hmc.integrate(&fwd.position, &(-&fwd.velocity), t).unwrap();
        prop_assert!((back.position - z0).norm() < 1e-6);
    }

    #[test]
    fn chains_stay_in_random_orthants(q in 1.0f64..1e6, n1 in 1usize..5, n2 in 1usize..5, seed in any::<u64>()) {
        for problem in ratio_to_linear(q, n1, n2, 0.0, 1.0, true).unwrap() {
            for kind in ALL {
                let cfg = ChainConfig { burn_in: 50, n_samples: 200, sampler: Some(kind), seed, ..Default::default() };
                let d = run_chain(&problem, &cfg).unwrap();
                for r in d.row_iter() {
                    prop_assert!(problem.contains(r.transpose().as_slice()));
                }
            }
        }
    }
}
