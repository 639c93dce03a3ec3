//! Experiment harness and command-line front end for `smallp-core`.

pub mod args;
pub mod experiment;
pub mod io;
pub mod report;

use std::path::{Path, PathBuf};

use smallp_core::reduce::quadform_from_matrices;
use smallp_core::Method;

use args::{BaselineCmd, Cli, Command, EstimateCmd, QuadSource, RatioOpts, RunOpts, SimulateCmd};
use experiment::{
    run_experiment, targets_from_log10, ExperimentConfig, ProblemSpec, Target, Truth,
};
use report::{emit_report, Format};

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Numerical(String),
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Io(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "configuration error: {m}"),
            CliError::Numerical(m) => write!(f, "numerical failure: {m}"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

/// A parsed command ready to run.
#[derive(Debug, Clone)]
pub struct Job {
    pub config: ExperimentConfig,
    pub format: Format,
    pub out: Option<PathBuf>,
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    let job = build_job(cli.command)?;
    let rows = run_experiment(&job.config)?;
    emit_report(&rows, job.format, job.out.as_deref())
}

pub fn build_job(command: Command) -> Result<Job, CliError> {
    match command {
        Command::Estimate(EstimateCmd::Quadform {
            source,
            method,
            run,
        }) => quad_job(source, method, run),
        Command::Estimate(EstimateCmd::Ratio { ratio, method, run }) => {
            ratio_job(ratio, method, run)
        }
        Command::Baseline(BaselineCmd::Imhof { source, run }) => {
            quad_job(source, Method::Imhof, run)
        }
        Command::Baseline(BaselineCmd::Mc { source, run }) => {
            quad_job(source, Method::BruteMc, run)
        }
        Command::Simulate(SimulateCmd::Chisq {
            df,
            targets,
            method,
            run,
        }) => {
            if df == 0 {
                return Err(CliError::Config("--df must be positive".into()));
            }
            let problem = ProblemSpec::Quadform {
                lambdas: vec![1.0; df as usize],
            };
            let targets = targets_from_log10(Truth::ChiSq(df), &normalize_targets(&targets))?;
            Ok(job(problem, targets, method, run))
        }
        Command::Simulate(SimulateCmd::Cauchy {
            targets,
            method,
            run,
        }) => {
            let problem = ProblemSpec::Ratio {
                n1: 1,
                n2: 1,
                mu: 0.0,
                sigma: 1.0,
                both_orthants: true,
                two_sided_mc: false,
            };
            let targets = targets_from_log10(Truth::Cauchy, &normalize_targets(&targets))?;
            Ok(job(problem, targets, method, run))
        }
    }
}

fn job(problem: ProblemSpec, targets: Vec<Target>, method: Method, run: RunOpts) -> Job {
    Job {
        config: ExperimentConfig {
            problem,
            targets,
            method,
            replicates: run.reps,
            n: run.n,
            m: run.m,
            burn_in: run.burn_in,
            seed: run.seed,
            sampler: run.sampler,
            rho: run.rho,
            timing: !run.no_timing,
        },
        format: run.format,
        out: run.out,
    }
}

/// `log10 p` values must be non-positive; a positive entry is taken as the
/// magnitude of the exponent.
fn normalize_targets(t: &[f64]) -> Vec<f64> {
    t.iter().map(|&v| -v.abs()).collect()
}

fn thresholds(
    q: Option<f64>,
    file_q: Option<f64>,
    targets: Option<&[f64]>,
    truth: Option<Truth>,
) -> Result<Vec<Target>, CliError> {
    if let Some(t) = targets {
        let truth = truth.ok_or_else(|| {
            CliError::Config("--targets needs a chisq or cauchy truth law".into())
        })?;
        return targets_from_log10(truth, &normalize_targets(t));
    }
    let q = q
        .or(file_q)
        .ok_or_else(|| CliError::Config("no threshold: give --q or --targets".into()))?;
    if !q.is_finite() {
        return Err(CliError::Config(format!("threshold {q} is not finite")));
    }
    Ok(vec![Target {
        q,
        truth_ln: truth.map(|t| t.ln_p(q)),
    }])
}

fn quad_job(source: QuadSource, method: Method, run: RunOpts) -> Result<Job, CliError> {
    let mut truth = source.truth;
    let (lambdas, file_q) = if let Some(spec) = &source.lambdas {
        match io::parse_inline_list(spec) {
            Some(l) => (l, None),
            None => io::load_eigenvalues_csv(Path::new(spec))?,
        }
    } else if let Some(df) = source.df {
        if df == 0 {
            return Err(CliError::Config("--df must be positive".into()));
        }
        truth = truth.or(Some(Truth::ChiSq(df)));
        (vec![1.0; df as usize], None)
    } else if let (Some(f), Some(r)) = (&source.features, &source.residual) {
        let (z, res, w) = io::load_matrices_csv(f, r, source.weights.as_deref())?;
        let red = quadform_from_matrices(&z, &res, w.as_ref(), source.scale_by_n)
            .map_err(|e| CliError::Numerical(e.to_string()))?;
        (red.lambdas, Some(red.q_obs))
    } else {
        return Err(CliError::Config(
            "give --lambdas, --df or --features/--residual".into(),
        ));
    };
    if lambdas.iter().any(|&l| !(l > 0.0) || !l.is_finite()) {
        return Err(CliError::Config(
            "eigenvalues must be positive and finite".into(),
        ));
    }
    let targets = thresholds(source.q, file_q, source.targets.as_deref(), truth)?;
    Ok(job(ProblemSpec::Quadform { lambdas }, targets, method, run))
}

fn ratio_job(r: RatioOpts, method: Method, run: RunOpts) -> Result<Job, CliError> {
    let problem = ProblemSpec::Ratio {
        n1: r.n1,
        n2: r.n2,
        mu: r.mu,
        sigma: r.sigma,
        both_orthants: !r.single_orthant,
        two_sided_mc: r.two_sided,
    };
    let targets = thresholds(r.q, None, r.targets.as_deref(), r.truth)?;
    Ok(job(problem, targets, method, run))
}
