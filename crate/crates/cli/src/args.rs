use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use smallp_core::{Method, SamplerKind};

use crate::experiment::Truth;
use crate::report::Format;

#[derive(Debug, Parser)]
#[command(
    name = "smallp",
    version,
    about = "Extreme-tail probabilities for Gaussian quadratic forms and ratios"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Estimate a tail probability with the cross-entropy estimators.
    #[command(subcommand)]
    Estimate(EstimateCmd),
    /// Reference methods: Imhof's integral and plain Monte Carlo.
    #[command(subcommand)]
    Baseline(BaselineCmd),
    /// Accuracy study against exact tails.
    #[command(subcommand)]
    Simulate(SimulateCmd),
}

#[derive(Debug, Subcommand)]
pub enum EstimateCmd {
    /// `sum lambda_i chi^2_1 >= q`.
    Quadform {
        #[command(flatten)]
        source: QuadSource,
        #[arg(long, default_value = "mcmc-ce")]
        method: Method,
        #[command(flatten)]
        run: RunOpts,
    },
    /// Ratio of two normal group means `y1 / y2 >= q`.
    Ratio {
        #[command(flatten)]
        ratio: RatioOpts,
        #[arg(long, default_value = "mcmc-ce")]
        method: Method,
        #[command(flatten)]
        run: RunOpts,
    },
}

#[derive(Debug, Subcommand)]
pub enum BaselineCmd {
    /// Imhof's numerical inversion (linear space).
    Imhof {
        #[command(flatten)]
        source: QuadSource,
        #[command(flatten)]
        run: RunOpts,
    },
    /// Plain Monte Carlo with `--m` draws per replicate.
    Mc {
        #[command(flatten)]
        source: QuadSource,
        #[command(flatten)]
        run: RunOpts,
    },
}

#[derive(Debug, Subcommand)]
pub enum SimulateCmd {
    /// Chi-squared tails with thresholds from the exact quantile.
    Chisq {
        #[arg(long)]
        df: u32,
        #[arg(
            long,
            value_delimiter = ',',
            allow_negative_numbers = true,
            default_value = "-6,-10,-20,-50,-100"
        )]
        targets: Vec<f64>,
        #[arg(long, default_value = "mcmc-ce")]
        method: Method,
        #[command(flatten)]
        run: RunOpts,
    },
    /// Standard Cauchy tails through the two-orthant ratio problem.
    Cauchy {
        #[arg(
            long,
            value_delimiter = ',',
            allow_negative_numbers = true,
            default_value = "-6,-10,-20,-50,-100"
        )]
        targets: Vec<f64>,
        #[arg(long, default_value = "mcmc-ce")]
        method: Method,
        #[command(flatten)]
        run: RunOpts,
    },
}

/// Where the eigenvalues and threshold come from.
#[derive(Debug, Args)]
pub struct QuadSource {
    /// Eigenvalues: an inline list `1,1,0.5` or a CSV file with a `lambda`
    /// column (and optionally a `q` column).
    #[arg(long)]
    pub lambdas: Option<String>,
    /// Use `df` unit eigenvalues (a chi-squared statistic).
    #[arg(long, conflicts_with = "lambdas")]
    pub df: Option<u32>,
    /// Feature matrix CSV (`n` rows, `k` columns, with header).
    #[arg(long, requires = "residual", conflicts_with_all = ["lambdas", "df"])]
    pub features: Option<PathBuf>,
    /// Residual CSV (one column, `n` rows, with header).
    #[arg(long, requires = "features")]
    pub residual: Option<PathBuf>,
    /// Per-feature weights CSV (one column, `k` rows, with header).
    #[arg(long, requires = "features")]
    pub weights: Option<PathBuf>,
    /// Divide the statistic and eigenvalues by `n`.
    #[arg(long, requires = "features")]
    pub scale_by_n: bool,
    /// Threshold. Overrides a `q` found in the input files.
    #[arg(long, allow_negative_numbers = true)]
    pub q: Option<f64>,
    /// Comma list of `log10 p` targets; thresholds come from the truth law.
    /// Positive entries are read as negative exponents.
    #[arg(
        long,
        value_delimiter = ',',
        allow_negative_numbers = true,
        conflicts_with = "q"
    )]
    pub targets: Option<Vec<f64>>,
    /// Exact law for error metrics: `chisq:<df>`, `cauchy` or `log10:<x>`.
    #[arg(long)]
    pub truth: Option<Truth>,
}

#[derive(Debug, Args)]
pub struct RatioOpts {
    #[arg(long, allow_negative_numbers = true)]
    pub q: Option<f64>,
    #[arg(
        long,
        value_delimiter = ',',
        allow_negative_numbers = true,
        conflicts_with = "q"
    )]
    pub targets: Option<Vec<f64>>,
    #[arg(long, default_value_t = 1)]
    pub n1: usize,
    #[arg(long, default_value_t = 1)]
    pub n2: usize,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub mu: f64,
    #[arg(long, default_value_t = 1.0)]
    pub sigma: f64,
    /// Only the orthant with both means positive.
    #[arg(long)]
    pub single_orthant: bool,
    /// Two-sided plain Monte Carlo p-value `2 min(upper, lower)`.
    #[arg(long)]
    pub two_sided: bool,
    #[arg(long)]
    pub truth: Option<Truth>,
}

#[derive(Debug, Args)]
pub struct RunOpts {
    /// Chain length (and multilevel sample size).
    #[arg(long, default_value_t = 10_000)]
    pub n: usize,
    /// Importance-sampling (or plain Monte Carlo) draws.
    #[arg(long, default_value_t = 10_000)]
    pub m: usize,
    #[arg(long, default_value_t = 100)]
    pub reps: usize,
    #[arg(long, default_value_t = 1000)]
    pub burn_in: usize,
    /// `gibbs`, `hitrun` or `hmc`; default depends on the problem.
    #[arg(long)]
    pub sampler: Option<SamplerKind>,
    /// Multilevel quantile fraction.
    #[arg(long, default_value_t = 0.1)]
    pub rho: f64,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Report path; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, default_value = "csv")]
    pub format: Format,
    /// Write 0 in the seconds column so reports are byte-reproducible.
    #[arg(long)]
    pub no_timing: bool,
}
