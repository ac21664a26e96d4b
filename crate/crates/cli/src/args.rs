use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use lipfree_core::constructions::DiscreteVariant;
use lipfree_core::ArithmeticMode;

#[derive(Debug, Parser)]
#[command(
    name = "lipfree",
    version,
    about = "Lipschitz-free spaces over finite pointed metric spaces"
)]
pub struct Cli {
    #[command(flatten)]
    pub config: Config,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct Config {
    /// Arithmetic: exact rationals or binary64
    #[arg(long, global = true, default_value = "exact", value_parser = parse_mode)]
    pub mode: ArithmeticMode,

    /// Relative tolerance for solver comparisons
    #[arg(long, global = true, default_value_t = 1e-9, value_parser = parse_tol)]
    pub tol: f64,

    /// Seed for the random suites
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,

    /// Output directory (construct) or report file (verify)
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            mode: ArithmeticMode::Exact,
            tol: 1e-9,
            seed: 0,
            out: None,
        }
    }
}

fn parse_mode(s: &str) -> Result<ArithmeticMode, String> {
    s.parse().map_err(|e: lipfree_core::Error| e.to_string())
}

fn parse_tol(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(t) if t > 0.0 && t.is_finite() => Ok(t),
        _ => Err(format!("tolerance must be a positive number, got `{s}`")),
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check a space file against the metric axioms
    Validate { space: PathBuf },
    /// Transport norm of a molecule
    Norm {
        #[arg(long)]
        space: PathBuf,
        #[arg(long)]
        molecule: PathBuf,
        #[arg(long, value_enum, default_value_t = NormMethod::All)]
        method: NormMethod,
    },
    /// Diagnostics for the linearization of a base-point-preserving map
    Operator(OperatorArgs),
    /// Build a family of examples and write CSV/JSON artifacts
    Construct(ConstructArgs),
    /// Run the seeded property suites
    Verify(VerifyArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum NormMethod {
    Lp,
    Flow,
    Line,
    All,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Check {
    Rank,
    Bilip,
    Support,
    Nonreturning,
    Modulus,
}

#[derive(Debug, Args)]
pub struct OperatorArgs {
    #[arg(long)]
    pub domain: PathBuf,
    #[arg(long)]
    pub codomain: PathBuf,
    #[arg(long)]
    pub map: PathBuf,
    /// Checks to run; all of them when omitted
    #[arg(long = "check", value_enum, value_delimiter = ',')]
    pub checks: Vec<Check>,
    /// Molecules for the support and modulus checks
    #[arg(long = "molecule")]
    pub molecules: Vec<PathBuf>,
    /// Centre of the non-returning sweep (defaults to every point)
    #[arg(long)]
    pub point: Option<String>,
    /// Radius r of the non-returning sweep
    #[arg(long, default_value = "1")]
    pub radius: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Family {
    Svc,
    Snowflake,
    Discrete,
    Dust,
    Rtree,
    Xsquared,
}

#[derive(Debug, Args)]
pub struct ConstructArgs {
    #[arg(value_enum)]
    pub family: Family,
    /// Last stage; rows are emitted for stages 1..=k
    #[arg(long, alias = "stages", default_value_t = 3)]
    pub stage: usize,
    /// Snowflake exponent
    #[arg(long, default_value = "1/2")]
    pub alpha: String,
    #[arg(long, default_value = "bounded", value_parser = parse_variant)]
    pub variant: DiscreteVariant,
    /// rtree: n_max; xsquared: grid sizes (comma separated)
    #[arg(long, value_delimiter = ',')]
    pub n: Vec<usize>,
    /// Dust neighbourhood radius
    #[arg(long, default_value = "0.001")]
    pub epsilon: String,
}

fn parse_variant(s: &str) -> Result<DiscreteVariant, String> {
    s.parse().map_err(|e: lipfree_core::Error| e.to_string())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, ValueEnum)]
pub enum Fixture {
    /// A random space with one distance pushed past the triangle bound
    TriangleViolation,
    /// A collapsing map claimed to be injective
    FalseInjective,
}

#[derive(Debug, Clone, Args, Default)]
pub struct VerifyArgs {
    /// Suites to run; all of them when omitted
    #[arg(long = "suite", value_delimiter = ',')]
    pub suites: Vec<String>,
    /// Negative-control fixtures injected into the suites
    #[arg(long = "inject", value_enum, value_delimiter = ',')]
    pub inject: Vec<Fixture>,
    /// Cap on random cases per suite (default: the full sizes)
    #[arg(long)]
    pub limit: Option<usize>,
}
