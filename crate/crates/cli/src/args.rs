use std::path::PathBuf;

use clap::{ArgAction, Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(
    name = "rpnm",
    version,
    about = "Count rational points near manifolds and check the supporting inequalities"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// Write output here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    #[arg(long, global = true, value_enum, default_value_t = Format::Jsonl)]
    pub format: Format,

    /// Worker threads (overrides RPNM_JOBS).
    #[arg(long, global = true)]
    pub jobs: Option<usize>,

    /// Seed for randomized commands.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,

    /// Exit with status 3 when a float-mode count leaves points ambiguous.
    #[arg(long, global = true)]
    pub strict: bool,

    /// Report elapsed_ms as 0 so repeated runs are byte-identical.
    #[arg(long, global = true)]
    pub no_timing: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Jsonl,
    Csv,
    Table,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Count rational points near a manifold.
    Count(CountArgs),
    /// Search for the minimum of the curvature determinant.
    Curvature(CurvatureArgs),
    /// Check Legendre involution and Hessian-inverse identities on samples.
    LegendreCheck(LegendreArgs),
    /// Exponent table, recursions, iteration depth and envelopes.
    Exponents(ExponentsArgs),
    /// Size of an explicit rational-point construction.
    Lowerbound(LowerboundArgs),
    /// Count representations of a Gaussian integer as a sum of squares.
    Repcount(RepcountArgs),
    /// Exact count of rational points on the complex sphere.
    Spherecount(SpherecountArgs),
    /// Check the Fejér minorant inequality on random samples.
    Fejer(FejerArgs),
    /// Check the summation-by-parts exponential-sum bound on random symbols.
    SbpCheck(SbpArgs),
    /// Fit a power law to counts read from JSONL records.
    Fit(FitArgs),
    /// Run a manifest of counts.
    Batch(BatchArgs),
}

#[derive(Debug, Args)]
pub struct ManifoldArgs {
    /// Builtin manifold name.
    #[arg(long, conflicts_with = "manifold_file")]
    pub manifold: Option<String>,

    /// JSON manifold definition.
    #[arg(long)]
    pub manifold_file: Option<String>,

    /// n for real builtins, m for holomorphic ones.
    #[arg(long)]
    pub dim: Option<usize>,

    /// Sphere radius.
    #[arg(long)]
    pub radius: Option<f64>,
}

#[derive(Debug, Args)]
pub struct CountArgs {
    #[command(flatten)]
    pub manifold: ManifoldArgs,

    /// real, gaussian, dual-real or dual-gaussian.
    #[arg(long)]
    pub view: Option<String>,

    #[arg(long = "Q")]
    pub q: u64,

    /// Comma list of tolerances (decimals or fractions).
    #[arg(long, allow_hyphen_values = true)]
    pub delta: String,

    /// Window as "c1,...,cn;r".
    #[arg(long)]
    pub window: Option<String>,

    #[arg(long, default_value = "box")]
    pub window_shape: String,

    /// Whether the window boundary is excluded.
    #[arg(long, default_value_t = true, action = ArgAction::Set)]
    pub strict_window: bool,

    /// Integer arithmetic (polynomial manifolds only).
    #[arg(long)]
    pub exact: bool,

    /// Maximum number of witnesses to report.
    #[arg(long, default_value_t = 0)]
    pub witnesses: usize,

    #[arg(long)]
    pub guard: Option<f64>,

    /// graph or dist.
    #[arg(long, default_value = "graph")]
    pub membership: String,

    #[arg(long)]
    pub lipschitz: Option<f64>,

    /// Dual real view: sum over all nonzero integer indices.
    #[arg(long)]
    pub full_index: bool,
}

#[derive(Debug, Args)]
pub struct CurvatureArgs {
    #[command(flatten)]
    pub manifold: ManifoldArgs,

    /// Domain sample budget.
    #[arg(long, default_value_t = 4096)]
    pub grid: usize,

    /// Directions on the sphere (real manifolds).
    #[arg(long, default_value_t = 32)]
    pub theta_grid: usize,
}

#[derive(Debug, Args)]
pub struct LegendreArgs {
    #[command(flatten)]
    pub manifold: ManifoldArgs,

    #[arg(long, default_value_t = 100)]
    pub points: usize,

    #[arg(long, default_value_t = 16)]
    pub directions: usize,

    /// Pass threshold (default 1e-8 for polynomial manifolds, 1e-6 otherwise).
    #[arg(long)]
    pub tol: Option<f64>,
}

#[derive(Debug, Args)]
pub struct ExponentsArgs {
    #[command(subcommand)]
    pub command: ExponentsCommand,
}

#[derive(Debug, Subcommand)]
pub enum ExponentsCommand {
    /// Known lower bounds for the counting exponent.
    Table {
        #[arg(long)]
        n: u32,
        #[arg(long = "R")]
        r: u32,
    },
    /// Iterate a self-improvement recursion.
    Recursion {
        /// real or complex.
        #[arg(long)]
        kind: String,
        #[arg(long)]
        n: Option<u32>,
        #[arg(long = "R")]
        r: Option<u32>,
        #[arg(long)]
        m: Option<u32>,
        #[arg(long, default_value_t = 10)]
        steps: usize,
    },
    /// Smallest N with (4/5)^N R < nu/2.
    ChooseN {
        #[arg(long)]
        nu: f64,
        #[arg(long = "R")]
        r: u32,
    },
    /// Evaluate an envelope.
    Envelope {
        /// complex, conjecture or real.
        #[arg(long)]
        regime: String,
        #[arg(long)]
        m: Option<u32>,
        #[arg(long)]
        n: Option<u32>,
        #[arg(long = "R")]
        r: Option<u32>,
        #[arg(long)]
        nu: Option<f64>,
        #[arg(long)]
        epsilon: Option<f64>,
        #[arg(long)]
        kappa: Option<f64>,
        #[arg(long = "Q")]
        q: f64,
        /// Comma list of tolerances.
        #[arg(long)]
        delta: String,
    },
}

#[derive(Debug, Args)]
pub struct LowerboundArgs {
    /// parabola-real or parabola-gaussian.
    #[arg(long)]
    pub construction: String,

    #[arg(long = "Q")]
    pub q: u64,

    /// Number of witnesses to list.
    #[arg(long, default_value_t = 0)]
    pub witnesses: usize,
}

#[derive(Debug, Args)]
pub struct RepcountArgs {
    #[arg(long)]
    pub m: usize,

    /// Gaussian integer as "re,im" (or "re").
    #[arg(long, allow_hyphen_values = true)]
    pub nu: String,

    #[arg(long)]
    pub r: f64,
}

#[derive(Debug, Args)]
pub struct SpherecountArgs {
    #[arg(long)]
    pub m: usize,

    #[arg(long = "Q")]
    pub q: u64,

    #[arg(long)]
    pub r: f64,

    /// real or gaussian denominators.
    #[arg(long, default_value = "real")]
    pub mode: String,
}

#[derive(Debug, Args)]
pub struct FejerArgs {
    /// Comma list of tolerances in (0, 1/2).
    #[arg(long)]
    pub delta: String,

    #[arg(long, default_value_t = 10_000)]
    pub trials: usize,
}

#[derive(Debug, Args)]
pub struct SbpArgs {
    #[arg(long, default_value_t = 500)]
    pub trials: usize,

    /// Fix the dimension (default: drawn from 1..=3).
    #[arg(long)]
    pub n: Option<usize>,

    /// Fix lambda (default: drawn from 8, 32, 128).
    #[arg(long)]
    pub lambda: Option<u64>,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    /// JSONL file of count or lowerbound records ("-" for stdin).
    #[arg(long, default_value = "-")]
    pub input: String,

    /// uniform or count.
    #[arg(long, default_value = "uniform")]
    pub weighting: String,

    #[arg(long)]
    pub drop_smallest_decade: bool,
}

#[derive(Debug, Args)]
pub struct BatchArgs {
    /// JSON manifest: a list of count parameter objects.
    #[arg(long)]
    pub manifest: PathBuf,
}
