use clap::{Args, Parser, Subcommand, ValueEnum};
use std::path::PathBuf;

#[derive(Debug, Parser)]
#[command(name = "ves", version, about = "Uniformize rigid variable elliptic structures and reduce rigid Vekua equations")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// Grid as x0,x1,y0,y1,nx,ny
    #[arg(long, global = true, default_value = "-0.5,2,-1,1,201,201", allow_hyphen_values = true)]
    pub grid: String,

    /// Finite-difference order
    #[arg(long, global = true, default_value_t = 2, value_parser = clap::value_parser!(u8).range(2..=4))]
    pub order: u8,

    /// Newton tolerance for Burgers solves and inversion
    #[arg(long, global = true, default_value_t = 1e-12)]
    pub tol: f64,

    /// Directory for CSV and JSON output
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    /// Format of the report printed to stdout
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Table,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the identity suite; exits 2 if any check fails
    Verify(VerifyArgs),
    /// Rigidity diagnostics of a structure
    Diagnose(SourceArgs),
    /// Canonical chart: p, q, Φ and the Jacobian on the grid
    Uniformize(UniformizeArgs),
    /// Solve ξ(x, y) = target by Newton iteration
    Invert(InvertArgs),
    /// Solve λ = h(y − λx) on the grid
    Burgers(BurgersArgs),
    /// Reduce a rigid Vekua problem to standard form
    Reduce(ReduceArgs),
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// Comma-separated δ values for the δ-family checks
    #[arg(long, default_value = "1,0.1,0.01", value_delimiter = ',')]
    pub deltas: Vec<f64>,

    /// Extra Burgers seed to check (name or expression in w)
    #[arg(long, alias = "seed-expr")]
    pub seed: Option<String>,

    /// Seed parameters as name=value pairs, comma separated
    #[arg(long, default_value = "")]
    pub params: String,

    /// Random samples for pointwise checks
    #[arg(long, default_value_t = 10_000)]
    pub samples: usize,

    /// Inject a defect to exercise the failure path
    #[arg(long, value_enum)]
    pub fault: Option<FaultArg>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FaultArg {
    CorruptPhiFactorization,
}

/// Exactly one of a structure or a Burgers seed.
#[derive(Debug, Args)]
pub struct SourceArgs {
    /// Structure name (constant, delta, custom) or a structure JSON file
    #[arg(long, conflicts_with = "seed", required_unless_present = "seed")]
    pub structure: Option<String>,

    /// λ as an expression in x and y, for `--structure custom`
    #[arg(long)]
    pub lambda: Option<String>,

    /// Burgers seed (name or expression in w)
    #[arg(long, alias = "seed-expr")]
    pub seed: Option<String>,

    /// Parameters as name=value pairs, comma separated
    #[arg(long, default_value = "")]
    pub params: String,
}

#[derive(Debug, Args)]
pub struct UniformizeArgs {
    #[command(flatten)]
    pub source: SourceArgs,

    /// Bucket tolerance for the injectivity scan (default from the chart)
    #[arg(long)]
    pub bucket_tol: Option<f64>,
}

#[derive(Debug, Args)]
pub struct InvertArgs {
    #[command(flatten)]
    pub source: SourceArgs,

    /// Target ξ as re,im
    #[arg(long, allow_hyphen_values = true)]
    pub target: String,

    /// Starting point as x,y
    #[arg(long, default_value = "0,0", allow_hyphen_values = true)]
    pub guess: String,

    #[arg(long, default_value_t = 50)]
    pub max_iter: usize,
}

#[derive(Debug, Args)]
pub struct BurgersArgs {
    /// Seed name (delta, affine, exp) or expression in w
    #[arg(long, alias = "seed-expr")]
    pub seed: String,

    /// Seed parameters as name=value pairs, comma separated
    #[arg(long, default_value = "")]
    pub params: String,

    #[arg(long, default_value_t = 50)]
    pub max_iter: usize,
}

#[derive(Debug, Args)]
pub struct ReduceArgs {
    /// Problem description (JSON)
    #[arg(long)]
    pub problem: PathBuf,

    /// Test function for the reduced residual: `holomorphic:EXPR`,
    /// `antiholomorphic:EXPR` (EXPR in w, composed with ξ) or a CSV file
    #[arg(long)]
    pub check: Option<String>,
}
