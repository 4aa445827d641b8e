use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(
    name = "mixsmooth",
    version,
    about = "Verification suites for functions with dominating mixed smoothness"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Check the Newton-Leibniz identity on boxes
    VerifyGnl(GnlArgs),
    /// Pointwise, Hölder-norm and p -> 1 limit checks
    CheckEmbedding(EmbeddingArgs),
    /// Trace inequality on every face with n - 1 axes
    CheckTrace(TraceArgs),
    /// Built-in counterexample and mollification studies
    Gallery(GalleryArgs),
    /// Norms with quadrature provenance
    Norms(NormsArgs),
}

#[derive(Args, Debug, Clone)]
pub struct FnArgs {
    /// Gallery id (bump2d, gauss3d, ...), a file, or an expression in x1..xn
    #[arg(long = "fn", value_name = "FN", allow_hyphen_values = true)]
    pub function: String,
    /// Dimension; inferred from the function when omitted
    #[arg(long)]
    pub n: Option<usize>,
}

#[derive(Args, Debug, Clone)]
pub struct QuadArgs {
    /// Gauss-Legendre order per cell
    #[arg(long, default_value_t = 12)]
    pub order: usize,
    /// Base cells per axis [default: 1 for verify-gnl, 2 otherwise]
    #[arg(long)]
    pub cells: Option<usize>,
    /// Relative agreement between refinement levels [default: 1e-10 for verify-gnl, 1e-8 otherwise]
    #[arg(long)]
    pub quad_tol: Option<f64>,
    /// Refinements beyond the base grid [default: 5 for verify-gnl, 6 otherwise]
    #[arg(long)]
    pub max_level: Option<usize>,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Json,
    Csv,
    Human,
}

impl Format {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Json => "json",
            Self::Csv => "csv",
            Self::Human => "human",
        }
    }
}

#[derive(Args, Debug, Clone)]
pub struct OutArgs {
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Write the report to this file instead of stdout
    #[arg(long, short)]
    pub output: Option<PathBuf>,
    /// Record wall time in the report (output is then no longer reproducible)
    #[arg(long)]
    pub timing: bool,
}

#[derive(Args, Debug)]
pub struct GnlArgs {
    #[command(flatten)]
    pub f: FnArgs,
    /// unit, random:N or explicit [default: explicit with --box, else unit]
    #[arg(long)]
    pub boxes: Option<String>,
    /// Explicit box lo1,hi1,lo2,hi2,...; repeat for several boxes
    #[arg(long = "box", allow_hyphen_values = true)]
    pub rects: Vec<String>,
    /// Bounding box for random boxes [default: [-1, 1]^n]
    #[arg(long, allow_hyphen_values = true)]
    pub bounds: Option<String>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Smallest edge of a random box
    #[arg(long, default_value_t = 0.1)]
    pub min_width: f64,
    /// Largest accepted relative residual
    #[arg(long, default_value_t = 1e-8)]
    pub tol: f64,
    #[command(flatten)]
    pub quad: QuadArgs,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum EmbeddingKind {
    Pointwise,
    Holder,
    Limit,
}

#[derive(Args, Debug)]
pub struct EmbeddingArgs {
    #[command(flatten)]
    pub f: FnArgs,
    /// Comma-separated exponents, each >= 1
    #[arg(long, default_value = "1,2,4", allow_hyphen_values = true)]
    pub p: String,
    /// Box lo1,hi1,... [default: the gallery support, else [-1, 1]^n]
    #[arg(long = "box", allow_hyphen_values = true)]
    pub rect: Option<String>,
    #[arg(long, value_enum, value_delimiter = ',', default_value = "pointwise,holder,limit")]
    pub kinds: Vec<EmbeddingKind>,
    /// Sampled point pairs per check
    #[arg(long, default_value_t = 4000)]
    pub pairs: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Relative slack in margin >= -tol * rhs
    #[arg(long, default_value_t = 1e-9)]
    pub tol: f64,
    #[command(flatten)]
    pub quad: QuadArgs,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Args, Debug)]
pub struct TraceArgs {
    #[command(flatten)]
    pub f: FnArgs,
    #[arg(long, default_value = "2", allow_hyphen_values = true)]
    pub p: String,
    /// Box lo1,hi1,... [default: the unit cube]
    #[arg(long = "box", allow_hyphen_values = true)]
    pub rect: Option<String>,
    #[arg(long, default_value_t = 1e-9)]
    pub tol: f64,
    #[command(flatten)]
    pub quad: QuadArgs,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Study {
    Counterexample,
    Mollifier,
}

#[derive(Args, Debug)]
pub struct GalleryArgs {
    /// Decreasing smoothing radii in (0, 1/2) [default: 2^-4 .. 2^-12]
    #[arg(long, allow_hyphen_values = true)]
    pub radii: Option<String>,
    /// Dimension of the counterexample (1 or 2)
    #[arg(long, default_value_t = 2)]
    pub n: usize,
    #[arg(long, value_enum, value_delimiter = ',', default_value = "counterexample,mollifier")]
    pub studies: Vec<Study>,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum NormChoice {
    Lp,
    S1p,
    Ws,
    C0,
    Holder,
    HolderNorm,
}

#[derive(Args, Debug)]
pub struct NormsArgs {
    #[command(flatten)]
    pub f: FnArgs,
    /// Box lo1,hi1,... [default: the unit cube]
    #[arg(long = "box", allow_hyphen_values = true)]
    pub rect: Option<String>,
    /// Comma-separated exponents, each >= 1; inf allowed
    #[arg(long, default_value = "2", allow_hyphen_values = true)]
    pub p: String,
    #[arg(long, value_enum, value_delimiter = ',', default_value = "s1p")]
    pub kinds: Vec<NormChoice>,
    /// Hölder exponent [default: (p - 1)/p]
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long, default_value_t = 4000)]
    pub pairs: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub quad: QuadArgs,
    #[command(flatten)]
    pub out: OutArgs,
}
