use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Parser)]
#[command(name = "pv", version, about = "Counts, transversality checks and oscillatory probes for two-dimensional Parsell-Vinogradov systems")]
#[command(args_override_self = true)]
pub struct Cli {
    /// Worker threads for the compute kernels.
    #[arg(long, global = true, env = "PV_THREADS")]
    pub threads: Option<usize>,
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Output file; standard output when absent.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Defaults to csv for `count` and json elsewhere.
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Report every elapsed time as 0 so reruns are byte-identical.
    #[arg(long, global = true)]
    pub no_timestamp: bool,
    /// INI-style `key = value` defaults; explicit flags win.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Exact and variant solution counts.
    #[command(subcommand)]
    Count(CountCmd),
    /// Power-law exponent fit over count records.
    Fit(FitArgs),
    /// Transversality machinery.
    #[command(subcommand)]
    Trans(TransCmd),
    /// Weyl sums and Monte Carlo probes.
    #[command(subcommand)]
    Osc(OscCmd),
}

#[derive(Debug, Args)]
pub struct NRange {
    /// `a..b` inclusive with optional `:step`, a list `a,b,c`, or one value.
    #[arg(long, conflicts_with = "n_geom", required_unless_present = "n_geom")]
    pub n: Option<String>,
    /// Geometric range `start:ratio:terms`.
    #[arg(long)]
    pub n_geom: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ExactMethod {
    Mitm,
    Brute,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SiteKind {
    Integer,
    Random,
}

#[derive(Debug, Subcommand)]
pub enum CountCmd {
    /// Solutions over `[1, N]²`.
    Exact {
        #[arg(long)]
        k: u32,
        #[arg(long)]
        s: u32,
        #[command(flatten)]
        range: NRange,
        #[arg(long, value_enum, default_value_t = ExactMethod::Mitm)]
        method: ExactMethod,
        /// Largest representation table materialized, in entries.
        #[arg(long)]
        budget: Option<u128>,
    },
    /// Degree-2 system over real sites.
    Relaxed {
        #[arg(long)]
        s: u32,
        #[command(flatten)]
        range: NRange,
        #[arg(long, value_enum, default_value_t = SiteKind::Random)]
        sites: SiteKind,
        /// Fractional bits of random sites.
        #[arg(long, default_value_t = 16)]
        bits: u32,
    },
    /// Perturbed quartic system over `[N, 2N]`.
    Quartic {
        #[command(flatten)]
        range: NRange,
        /// Window constant `c` in `floor(c N²)`.
        #[arg(long, default_value_t = 1.0)]
        c: f64,
    },
}

#[derive(Debug, Args)]
pub struct FitArgs {
    /// Records written by `count` (CSV, or JSON when the name ends in `.json`).
    #[arg(long)]
    pub input: PathBuf,
    /// Largest `|slope − predicted|` still reported as consistent.
    #[arg(long, default_value_t = 0.2)]
    pub tolerance: f64,
}

#[derive(Debug, Subcommand)]
pub enum TransCmd {
    /// Coefficients of `Q_{v,w}`.
    Qpoly {
        #[arg(long)]
        k: u32,
        #[arg(long, allow_hyphen_values = true)]
        v: String,
        #[arg(long, allow_hyphen_values = true)]
        w: String,
        /// Exact rational coefficients (entries must be rationals).
        #[arg(long)]
        exact: bool,
    },
    /// Kernel of the low-order coefficient operator.
    Kernel {
        #[arg(long)]
        k: u32,
    },
    /// Random search for isotropic subspaces.
    Search {
        #[arg(long)]
        k: u32,
        #[arg(long)]
        dim: usize,
        #[arg(long, default_value_t = 10_000)]
        trials: u64,
    },
    /// Brascamp-Lieb dimension condition for tangent planes.
    Bl {
        #[arg(long)]
        k: u32,
        /// Plane base points `t,s;t,s;...`.
        #[arg(long, allow_hyphen_values = true)]
        points: String,
        /// Row basis of V, `a,b,..;c,d,..` with rational entries.
        #[arg(long, allow_hyphen_values = true, conflicts_with = "v_point")]
        v_rows: Option<String>,
        /// V is the tangent plane at `t,s`.
        #[arg(long, allow_hyphen_values = true)]
        v_point: Option<String>,
    },
    /// Transversality estimate over a collection of squares.
    Nu {
        #[arg(long)]
        k: u32,
        /// Squares `x0,y0,side;...`.
        #[arg(long, allow_hyphen_values = true)]
        squares: String,
        #[arg(long)]
        m: usize,
        #[arg(long, default_value_t = 16)]
        grid: usize,
        #[arg(long, default_value_t = 8)]
        restarts: usize,
    },
    /// Squares of side `1/K` near the zero set of a polynomial.
    Zeroset {
        /// Polynomial in `t` and `s`, e.g. `t^2 - s`.
        #[arg(long, allow_hyphen_values = true)]
        q: String,
        /// Squares per side, a power of two.
        #[arg(long = "side-count")]
        side_count: u32,
        #[arg(long, default_value_t = 4)]
        refine: usize,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum NodeKind {
    Right,
    Random,
}

#[derive(Debug, Args)]
pub struct GridArgs {
    /// `ones`, `random` or `single:i,j` (1-based).
    #[arg(long, default_value = "ones")]
    pub coeffs: String,
    #[arg(long, value_enum, default_value_t = NodeKind::Right)]
    pub nodes: NodeKind,
}

#[derive(Debug, Subcommand)]
pub enum OscCmd {
    /// One Weyl sum value.
    Sum {
        #[arg(long)]
        k: u32,
        #[arg(long)]
        n: usize,
        /// Frequency point, comma separated.
        #[arg(long, allow_hyphen_values = true)]
        x: String,
        #[command(flatten)]
        grid: GridArgs,
    },
    /// Monte Carlo torus mean of `|S|^{2s}`.
    Mean {
        #[arg(long)]
        k: u32,
        #[arg(long)]
        s: u32,
        #[arg(long)]
        n: u32,
        #[arg(long, default_value_t = 100_000)]
        samples: u64,
    },
    /// Restriction ratio over a ball.
    Restrict {
        #[arg(long)]
        k: u32,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        p: f64,
        /// Ball radius; defaults to `N^k`.
        #[arg(long)]
        radius: Option<f64>,
        #[arg(long, default_value_t = 10_000)]
        samples: u64,
        /// Use the polynomially decaying ball weight instead of the uniform ball.
        #[arg(long)]
        weighted: bool,
        #[command(flatten)]
        grid: GridArgs,
    },
    /// Decoupling ratio for a cell function.
    Probe {
        #[arg(long)]
        k: u32,
        #[arg(long)]
        n: u64,
        #[arg(long)]
        p: f64,
        #[arg(long, default_value_t = 4_000)]
        samples: u64,
        /// `random` or `single:i,j` (0-based cell).
        #[arg(long, default_value = "random")]
        g: String,
        /// Modulation `xi1,xi2`.
        #[arg(long, allow_hyphen_values = true)]
        xi: Option<String>,
        /// Phase-ascent restarts; replaces `--g` with the best found.
        #[arg(long)]
        search: Option<usize>,
        #[arg(long, default_value_t = 50)]
        steps: usize,
        #[arg(long)]
        weighted: bool,
        #[arg(long)]
        max_panels: Option<usize>,
    },
}
