use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

/// Estimators, exact checks and certificate reports for random walks on
/// SL(2,R) and their stationary measures on the projective line.
///
/// Every flag below can also be set through the environment variable shown
/// next to it. Exit status: 0 success, 2 a check failed, 1 error.
#[derive(Debug, Parser)]
#[command(name = "furstenberg", version = env!("BUILD_GIT_DESCRIBE"))]
pub struct Cli {
    /// Master seed; every random stream is derived from it.
    #[arg(long, env = "FURSTENBERG_SEED", default_value_t = 0, global = true)]
    pub seed: u64,
    /// Worker threads (0 = one per core). Results do not depend on it.
    #[arg(long, env = "FURSTENBERG_WORKERS", default_value_t = 0, global = true)]
    pub workers: usize,
    /// Sample count [lyapunov: products, 200; stationary and certificate:
    /// stationary samples, 100000; checks: Haar and entropy points, 1000000]
    #[arg(long, env = "FURSTENBERG_SAMPLES", global = true)]
    pub samples: Option<usize>,
    /// Burn-in steps per stationary sample [2000]
    #[arg(long = "burn-in", env = "FURSTENBERG_BURN_IN", global = true)]
    pub burn_in: Option<usize>,
    /// Longest word length for exact enumeration [entropy 10; certificate
    /// and checks 12]
    #[arg(long = "n-max", env = "FURSTENBERG_N_MAX", global = true)]
    pub n_max: Option<usize>,
    /// Run count [renewal: runs per cell, 1000; certificate: Lyapunov
    /// products, 200; checks: Cramér runs, 100000]
    #[arg(long, env = "FURSTENBERG_RUNS", global = true)]
    pub runs: Option<usize>,
    /// Directory for the JSON report and CSV companions; without it only
    /// the JSON report is printed.
    #[arg(long, env = "FURSTENBERG_OUT", global = true)]
    pub out: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct MeasureArgs {
    /// Measure spec JSON file, or `-` for stdin. A report whose `result`
    /// is a measure spec is accepted too.
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Inline measure spec JSON.
    #[arg(long, conflicts_with = "input")]
    pub spec: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Method {
    Forward,
    Attractor,
}

#[derive(Debug, Subcommand)]
#[command(rename_all = "snake_case")]
pub enum Command {
    /// Lyapunov exponent from independent products.
    Lyapunov {
        #[command(flatten)]
        measure: MeasureArgs,
        /// Steps per product.
        #[arg(long, default_value_t = 20_000)]
        steps: usize,
    },
    /// Stationary sample cloud, arc mass and Hölder probe.
    Stationary {
        #[command(flatten)]
        measure: MeasureArgs,
        #[arg(long, value_enum, default_value_t = Method::Forward)]
        method: Method,
        /// Arc length for the largest-arc-mass statistic.
        #[arg(long, default_value_t = 0.5)]
        t: f64,
    },
    /// Order-k detail of a circle measure read from CSV.
    Detail {
        /// Circle measure CSV, or `-` for stdin.
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        r: f64,
        #[arg(long, default_value_t = 1)]
        k: usize,
    },
    /// Hypothesis report for the absolute-continuity condition.
    Certificate {
        #[command(flatten)]
        measure: MeasureArgs,
        /// Arc length for non-degeneracy.
        #[arg(long, default_value_t = 0.5)]
        t: f64,
        /// The constant of the condition, unknown in general.
        #[arg(long = "C", default_value_t = 1.0)]
        c: f64,
        /// Steps per Lyapunov product.
        #[arg(long, default_value_t = 20_000)]
        steps: usize,
    },
    /// Renewal laws over a grid of directions at increasing thresholds.
    Renewal {
        #[command(flatten)]
        measure: MeasureArgs,
        /// Threshold levels P, comma separated.
        #[arg(long = "p-levels", value_delimiter = ',', default_value = "100,10000")]
        p_levels: Vec<f64>,
        /// Number of equally spaced directions.
        #[arg(long, default_value_t = 8)]
        directions: usize,
    },
    /// Ping-pong freeness certificate.
    Pingpong {
        /// Symmetric element `R_θ diag(λ, 1/λ) R_{-θ}` given as `θ,λ`.
        #[arg(long = "element", value_parser = parse_pair)]
        elements: Vec<(f64, f64)>,
        /// Arc tolerance for explicit elements.
        #[arg(long, default_value_t = 0.1)]
        epsilon: f64,
        /// Certify the large-element construction at this r instead.
        #[arg(long = "large-element", conflicts_with = "elements")]
        large_element: Option<f64>,
        #[arg(long = "n-steps", default_value_t = 1)]
        n_steps: u32,
        #[arg(long)]
        symmetrize: bool,
    },
    /// Exact entropy envelope and height bound.
    Entropy {
        #[command(flatten)]
        measure: MeasureArgs,
    },
    /// Full analytic and property check suite, as JSON lines.
    Checks {
        /// Randomized instances per property family.
        #[arg(long, default_value_t = 100)]
        instances: usize,
    },
    /// Print the measure spec of an example family.
    Example {
        #[command(subcommand)]
        family: ExampleFamily,
    },
}

#[derive(Debug, Clone, Subcommand)]
#[command(rename_all = "snake_case")]
pub enum ExampleFamily {
    /// Uniform on a rational rotation and a diagonal element.
    TwoGen {
        #[arg(long)]
        n: u64,
    },
    /// Conjugates of a few entries by powers of the rotation by π/a.
    Rotational {
        #[arg(long)]
        a: u32,
        /// Entries as a JSON array of 2×2 exact matrices.
        #[arg(long)]
        entries: Option<String>,
    },
    /// Large diagonal elements conjugated by exact rotations.
    LargeElement {
        #[arg(long)]
        r: f64,
        #[arg(long = "n-steps", default_value_t = 1)]
        n_steps: u32,
        #[arg(long)]
        symmetrize: bool,
    },
}

fn parse_pair(s: &str) -> Result<(f64, f64), String> {
    let (a, b) = s.split_once(',').ok_or_else(|| format!("expected θ,λ but got {s:?}"))?;
    let a = a.trim().parse::<f64>().map_err(|e| format!("θ: {e}"))?;
    let b = b.trim().parse::<f64>().map_err(|e| format!("λ: {e}"))?;
    Ok((a, b))
}
