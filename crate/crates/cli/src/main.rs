use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use ersnet::{Backend, Error};

mod commands;

/// Effective resistance spaces: recovery, reduction, limit graphs and
/// random walks.
#[derive(Debug, Parser)]
#[command(name = "ersnet", version, about)]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct Global {
    /// Arithmetic: exact rationals or 64-bit floats.
    #[arg(long, global = true, env = "ERSNET_BACKEND", default_value = "rational")]
    pub backend: Backend,

    /// Sign band for the float backend.
    #[arg(long, global = true, default_value_t = 1e-9)]
    pub tolerance: f64,

    /// Master seed for every random choice.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,

    /// Write the report here instead of standard output.
    #[arg(long, short, global = true)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Decide whether a metric is an effective resistance and recover its graph.
    CheckErs {
        /// Metric file, `family:n`, or a fixture name.
        #[arg(long)]
        metric: String,
        /// Also write the recovered graph to this file.
        #[arg(long)]
        write_graph: Option<PathBuf>,
    },
    /// Effective resistance between all pairs of vertices.
    Effres {
        /// Graph file or `family:n`.
        #[arg(long)]
        graph: String,
    },
    /// Shortest-path metric with edge lengths `1/c(x,y)`.
    Geodesic {
        #[arg(long)]
        graph: String,
    },
    /// Eliminate vertices by star-mesh transforms.
    Reduce {
        #[arg(long)]
        graph: String,
        /// Vertices to keep, comma separated.
        #[arg(long, value_delimiter = ',', required = true)]
        keep: Vec<String>,
        /// Elimination order, comma separated (default: label order).
        #[arg(long, value_delimiter = ',')]
        order: Option<Vec<String>>,
    },
    /// Estimate the limit graph along an exhaustion.
    Limit {
        /// Family name, or a metric file whose prefixes form the exhaustion.
        source: String,
        /// Sizes: `a..b` (inclusive), `a..=b`, or a comma list.
        sizes: String,
        #[command(flatten)]
        limit: LimitArgs,
        /// Export trajectories as CSV.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Random-walk quantities.
    #[command(subcommand)]
    Walk(WalkCommand),
    /// Write a built-in graph or metric.
    Generate {
        /// Family or fixture name.
        name: String,
        /// Family parameter; fixtures take none.
        n: Option<usize>,
    },
}

#[derive(Debug, Clone, Args)]
pub struct LimitArgs {
    /// Relative change counted as stalled (float backend).
    #[arg(long, default_value_t = 1e-6)]
    pub stall: f64,
    /// Admissible gap in condition (C).
    #[arg(long, default_value_t = 1e-3)]
    pub epsilon: f64,
    /// Strengths above this value count as diverging.
    #[arg(long)]
    pub strength_cap: Option<f64>,
}

#[derive(Debug, Clone, Args)]
pub struct Pair {
    #[arg(long)]
    pub graph: String,
    #[arg(long)]
    pub from: String,
    #[arg(long)]
    pub to: String,
}

#[derive(Debug, Clone, Args)]
pub struct Sampling {
    /// Number of independent walks.
    #[arg(long, default_value_t = 10_000)]
    pub walks: u64,
    /// Step cap per walk.
    #[arg(long, default_value_t = ersnet::walk::DEFAULT_STEP_CAP)]
    pub cap: u64,
    /// Worker threads (0: one per core).
    #[arg(long, default_value_t = 0)]
    pub workers: usize,
}

#[derive(Debug, Subcommand)]
pub enum WalkCommand {
    /// Return and hitting probabilities by linear solves.
    Exact {
        #[command(flatten)]
        pair: Pair,
        /// Vertices killed on arrival, standing in for infinity.
        #[arg(long, value_delimiter = ',')]
        frontier: Option<Vec<String>>,
        /// Keep the transient family reflecting at its last vertex.
        #[arg(long)]
        reflecting: bool,
    },
    /// Monte-Carlo estimate of the resistance.
    Mc {
        #[command(flatten)]
        pair: Pair,
        #[command(flatten)]
        sampling: Sampling,
    },
    /// Compare sampled visit counts with the geometric law.
    Law {
        #[command(flatten)]
        pair: Pair,
        #[command(flatten)]
        sampling: Sampling,
        /// Significance level of the chi-square test.
        #[arg(long, default_value_t = 0.01)]
        alpha: f64,
    },
    /// Walk on the estimated limit graph and compare with the family.
    LimitCheck {
        #[arg(long)]
        family: String,
        #[arg(long)]
        sizes: String,
        #[arg(long)]
        from: String,
        #[arg(long)]
        to: String,
        /// Assert that the walk on the limit graph is recurrent.
        #[arg(long)]
        assert_recurrent: bool,
        #[command(flatten)]
        sampling: Sampling,
        #[command(flatten)]
        limit: LimitArgs,
    },
}

pub const EXIT_OK: u8 = 0;
pub const EXIT_FAILURE: u8 = 1;
pub const EXIT_NOT_ERS: u8 = 2;
pub const EXIT_INDETERMINATE: u8 = 3;
pub const EXIT_PARSE: u8 = 64;
pub const EXIT_INVALID: u8 = 65;

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Parse { .. } => EXIT_PARSE,
        Error::Io(_)
        | Error::SingularMatrix { .. }
        | Error::BackendMismatch { .. }
        | Error::AsymmetricSolution(_)
        | Error::PEqualsOne => EXIT_FAILURE,
        _ => EXIT_INVALID,
    }
}

fn error_kind(e: &Error) -> &'static str {
    match exit_code(e) {
        EXIT_PARSE => "parse",
        EXIT_INVALID => "validation",
        _ => "failure",
    }
}

fn fail(kind: &str, message: &str, code: u8) -> ExitCode {
    let err = serde_json::json!({"error": {"kind": kind, "message": message}});
    eprintln!("{err}");
    ExitCode::from(code)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => return fail("parse", e.to_string().trim(), EXIT_PARSE),
    };
    match commands::run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => fail(error_kind(&e), &e.to_string(), exit_code(&e)),
    }
}
