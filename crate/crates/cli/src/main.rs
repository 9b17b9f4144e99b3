//! `glocal`: compute, inspect and serve glocal graph invariants.
//!
//! Exit codes: 0 success, 1 usage error, 2 input or I/O error, 3 numeric
//! failure (non-convergence, oracle or mode disagreement).

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use glocal::ErrorClass;

#[derive(Debug, Parser)]
#[command(name = "glocal", version, about = "Glocal invariants of large sparse undirected graphs")]
struct Cli {
    /// Increase log verbosity (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Compute invariants and write one file per invariant plus metadata.
    Compute(ComputeArgs),
    /// Extract the largest connected component as an edge list.
    Lcc(LccArgs),
    /// Convert between CSV and GLCV vectors or edge list and Matrix Market graphs.
    Convert(ConvertArgs),
    /// Time chained against independent execution and check they agree.
    Bench(BenchArgs),
    /// Compare production routines with brute-force oracles on a small graph.
    Verify(VerifyArgs),
    /// Write a seeded Erdős–Rényi graph as an edge list.
    Generate(GenerateArgs),
    /// Run the batch-job HTTP service.
    Serve(ServeArgs),
}

#[derive(Debug, Args)]
struct GraphInput {
    /// Graph file (edge list or Matrix Market).
    #[arg(short, long)]
    input: PathBuf,

    /// Input format: edgelist or matrixmarket. Detected when omitted.
    #[arg(long)]
    format: Option<String>,

    /// Keep edges whose summed weight is strictly greater than this.
    #[arg(long, default_value_t = 0.0)]
    threshold: f64,

    /// Restrict to the largest connected component after thresholding.
    #[arg(long)]
    lcc: bool,
}

#[derive(Debug, Args)]
struct InvariantFlags {
    /// Comma-separated subset of deg,ss1,nl3,cc,lp.
    #[arg(long, default_value = "deg,ss1,nl3,cc,lp")]
    invariants: String,

    /// Number of eigenpairs K.
    #[arg(long, default_value_t = glocal::invariants::DEFAULT_EIGENPAIRS)]
    eigs: usize,

    /// Latent position dimension (default min(K, 100)).
    #[arg(long)]
    lp_dim: Option<usize>,

    /// Eigenpair residual tolerance relative to max(1, |λ₁|).
    #[arg(long, default_value_t = glocal::eigen::DEFAULT_TOL)]
    tol: f64,

    /// Matrix-vector product budget per Lanczos run (default 20·K + 100).
    #[arg(long)]
    max_iter: Option<usize>,

    /// Latent position scaling: scaled or eigenvector.
    #[arg(long, default_value = "scaled")]
    scale_mode: String,
}

#[derive(Debug, Args)]
struct ComputeArgs {
    #[command(flatten)]
    graph: GraphInput,
    #[command(flatten)]
    flags: InvariantFlags,
    /// Output directory.
    #[arg(short, long)]
    out: PathBuf,
    /// Per-invariant file format: csv or glcv.
    #[arg(long, default_value = "csv")]
    output_format: String,
}

#[derive(Debug, Args)]
struct LccArgs {
    #[command(flatten)]
    graph: GraphInput,
    /// Output directory for `lcc.edges` and `vertex_map.csv`.
    #[arg(short, long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct ConvertArgs {
    #[arg(short, long)]
    input: PathBuf,
    #[arg(short, long)]
    output: PathBuf,
    /// Source format (edgelist, matrixmarket, csv, glcv); guessed from the extension.
    #[arg(long)]
    from: Option<String>,
    /// Target format; guessed from the extension.
    #[arg(long)]
    to: Option<String>,
    /// CSV value column name (default: input file stem).
    #[arg(long)]
    column: Option<String>,
}

#[derive(Debug, Args)]
struct BenchArgs {
    #[command(flatten)]
    graph: GraphInput,
    #[command(flatten)]
    flags: InvariantFlags,
    /// Also write the report as JSON.
    #[arg(long)]
    json: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct VerifyArgs {
    #[command(flatten)]
    graph: GraphInput,
}

#[derive(Debug, Args)]
struct GenerateArgs {
    #[arg(short)]
    n: usize,
    #[arg(short)]
    p: f64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Output file; stdout when omitted.
    #[arg(short, long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ServeArgs {
    /// Listen address (default 127.0.0.1:8080 or GLOCAL_ADDR).
    #[arg(long)]
    addr: Option<std::net::SocketAddr>,
    /// Job storage directory (default ./glocal-data or GLOCAL_DATA_DIR).
    #[arg(long)]
    data_dir: Option<PathBuf>,
    /// Concurrent jobs (default: available cores or GLOCAL_WORKERS).
    #[arg(long)]
    workers: Option<usize>,
    /// Maximum graph upload in bytes (GLOCAL_MAX_PAYLOAD).
    #[arg(long)]
    max_payload: Option<usize>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();

    let outcome = match cli.command {
        Command::Compute(a) => commands::compute(a),
        Command::Lcc(a) => commands::lcc(a),
        Command::Convert(a) => commands::convert(a),
        Command::Bench(a) => commands::bench(a),
        Command::Verify(a) => commands::verify(a),
        Command::Generate(a) => commands::generate(a),
        Command::Serve(a) => commands::serve(a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let (code, label) = classify(&e);
            eprintln!("glocal: {label} error: {e:#}");
            ExitCode::from(code)
        }
    }
}

/// Exit code and label for an error, from the innermost library error.
fn classify(e: &anyhow::Error) -> (u8, &'static str) {
    for cause in e.chain() {
        if let Some(err) = cause.downcast_ref::<glocal::Error>() {
            return match err.class() {
                ErrorClass::Input => (2, "input"),
                ErrorClass::Io => (2, "I/O"),
                ErrorClass::Numeric => (3, "numeric"),
            };
        }
        if cause.downcast_ref::<commands::Deviation>().is_some() {
            return (3, "numeric");
        }
        if cause.downcast_ref::<std::io::Error>().is_some() {
            return (2, "I/O");
        }
    }
    (2, "input")
}
