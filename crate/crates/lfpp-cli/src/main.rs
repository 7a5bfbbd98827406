//! `lfpp`: reproducible command-line front end for Gaussian free field
//! sampling, field coupling, first-passage distance queries, and exponent
//! experiments.
//!
//! Exit codes: 0 success, 1 error, 2 assertion flag failed.

mod commands;
mod config;

use clap::{Args, Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "lfpp",
    version,
    about = "First passage percolation over Gaussian free fields"
)]
struct Cli {
    /// TOML config file; command-line flags override file values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Worker threads for replicate-level parallelism.
    #[arg(long, global = true)]
    jobs: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample a zero-boundary DGFF and write a field snapshot.
    Sample(SampleArgs),
    /// Build a coupled (coarse, fine, circle-average) field bundle.
    Couple(CoupleArgs),
    /// Distance queries against snapshots or coupling bundles.
    Dist(DistArgs),
    /// Compare DLFPP and fine-mesh LFPP distances on a coupling.
    Compare(CompareArgs),
    /// Estimate the annulus distance exponent over a size ladder.
    Exponent(ExponentArgs),
    /// Level-set crossing search with the DLFPP cost bound.
    Levelset(LevelsetArgs),
    /// Combined exponent + level-set experiment report.
    Report(ReportArgs),
}

#[derive(Args)]
struct SampleArgs {
    /// Lattice scale (grid {0..n}²).
    #[arg(long)]
    n: Option<u32>,
    /// RNG seed (required; never defaulted).
    #[arg(long)]
    seed: Option<u64>,
    /// Output snapshot path.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CoupleArgs {
    /// Coarse lattice scale (n ≥ 12).
    #[arg(long)]
    n: Option<u32>,
    /// Mesh refinement (m ≥ 2; fine scale is n·m).
    #[arg(long)]
    m: Option<u32>,
    #[arg(long)]
    seed: Option<u64>,
    /// exact-coarse | direct-projection
    #[arg(long)]
    mode: Option<String>,
    /// Projection solver relative-residual tolerance.
    #[arg(long)]
    tolerance: Option<f64>,
    /// Output prefix: writes <prefix>.coarse.fld, .fine.fld, .circ.fld, .json.
    #[arg(long)]
    out_prefix: Option<PathBuf>,
    /// Region file for the discrepancy print (default: centered half-square).
    #[arg(long)]
    region: Option<PathBuf>,
}

#[derive(Args)]
struct DistArgs {
    /// dlfpp | lattice-lfpp | fine-lfpp
    #[arg(long)]
    kind: Option<String>,
    #[arg(long)]
    xi: Option<f64>,
    /// Field snapshot (dlfpp: coarse field; lattice-lfpp: circle-average field).
    #[arg(long)]
    field: Option<PathBuf>,
    /// Coupling bundle prefix (fine-lfpp).
    #[arg(long)]
    coupling: Option<PathBuf>,
    /// Source vertex "x,y" (vertex metrics).
    #[arg(long)]
    u: Option<String>,
    /// Target vertex "x,y" (vertex metrics).
    #[arg(long)]
    v: Option<String>,
    /// Source point "x,y" in coarse units (fine-lfpp).
    #[arg(long)]
    z: Option<String>,
    /// Target point "x,y" in coarse units (fine-lfpp).
    #[arg(long)]
    w: Option<String>,
    /// Multi-vertex source set "x,y;x,y;..." (vertex metrics).
    #[arg(long)]
    source: Option<String>,
    /// Multi-vertex target set "x,y;x,y;..." (vertex metrics).
    #[arg(long)]
    target: Option<String>,
    /// Region file restricting paths (default: full square).
    #[arg(long)]
    region: Option<PathBuf>,
    /// JSON-lines batch file; one query per line.
    #[arg(long)]
    queries: Option<PathBuf>,
    /// CSV output path (default: stdout).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CompareArgs {
    /// Coupling bundle prefix to load.
    #[arg(long)]
    coupling: Option<PathBuf>,
    /// Inline coupling parameters (alternative to --coupling).
    #[arg(long)]
    n: Option<u32>,
    #[arg(long)]
    m: Option<u32>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    pairs: Option<usize>,
    #[arg(long)]
    xi: Option<f64>,
    /// Region file (default: centered half-square).
    #[arg(long)]
    region: Option<PathBuf>,
    /// CSV output path for per-pair rows.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ExponentArgs {
    #[arg(long)]
    xi: Option<f64>,
    /// Comma-separated size ladder, e.g. 64,128,256,512.
    #[arg(long)]
    ladder: Option<String>,
    #[arg(long)]
    reps: Option<u32>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out_csv: Option<PathBuf>,
    #[arg(long)]
    out_json: Option<PathBuf>,
    /// Exit with code 2 when the fitted slope exceeds this value.
    #[arg(long)]
    assert_slope_max: Option<f64>,
    /// Slack in the d_γ ≥ 2 + γ²/2 − slack bound check.
    #[arg(long, default_value_t = 0.3)]
    bound_slack: f64,
}

#[derive(Args)]
struct LevelsetArgs {
    #[arg(long)]
    n: Option<u32>,
    /// Threshold exponent χ ∈ (1/2, 1); threshold is (ln n)^χ.
    #[arg(long)]
    chi: Option<f64>,
    /// ξ for the crossing cost bound.
    #[arg(long)]
    xi: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    samples: Option<u32>,
    #[arg(long)]
    out_csv: Option<PathBuf>,
    /// Exit with code 2 when any replicate finds no crossing.
    #[arg(long)]
    assert_crossing: bool,
}

#[derive(Args)]
struct ReportArgs {
    #[arg(long)]
    xi: Option<f64>,
    #[arg(long)]
    ladder: Option<String>,
    #[arg(long)]
    reps: Option<u32>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    chi: Option<f64>,
    #[arg(long)]
    levelset_samples: Option<u32>,
    #[arg(long)]
    out_csv: Option<PathBuf>,
    #[arg(long)]
    out_json: Option<PathBuf>,
    #[arg(long)]
    assert_slope_max: Option<f64>,
    #[arg(long, default_value_t = 0.3)]
    bound_slack: f64,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(jobs) = cli.jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .ok();
    }
    let cfg = match config::load(cli.config.as_deref()) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(1);
        }
    };
    let outcome = match cli.command {
        Command::Sample(a) => commands::sample(a, &cfg),
        Command::Couple(a) => commands::couple(a, &cfg),
        Command::Dist(a) => commands::dist(a, &cfg),
        Command::Compare(a) => commands::compare(a, &cfg),
        Command::Exponent(a) => commands::exponent(a, &cfg),
        Command::Levelset(a) => commands::levelset(a, &cfg),
        Command::Report(a) => commands::report(a, &cfg),
    };
    match outcome {
        Ok(commands::Outcome::Ok) => ExitCode::SUCCESS,
        Ok(commands::Outcome::AssertionFailed(msg)) => {
            eprintln!("assertion failed: {msg}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
