//! `recad`: execute, sample, reconstruct and evaluate sketch-extrude sequences.

mod commands;
mod output;

use clap::{Args, Parser, Subcommand};
use recad_core::selection::Strategy;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Debug, Parser)]
#[command(name = "recad", version, about = "Sketch-extrude CAD sequence reconstruction from point clouds")]
struct Cli {
    /// Worker threads for data-parallel kernels (0 = all cores).
    #[arg(long, global = true, env = "RECAD_THREADS", default_value_t = 0)]
    threads: usize,
    /// More log output; repeat for debug level.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Validate and execute a sequence, exporting a mesh.
    Execute(ExecuteArgs),
    /// Sample the surface of a sequence into a PLY cloud.
    Sample(SampleArgs),
    /// Reconstruct a sequence from a point cloud.
    Reconstruct(ReconstructArgs),
    /// Score predicted sequences against ground truth.
    Evaluate(EvaluateArgs),
    /// Detect planes in a point cloud.
    DetectPlanes(DetectPlanesArgs),
    /// Check bbox-loss derivatives against finite differences.
    DiffCheck(DiffCheckArgs),
    /// Generate a random synthetic model.
    Generate(GenerateArgs),
    /// Convert between sequence JSON and token text.
    Tokenize(TokenizeArgs),
}

#[derive(Debug, Args)]
pub struct ExecuteArgs {
    /// Sequence JSON or token text.
    pub input: PathBuf,
    /// Output OBJ mesh.
    #[arg(long)]
    pub obj: Option<PathBuf>,
    /// Marching grid resolution along the longest axis.
    #[arg(long, default_value_t = 128)]
    pub res: usize,
}

#[derive(Debug, Args)]
pub struct SampleArgs {
    pub input: PathBuf,
    #[arg(long, short)]
    pub out: PathBuf,
    #[arg(long, short, default_value_t = 8192)]
    pub n: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct ReconstructArgs {
    /// Target cloud (PLY or XYZ).
    pub input: PathBuf,
    /// Output sequence JSON.
    #[arg(long, short)]
    pub out: PathBuf,
    /// Directory for the trace, resolved config and per-step dumps.
    #[arg(long)]
    pub trace: Option<PathBuf>,
    /// Pipeline configuration JSON; flags override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, value_parser = parse_strategy)]
    pub strategy: Option<Strategy>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub max_steps: Option<usize>,
    #[arg(long)]
    pub n_points: Option<usize>,
    #[arg(long)]
    pub stop_cd: Option<f64>,
    /// Use the cloud as given instead of fitting it into the unit box.
    #[arg(long)]
    pub no_normalize: bool,
    /// Marching grid resolution of the per-step OBJ dumps.
    #[arg(long, default_value_t = 96)]
    pub dump_res: usize,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// Directory of predicted sequences (JSON or token text).
    #[arg(long)]
    pub pred: PathBuf,
    /// Directory of ground truth (sequences or PLY/XYZ clouds).
    #[arg(long)]
    pub gt: PathBuf,
    /// Report JSON; the CSV is written next to it.
    #[arg(long, short)]
    pub out: PathBuf,
    #[arg(long, default_value_t = recad_core::metrics::DEFAULT_SAMPLES)]
    pub samples: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct DetectPlanesArgs {
    pub input: PathBuf,
    /// Inlier distance threshold.
    #[arg(long, default_value_t = 1e-3)]
    pub t: f64,
    /// Minimum inliers per plane.
    #[arg(long, default_value_t = 128)]
    pub d: usize,
    #[arg(long, default_value_t = 8)]
    pub max_planes: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output JSON; stdout when omitted.
    #[arg(long, short)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct DiffCheckArgs {
    #[arg(long, default_value_t = 100)]
    pub draws: usize,
    #[arg(long, default_value_t = 1e-5)]
    pub h: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, short)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 2, value_parser = clap::value_parser!(u8).range(1..=4))]
    pub steps: u8,
    /// Output sequence JSON.
    #[arg(long, short)]
    pub out: PathBuf,
    /// Also write the sampled cloud as PLY.
    #[arg(long)]
    pub cloud: Option<PathBuf>,
    #[arg(long, short, default_value_t = 8192)]
    pub n: usize,
}

#[derive(Debug, Args)]
pub struct TokenizeArgs {
    /// `.json` is encoded to token text, anything else decoded to JSON.
    pub input: PathBuf,
    #[arg(long, short)]
    pub out: Option<PathBuf>,
}

fn parse_strategy(s: &str) -> Result<Strategy, String> {
    match s.parse()? {
        Strategy::Oracle => Err("the oracle strategy needs ground truth and is not available here".into()),
        st => Ok(st),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    if let Err(e) = configure_threads(cli.threads) {
        eprintln!("error: {e}");
        return ExitCode::from(1);
    }
    let result = match &cli.command {
        Command::Execute(a) => commands::execute(a),
        Command::Sample(a) => commands::sample(a),
        Command::Reconstruct(a) => commands::reconstruct(a),
        Command::Evaluate(a) => commands::evaluate(a),
        Command::DetectPlanes(a) => commands::detect_planes(a),
        Command::DiffCheck(a) => commands::diff_check(a),
        Command::Generate(a) => commands::generate(a),
        Command::Tokenize(a) => commands::tokenize(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}

#[cfg(feature = "parallel")]
fn configure_threads(n: usize) -> Result<(), String> {
    if n > 0 {
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| e.to_string())?;
    }
    Ok(())
}

#[cfg(not(feature = "parallel"))]
fn configure_threads(_: usize) -> Result<(), String> {
    Ok(())
}
