//! `drillscope` — drive the drill-experiment pipeline from the shell.
//!
//! Every subcommand writes a `<command>.manifest.json` next to its outputs:
//! a config echo plus SHA-256 hashes of each file read and written, so runs
//! are reproducible and comparable byte for byte.

mod commands;
mod manifest;

use clap::{Args, Parser, Subcommand};
use std::path::PathBuf;

#[derive(Parser)]
#[command(
    name = "drillscope",
    version,
    about = "Generate drill sets, simulate learner cohorts, and analyze the response logs"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate drill-set JSON files from a layout or a synthetic pool
    Generate(GenerateArgs),
    /// Run a simulated cohort through drill sets, producing a response log
    Simulate(SimulateArgs),
    /// Derive the per-response feature table from a log
    Features(FeaturesArgs),
    /// Fit seen-vs-unseen attempt curves (memorization vs transfer)
    AnalyzeRote(RoteArgs),
    /// Run the cue/hint analyses: strata, grade changes, conversion, pairs
    AnalyzeHints(HintsArgs),
    /// Monte Carlo power curve / required sample size by resampling
    Power(PowerArgs),
    /// Write the built-in reference datasets used by the validation suite
    Fixtures(FixturesArgs),
    /// Aggregate the hint and attempt-curve analyses into one JSON document
    Report(ReportArgs),
}

#[derive(Args)]
pub struct GenerateArgs {
    /// Ready-made layout: "final" (8 sets) or "midterm" (4 sets)
    #[arg(long, conflicts_with = "pool")]
    pub layout: Option<String>,
    /// Synthetic option pool as CORRECT:DISTRACTORS, e.g. 40:60
    #[arg(long)]
    pub pool: Option<String>,
    /// Items per set (pool mode only; layouts fix their own counts)
    #[arg(long, default_value_t = 300)]
    pub n_items: u32,
    /// Drill-set id (pool mode only)
    #[arg(long, default_value = "ds01")]
    pub set_id: String,
    /// Fraction of items that get a hinted duplicate (0 disables pairing)
    #[arg(long, default_value_t = 0.0)]
    pub hint_rate: f64,
    /// Master seed; per-set streams are derived from it
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output directory for the drill-set JSON files
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args)]
pub struct SimulateArgs {
    /// Drill-set JSON files, or directories containing them
    #[arg(long = "in", required = true, num_args = 1..)]
    pub input: Vec<PathBuf>,
    /// Cohort spec JSON file ({"groups": [{"id_prefix", "count", "preset", "overrides"}]})
    #[arg(long, conflicts_with = "preset")]
    pub cohort: Option<PathBuf>,
    /// Inline cohort as PRESET:COUNT pairs, e.g. rote:100,meaningful:200
    #[arg(long)]
    pub preset: Option<String>,
    /// Serves per student per drill set
    #[arg(long, default_value_t = 40)]
    pub attempts: u32,
    /// Master seed; each (student, set) session derives its own stream
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output response-log file (JSONL)
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args)]
pub struct FeaturesArgs {
    /// Response log: .jsonl, or .csv ingested via --map
    #[arg(long = "in")]
    pub input: PathBuf,
    /// CSV column map, FIELD=COLUMN pairs, e.g. student_id=user,grade=score
    #[arg(long)]
    pub map: Option<String>,
    /// Output feature CSV file
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args)]
pub struct RoteArgs {
    /// Response log: .jsonl, or .csv ingested via --map
    #[arg(long = "in")]
    pub input: PathBuf,
    /// CSV column map, FIELD=COLUMN pairs
    #[arg(long)]
    pub map: Option<String>,
    /// Largest attempt index included in the curves
    #[arg(long, default_value_t = 20)]
    pub t_max: u32,
    /// Output directory (curves.csv, rote_fit.json)
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args)]
pub struct HintsArgs {
    /// Response log: .jsonl, or .csv ingested via --map
    #[arg(long = "in")]
    pub input: PathBuf,
    /// CSV column map, FIELD=COLUMN pairs
    #[arg(long)]
    pub map: Option<String>,
    /// Ridge penalty on per-student effects in the interaction fits
    #[arg(long, default_value_t = 1.0)]
    pub ridge: f64,
    /// Output directory (hints.json)
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args)]
pub struct PowerArgs {
    /// Outcome rows (.csv with cue,outcome columns) or a response log
    /// (.jsonl, reduced to its wrong-start conversion rows)
    #[arg(long = "in")]
    pub input: PathBuf,
    /// CSV column map for .jsonl ingestion paths that need it
    #[arg(long)]
    pub map: Option<String>,
    /// Rejection level of the resampled test
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    /// Monte Carlo replicates per curve point
    #[arg(long, default_value_t = 2000)]
    pub sims: u32,
    /// Seed for the resampling streams
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Explicit sample sizes for the curve, e.g. --n 805,1600,3200
    #[arg(long, value_delimiter = ',', conflicts_with = "target")]
    pub n: Vec<u32>,
    /// Invert the curve: find the smallest n reaching this power
    #[arg(long)]
    pub target: Option<f64>,
    /// Output directory (power_curve.csv, required_n.json with --target)
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args)]
pub struct FixturesArgs {
    /// Output directory for the reference datasets
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args)]
pub struct ReportArgs {
    /// Response log: .jsonl, or .csv ingested via --map
    #[arg(long = "in")]
    pub input: PathBuf,
    /// CSV column map, FIELD=COLUMN pairs
    #[arg(long)]
    pub map: Option<String>,
    /// Ridge penalty on per-student effects in the interaction fits
    #[arg(long, default_value_t = 1.0)]
    pub ridge: f64,
    /// Largest attempt index included in the curves
    #[arg(long, default_value_t = 20)]
    pub t_max: u32,
    /// Output directory (report.json)
    #[arg(long)]
    pub out: PathBuf,
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match &cli.command {
        Command::Generate(args) => commands::generate(args),
        Command::Simulate(args) => commands::simulate(args),
        Command::Features(args) => commands::features(args),
        Command::AnalyzeRote(args) => commands::analyze_rote(args),
        Command::AnalyzeHints(args) => commands::analyze_hints(args),
        Command::Power(args) => commands::power(args),
        Command::Fixtures(args) => commands::fixtures(args),
        Command::Report(args) => commands::report(args),
    }
}

fn main() {
    let cli = Cli::parse();
    if let Err(err) = run(cli) {
        eprintln!("error: {err:#}");
        std::process::exit(1);
    }
}
