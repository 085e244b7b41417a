use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use conflict_seq::config::PipelineConfig;
use conflict_seq::pipeline::{Pipeline, Stage, StageOutcome};

/// Conflict trajectories from georeferenced event data.
#[derive(Debug, Parser)]
#[command(name = "conflict-seq", version)]
struct Cli {
    /// Pipeline configuration (TOML).
    #[arg(long, global = true, default_value = "conflict-seq.toml")]
    config: PathBuf,
    /// Worker threads for distances and permutations (default: all cores).
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Master seed, overriding the config file.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct StageArgs {
    /// Output root, overriding `output_dir` from the config.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a synthetic event file from the configured scenario.
    Synth(StageArgs),
    /// Parse, filter and grid the event CSV.
    Ingest(StageArgs),
    /// Assign a conflict state to every cell-year.
    Classify(StageArgs),
    /// Build per-cell state sequences, transition rates and substitution costs.
    Sequences(StageArgs),
    /// Pairwise Optimal Matching distances.
    Distances(StageArgs),
    /// Ward clustering and the k-type cut.
    Cluster(StageArgs),
    /// Per-type transition statistics, hitting times and stopping times.
    Stats(StageArgs),
    /// Join-count spatial autocorrelation between types.
    Joins(StageArgs),
    /// Collect the summary tables and maps into one directory.
    Report(StageArgs),
    /// Run every stage in order.
    Run(StageArgs),
    /// Validate the configuration and print its hash.
    Check,
}

fn print_outcome(o: &StageOutcome) {
    eprintln!("[{}] wrote {} file(s)", o.stage, o.outputs.len());
    for w in &o.warnings {
        eprintln!("[{}] warning: {w}", o.stage);
    }
}

fn run(cli: Cli) -> conflict_seq::Result<()> {
    let mut cfg = PipelineConfig::load(&cli.config)?;
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if cli.workers.is_some() {
        cfg.workers = cli.workers;
    }
    let (stage, out) = match cli.command {
        Command::Check => {
            cfg.validate()?;
            println!("{}", cfg.hash());
            return Ok(());
        }
        Command::Run(a) => {
            for o in Pipeline::new(cfg, a.out)?.run_all()? {
                print_outcome(&o);
            }
            return Ok(());
        }
        Command::Synth(a) => (Stage::Synth, a.out),
        Command::Ingest(a) => (Stage::Ingest, a.out),
        Command::Classify(a) => (Stage::Classify, a.out),
        Command::Sequences(a) => (Stage::Sequences, a.out),
        Command::Distances(a) => (Stage::Distances, a.out),
        Command::Cluster(a) => (Stage::Cluster, a.out),
        Command::Stats(a) => (Stage::Stats, a.out),
        Command::Joins(a) => (Stage::Joins, a.out),
        Command::Report(a) => (Stage::Report, a.out),
    };
    print_outcome(&Pipeline::new(cfg, out)?.run(stage)?);
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
