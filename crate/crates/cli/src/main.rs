use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use fas_antijam::harness::{run_experiment, write_outputs, ConfigFile, RunOptions};
use fas_antijam::{ExperimentKind, Method, Scale};
use log::{info, warn};

#[derive(Parser)]
#[command(name = "fas-antijam", version, about = "Robust anti-jamming beamforming and antenna position simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment and write results.csv, summary.csv and metadata.json.
    Run(RunArgs),
}

#[derive(clap::Args)]
struct RunArgs {
    /// TOML file with optional [scenario] and [experiment] tables.
    #[arg(long)]
    config: PathBuf,
    /// convergence, region_size, uncertainty, sjnr or beampattern.
    #[arg(long)]
    experiment: Option<ExperimentKind>,
    /// Master seed.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value = "results")]
    out: PathBuf,
    /// full or desk.
    #[arg(long)]
    scale: Option<Scale>,
    /// Comma-separated subset of continuous_ao, discrete_bcd, fpa, rpa.
    #[arg(long, value_delimiter = ',')]
    methods: Option<Vec<Method>>,
    /// Seeds per sweep value.
    #[arg(long)]
    num_seeds: Option<usize>,
    /// Record wall time per run (the CSV is then no longer reproducible).
    #[arg(long)]
    timing: bool,
}

fn run(args: RunArgs) -> Result<bool> {
    let mut file = ConfigFile::read(&args.config).with_context(|| format!("reading {}", args.config.display()))?;
    let e = &mut file.experiment;
    if let Some(kind) = args.experiment {
        if e.kind.is_some_and(|k| k != kind) {
            // The file's sweep belongs to another experiment.
            e.sweep = None;
        }
        e.kind = Some(kind);
    }
    e.scale = args.scale.or(e.scale);
    e.methods = args.methods.or(e.methods.take());
    e.num_seeds = args.num_seeds.or(e.num_seeds);
    file.scenario.master_seed = args.seed.or(file.scenario.master_seed);
    let (cfg, spec) = file.resolve()?;

    let opts = RunOptions {
        timing: args.timing,
        ..RunOptions::default()
    };
    let results = run_experiment(&cfg, &spec, &opts)?;
    write_outputs(&args.out, &cfg, &spec, &results).with_context(|| format!("writing to {}", args.out.display()))?;
    info!("wrote {} rows to {}", results.rows.len(), args.out.display());
    if !results.all_ok() {
        warn!("{} runs failed", results.failures());
    }
    Ok(results.all_ok())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match cli.command {
        Command::Run(args) => match run(args) {
            Ok(true) => ExitCode::SUCCESS,
            Ok(false) => ExitCode::from(1),
            Err(e) => {
                eprintln!("error: {e:#}");
                ExitCode::from(2)
            }
        },
    }
}
