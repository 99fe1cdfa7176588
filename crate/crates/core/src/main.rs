use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use log::error;

use contrarian::ingest::InputFormat;
use contrarian::pipeline::{run_stages, write_synthetic, RunConfig, Scenario, Stage, SyntheticSpec};
use contrarian::Error;

/// Contrarian content recommendation over endorsement logs.
#[derive(Parser)]
#[command(name = "contrarian", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse the input log into records and the item pool.
    Ingest(RunArgs),
    /// Build the endorsement graph and bisect it.
    Graph(RunArgs),
    /// Compute user and item polarization scores.
    Score(RunArgs),
    /// Count exposures and endorsements per polarity bucket pair.
    FitAcceptance(RunArgs),
    /// Build the five factor lists per target.
    Rank(RunArgs),
    /// Aggregate the factor lists into recommendations.
    Recommend(RunArgs),
    /// Run every stage from ingest to recommend.
    RunAll(RunArgs),
    /// Write a planted two-community log and its ground truth.
    Synth(SynthArgs),
}

#[derive(Args)]
struct RunArgs {
    /// JSON run configuration; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Input log (ingest and run-all).
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<InputFormat>,
    /// Snapshot directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seed for bisection, Monte Carlo walks and aggregation.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_enum)]
    scenario: Option<Scenario>,
    /// Worker threads; 0 uses every core.
    #[arg(long)]
    workers: Option<usize>,
    /// File with one target user id per line.
    #[arg(long)]
    targets: Option<PathBuf>,
}

#[derive(Args)]
struct SynthArgs {
    /// JSON synthetic spec; defaults when absent.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Directory for log.jsonl and truth.json.
    #[arg(long, default_value = "synth")]
    out: PathBuf,
}

impl RunArgs {
    fn resolve(self) -> Result<RunConfig, Error> {
        let mut config = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        if let Some(v) = self.input {
            config.input = Some(v);
        }
        if let Some(v) = self.format {
            config.format = v;
        }
        if let Some(v) = self.out {
            config.out_dir = v;
        }
        if let Some(v) = self.seed {
            config.seed = v;
        }
        if let Some(v) = self.scenario {
            config.scenario = v;
        }
        if let Some(v) = self.workers {
            config.workers = v;
        }
        if let Some(v) = self.targets {
            config.targets = Some(v);
        }
        config.validate()?;
        Ok(config)
    }
}

fn synth(args: SynthArgs) -> Result<(), Error> {
    let mut spec = match &args.config {
        Some(path) => {
            let json = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
            serde_json::from_str(&json).map_err(|e| Error::Config(e.to_string()))?
        }
        None => SyntheticSpec::default(),
    };
    if let Some(seed) = args.seed {
        spec.seed = seed;
    }
    let (log, truth) = write_synthetic(&spec, &args.out)?;
    println!("{}\n{}", log.display(), truth.display());
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let (stages, args): (&[Stage], RunArgs) = match cli.command {
        Command::Ingest(a) => (&[Stage::Ingest], a),
        Command::Graph(a) => (&[Stage::Graph], a),
        Command::Score(a) => (&[Stage::Score], a),
        Command::FitAcceptance(a) => (&[Stage::FitAcceptance], a),
        Command::Rank(a) => (&[Stage::Rank], a),
        Command::Recommend(a) => (&[Stage::Recommend], a),
        Command::RunAll(a) => (&Stage::ALL, a),
        Command::Synth(a) => {
            return match synth(a) {
                Ok(()) => ExitCode::SUCCESS,
                Err(e) => {
                    error!("synth: {e}");
                    ExitCode::from(e.exit_code() as u8)
                }
            };
        }
    };
    let config = match args.resolve() {
        Ok(c) => c,
        Err(e) => {
            error!("{e}");
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    match run_stages(stages, &config) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            error!("{e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
