//! Command-line front end: configuration ingestion, experiment orchestration,
//! CSV/report emission.

// negated comparisons reject NaN along with the out-of-domain sign
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod config;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use commands::{Outcome, VerifySuite};
use config::ExperimentConfig;

#[derive(Parser)]
#[command(
    name = "toa-kg",
    version,
    about = "Time-of-arrival spectra for free positive-energy Klein-Gordon wave packets"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compute an arrival-time spectrum with summary statistics
    Spectrum(RunArgs),
    /// Run structural verification suites (orthogonality, completeness,
    /// hermiticity, commutator)
    Verify(VerifyArgs),
    /// Non-relativistic and classical limit comparison tables
    Limits(RunArgs),
    /// Validate a config and print it back normalized
    Packet {
        #[arg(long)]
        config: PathBuf,
    },
}

#[derive(Args)]
struct RunArgs {
    /// Path to the JSON experiment config
    #[arg(long)]
    config: PathBuf,
    /// Output directory for CSVs, summary and manifest
    #[arg(long, default_value = "toa-kg-out")]
    out: PathBuf,
    /// Override the config's seed for randomized suites
    #[arg(long)]
    seed: Option<u64>,
    /// Override the config's radial resolution
    #[arg(long)]
    resolution: Option<usize>,
}

#[derive(Args)]
struct VerifyArgs {
    #[command(flatten)]
    run: RunArgs,
    /// Which suite to run
    #[arg(long, value_enum, default_value_t = SuiteArg::All)]
    suite: SuiteArg,
}

#[derive(Clone, Copy, ValueEnum)]
enum SuiteArg {
    Orthogonality,
    Completeness,
    Hermiticity,
    Commutator,
    All,
}

impl From<SuiteArg> for VerifySuite {
    fn from(s: SuiteArg) -> Self {
        match s {
            SuiteArg::Orthogonality => VerifySuite::Orthogonality,
            SuiteArg::Completeness => VerifySuite::Completeness,
            SuiteArg::Hermiticity => VerifySuite::Hermiticity,
            SuiteArg::Commutator => VerifySuite::Commutator,
            SuiteArg::All => VerifySuite::All,
        }
    }
}

fn init_thread_pool() -> anyhow::Result<()> {
    if let Ok(raw) = std::env::var("TOA_KG_THREADS") {
        let n: usize = raw
            .parse()
            .map_err(|_| anyhow::anyhow!("TOA_KG_THREADS must be a positive integer, got {raw:?}"))?;
        if n == 0 {
            anyhow::bail!("TOA_KG_THREADS must be a positive integer, got 0");
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| anyhow::anyhow!("cannot configure thread pool: {e}"))?;
    }
    Ok(())
}

fn load(config: &PathBuf) -> anyhow::Result<(ExperimentConfig, Vec<u8>)> {
    let bytes = std::fs::read(config)
        .map_err(|e| anyhow::anyhow!("cannot read config {}: {e}", config.display()))?;
    let cfg = ExperimentConfig::load(config)?;
    Ok((cfg, bytes))
}

fn run() -> anyhow::Result<Outcome> {
    init_thread_pool()?;
    let cli = Cli::parse();
    match cli.cmd {
        Command::Spectrum(args) => {
            let (cfg, bytes) = load(&args.config)?;
            commands::cmd_spectrum(&cfg, &bytes, &args.out, args.resolution)
        }
        Command::Verify(args) => {
            let (cfg, bytes) = load(&args.run.config)?;
            commands::cmd_verify(
                &cfg,
                &bytes,
                &args.run.out,
                args.suite.into(),
                args.run.seed,
                args.run.resolution,
            )
        }
        Command::Limits(args) => {
            let (cfg, bytes) = load(&args.config)?;
            commands::cmd_limits(&cfg, &bytes, &args.out, args.resolution)
        }
        Command::Packet { config } => {
            let (cfg, _) = load(&config)?;
            commands::cmd_packet(&cfg)
        }
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(Outcome::Pass) => ExitCode::SUCCESS,
        Ok(Outcome::ToleranceFailure) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
