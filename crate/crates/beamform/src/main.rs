use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use twr_beamform::channel_dump::{write_channel, ChannelDump};
use twr_beamform::config::ExperimentConfig;
use twr_beamform::csv_out::write_rows;
use twr_beamform::sweep::{run_sweep, threads_from_env};
use twr_core::channel::ChannelSet;
use twr_core::trial::noise_variance;

#[derive(Parser)]
#[command(name = "twr-beamform", version, about = "Two-way relay beamforming experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a Monte Carlo sweep and write the CSV table.
    Run {
        #[command(flatten)]
        scenario: Scenario,
        #[arg(long)]
        trials: Option<usize>,
        /// Output path; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write the channel realization a trial seed produces.
    DumpChannel {
        #[command(flatten)]
        scenario: Scenario,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args)]
struct Scenario {
    /// fig1a, fig1b, fig2a or fig2b.
    #[arg(long)]
    preset: Option<String>,
    /// Flat key=value file applied after the preset.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Use 64 relay antennas instead of the desk-scale 16.
    #[arg(long)]
    full: bool,
}

enum Failure {
    Config(anyhow::Error),
    Runtime(anyhow::Error),
}

impl Scenario {
    fn load(&self) -> Result<ExperimentConfig, Failure> {
        let mut cfg = match &self.preset {
            Some(name) => ExperimentConfig::preset(name).map_err(|e| Failure::Config(e.into()))?,
            None => ExperimentConfig::default(),
        };
        if let Some(path) = &self.config {
            cfg.apply_file(path).map_err(|e| Failure::Config(e.into()))?;
        }
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        if self.full {
            cfg.m_rs = 64;
        }
        Ok(cfg)
    }
}

fn create(path: &PathBuf) -> Result<BufWriter<File>, Failure> {
    File::create(path)
        .map(BufWriter::new)
        .with_context(|| format!("cannot create {}", path.display()))
        .map_err(Failure::Runtime)
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Run { scenario, trials, out } => {
            let mut cfg = scenario.load()?;
            if let Some(t) = trials {
                cfg.trials = t;
            }
            cfg.validate().map_err(|e| Failure::Config(e.into()))?;
            let threads = threads_from_env().map_err(|e| Failure::Config(e.into()))?;
            let sink: Box<dyn Write> = match &out {
                Some(path) => Box::new(create(path)?),
                None => Box::new(io::stdout().lock()),
            };
            log::info!("{} grid points x {} trials", cfg.points().len(), cfg.trials);
            let rows = run_sweep(&cfg, threads).map_err(|e| Failure::Runtime(e.into()))?;
            write_rows(sink, &rows).context("writing results").map_err(Failure::Runtime)?;
        }
        Command::DumpChannel { scenario, out } => {
            let cfg = scenario.load()?;
            cfg.validate().map_err(|e| Failure::Config(e.into()))?;
            let trial = cfg.trial_config(cfg.points()[0]);
            let sigma2 = noise_variance(cfg.snr_db[0]);
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            let channel = ChannelSet::generate(&mut rng, &trial.channel_params(), sigma2, sigma2)
                .context("drawing channel")
                .map_err(Failure::Runtime)?;
            let dump = ChannelDump { seed: cfg.seed, channel };
            write_channel(create(&out)?, &dump).context("writing channel").map_err(Failure::Runtime)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(e)) => {
            eprintln!("config error: {e:#}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(3)
        }
    }
}
