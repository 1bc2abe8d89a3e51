mod commands;
mod config;

use std::io;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use ctcfar::eval::DetectorKind;
use ctcfar::{Error, Result};

use config::RunConfig;

/// CFAR detection on simulated FMCW range-Doppler frames.
#[derive(Parser)]
#[command(name = "ctcfar", version)]
struct Cli {
    /// TOML run configuration.
    #[arg(long, global = true, conflicts_with = "preset")]
    config: Option<PathBuf>,
    /// Built-in configuration: table1, fig6_sweep or fig8_targets.
    #[arg(long, global = true)]
    preset: Option<String>,
    /// Overrides every seed in the configuration.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Cube file for `simulate`, output directory otherwise.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write an RDC1 cube for the configured scene; targets go to stdout.
    Simulate,
    /// Run one detector on an RDC1 cube.
    Detect {
        cube: PathBuf,
        #[arg(long, default_value = "ct")]
        detector: DetectorKind,
    },
    /// Sweep detectors over the configured SNR / P_FA / target-count grid.
    Montecarlo {
        /// Replaces the configured detector list; repeatable.
        #[arg(long)]
        detector: Vec<DetectorKind>,
    },
    /// Background-fit RMSE against SNR and a Q-Q table.
    NoiseEval,
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Io(_) => 1,
        Error::Config(_) => 3,
        Error::Parse { .. } => 4,
        Error::Degenerate(_) => 5,
        Error::Numerical(_) => 6,
        Error::Estimation(_) => 7,
    }
}

fn run(cli: Cli) -> Result<()> {
    let mut cfg = match (&cli.config, &cli.preset) {
        (Some(path), _) => RunConfig::load(path)?,
        (None, Some(name)) => RunConfig::preset(name)?,
        (None, None) => RunConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.reseed(seed);
    }
    let out_dir = cli.out.clone().unwrap_or_else(|| cfg.out_dir.clone());
    match cli.command {
        Command::Simulate => {
            let path = cli.out.unwrap_or_else(|| cfg.out_dir.join("cube.rdc1"));
            commands::simulate(&cfg, &path, io::stdout().lock())?;
            eprintln!("wrote {}", path.display());
        }
        Command::Detect { cube, detector } => {
            let (set, out) = commands::detect(&cfg, &cube, detector, &out_dir)?;
            eprintln!("{} detections -> {}, {}", set.len(), out.detections.display(), out.noise.display());
        }
        Command::Montecarlo { detector } => {
            if !detector.is_empty() {
                cfg.montecarlo.detectors = detector;
            }
            let path = commands::montecarlo(&cfg, &out_dir)?;
            eprintln!("wrote {}", path.display());
        }
        Command::NoiseEval => {
            let (rmse, qq) = commands::noise_eval(&cfg, &out_dir)?;
            eprintln!("wrote {}, {}", rmse.display(), qq.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
