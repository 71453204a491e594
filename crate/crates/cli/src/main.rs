use std::path::PathBuf;
use std::process::ExitCode;

use ambilearn_core::ambiguity::RadiusMode;
use clap::Parser;
use log::error;

mod commands;
mod config;
mod svg;

use config::{Mode, RunConfig, Seeds};

/// Exit status for a run that failed at runtime or did not pass verification.
const EXIT_RUNTIME: u8 = 1;
/// Exit status for unusable arguments or configuration.
const EXIT_USAGE: u8 = 2;

#[derive(Debug, Clone, Copy, clap::ValueEnum)]
#[value(rename_all = "snake_case")]
enum RadiusArg {
    Full,
    ConcentrationOnly,
}

#[derive(Debug, Parser)]
#[command(
    name = "ambilearn",
    version,
    about = "Learn stochastic dynamics with adaptive Wasserstein ambiguity sets"
)]
struct Cli {
    /// JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    /// First seed (with a seed count) or the only seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Number of seeded trials.
    #[arg(long)]
    seeds: Option<usize>,
    #[arg(long)]
    out_dir: Option<PathBuf>,
    #[arg(long, value_enum)]
    radius_mode: Option<RadiusArg>,
    #[arg(long, value_enum)]
    mode: Option<Mode>,
}

fn load(cli: &Cli) -> Result<RunConfig, String> {
    let text = std::fs::read_to_string(&cli.config).map_err(|e| format!("{}: {e}", cli.config.display()))?;
    let mut cfg = RunConfig::from_json(&text).map_err(|e| format!("{}: {e}", cli.config.display()))?;
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
        if let Seeds::List(_) = cfg.seeds {
            cfg.seeds = Seeds::Count(1);
        }
    }
    if let Some(count) = cli.seeds {
        cfg.seeds = Seeds::Count(count);
    }
    if let Some(dir) = &cli.out_dir {
        cfg.out_dir = dir.clone();
    }
    if let Some(mode) = cli.radius_mode {
        cfg.radius_mode = Some(match mode {
            RadiusArg::Full => RadiusMode::Full,
            RadiusArg::ConcentrationOnly => RadiusMode::ConcentrationOnly,
        });
    }
    if let Some(mode) = cli.mode {
        cfg.mode = mode;
    }
    cfg.validate().map_err(|e| e.to_string())?;
    Ok(cfg)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().filter_or("AMBILEARN_LOG", "warn")).init();
    let cli = Cli::parse();
    let cfg = match load(&cli) {
        Ok(cfg) => cfg,
        Err(msg) => {
            eprintln!("error: {msg}");
            return ExitCode::from(EXIT_USAGE);
        }
    };
    let outcome = match cfg.mode {
        Mode::Simulate => commands::simulate(&cfg),
        Mode::Verify => commands::verify(&cfg),
        Mode::Sweep => commands::sweep(&cfg),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(EXIT_RUNTIME),
        Err(e) => {
            error!("{e}");
            eprintln!("error: {e}");
            ExitCode::from(EXIT_RUNTIME)
        }
    }
}
