use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use tempered_ld_cli::{run_to_dir, CliError, ExperimentConfig};

/// Run a tempered subordinator experiment from a JSON config.
///
/// Thread count comes from TEMPERED_LD_THREADS (default: all cores); it
/// never changes the data written.
#[derive(Parser)]
#[command(name = "tempered-ld", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Rate functions κ*, Ψ or Λ on a grid
    Rate(Args),
    /// Closed-form against numeric conjugate of the cumulant
    Conjugate(Args),
    /// Log Mittag-Leffler function on a grid
    Mlf(Args),
    /// Draw increments, paths, passage times or time-changed values
    Simulate(Args),
    /// Invariance, rate function and tail experiments
    Verify(Args),
    /// Rate function of the time-changed process
    Timechange(Args),
}

#[derive(clap::Args)]
struct Args {
    #[arg(long)]
    config: PathBuf,
    /// Overrides the config seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory; overrides the config `output_path` (default `out`).
    #[arg(long)]
    out: Option<PathBuf>,
}

impl Command {
    fn parts(&self) -> (&'static str, &Args) {
        match self {
            Command::Rate(a) => ("rate", a),
            Command::Conjugate(a) => ("conjugate", a),
            Command::Mlf(a) => ("mlf", a),
            Command::Simulate(a) => ("simulate", a),
            Command::Verify(a) => ("verify", a),
            Command::Timechange(a) => ("timechange", a),
        }
    }
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(v) = std::env::var("TEMPERED_LD_THREADS") else {
        return Ok(());
    };
    let n: usize = v.parse().ok().filter(|&n| n > 0).ok_or_else(|| {
        CliError::ConfigInvalid(format!(
            "TEMPERED_LD_THREADS must be a positive integer, got '{v}'"
        ))
    })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(CliError::upstream("thread pool"))
}

fn main_inner(cli: Cli) -> Result<PathBuf, CliError> {
    configure_threads()?;
    let (name, args) = cli.command.parts();
    let text = std::fs::read_to_string(&args.config).map_err(|source| CliError::Io {
        path: args.config.clone(),
        source,
    })?;
    let mut config = ExperimentConfig::from_json(&text)?;
    if config.command() != name {
        return Err(CliError::ConfigInvalid(format!(
            "config is for '{}' but the '{name}' subcommand was given",
            config.command()
        )));
    }
    if let Some(s) = args.seed {
        config.set_seed(s);
    }
    if let Some(out) = &args.out {
        config.set_output_path(out.display().to_string());
    }
    let dir = PathBuf::from(config.output_path().unwrap_or("out"));
    Ok(run_to_dir(&config, &dir)?.0)
}

fn main() -> ExitCode {
    match main_inner(Cli::parse()) {
        Ok(path) => {
            println!("{}", path.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("{}", e.record());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
