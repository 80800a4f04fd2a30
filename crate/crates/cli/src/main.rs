mod commands;
mod config;
mod error;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Parser, Subcommand};

use commands::Context;
use error::CliError;
use output::{Format, Provenance, Sink};

/// Finite-truncation KAM tools for chains with decaying masses.
#[derive(Debug, Parser)]
#[command(name = "lrkam", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Run configuration (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the `seed` key of the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Worker threads; defaults to one per core.
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[arg(long, global = true, value_enum, default_value = "csv")]
    format: Format,
    /// Record wall-clock times; breaks byte-reproducibility.
    #[arg(long, global = true)]
    timing: bool,
}

#[derive(Clone, Copy, Debug, Subcommand)]
enum Command {
    /// Run the KAM iteration and fit the convergence law.
    Iterate,
    /// Monte-Carlo survival over an (eps, d) grid.
    MeasureScan,
    /// Integrate from the computed torus and report the drift.
    Verify,
    /// Chaos indicator across a resonant strip.
    StripScan,
    /// Tabulate an action-angle chart.
    ActionChart,
    /// Reduce a mechanical model to its normal form.
    NormalForm,
    /// Box dimension of `n^{-gamma}` sequences.
    BoxDim,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Iterate => "iterate",
            Command::MeasureScan => "measure-scan",
            Command::Verify => "verify",
            Command::StripScan => "strip-scan",
            Command::ActionChart => "action-chart",
            Command::NormalForm => "normal-form",
            Command::BoxDim => "box-dim",
        }
    }
}

fn run(cli: &Cli) -> Result<Vec<PathBuf>, CliError> {
    if let Some(n) = cli.workers {
        if n == 0 {
            return Err(CliError::Usage("--workers must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Usage(e.to_string()))?;
    }
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| CliError::Usage("--config is required".into()))?;
    let loaded = config::load(path)?;
    let seed = cli.seed.unwrap_or(loaded.config.seed);
    let provenance = Provenance {
        command: cli.command.name(),
        config_sha256: loaded.sha256.clone(),
        seed,
        overrides: commands::overrides(&loaded),
        timestamp: SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0),
    };
    let mut sink = Sink::new(&cli.out, cli.format, provenance)?;
    let ctx = Context {
        loaded: &loaded,
        seed,
        timing: cli.timing,
    };
    match cli.command {
        Command::Iterate => commands::iterate(&ctx, &mut sink),
        Command::MeasureScan => commands::measure(&ctx, &mut sink),
        Command::Verify => commands::verify(&ctx, &mut sink),
        Command::StripScan => commands::strip_scan(&ctx, &mut sink),
        Command::ActionChart => commands::action_chart(&ctx, &mut sink),
        Command::NormalForm => commands::normal_form(&ctx, &mut sink),
        Command::BoxDim => commands::box_dim(&ctx, &mut sink),
    }?;
    Ok(sink.written)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(files) => {
            for f in files {
                println!("{}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
