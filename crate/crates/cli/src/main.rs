use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use ecocache::harness::{emit_results, run_experiment, Command, ExperimentConfig, Format, HarnessError, SweepVar};

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Cmd {
    Analyze,
    Simulate,
    Optimize,
    Sweep,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum OutFormat {
    Csv,
    Json,
}

/// Economical layered-video caching experiments.
#[derive(Debug, Parser)]
#[command(name = "ecocache", version)]
struct Cli {
    #[arg(value_enum)]
    command: Cmd,
    /// Experiment config (TOML). Omitted keys take their defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, value_enum, default_value = "csv")]
    format: OutFormat,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    mc_samples: Option<usize>,
    /// Sweep variable: gamma_s_dB, zipf_alpha, M_bits, c_bh or L.
    #[arg(long)]
    sweep: Option<String>,
    /// Comma-separated grid values.
    #[arg(long, value_delimiter = ',')]
    grid: Option<Vec<f64>>,
    /// Print the effective config as TOML to stderr.
    #[arg(long)]
    print_config: bool,
}

fn run(cli: Cli) -> Result<(), HarnessError> {
    let mut config = match &cli.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = cli.seed {
        config.run.seed = seed;
    }
    if let Some(n) = cli.mc_samples {
        config.run.mc_samples = n;
    }
    if let Some(s) = &cli.sweep {
        config.run.sweep = Some(SweepVar::parse(s)?);
    }
    if let Some(grid) = cli.grid {
        config.run.grid = grid;
    }
    config.validate().map_err(|(key, msg)| HarnessError::Usage(format!("key `{key}`: {msg}")))?;
    if cli.print_config {
        eprint!("{}", config.to_toml());
    }
    let command = match cli.command {
        Cmd::Analyze => Command::Analyze,
        Cmd::Simulate => Command::Simulate,
        Cmd::Optimize => Command::Optimize,
        Cmd::Sweep => Command::Sweep,
    };
    let format = match cli.format {
        OutFormat::Csv => Format::Csv,
        OutFormat::Json => Format::Json,
    };
    let results = run_experiment(command, &config)?;
    emit_results(&results, &cli.out, format)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("ecocache: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
