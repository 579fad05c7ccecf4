use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use qaction::{runner, Pool, RunConfig, RunError};

#[derive(Parser)]
#[command(name = "qaction", version, about = "Fit quantum actions to Euclidean propagators")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// TOML run configuration (or a manifest from an earlier run).
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory, overriding the configuration.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Monte Carlo base seed, overriding the configuration.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Worker threads (0 = all cores).
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Tables, fits, temperature flow and instantons.
    Run,
    /// Monte Carlo against the exact reference, entry by entry.
    CompareOracles,
    /// Classical instanton of the configured double well.
    Instanton,
    /// One-loop shifts for the weak anharmonic oscillator.
    OneLoop,
}

fn execute(cli: &Cli) -> Result<runner::Report, RunError> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &cli.out {
        cfg.output = out.display().to_string();
    }
    let out = PathBuf::from(&cfg.output);
    let pool = Pool::new(cli.threads);
    match cli.command {
        Command::Run => runner::run_experiment(&cfg, &out, &pool),
        Command::CompareOracles => runner::compare_oracles(&cfg, &out, &pool),
        Command::Instanton => runner::instanton(&cfg, &out, &pool),
        Command::OneLoop => runner::one_loop(&cfg, &out, &pool),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match execute(&cli) {
        Ok(report) => {
            for line in &report.lines {
                println!("{line}");
            }
            println!("wrote {} files", report.files.len());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
