use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use prs_cli::config::RunConfig;
use prs_cli::error::{CliError, CliResult};
use prs_cli::output::Format;
use prs_cli::{execute, Command};

/// Photon recoil spectroscopy: coefficients, sensitivities, shifts and
/// optimized probe states.
#[derive(Debug, Parser)]
#[command(name = "prs", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// TOML run configuration; defaults apply to everything left out
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Write the table here instead of stdout
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Overrides the config's seed
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (does not change the output)
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[arg(long, global = true, value_enum, default_value = "csv")]
    format: Format,
}

fn run(cli: &Cli) -> CliResult<Option<CliError>> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    let report = match cli.threads {
        Some(0) => return Err(CliError::Config("--threads must be positive".into())),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| CliError::Config(e.to_string()))?
            .install(|| execute(cli.command, &cfg, cli.format))?,
        None => execute(cli.command, &cfg, cli.format)?,
    };
    match &cli.out {
        Some(p) => std::fs::write(p, &report.bytes)?,
        None => std::io::stdout().write_all(&report.bytes)?,
    }
    Ok(report.failure)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(None) => ExitCode::SUCCESS,
        Ok(Some(e)) | Err(e) => {
            eprintln!("prs: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
