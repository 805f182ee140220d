//! Library side of the `prs` command-line tool: configuration, the
//! subcommands and output rendering.

// `!(x > 0.0)` is deliberate: it also rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod commands;
pub mod config;
pub mod error;
pub mod output;

use clap::Subcommand;

use crate::config::RunConfig;
use crate::error::{CliError, CliResult};
use crate::output::{render, Format, Header, Table};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Drift and diffusion coefficients over a detuning grid
    Coeffs,
    /// Resonance profile and Doppler asymmetry at fixed interaction time
    Resonance,
    /// Recoil sensitivity over epsilon and photon-number grids
    Sensitivity,
    /// Two-point Doppler shift of the line centre
    Shift,
    /// Constrained optimization of a Fock superposition
    Optimize,
    /// Squeezing needed for the single-photon working point
    Budget,
    /// PDE integration against the closed-form overlaps
    OracleCheck,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Coeffs => "coeffs",
            Command::Resonance => "resonance",
            Command::Sensitivity => "sensitivity",
            Command::Shift => "shift",
            Command::Optimize => "optimize",
            Command::Budget => "budget",
            Command::OracleCheck => "oracle-check",
        }
    }

    /// Config table the command reads besides `pulse`.
    fn section(self) -> &'static str {
        match self {
            Command::OracleCheck => "oracle_check",
            other => other.name(),
        }
    }
}

/// Seed, pulse and the command's own section, with every default filled in.
pub fn resolved_config(command: Command, cfg: &RunConfig) -> CliResult<toml::Table> {
    let full = toml::Table::try_from(cfg).map_err(|e| CliError::Config(e.to_string()))?;
    let mut out = toml::Table::new();
    for key in ["seed", "pulse", command.section()] {
        if let Some(v) = full.get(key) {
            out.insert(key.to_string(), v.clone());
        }
    }
    Ok(out)
}

/// Rendered output, plus a failure to report after it has been written
/// (oracle-check writes its table even when points fail).
pub struct Report {
    pub bytes: Vec<u8>,
    pub failure: Option<CliError>,
}

pub fn table(command: Command, cfg: &RunConfig) -> CliResult<(Table, Option<CliError>)> {
    let t = match command {
        Command::Coeffs => commands::cmd_coeffs(cfg)?,
        Command::Resonance => commands::cmd_resonance(cfg)?,
        Command::Sensitivity => commands::cmd_sensitivity(cfg)?,
        Command::Shift => commands::cmd_shift(cfg)?,
        Command::Optimize => commands::cmd_optimize(cfg)?,
        Command::Budget => commands::cmd_budget(cfg)?,
        Command::OracleCheck => {
            let (t, failed) = commands::cmd_oracle_check(cfg)?;
            let failure = (failed > 0).then(|| {
                CliError::Numerical(format!("{failed} of {} oracle points outside tolerance", t.rows.len()))
            });
            return Ok((t, failure));
        }
    };
    Ok((t, None))
}

pub fn execute(command: Command, cfg: &RunConfig, format: Format) -> CliResult<Report> {
    let header = Header {
        command: command.name().to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        config: resolved_config(command, cfg)?,
    };
    let (t, failure) = table(command, cfg)?;
    Ok(Report { bytes: render(&header, &t, format)?, failure })
}
