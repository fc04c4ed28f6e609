//! Command-line driver for the free-surface Euler solver: configuration,
//! file formats, and the `run`, `check`, `dispersion` and `report` commands.

// `!(x < y)` guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod dispersion;
pub mod error;
pub mod io;
pub mod run;

use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use fsbc::diagnostics::classify_breakdown;
use fsbc::verification::{run_checks, CheckOutcome};

pub use config::Config;
pub use error::{exit, CliError, FormatError};

/// Environment variable capping the worker-thread count.
pub const THREADS_ENV: &str = "EULER_FSBC_THREADS";

#[derive(Debug, Parser)]
#[command(name = "euler-fsbc", version, about = "Free-surface Euler solver with breakdown diagnostics")]
pub struct Cli {
    /// TOML configuration; defaults apply to every missing key.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory, overriding `output.directory`.
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,
    /// Dotted-key override such as `physics.sigma=2.0`; repeatable.
    #[arg(long = "override", value_name = "KEY=VALUE", global = true)]
    pub overrides: Vec<String>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evolve the configured initial data and classify breakdown trends.
    Run,
    /// Run the identity and inequality verification suite on the configured grid.
    Check {
        /// Only the flat-surface degeneration checks.
        #[arg(long)]
        flat_only: bool,
        /// Scale the tangential derivative symbols by `1 + REL` (test hook).
        #[arg(long, hide = true, value_name = "REL")]
        inject_fault: Option<f64>,
    },
    /// Measure capillary-wave frequencies against the linear dispersion relation.
    Dispersion,
    /// Summarize a finished run from its output directory.
    Report,
}

fn output_dir(cli: &Cli, cfg: &Config) -> PathBuf {
    cli.output.clone().unwrap_or_else(|| cfg.output.directory.clone())
}

fn write_json(path: &Path, value: &impl serde::Serialize) -> Result<(), CliError> {
    let json = serde_json::to_string_pretty(value).map_err(FormatError::from)?;
    std::fs::write(path, json).map_err(|source| CliError::Io { path: path.to_path_buf(), source })
}

pub fn format_checks(outcomes: &[CheckOutcome]) -> String {
    let mut s = String::new();
    for c in outcomes {
        let tag = if c.passed { "PASS" } else { "FAIL" };
        s += &format!("{tag} {:<44} {:>12.3e} (bound {:.1e})", c.name, c.value, c.bound);
        if let Some(e) = &c.error {
            s += &format!("  {e}");
        }
        s.push('\n');
    }
    s
}

fn cmd_check(cfg: &Config, flat_only: bool, fault: Option<f64>, out: Option<&Path>) -> Result<u8, CliError> {
    let mut grid = cfg.grid()?;
    if let Some(rel) = fault {
        grid = grid.with_derivative_fault(rel);
    }
    let outcomes = run_checks(&grid, flat_only);
    print!("{}", format_checks(&outcomes));
    let failed = outcomes.iter().filter(|c| !c.passed).count();
    println!("{} checks, {failed} failed", outcomes.len());
    if let Some(dir) = out {
        std::fs::create_dir_all(dir).map_err(|source| CliError::Io { path: dir.to_path_buf(), source })?;
        write_json(&dir.join("checks.json"), &outcomes)?;
    }
    Ok(if failed == 0 { exit::OK } else { exit::FAILURE })
}

fn cmd_report(cfg: &Config, dir: &Path) -> Result<u8, CliError> {
    let paths = run::RunPaths::new(dir);
    let records = io::read_timeseries(&paths.timeseries)?;
    let (Some(first), Some(last)) = (records.first(), records.last()) else {
        return Err(CliError::Other(format!("{} has no records", paths.timeseries.display())));
    };
    let max = |f: fn(&fsbc::diagnostics::DiagnosticsRecord) -> f64| records.iter().map(f).fold(f64::NEG_INFINITY, f64::max);
    let min = |f: fn(&fsbc::diagnostics::DiagnosticsRecord) -> f64| records.iter().map(f).fold(f64::INFINITY, f64::min);
    println!("records            {}", records.len());
    println!("t                  {:.6} .. {:.6}", first.t, last.t);
    println!("max E              {:.6e}", max(|r| r.energy));
    println!("max K              {:.6e}", max(|r| r.k()));
    println!("max vort_sup       {:.6e}", max(|r| r.vort_sup));
    println!("bkm_integral       {:.6e}", last.bkm_integral);
    println!("min min_d3phi      {:.6e}", min(|r| r.min_d3phi));
    println!("min depth_margin   {:.6e}", min(|r| r.depth_margin));
    println!("max grad_psi_sup   {:.6e}", max(|r| r.grad_psi_sup));
    println!("max div_norm       {:.6e}", max(|r| r.div_norm));
    println!("max energy residual {:.6e}", max(|r| r.energy_identity_residual));
    let report = classify_breakdown(&records, &cfg.thresholds());
    for (name, flag) in [("a", &report.cond_a), ("b'", &report.cond_b_prime), ("c", &report.cond_c)] {
        println!(
            "condition ({name:<2}) {:<9} slope {:>10.3e} via {}",
            if flag.triggered { "TRIGGERED" } else { "clear" },
            flag.trend_slope,
            flag.triggering_quantity
        );
    }
    Ok(exit::OK)
}

/// Dispatch a parsed command line; returns the process exit code.
pub fn execute(cli: &Cli) -> Result<u8, CliError> {
    let cfg = Config::load(cli.config.as_deref(), &cli.overrides)?;
    let dir = output_dir(cli, &cfg);
    match &cli.command {
        Command::Run => {
            let summary = run::cmd_run(&cfg, &dir)?;
            println!("{}", serde_json::to_string_pretty(&summary).map_err(FormatError::from)?);
            Ok(summary.exit_code)
        }
        Command::Check { flat_only, inject_fault } => cmd_check(&cfg, *flat_only, *inject_fault, cli.output.as_deref()),
        Command::Dispersion => {
            let rows = dispersion::cmd_dispersion(&cfg)?;
            print!("{}", dispersion::format_table(&rows));
            if let Some(dir) = cli.output.as_deref() {
                std::fs::create_dir_all(dir).map_err(|source| CliError::Io { path: dir.to_path_buf(), source })?;
                write_json(&dir.join("dispersion.json"), &rows)?;
            }
            Ok(exit::OK)
        }
        Command::Report => cmd_report(&cfg, &dir),
    }
}

/// Size the global pool from [`THREADS_ENV`] when set.
pub fn init_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Config { key: THREADS_ENV.into(), message: format!("need a positive integer, got `{raw}`") })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Other(format!("thread pool: {e}")))
}
