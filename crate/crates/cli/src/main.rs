mod plan;
mod run;

use std::io::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};

use righthand::flow::TrajectoryCache;

use plan::{parse_config, ConfigError, OutputOptions, Plan};
use run::{execute, write_atomic, Record, RunError};

/// Linking numbers, asymptotic linking and contact-type certificates for flows on S³.
#[derive(Debug, Parser)]
#[command(name = "righthand-lab", version)]
struct Cli {
    /// Write the result here instead of standard output.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Trajectory cache directory; the RIGHTHAND_CACHE variable takes precedence.
    #[arg(long, global = true)]
    cache_dir: Option<PathBuf>,
    /// Emit the tabular part of the result as CSV.
    #[arg(long, global = true)]
    csv: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    #[command(flatten)]
    Plan(Plan),
    /// Runs the plan in a JSON config file.
    Run {
        #[arg(long)]
        config: PathBuf,
    },
}

fn resolve(cli: Cli) -> Result<(Plan, OutputOptions), RunError> {
    let (plan, mut options) = match cli.command {
        Command::Plan(plan) => {
            plan.validate()?;
            (plan, OutputOptions::default())
        }
        Command::Run { config } => {
            let text = std::fs::read_to_string(&config)
                .map_err(|e| RunError::Io(format!("{}: {e}", config.display())))?;
            parse_config(&text)?
        }
    };
    if cli.out.is_some() {
        options.out = cli.out;
    }
    if cli.cache_dir.is_some() {
        options.cache_dir = cli.cache_dir;
    }
    options.csv |= cli.csv;
    if let Some(dir) = std::env::var_os("RIGHTHAND_CACHE").filter(|d| !d.is_empty()) {
        options.cache_dir = Some(PathBuf::from(dir));
    }
    if options.csv && !plan.supports_csv() {
        return Err(ConfigError::OutOfRangeParameter(format!("--csv is not available for {}", plan.name())).into());
    }
    Ok((plan, options))
}

fn run(cli: Cli) -> Result<(), RunError> {
    let (plan, options) = resolve(cli)?;
    let cache = match &options.cache_dir {
        Some(dir) => Some(TrajectoryCache::new(dir).map_err(|e| RunError::Core(e.into()))?),
        None => None,
    };
    let start = Instant::now();
    let outcome = execute(&plan, cache.as_ref())?;
    let text = match (options.csv, outcome.table) {
        (true, Some(table)) => table.to_csv(),
        _ => {
            let record = Record {
                artifact: env!("CARGO_PKG_NAME"),
                version: env!("CARGO_PKG_VERSION"),
                cmd: plan.name(),
                inputs: &plan,
                outputs: outcome.outputs,
                wall_time_s: start.elapsed().as_secs_f64(),
            };
            serde_json::to_string_pretty(&record).expect("record serializes") + "\n"
        }
    };
    match &options.out {
        Some(path) => write_atomic(path, &text),
        None => std::io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| RunError::Io(format!("stdout: {e}"))),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
