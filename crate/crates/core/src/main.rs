use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use fch_pearl::config::{parse_config, Command};
use fch_pearl::runner::execute;
use fch_pearl::Error;

/// Pearled bilayers of the functionalized Cahn-Hilliard equation.
#[derive(Parser, Debug)]
#[command(version, about)]
struct Cli {
    /// Command to run; falls back to `command` in the config file.
    #[arg(value_enum)]
    command: Option<Command>,
    /// TOML configuration file.
    #[arg(short, long)]
    config: Option<PathBuf>,
    /// Override a config key, e.g. `--set physics.eta2=2.5`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Output directory (same as `--set output=...`).
    #[arg(short, long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let mut overrides = cli.overrides;
    if let Some(o) = cli.out {
        overrides.push(format!("output={:?}", o.display().to_string()));
    }
    let cfg = match parse_config(cli.config.as_deref(), &overrides) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let Some(command) = cli.command.or(cfg.command) else {
        eprintln!("error: no command given on the command line or in the config");
        return ExitCode::from(2);
    };
    match execute(&cfg, command) {
        Ok(out) => {
            let _ = writeln!(std::io::stdout(), "{}", serde_json::to_string_pretty(&out.summary).unwrap_or_default());
            if out.passed {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e @ Error::Config { .. }) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
