use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use frontspread_harness::{dispatch, init_threads, load_config, Kind, Level, Status};

/// Nonlocal free-boundary two-species solver.
#[derive(Debug, Parser)]
#[command(name = "frontspread", version)]
struct Cli {
    /// Experiment to run.
    #[arg(value_enum)]
    kind: Kind,
    /// TOML experiment config.
    #[arg(long)]
    config: PathBuf,
    /// Output directory; defaults to `outputs.dir` relative to the config file.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Depth of the `verify` suite.
    #[arg(long, value_enum, default_value = "quick")]
    level: Level,
}

fn code(status: Status) -> ExitCode {
    ExitCode::from(status.exit_code() as u8)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(e) = init_threads() {
        eprintln!("error: {e}");
        return code(Status::ConfigError);
    }
    let cfg = match load_config(&cli.config) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return code(Status::ConfigError);
        }
    };
    if let Some(k) = cfg.kind {
        if k != cli.kind {
            eprintln!("error: config declares kind = {k} but {} was requested", cli.kind);
            return code(Status::ConfigError);
        }
    }
    let out = cli.out.unwrap_or_else(|| cfg.resolve(&cfg.outputs.dir));
    match dispatch(&cfg, cli.kind, &out, cli.level) {
        Ok(rec) => {
            if let Some(m) = &rec.message {
                eprintln!("{}: {m}", cli.kind);
            }
            println!("{} -> {} ({:?})", cli.kind, out.join("run.json").display(), rec.status);
            code(rec.status)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
