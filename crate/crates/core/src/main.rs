use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use walk_induction::config::{Format, RunConfig};
use walk_induction::report::{self, error_exit_code, Command};
use walk_induction::Result;

/// Exact and Monte Carlo checks for random walks induced on finite-index subgroups.
#[derive(Parser, Debug)]
#[command(name = "walk-induction", version)]
struct Cli {
    #[arg(value_enum)]
    command: Command,
    /// TOML run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Overrides `params.seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// Output file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
}

fn execute(cli: &Cli) -> Result<i32> {
    let cfg = RunConfig::load(&cli.config)?;
    let mut params = cfg.params.clone();
    if let Some(seed) = cli.seed {
        params.seed = seed;
    }
    if let Some(n) = params.workers.or_else(report::workers_from_env) {
        // a second initialisation only happens in-process and is harmless
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    let setup = cfg.setup()?;
    let rep = report::run(cli.command, &setup, &params)?;
    let output = cfg.output.clone().unwrap_or(walk_induction::config::OutputSpec { path: None, format: None });
    let format = cli.format.or(output.format).unwrap_or_default();
    match cli.out.clone().or(output.path.map(PathBuf::from)) {
        Some(path) => {
            let mut w = BufWriter::new(File::create(path)?);
            rep.write(format, &mut w)?;
            w.flush()?;
        }
        None => rep.write(format, &mut io::stdout().lock())?,
    }
    Ok(rep.status.exit_code())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(error_exit_code(&e) as u8)
        }
    }
}
