use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use radfield::cli::{check, execute, parse_config, write_outputs, RunConfig};

#[derive(Parser)]
#[command(name = "radfield", version, about = "Scalar-wave radiation fields on the Schwarzschild exterior")]
struct Args {
    /// Run the acceptance battery and exit nonzero if any criterion fails.
    #[arg(long, global = true)]
    check: bool,
    /// Output directory, overriding `[output] directory`.
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    /// Maximum number of concurrent mode workers.
    #[arg(long, global = true)]
    parallel: Option<usize>,
    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Subcommand)]
enum Command {
    /// Execute a run configuration.
    Run { config: PathBuf },
}

fn load(path: &PathBuf) -> Result<RunConfig, ExitCode> {
    let text = std::fs::read_to_string(path).map_err(|e| {
        eprintln!("error: cannot read {}: {e}", path.display());
        ExitCode::from(1)
    })?;
    parse_config(&text).map_err(|e| {
        eprintln!("error: invalid configuration {}:\n{e}", path.display());
        ExitCode::from(1)
    })
}

fn run_config(config: &RunConfig, output: Option<PathBuf>, parallel: Option<usize>) -> Result<(), ExitCode> {
    let outcome = execute(config, parallel).map_err(|e| {
        eprintln!("error: {e}");
        ExitCode::from(e.exit_code() as u8)
    })?;
    for w in &outcome.report.warnings {
        eprintln!("warning: {w}");
    }
    let dir = output.unwrap_or_else(|| config.output_directory.clone());
    let files = write_outputs(&dir, &outcome).map_err(|e| {
        eprintln!("error: {e}");
        ExitCode::from(e.exit_code() as u8)
    })?;
    for f in files {
        eprintln!("wrote {}", f.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    let args = Args::parse();
    if let Some(n) = args.parallel {
        // the battery shares the global pool; runs build their own
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
    }
    let config = match &args.command {
        Some(Command::Run { config }) => match load(config) {
            Ok(c) => Some(c),
            Err(code) => return code,
        },
        None => None,
    };
    if let Some(c) = &config {
        if let Err(code) = run_config(c, args.output.clone(), args.parallel) {
            return code;
        }
    }
    if args.check {
        let results = check::battery(config.as_ref());
        for r in &results {
            eprintln!("{r}");
        }
        let failed = results.iter().filter(|r| !r.pass).count();
        eprintln!("{} of {} criteria passed", results.len() - failed, results.len());
        return if failed == 0 { ExitCode::SUCCESS } else { ExitCode::from(4) };
    }
    if config.is_none() {
        eprintln!("error: nothing to do; give `run <config>` or `--check`");
        return ExitCode::from(1);
    }
    ExitCode::SUCCESS
}
