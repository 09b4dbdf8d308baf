//! Command-line front end: runs one experiment and writes the CSV and the
//! gnuplot script into the output directory.
//!
//! Exit codes: 0 success, 2 config error, 3 I/O error.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use cellsim::simrunner::{
    build_pool, default_config, emit_results, load_config, parse_override, run_experiment,
    threads_from_env, ExperimentKind,
};
use cellsim::Error;

#[derive(Parser, Debug)]
#[command(
    name = "sim",
    about = "Deterministic cellular system-level simulator",
    after_help = "Experiments: mu-gain, das, femto, cfo, pilot-power.\n\
                  SIM_THREADS caps the worker count; results do not depend on it."
)]
struct Cli {
    /// Experiment to run: mu-gain | das | femto | cfo | pilot-power
    experiment: String,

    /// TOML config file; built-in defaults are used when omitted.
    #[arg(long)]
    config: Option<PathBuf>,

    /// Overrides the seed from the config.
    #[arg(long)]
    seed: Option<u64>,

    /// Overrides the number of Monte-Carlo drops from the config.
    #[arg(long)]
    drops: Option<usize>,

    /// Output directory for the CSV and plot script.
    #[arg(long)]
    out: PathBuf,

    /// Config override as dotted-path key=value (repeatable),
    /// e.g. --override propagation.noise_dbm=-100.
    #[arg(long = "override", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

fn run(cli: &Cli) -> Result<(), Error> {
    let kind = ExperimentKind::parse(&cli.experiment)?;
    let overrides = cli
        .overrides
        .iter()
        .map(|raw| parse_override(raw))
        .collect::<Result<Vec<_>, _>>()?;
    let mut cfg = match &cli.config {
        Some(path) => load_config(path, kind, &overrides)?,
        None => default_config(kind, &overrides)?,
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(drops) = cli.drops {
        cfg.n_drops = drops;
    }
    cfg.validate()?;

    let pool = build_pool(threads_from_env());
    let table = run_experiment(&cfg, &pool)?;
    let files = emit_results(&table, kind, &cli.out)?;
    for f in files {
        println!("wrote {}", f.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            match err {
                Error::Config(_) | Error::InvalidParameter(_) => ExitCode::from(2),
                Error::Io { .. } => ExitCode::from(3),
                _ => ExitCode::FAILURE,
            }
        }
    }
}
