use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use driftlab::cli::{emit_csv, parse_config, parse_seed, run, write_csv};
use driftlab::Error;

/// Monte Carlo experiments for drift-preserving stochastic integrators.
#[derive(Debug, Parser)]
#[command(name = "driftlab", version)]
struct Args {
    /// Experiment config (`key = value` lines).
    config: PathBuf,
    /// Master seed, decimal or 0x-prefixed hex.
    #[arg(long)]
    seed: Option<String>,
    /// Number of Monte Carlo samples.
    #[arg(long)]
    samples: Option<usize>,
    /// CSV destination; stdout when absent.
    #[arg(long)]
    output: Option<PathBuf>,
}

fn workers() -> Result<usize, Error> {
    match std::env::var("DRIFTLAB_WORKERS") {
        Ok(v) => v.trim().parse().map_err(|_| Error::InvalidValue {
            key: "DRIFTLAB_WORKERS".into(),
            detail: format!("`{v}` is not a worker count"),
        }),
        Err(_) => Ok(0),
    }
}

fn main_inner(args: Args) -> Result<(), Error> {
    let text = std::fs::read_to_string(&args.config).map_err(|source| Error::Io {
        path: args.config.clone(),
        source,
    })?;
    let mut config = parse_config(&text)?;
    if let Some(seed) = &args.seed {
        config.seed = parse_seed(seed)?;
    }
    if let Some(samples) = args.samples {
        if samples == 0 {
            return Err(Error::InvalidValue {
                key: "samples".into(),
                detail: "must be positive".into(),
            });
        }
        config.samples = samples;
    }
    if args.output.is_some() {
        config.output_path = args.output;
    }
    let report = run(&config, workers()?)?;
    match &config.output_path {
        Some(path) => emit_csv(&report, path),
        None => {
            let stdout = io::stdout();
            let mut lock = stdout.lock();
            write_csv(&report, &mut lock)
                .and_then(|_| lock.flush())
                .map_err(|source| Error::Io {
                    path: PathBuf::from("<stdout>"),
                    source,
                })
        }
    }
}

fn main() -> ExitCode {
    match main_inner(Args::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("driftlab: {e}");
            ExitCode::FAILURE
        }
    }
}
