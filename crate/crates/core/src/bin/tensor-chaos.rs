use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use tensor_chaos::experiment::{format_table, run, CellKey, ExperimentConfig, RunOptions};

/// Run a Gaussian-chaos tensor experiment described by a TOML config.
#[derive(Parser, Debug)]
#[command(version)]
struct Args {
    /// Experiment config (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Overrides the config seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory (defaults to `[output] dir`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads.
    #[arg(long)]
    workers: Option<usize>,
    /// Run or replay a single cell, written `family,d,k,N,p`.
    #[arg(long)]
    cell: Option<CellKey>,
}

fn main() -> ExitCode {
    let args = Args::parse();
    match execute(args) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn execute(args: Args) -> tensor_chaos::Result<bool> {
    let mut config = ExperimentConfig::load(&args.config)?;
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    let out_dir = args.out.unwrap_or_else(|| config.output.dir.clone());
    let opts = RunOptions {
        workers: args.workers,
        out_dir: Some(out_dir.clone()),
        cell: args.cell,
    };
    let result = run(&config, &opts)?;

    if !result.records.is_empty() {
        println!("{} records written to {}", result.records.len(), out_dir.display());
    }
    if !result.summary.is_empty() {
        print!("{}", format_table(&result.summary));
    }
    for f in &result.failures {
        println!("FAIL cell {}: {}", f.unit, f.error);
    }
    for g in &result.gates {
        println!("{g}");
    }
    Ok(result.passed())
}
