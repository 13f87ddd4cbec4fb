//! A small bound sweep written to a results directory, its trend summary, and
//! a bit-exact replay with a different worker count.

use tensor_chaos::experiment::{format_table, load_run, replay, run, Command, ExperimentConfig, Family, RunOptions};

fn main() -> tensor_chaos::Result<()> {
    let mut config = ExperimentConfig::new(Command::BoundSweep, 99);
    config.samples = 128;
    config.grid.n = vec![4, 8, 16];
    config.grid.k = vec![1, 2];
    config.grid.p = vec![2.0, 4.0];
    config.family.names = vec![Family::DiagonalPairing, Family::RandomSign];
    config.family.budget = 2048;

    let dir = std::env::temp_dir().join(format!("tensor-chaos-example-{}", std::process::id()));
    let opts = RunOptions {
        out_dir: Some(dir.clone()),
        ..RunOptions::with_workers(2)
    };
    let file = run(&config, &opts)?;
    println!("{} records in {}", file.records.len(), dir.display());
    println!("{}", format_table(&file.summary));
    for g in &file.gates {
        println!("{g}");
    }

    let stored = load_run(&dir.join("results.json"))?;
    let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().expect("pool");
    let again = pool.install(|| replay(&stored, None))?;
    for g in &again.gates {
        println!("{g}");
    }
    std::fs::remove_dir_all(&dir).ok();
    Ok(())
}
