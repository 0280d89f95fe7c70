//! Load an experiment from a JSON config file, run it, and list what it wrote.
//!
//! `cargo run --release --example config_file -- [path/to/config.json]`
//!
//! Defaults to `examples/data/experiment_zerg_sparse.json`.

use std::path::PathBuf;

use skirmish::harness::{run_experiment, ExperimentConfig};

fn main() -> anyhow::Result<()> {
    let path = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("examples/data/experiment_zerg_sparse.json"));
    let config = ExperimentConfig::from_json_file(&path)?;
    config.validate()?;
    println!("{}", serde_json::to_string_pretty(&config)?);
    let report = run_experiment(&config)?;
    let wins: usize = report.episodes.iter().flatten().filter(|e| e.win).count();
    let total: usize = report.episodes.iter().map(Vec::len).sum();
    println!("{wins}/{total} episodes won, median win rate {:.3}", report.summary.median_win_rate);
    if let Some(dir) = &config.out_dir {
        println!("summary and replays under {}", dir.display());
    }
    Ok(())
}
