//! Run a small experiment with the mock planner and print per-seed win rates.
//!
//! `cargo run --release --example quickstart`

use skirmish::harness::{run_experiment, ExperimentConfig};

fn main() -> anyhow::Result<()> {
    let config = ExperimentConfig { scenario: "protoss_5v5".into(), seeds: vec![0, 1, 2], episodes_per_seed: 10, ..Default::default() };
    let report = run_experiment(&config)?;
    for seed in &report.summary.per_seed {
        println!("seed {}: win rate {:.2}, mean return {:.2}", seed.seed, seed.win_rate, seed.mean_return);
    }
    println!("median win rate {:.2}", report.summary.median_win_rate);
    Ok(())
}
