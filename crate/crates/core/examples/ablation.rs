//! Run the full loop against each single-component ablation and print the
//! table.
//!
//! `cargo run --release --example ablation -- [scenario]`

use skirmish::harness::{run_ablation, ExperimentConfig};

fn main() -> anyhow::Result<()> {
    let scenario = std::env::args().nth(1).unwrap_or_else(|| "protoss_5v5".into());
    let report = run_ablation(&ExperimentConfig { scenario, episodes_per_seed: 20, ..Default::default() })?;
    println!("{:<14} {:>7} {:>7}", "condition", "median", "std");
    for row in &report.rows {
        println!("{:<14} {:>7.3} {:>7.3}", row.condition, row.median_win_rate, row.std_win_rate);
    }
    Ok(())
}
