//! Load a scenario from JSON, step it by hand with the scripted policy on both
//! sides, and print the running reward.
//!
//! `cargo run --release --example custom_scenario`

use std::path::PathBuf;

use skirmish::harness::scripted_policy;
use skirmish::world::{ScenarioSpec, Team, WorldState};

fn main() -> anyhow::Result<()> {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("examples/data/scenario_marines_3v4.json");
    let spec = ScenarioSpec::from_json_file(&path)?;
    let mut world = WorldState::spawn(&spec, 7)?;
    println!("{}: {} allies vs {} enemies", spec.name, spec.n_allies, spec.n_enemies);
    for u in world.units(Team::Enemy) {
        println!("  enemy {} is a {} at ({:.1}, {:.1})", u.id, u.kind, u.pos.x, u.pos.y);
    }
    let mut total = 0.0;
    while !world.is_done() {
        let allies = scripted_policy(&world, Team::Ally);
        let enemies = scripted_policy(&world, Team::Enemy);
        let out = world.step(&allies, &enemies)?;
        total += out.reward;
        if out.reward > 0.0 || out.done {
            println!(
                "t={:>3} reward {:.3} total {:.3} alive {}v{}",
                world.timestep(),
                out.reward,
                total,
                world.alive_count(Team::Ally),
                world.alive_count(Team::Enemy)
            );
        }
        if out.done {
            println!("{}", if out.info.win { "won" } else { "lost" });
        }
    }
    Ok(())
}
