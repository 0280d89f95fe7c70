//! Render an agent's observation to the canonical text form, parse it back,
//! and show that the roundtrip is exact after quantisation.
//!
//! `cargo run --example observation_text`

use skirmish::obs_text::{parse_obs, render_obs};
use skirmish::world::{ScenarioSpec, WorldState};

fn main() -> anyhow::Result<()> {
    let spec = ScenarioSpec::builtin("terran_5v6")?;
    let world = WorldState::spawn(&spec, 3)?;
    let obs = world.observe(0);
    let text = render_obs(&obs);
    print!("{text}");
    let parsed = parse_obs(&text)?;
    println!("roundtrip exact: {}", parsed == obs.quantized());
    match parse_obs("Agent #0 (marine)\nHealth: lots\n") {
        Ok(_) => println!("unexpectedly parsed"),
        Err(e) => println!("malformed text rejected: {e}"),
    }
    Ok(())
}
