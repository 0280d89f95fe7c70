//! Four stalkers in a line, each only seeing its neighbours. The far end
//! spots an enemy; show how far the sighting travels for each hop budget.
//!
//! `cargo run --example relay_chain`

use std::collections::BTreeMap;

use skirmish::comms::{build_visibility_graph, propagate, record_local, EntityKey};
use skirmish::geom::Vec2;
use skirmish::world::{ScenarioSpec, Team, UnitKind, WorldState};

fn main() -> anyhow::Result<()> {
    let spec = ScenarioSpec::builtin("protoss_5v5")?;
    let allies: Vec<(UnitKind, Vec2)> =
        [2.0, 10.0, 18.0, 26.0].iter().map(|&x| (UnitKind::Stalker, Vec2::new(x, 16.0))).collect();
    let enemies = [(UnitKind::Zealot, Vec2::new(30.0, 30.0)), (UnitKind::Zealot, Vec2::new(30.0, 16.0))];
    let world = WorldState::with_units(&spec, &allies, &enemies)?;
    let graph = build_visibility_graph(&world);
    println!("visibility edges: {:?}", graph.edges());
    let hop0: BTreeMap<_, _> = (0..allies.len()).map(|i| (i, record_local(i, &world.observe(i), 0))).collect();
    let target = EntityKey { team: Team::Enemy, id: 1 };
    for max_hops in 0..=3 {
        let memory = propagate(&hop0, &graph, max_hops);
        let reach: Vec<String> = (0..allies.len())
            .map(|a| memory.record(a, target).map_or("-".to_string(), |r| r.hops.to_string()))
            .collect();
        println!("max_hops {max_hops}: hops per agent [{}]", reach.join(", "));
    }
    Ok(())
}
