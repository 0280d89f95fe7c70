//! Built-in enemy policy with full observability of the ally team.

use crate::geom::Direction;
use crate::world::{Action, Team, UnitState, WorldState};

/// One action per enemy unit. Attackers hit the nearest ally in range (lower
/// id on ties); healers mend the most damaged teammate in range. Otherwise
/// the unit takes the available move that most reduces its distance to the
/// nearest living ally, or stops when no move helps.
pub fn scripted_opponent(world: &WorldState) -> Vec<Action> {
    scripted_policy(world, Team::Enemy)
}

/// The same greedy rule for either team; `Team::Ally` gives a baseline squad.
pub fn scripted_policy(world: &WorldState, team: Team) -> Vec<Action> {
    let foes_alive: Vec<&UnitState> = world.units(team.opponent()).iter().filter(|u| u.alive).collect();
    world
        .units(team)
        .iter()
        .map(|me| {
            if !me.alive {
                return Action::NO_OP;
            }
            let available = world.available_actions(team, me.id);
            let targets = available.iter().filter_map(|a| a.target_index());
            let pick = if world.stats(me.kind).is_healer {
                let mates = world.units(team);
                targets
                    .filter(|&k| mates[k].health < 1.0)
                    .min_by(|&a, &b| mates[a].health.total_cmp(&mates[b].health).then(a.cmp(&b)))
            } else {
                let foes = world.units(team.opponent());
                targets.min_by(|&a, &b| me.pos.dist(foes[a].pos).total_cmp(&me.pos.dist(foes[b].pos)).then(a.cmp(&b)))
            };
            if let Some(k) = pick {
                return Action::target(k);
            }
            let Some(goal) = foes_alive.iter().min_by(|a, b| me.pos.dist(a.pos).total_cmp(&me.pos.dist(b.pos)).then(a.id.cmp(&b.id)))
            else {
                return Action::STOP;
            };
            let speed = world.stats(me.kind).move_speed;
            let now = me.pos.dist(goal.pos);
            Direction::ALL
                .into_iter()
                .map(Action::movement)
                .filter(|a| available.contains(a))
                .map(|a| (a, (me.pos + a.direction().unwrap().unit().scale(speed)).dist(goal.pos)))
                .filter(|(_, d)| *d < now)
                .min_by(|a, b| a.1.total_cmp(&b.1))
                .map_or(Action::STOP, |(a, _)| a)
        })
        .collect()
}
