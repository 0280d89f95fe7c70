//! Reference implementations shared by the integration tests. Each one is
//! written from the definition of the quantity, not from the library code.

#![allow(dead_code)]

use std::cmp::Reverse;
use std::collections::{BTreeMap, BTreeSet, BinaryHeap, VecDeque};
use std::sync::Arc;

use rand::Rng;

use skirmish::comms::{EntityKey, EntityRecord};
use skirmish::geom::{Direction, Vec2};
use skirmish::obs_text::{EntityView, ObsData};
use skirmish::skills::pathfind::{Cell, Grid, GRID_SIZE};
use skirmish::skills::{eval_score_traced, ScoreTarget, SkillLibrary, TacticContext};
use skirmish::world::{Action, RewardMode, StatTable, Team, UnitKind, WorldSnapshot};

/// Hop distances from `src` over an undirected edge list.
pub fn bfs_distances(n: usize, edges: &[(usize, usize)], src: usize) -> Vec<Option<u32>> {
    let mut adj = vec![Vec::new(); n];
    for &(a, b) in edges {
        adj[a].push(b);
        adj[b].push(a);
    }
    let mut dist = vec![None; n];
    dist[src] = Some(0);
    let mut queue = VecDeque::from([src]);
    while let Some(u) = queue.pop_front() {
        let d = dist[u].unwrap();
        for &v in &adj[u] {
            if dist[v].is_none() {
                dist[v] = Some(d + 1);
                queue.push_back(v);
            }
        }
    }
    dist
}

/// What every agent should hold after relaying: for each entity, the
/// freshest sighting among sources within `max_hops`, then the nearest
/// source, then the lowest source id, carried at its hop distance.
pub fn closure_oracle(
    n: usize,
    edges: &[(usize, usize)],
    hop0: &BTreeMap<usize, Vec<EntityRecord>>,
    max_hops: u32,
) -> BTreeMap<usize, BTreeMap<EntityKey, EntityRecord>> {
    let dists: Vec<Vec<Option<u32>>> = (0..n).map(|s| bfs_distances(n, edges, s)).collect();
    let mut out = BTreeMap::new();
    for agent in 0..n {
        let mut best: BTreeMap<EntityKey, EntityRecord> = BTreeMap::new();
        for (&src, records) in hop0 {
            let Some(d) = dists[src][agent].filter(|&d| d <= max_hops) else { continue };
            for r in records {
                let cand = EntityRecord { hops: d, ..r.clone() };
                let better = match best.get(&r.key) {
                    None => true,
                    Some(cur) => {
                        (Reverse(cand.observed_at), cand.hops, cand.source_agent)
                            < (Reverse(cur.observed_at), cur.hops, cur.source_agent)
                    }
                };
                if better {
                    best.insert(r.key, cand);
                }
            }
        }
        out.insert(agent, best);
    }
    out
}

/// Random undirected graph on `n` nodes with edge probability `p`.
pub fn random_edges<R: Rng>(rng: &mut R, n: usize, p: f64) -> Vec<(usize, usize)> {
    let mut edges = Vec::new();
    for a in 0..n {
        for b in a + 1..n {
            if rng.gen_bool(p) {
                edges.push((a, b));
            }
        }
    }
    edges
}

/// Random hop-0 sightings: each agent sees a random subset of a few entities.
pub fn random_sightings<R: Rng>(rng: &mut R, n: usize, now: u32) -> BTreeMap<usize, Vec<EntityRecord>> {
    let mut out = BTreeMap::new();
    for agent in 0..n {
        let mut seen = BTreeSet::new();
        for _ in 0..rng.gen_range(0..4) {
            let team = if rng.gen_bool(0.7) { Team::Enemy } else { Team::Ally };
            seen.insert(EntityKey { team, id: rng.gen_range(0..6) });
        }
        let records = seen
            .into_iter()
            .map(|key| EntityRecord {
                key,
                unit_type: UnitKind::ALL[rng.gen_range(0..UnitKind::ALL.len())],
                global_pos: Vec2::new(rng.gen_range(0.0..32.0), rng.gen_range(0.0..32.0)),
                health: rng.gen_range(0.0..=1.0),
                shield: rng.gen_range(0.0..=1.0),
                observed_at: now - rng.gen_range(0..3),
                source_agent: agent,
                hops: 0,
            })
            .collect();
        out.insert(agent, records);
    }
    out
}

/// Unit-cost shortest path length with Dijkstra; a cell may be entered when
/// it is free or is the goal.
pub fn dijkstra(grid: &Grid, start: Cell, goal: Cell) -> Option<u32> {
    let mut dist = vec![u32::MAX; GRID_SIZE * GRID_SIZE];
    let idx = |c: Cell| c.1 * GRID_SIZE + c.0;
    let mut heap = BinaryHeap::new();
    dist[idx(start)] = 0;
    heap.push(Reverse((0u32, start)));
    while let Some(Reverse((d, c))) = heap.pop() {
        if c == goal {
            return Some(d);
        }
        if d > dist[idx(c)] {
            continue;
        }
        let (x, y) = (c.0 as i64, c.1 as i64);
        for (nx, ny) in [(x + 1, y), (x - 1, y), (x, y + 1), (x, y - 1)] {
            if nx < 0 || ny < 0 || nx >= GRID_SIZE as i64 || ny >= GRID_SIZE as i64 {
                continue;
            }
            let n = (nx as usize, ny as usize);
            if grid.is_blocked(n) && n != goal {
                continue;
            }
            if d + 1 < dist[idx(n)] {
                dist[idx(n)] = d + 1;
                heap.push(Reverse((d + 1, n)));
            }
        }
    }
    None
}

/// Neighbour of `c` one step in `d`, with North as +y.
pub fn neighbour(c: Cell, d: Direction) -> Option<Cell> {
    let (x, y) = (c.0 as i64, c.1 as i64);
    let (nx, ny) = match d {
        Direction::North => (x, y + 1),
        Direction::South => (x, y - 1),
        Direction::East => (x + 1, y),
        Direction::West => (x - 1, y),
    };
    let n = GRID_SIZE as i64;
    ((0..n).contains(&nx) && (0..n).contains(&ny)).then(|| (nx as usize, ny as usize))
}

/// A grid with up to ten random obstacle discs.
pub fn random_grid<R: Rng>(rng: &mut R) -> Grid {
    let mut grid = Grid::new();
    for _ in 0..rng.gen_range(0..=10) {
        let center = Vec2::new(rng.gen_range(0.0..32.0), rng.gen_range(0.0..32.0));
        grid.block_disc(center, rng.gen_range(0.5..4.0));
    }
    grid
}

fn view<R: Rng>(rng: &mut R, id: usize, ally: bool) -> EntityView {
    let position = Vec2::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
    EntityView {
        id,
        unit_type: UnitKind::ALL[rng.gen_range(0..UnitKind::ALL.len())],
        position,
        distance: position.norm(),
        health: rng.gen_range(0.0..=1.0),
        shield: rng.gen_range(0.0..=1.0),
        can_attack: rng.gen_bool(0.5),
        last_action: ally.then(|| Action(rng.gen_range(0..20))),
    }
}

/// A random observation that satisfies the text format's consistency rules.
pub fn random_obs<R: Rng>(rng: &mut R) -> ObsData {
    let agent_id = rng.gen_range(0..12);
    let kind = UnitKind::ALL[rng.gen_range(0..UnitKind::ALL.len())];
    if rng.gen_bool(0.1) {
        return ObsData::dead(agent_id, kind);
    }
    let can_move = [rng.gen_bool(0.8), rng.gen_bool(0.8), rng.gen_bool(0.8), rng.gen_bool(0.8)];
    let mut available = vec![Action::STOP];
    for d in Direction::ALL {
        if can_move[d.index()] {
            available.push(Action::movement(d));
        }
    }
    let allies: Vec<EntityView> = (0..rng.gen_range(0..5)).map(|i| view(rng, i, true)).collect();
    let enemies: Vec<EntityView> = (0..rng.gen_range(0..6)).map(|i| view(rng, i, false)).collect();
    for e in &enemies {
        if e.can_attack {
            available.push(Action::target(e.id));
        }
    }
    ObsData {
        agent_id,
        own_unit_type: kind,
        alive: true,
        own_position: Vec2::new(rng.gen_range(0.0..=1.0), rng.gen_range(0.0..=1.0)),
        own_health: rng.gen_range(0.0..=1.0),
        own_shield: rng.gen_range(0.0..=1.0),
        own_sight_range: rng.gen_range(1.0..12.0),
        own_shoot_range: rng.gen_range(0.5..9.0),
        can_move,
        last_action: Action(rng.gen_range(0..20)),
        allies,
        enemies,
        available_actions: available,
    }
}

fn hit_points(u: &skirmish::world::UnitState, stats: &StatTable) -> f64 {
    let s = stats.get(u.kind);
    u.health * s.max_health + u.shield * s.max_shield
}

/// Reward of the transition `before -> after`, recomputed from the two
/// snapshots: damage taken by enemies, 10 per kill, 200 for a win with at
/// least one ally left, scaled so the best possible episode earns 20.
pub fn reward_oracle(before: &WorldSnapshot, after: &WorldSnapshot, stats: &StatTable, mode: RewardMode) -> f64 {
    let win = after.enemies.iter().all(|e| !e.alive) && after.allies.iter().any(|a| a.alive);
    if mode == RewardMode::Sparse {
        return if win { 1.0 } else { 0.0 };
    }
    let mut damage = 0.0;
    let mut kills = 0.0;
    for (b, a) in before.enemies.iter().zip(&after.enemies) {
        damage += (hit_points(b, stats) - hit_points(a, stats)).max(0.0);
        if b.alive && !a.alive {
            kills += 1.0;
        }
    }
    let best: f64 = before
        .enemies
        .iter()
        .map(|e| stats.get(e.kind).max_health + stats.get(e.kind).max_shield + 10.0)
        .sum::<f64>()
        + 200.0;
    (damage + 10.0 * kills + if win { 200.0 } else { 0.0 }) * 20.0 / best
}

pub fn enemy_view(id: usize, kind: UnitKind, position: Vec2) -> EntityView {
    EntityView {
        id,
        unit_type: kind,
        position,
        distance: position.norm(),
        health: 0.6,
        shield: 0.0,
        can_attack: true,
        last_action: None,
    }
}

/// An observer of `kind` with one enemy in front and `attackers` allies, all
/// far from the enemy so only the attacker count changes between contexts.
pub fn focus_context(lib: &SkillLibrary, kind: UnitKind, ally_kind: UnitKind, attackers: usize) -> TacticContext {
    let allies = (0..3)
        .map(|i| EntityView {
            id: i + 1,
            unit_type: ally_kind,
            position: Vec2::new(-0.6, -0.3 + 0.3 * i as f64),
            distance: Vec2::new(-0.6, -0.3 + 0.3 * i as f64).norm(),
            health: 1.0,
            shield: 0.0,
            can_attack: false,
            last_action: Some(if i < attackers { Action::target(0) } else { Action::STOP }),
        })
        .collect();
    let obs = ObsData {
        agent_id: 0,
        own_unit_type: kind,
        alive: true,
        own_position: Vec2::new(0.5, 0.5),
        own_health: 1.0,
        own_shield: 0.0,
        own_sight_range: 9.0,
        own_shoot_range: 6.0,
        can_move: [true; 4],
        last_action: Action::STOP,
        allies,
        enemies: vec![enemy_view(0, UnitKind::Zealot, Vec2::new(0.6, 0.0))],
        available_actions: vec![Action(1), Action(2), Action(3), Action(4), Action(5), Action(6)],
    };
    TacticContext::new(obs, Vec::new(), Arc::clone(&lib.tables))
}

pub fn target_score(lib: &SkillLibrary, skill_id: &str, kind: UnitKind, ally_kind: UnitKind, attackers: usize) -> f64 {
    let skill = lib.get(skill_id).unwrap();
    let ctx = focus_context(lib, kind, ally_kind, attackers);
    let target = ScoreTarget { view: &ctx.enemies()[0], is_enemy: true };
    let (score, warnings) = eval_score_traced(&skill.score_expr, target, &ctx, &skill.params);
    assert!(warnings.is_empty());
    score
}
