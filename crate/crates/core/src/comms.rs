//! Structured entity sharing between ally agents.
//!
//! Each timestep every living agent turns its local observation into hop-0
//! [`EntityRecord`]s. Agents within mutual sight form a [`VisibilityGraph`],
//! and records are relayed neighbour to neighbour for at most `max_hops`
//! rounds into a [`GlobalEntityMemory`]. Older knowledge is carried forward
//! until it is `ttl` steps stale.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geom::{Vec2, MAP_SIZE};
use crate::obs_text::ObsData;
use crate::world::{Team, UnitKind, WorldState};

pub const DEFAULT_MAX_HOPS: u32 = 3;
pub const DEFAULT_TTL: u32 = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct EntityKey {
    pub team: Team,
    pub id: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntityRecord {
    pub key: EntityKey,
    pub unit_type: UnitKind,
    pub global_pos: Vec2,
    pub health: f64,
    pub shield: f64,
    pub observed_at: u32,
    pub source_agent: usize,
    pub hops: u32,
}

#[derive(Debug, Error, PartialEq)]
pub enum CommsError {
    #[error("cannot merge records for different entities {0:?} and {1:?}")]
    KeyMismatch(EntityKey, EntityKey),
}

/// One hop-0 record per entity in `obs`, positioned in global map coordinates.
pub fn record_local(agent_id: usize, obs: &ObsData, t: u32) -> Vec<EntityRecord> {
    if !obs.alive {
        return Vec::new();
    }
    let origin = obs.own_position.scale(MAP_SIZE);
    let lists = [(Team::Ally, &obs.allies), (Team::Enemy, &obs.enemies)];
    lists
        .into_iter()
        .flat_map(|(team, list)| {
            list.iter().map(move |e| EntityRecord {
                key: EntityKey { team, id: e.id },
                unit_type: e.unit_type,
                global_pos: e.position.scale(obs.own_sight_range) + origin,
                health: e.health,
                shield: e.shield,
                observed_at: t,
                source_agent: agent_id,
                hops: 0,
            })
        })
        .collect()
}

/// `true` when `a` should be kept over `b`: fresher, then fewer hops, then
/// lower source agent.
fn preferred(a: &EntityRecord, b: &EntityRecord) -> bool {
    (std::cmp::Reverse(a.observed_at), a.hops, a.source_agent) <= (std::cmp::Reverse(b.observed_at), b.hops, b.source_agent)
}

/// Resolve two records about the same entity.
pub fn merge_records(a: &EntityRecord, b: &EntityRecord) -> Result<EntityRecord, CommsError> {
    if a.key != b.key {
        return Err(CommsError::KeyMismatch(a.key, b.key));
    }
    Ok(if preferred(a, b) { a.clone() } else { b.clone() })
}

/// Undirected graph over living ally agents; an edge joins two agents whose
/// distance is within both sight ranges.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct VisibilityGraph {
    adjacency: BTreeMap<usize, BTreeSet<usize>>,
}

impl VisibilityGraph {
    /// Build from `(agent_id, position, sight_range)` triples.
    pub fn from_agents(agents: &[(usize, Vec2, f64)]) -> Self {
        let mut adjacency: BTreeMap<usize, BTreeSet<usize>> = agents.iter().map(|a| (a.0, BTreeSet::new())).collect();
        for (i, &(a, pa, sa)) in agents.iter().enumerate() {
            for &(b, pb, sb) in &agents[i + 1..] {
                if a != b && pa.dist(pb) <= sa.min(sb) {
                    adjacency.entry(a).or_default().insert(b);
                    adjacency.entry(b).or_default().insert(a);
                }
            }
        }
        VisibilityGraph { adjacency }
    }

    /// Build from explicit edges, e.g. for synthetic topologies.
    pub fn from_edges(nodes: impl IntoIterator<Item = usize>, edges: &[(usize, usize)]) -> Self {
        let mut adjacency: BTreeMap<usize, BTreeSet<usize>> = nodes.into_iter().map(|n| (n, BTreeSet::new())).collect();
        for &(a, b) in edges {
            if a != b {
                adjacency.entry(a).or_default().insert(b);
                adjacency.entry(b).or_default().insert(a);
            }
        }
        VisibilityGraph { adjacency }
    }

    pub fn nodes(&self) -> impl Iterator<Item = usize> + '_ {
        self.adjacency.keys().copied()
    }

    pub fn neighbors(&self, node: usize) -> impl Iterator<Item = usize> + '_ {
        self.adjacency.get(&node).into_iter().flat_map(|s| s.iter().copied())
    }

    /// Edges as `(low, high)` pairs in ascending order.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        self.adjacency
            .iter()
            .flat_map(|(&a, nbrs)| nbrs.iter().filter(move |&&b| a < b).map(move |&b| (a, b)))
            .collect()
    }
}

pub fn build_visibility_graph(world: &WorldState) -> VisibilityGraph {
    let agents: Vec<(usize, Vec2, f64)> = world
        .units(Team::Ally)
        .iter()
        .filter(|u| u.alive)
        .map(|u| (u.id, u.pos, world.stats(u.kind).sight_range))
        .collect();
    VisibilityGraph::from_agents(&agents)
}

type Knowledge = BTreeMap<EntityKey, EntityRecord>;

/// What each agent knows after a share phase.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct GlobalEntityMemory {
    pub max_hops: u32,
    knowledge: BTreeMap<usize, Knowledge>,
}

impl GlobalEntityMemory {
    pub fn new(max_hops: u32) -> Self {
        GlobalEntityMemory { max_hops, knowledge: BTreeMap::new() }
    }

    pub fn knowledge(&self, agent: usize) -> impl Iterator<Item = &EntityRecord> {
        self.knowledge.get(&agent).into_iter().flat_map(|k| k.values())
    }

    pub fn record(&self, agent: usize, key: EntityKey) -> Option<&EntityRecord> {
        self.knowledge.get(&agent)?.get(&key)
    }

    pub fn agents(&self) -> impl Iterator<Item = usize> + '_ {
        self.knowledge.keys().copied()
    }

    /// `(entity, hops)` pairs known to `agent`, in key order.
    pub fn key_hops(&self, agent: usize) -> Vec<(EntityKey, u32)> {
        self.knowledge(agent).map(|r| (r.key, r.hops)).collect()
    }

    fn offer(&mut self, agent: usize, rec: EntityRecord) -> bool {
        let slot = self.knowledge.entry(agent).or_default();
        match slot.get(&rec.key) {
            Some(existing) if preferred(existing, &rec) => false,
            _ => {
                slot.insert(rec.key, rec);
                true
            }
        }
    }

    /// Keep this step's knowledge and fill gaps from `previous` for agents that
    /// are still in the graph, dropping records older than `ttl` steps.
    pub fn carry_over(&mut self, previous: &GlobalEntityMemory, graph: &VisibilityGraph, now: u32, ttl: u32) {
        for agent in graph.nodes() {
            let Some(old) = previous.knowledge.get(&agent) else { continue };
            for rec in old.values() {
                if now.saturating_sub(rec.observed_at) <= ttl {
                    self.offer(agent, rec.clone());
                }
            }
        }
    }
}

/// Relay hop-0 records across `graph` for up to `max_hops` rounds.
///
/// Every round each agent forwards the records it improved on in the previous
/// round to its neighbours with one more hop; receivers keep the preferred
/// record per entity.
pub fn propagate(hop0: &BTreeMap<usize, Vec<EntityRecord>>, graph: &VisibilityGraph, max_hops: u32) -> GlobalEntityMemory {
    let mut memory = GlobalEntityMemory::new(max_hops);
    let mut frontier: BTreeMap<usize, Vec<EntityRecord>> = BTreeMap::new();
    for node in graph.nodes() {
        memory.knowledge.entry(node).or_default();
    }
    for (&agent, records) in hop0 {
        memory.knowledge.entry(agent).or_default();
        for rec in records {
            debug_assert_eq!(rec.hops, 0);
            if memory.offer(agent, rec.clone()) {
                frontier.entry(agent).or_default().push(rec.clone());
            }
        }
    }
    for _round in 0..max_hops {
        // rounds are synchronous: decide what each sender forwards before any
        // delivery of this round lands, and only forward what is still its best
        let outgoing: Vec<(usize, Vec<EntityRecord>)> = frontier
            .iter()
            .map(|(&sender, records)| {
                let current = records.iter().filter(|r| memory.record(sender, r.key) == Some(*r)).cloned().collect();
                (sender, current)
            })
            .collect();
        let mut next: BTreeMap<usize, Vec<EntityRecord>> = BTreeMap::new();
        for (sender, current) in &outgoing {
            for nb in graph.neighbors(*sender) {
                for rec in current {
                    let relayed = EntityRecord { hops: rec.hops + 1, ..rec.clone() };
                    if memory.offer(nb, relayed.clone()) {
                        next.entry(nb).or_default().push(relayed);
                    }
                }
            }
        }
        if next.is_empty() {
            break;
        }
        frontier = next;
    }
    memory
}
