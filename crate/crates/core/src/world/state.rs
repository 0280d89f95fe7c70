use std::sync::Arc;

use rand::distributions::{Distribution, WeightedIndex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::action::Action;
use super::scenario::{MixEntry, RewardMode, ScenarioSpec};
use super::units::{StatTable, UnitKind, UnitStats};
use super::WorldError;
use crate::geom::{Direction, Rect, Vec2, MAP_SIZE};
use crate::obs_text::{EntityView, ObsData};

/// Kill bonus and win bonus of the dense reward, in hit-point units.
pub const KILL_BONUS: f64 = 10.0;
pub const WIN_BONUS: f64 = 200.0;
/// A flawless win sums to this much dense reward.
pub const REWARD_SCALE: f64 = 20.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Team {
    Ally,
    Enemy,
}

impl Team {
    pub fn opponent(self) -> Team {
        match self {
            Team::Ally => Team::Enemy,
            Team::Enemy => Team::Ally,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnitState {
    pub id: usize,
    pub team: Team,
    pub kind: UnitKind,
    pub pos: Vec2,
    /// Fraction of max health in `[0, 1]`.
    pub health: f64,
    /// Fraction of max shield in `[0, 1]`; zero for units without shields.
    pub shield: f64,
    pub cooldown: u32,
    pub alive: bool,
    pub last_action: Action,
}

impl UnitState {
    fn hit_points(&self, stats: &UnitStats) -> f64 {
        self.health * stats.max_health + self.shield * stats.max_shield
    }
}

/// Serializable view of everything that changes during an episode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorldSnapshot {
    pub timestep: u32,
    pub allies: Vec<UnitState>,
    pub enemies: Vec<UnitState>,
    /// Per enemy: the ally agent that first spotted it.
    pub spotters: Vec<Option<usize>>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct StepInfo {
    pub win: bool,
    pub enemies_killed: usize,
    pub allies_lost: usize,
    /// Hit points removed from enemies this step.
    pub damage_dealt: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepOutcome {
    /// Shared team reward.
    pub reward: f64,
    pub done: bool,
    pub info: StepInfo,
}

#[derive(Debug, Clone)]
pub struct WorldState {
    scenario: Arc<ScenarioSpec>,
    stats: Arc<StatTable>,
    allies: Vec<UnitState>,
    enemies: Vec<UnitState>,
    timestep: u32,
    spotters: Vec<Option<usize>>,
    done: bool,
    max_reward: f64,
}

fn sample_point(rng: &mut ChaCha8Rng, r: &Rect) -> Vec2 {
    Vec2::new(rng.gen_range(r.min.x..=r.max.x), rng.gen_range(r.min.y..=r.max.y))
}

fn sample_kind(rng: &mut ChaCha8Rng, mix: &[MixEntry]) -> UnitKind {
    let dist = WeightedIndex::new(mix.iter().map(|m| m.weight)).expect("validated mix");
    mix[dist.sample(rng)].unit
}

impl WorldState {
    /// Sample the initial state of an episode. Identical `(spec, seed)` pairs
    /// produce identical worlds.
    pub fn spawn(spec: &ScenarioSpec, seed: u64) -> Result<Self, WorldError> {
        spec.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let ally_kinds: Vec<UnitKind> = (0..spec.n_allies).map(|_| sample_kind(&mut rng, &spec.ally_mix)).collect();
        let enemy_kinds: Vec<UnitKind> = (0..spec.n_enemies)
            .map(|i| match ally_kinds.get(i) {
                Some(&k) if spec.mirror_teams => k,
                _ => sample_kind(&mut rng, &spec.enemy_mix),
            })
            .collect();
        let allies = ally_kinds.into_iter().map(|k| (k, sample_point(&mut rng, &spec.ally_spawn))).collect::<Vec<_>>();
        let enemies = enemy_kinds.into_iter().map(|k| (k, sample_point(&mut rng, &spec.enemy_spawn))).collect::<Vec<_>>();
        Self::with_units(spec, &allies, &enemies)
    }

    /// Build a world with explicit unit placement, at full health.
    pub fn with_units(
        spec: &ScenarioSpec,
        allies: &[(UnitKind, Vec2)],
        enemies: &[(UnitKind, Vec2)],
    ) -> Result<Self, WorldError> {
        if allies.is_empty() || enemies.is_empty() {
            return Err(WorldError::InvalidScenario(format!("{}: each team needs at least one unit", spec.name)));
        }
        let stats = StatTable::default().with_overrides(&spec.stat_overrides)?;
        let make = |team: Team, units: &[(UnitKind, Vec2)]| -> Result<Vec<UnitState>, WorldError> {
            units
                .iter()
                .enumerate()
                .map(|(id, &(kind, pos))| {
                    if !pos.in_map() {
                        return Err(WorldError::InvalidScenario(format!("unit {team:?}#{id} placed outside the map")));
                    }
                    let has_shield = stats.get(kind).max_shield > 0.0;
                    Ok(UnitState {
                        id,
                        team,
                        kind,
                        pos,
                        health: 1.0,
                        shield: if has_shield { 1.0 } else { 0.0 },
                        cooldown: 0,
                        alive: true,
                        last_action: Action::STOP,
                    })
                })
                .collect()
        };
        let allies = make(Team::Ally, allies)?;
        let enemies = make(Team::Enemy, enemies)?;
        let max_reward = enemies
            .iter()
            .map(|e| {
                let s = stats.get(e.kind);
                s.max_health + s.max_shield + KILL_BONUS
            })
            .sum::<f64>()
            + WIN_BONUS;
        let mut world = WorldState {
            scenario: Arc::new(spec.clone()),
            stats: Arc::new(stats),
            spotters: vec![None; enemies.len()],
            allies,
            enemies,
            timestep: 0,
            done: false,
            max_reward,
        };
        world.update_spotters();
        Ok(world)
    }

    pub fn scenario(&self) -> &ScenarioSpec {
        &self.scenario
    }

    pub fn stat_table(&self) -> &StatTable {
        &self.stats
    }

    pub fn stats(&self, kind: UnitKind) -> &UnitStats {
        self.stats.get(kind)
    }

    pub fn timestep(&self) -> u32 {
        self.timestep
    }

    pub fn is_done(&self) -> bool {
        self.done
    }

    /// Normaliser for dense rewards: the raw reward of a flawless win.
    pub fn max_reward(&self) -> f64 {
        self.max_reward
    }

    pub fn units(&self, team: Team) -> &[UnitState] {
        match team {
            Team::Ally => &self.allies,
            Team::Enemy => &self.enemies,
        }
    }

    pub fn unit(&self, team: Team, id: usize) -> &UnitState {
        &self.units(team)[id]
    }

    /// Mutable access for building test fixtures and hand-crafted scenarios.
    pub fn unit_mut(&mut self, team: Team, id: usize) -> &mut UnitState {
        match team {
            Team::Ally => &mut self.allies[id],
            Team::Enemy => &mut self.enemies[id],
        }
    }

    pub fn spotter_of(&self, enemy: usize) -> Option<usize> {
        self.spotters[enemy]
    }

    pub fn spotters(&self) -> &[Option<usize>] {
        &self.spotters
    }

    pub fn alive_count(&self, team: Team) -> usize {
        self.units(team).iter().filter(|u| u.alive).count()
    }

    /// Assign every unassigned, living enemy that is now inside some living
    /// ally's sight to the lowest-id such ally. An assignment holds for as long
    /// as its spotter lives; an enemy whose spotter died is up for grabs again.
    pub fn update_spotters(&mut self) {
        for (e, enemy) in self.enemies.iter().enumerate() {
            if self.spotters[e].is_some_and(|s| self.allies[s].alive) || !enemy.alive {
                continue;
            }
            self.spotters[e] = self
                .allies
                .iter()
                .find(|a| a.alive && a.pos.dist(enemy.pos) < self.stats.get(a.kind).sight_range)
                .map(|a| a.id);
        }
    }

    fn enemy_observable_by(&self, agent: usize, enemy: usize) -> bool {
        let a = &self.allies[agent];
        let e = &self.enemies[enemy];
        e.alive
            && a.pos.dist(e.pos) < self.stats.get(a.kind).sight_range
            && (!self.scenario.extended_partial_obs || self.spotters[enemy] == Some(agent))
    }

    /// Legal actions for one unit, sorted ascending.
    ///
    /// Targeted actions depend only on range and the target being alive; the
    /// first-spotter rule restricts what an agent observes, not what it may
    /// fire at.
    pub fn available_actions(&self, team: Team, id: usize) -> Vec<Action> {
        let unit = self.unit(team, id);
        if !unit.alive {
            return vec![Action::NO_OP];
        }
        let stats = self.stats.get(unit.kind);
        let mut actions = vec![Action::STOP];
        for dir in Direction::ALL {
            if (unit.pos + dir.unit().scale(stats.move_speed)).in_map() {
                actions.push(Action::movement(dir));
            }
        }
        let (targets, skip_self) = if stats.is_healer { (self.units(team), true) } else { (self.units(team.opponent()), false) };
        for t in targets {
            if t.alive && !(skip_self && t.id == id) && unit.pos.dist(t.pos) <= stats.shoot_range {
                actions.push(Action::target(t.id));
            }
        }
        actions
    }

    /// Local observation for ally agent `agent_id`.
    pub fn observe(&self, agent_id: usize) -> ObsData {
        let me = &self.allies[agent_id];
        if !me.alive {
            return ObsData::dead(agent_id, me.kind);
        }
        let stats = self.stats.get(me.kind);
        let sight = stats.sight_range;
        let available = self.available_actions(Team::Ally, agent_id);
        let view = |u: &UnitState, can_attack: bool, last_action: Option<Action>| {
            let rel = (u.pos - me.pos).scale(1.0 / sight);
            EntityView {
                id: u.id,
                unit_type: u.kind,
                position: rel,
                distance: rel.norm(),
                health: u.health,
                shield: u.shield,
                can_attack,
                last_action,
            }
        };
        let allies = self
            .allies
            .iter()
            .filter(|a| a.alive && a.id != agent_id && a.pos.dist(me.pos) < sight)
            .map(|a| view(a, stats.is_healer && available.contains(&Action::target(a.id)), Some(a.last_action)))
            .collect();
        let enemies = self
            .enemies
            .iter()
            .filter(|e| self.enemy_observable_by(agent_id, e.id))
            .map(|e| view(e, !stats.is_healer && available.contains(&Action::target(e.id)), None))
            .collect();
        let mut can_move = [false; 4];
        for dir in Direction::ALL {
            can_move[dir.index()] = available.contains(&Action::movement(dir));
        }
        ObsData {
            agent_id,
            own_unit_type: me.kind,
            alive: true,
            own_position: me.pos.scale(1.0 / MAP_SIZE),
            own_health: me.health,
            own_shield: me.shield,
            own_sight_range: sight,
            own_shoot_range: stats.shoot_range,
            can_move,
            last_action: me.last_action,
            allies,
            enemies,
            available_actions: available,
        }
    }

    fn check_actions(&self, team: Team, actions: &[Action]) -> Result<(), WorldError> {
        let expected = self.units(team).len();
        if actions.len() != expected {
            return Err(WorldError::ActionCount { team, expected, got: actions.len() });
        }
        for (agent, &action) in actions.iter().enumerate() {
            let mask = self.available_actions(team, agent);
            if !mask.contains(&action) {
                return Err(WorldError::IllegalAction { team, agent, action, mask });
            }
        }
        Ok(())
    }

    fn apply_damage(unit: &mut UnitState, stats: &UnitStats, hp: f64) {
        let shield_hp = unit.shield * stats.max_shield;
        if hp <= shield_hp {
            unit.shield -= hp / stats.max_shield;
        } else {
            unit.shield = 0.0;
            unit.health = (unit.health - (hp - shield_hp) / stats.max_health).max(0.0);
        }
    }

    /// Advance one timestep.
    ///
    /// Moves are applied simultaneously, then attacks, heals and baneling
    /// blasts resolve against the targets chosen from the pre-move state,
    /// then deaths, reward and termination.
    pub fn step(&mut self, ally_actions: &[Action], enemy_actions: &[Action]) -> Result<StepOutcome, WorldError> {
        if self.done {
            return Err(WorldError::Finished);
        }
        self.check_actions(Team::Ally, ally_actions)?;
        self.check_actions(Team::Enemy, enemy_actions)?;

        let stats = Arc::clone(&self.stats);
        let enemy_hp_before: Vec<f64> = self.enemies.iter().map(|e| e.hit_points(stats.get(e.kind))).collect();
        let enemies_alive_before: Vec<bool> = self.enemies.iter().map(|e| e.alive).collect();
        let allies_alive_before = self.alive_count(Team::Ally);
        let pre_move: Vec<(Team, Vec2)> =
            self.allies.iter().chain(self.enemies.iter()).map(|u| (u.team, u.pos)).collect();

        // (1) movement
        for (team, actions) in [(Team::Ally, ally_actions), (Team::Enemy, enemy_actions)] {
            for (id, action) in actions.iter().enumerate() {
                if let Some(dir) = action.direction() {
                    let unit = self.unit_mut(team, id);
                    let speed = stats.get(unit.kind).move_speed;
                    unit.pos = unit.pos + dir.unit().scale(speed);
                }
            }
        }

        // (2) attacks, heals, blasts; damage first so a heal cannot revive
        let mut heals: Vec<(Team, usize, f64)> = Vec::new();
        let mut fired: Vec<(Team, usize)> = Vec::new();
        for (team, actions) in [(Team::Ally, ally_actions), (Team::Enemy, enemy_actions)] {
            for (id, action) in actions.iter().enumerate() {
                let Some(target) = action.target_index() else { continue };
                let unit = self.unit(team, id);
                if unit.cooldown > 0 {
                    continue;
                }
                let s = stats.get(unit.kind);
                fired.push((team, id));
                if s.is_healer {
                    heals.push((team, target, s.heal_per_hit));
                } else if s.is_suicide_aoe {
                    let origin = pre_move[if team == Team::Ally { id } else { self.allies.len() + id }].1;
                    let radius = self.scenario.aoe_radius_fraction * s.sight_range;
                    let opp = team.opponent();
                    let victims: Vec<usize> = self
                        .units(opp)
                        .iter()
                        .filter(|v| v.alive && v.pos.dist(origin) <= radius)
                        .map(|v| v.id)
                        .collect();
                    for v in victims {
                        let kind = self.unit(opp, v).kind;
                        Self::apply_damage(self.unit_mut(opp, v), stats.get(kind), s.damage_per_hit);
                    }
                    let me = self.unit_mut(team, id);
                    me.health = 0.0;
                    me.shield = 0.0;
                } else {
                    let opp = team.opponent();
                    let kind = self.unit(opp, target).kind;
                    Self::apply_damage(self.unit_mut(opp, target), stats.get(kind), s.damage_per_hit);
                }
            }
        }
        for (team, target, amount) in heals {
            let unit = self.unit_mut(team, target);
            if unit.health > 0.0 {
                let max = stats.get(unit.kind).max_health;
                unit.health = (unit.health + amount / max).min(1.0);
            }
        }
        for (team, actions) in [(Team::Ally, ally_actions), (Team::Enemy, enemy_actions)] {
            for (id, &action) in actions.iter().enumerate() {
                let fired_now = fired.contains(&(team, id));
                let unit = self.unit_mut(team, id);
                if fired_now {
                    unit.cooldown = stats.get(unit.kind).attack_cooldown;
                }
                unit.cooldown = unit.cooldown.saturating_sub(1);
                unit.last_action = action;
            }
        }

        // (3) deaths
        for unit in self.allies.iter_mut().chain(self.enemies.iter_mut()) {
            if unit.alive && unit.health <= 1e-12 {
                unit.alive = false;
                unit.health = 0.0;
                unit.shield = 0.0;
            }
        }

        // (4) reward
        let damage_dealt: f64 = self
            .enemies
            .iter()
            .zip(&enemy_hp_before)
            .map(|(e, before)| (before - e.hit_points(stats.get(e.kind))).max(0.0))
            .sum();
        let enemies_killed = self.enemies.iter().zip(&enemies_alive_before).filter(|(e, &was)| was && !e.alive).count();
        let allies_alive = self.alive_count(Team::Ally);
        let enemies_alive = self.alive_count(Team::Enemy);
        let win = enemies_alive == 0 && allies_alive > 0;
        let reward = match self.scenario.reward_mode {
            RewardMode::Dense => {
                let raw = damage_dealt + KILL_BONUS * enemies_killed as f64 + if win { WIN_BONUS } else { 0.0 };
                raw * REWARD_SCALE / self.max_reward
            }
            RewardMode::Sparse => {
                if win {
                    1.0
                } else {
                    0.0
                }
            }
        };

        // (5) termination
        self.timestep += 1;
        self.done = allies_alive == 0 || enemies_alive == 0 || self.timestep >= self.scenario.episode_limit;
        self.update_spotters();

        Ok(StepOutcome {
            reward,
            done: self.done,
            info: StepInfo { win, enemies_killed, allies_lost: allies_alive_before - allies_alive, damage_dealt },
        })
    }

    pub fn snapshot(&self) -> WorldSnapshot {
        WorldSnapshot {
            timestep: self.timestep,
            allies: self.allies.clone(),
            enemies: self.enemies.clone(),
            spotters: self.spotters.clone(),
        }
    }

    /// Hex SHA-256 of the canonical JSON snapshot.
    pub fn digest(&self) -> String {
        let bytes = serde_json::to_vec(&self.snapshot()).expect("snapshot serializes");
        hex::encode(Sha256::digest(bytes))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::world::Race;

    fn spec() -> ScenarioSpec {
        ScenarioSpec::builtin("protoss_5v5").unwrap()
    }

    fn duel(ally: (UnitKind, Vec2), enemy: (UnitKind, Vec2)) -> WorldState {
        WorldState::with_units(&spec(), &[ally], &[enemy]).unwrap()
    }

    fn stop_all(w: &WorldState) -> (Vec<Action>, Vec<Action>) {
        let f = |team| {
            w.units(team).iter().map(|u| if u.alive { Action::STOP } else { Action::NO_OP }).collect::<Vec<_>>()
        };
        (f(Team::Ally), f(Team::Enemy))
    }

    #[test]
    fn spawn_is_deterministic_and_sized() {
        let a = WorldState::spawn(&spec(), 7).unwrap();
        let b = WorldState::spawn(&spec(), 7).unwrap();
        assert_eq!(a.digest(), b.digest());
        assert_ne!(a.digest(), WorldState::spawn(&spec(), 8).unwrap().digest());
        assert_eq!(a.units(Team::Ally).len(), 5);
        assert_eq!(a.units(Team::Enemy).len(), 5);
        for u in a.units(Team::Ally).iter().chain(a.units(Team::Enemy)) {
            assert_eq!(u.kind.race(), Race::Protoss);
            assert_eq!(u.health, 1.0);
            assert_eq!(u.shield, 1.0);
        }
        let w = WorldState::spawn(&ScenarioSpec::builtin("protoss_5v6").unwrap(), 3).unwrap();
        assert_eq!((w.units(Team::Ally).len(), w.units(Team::Enemy).len()), (5, 6));
    }

    #[test]
    fn dead_agent_only_noop() {
        let mut w = duel((UnitKind::Stalker, Vec2::new(10.0, 10.0)), (UnitKind::Zealot, Vec2::new(20.0, 10.0)));
        w.unit_mut(Team::Ally, 0).alive = false;
        w.unit_mut(Team::Ally, 0).health = 0.0;
        assert_eq!(w.available_actions(Team::Ally, 0), vec![Action::NO_OP]);
        let obs = w.observe(0);
        assert!(!obs.alive);
        assert_eq!(obs.available_actions, vec![Action::NO_OP]);
    }

    #[test]
    fn west_edge_blocks_west_move() {
        let w = duel((UnitKind::Stalker, Vec2::new(0.5, 10.0)), (UnitKind::Zealot, Vec2::new(20.0, 10.0)));
        let mask = w.available_actions(Team::Ally, 0);
        assert!(!mask.contains(&Action::movement(Direction::West)));
        assert!(mask.contains(&Action::movement(Direction::East)));
        assert!(mask.contains(&Action::STOP));
    }

    #[test]
    fn stop_all_only_advances_time() {
        let mut w = WorldState::spawn(&spec(), 1).unwrap();
        let before = w.snapshot();
        let (a, e) = stop_all(&w);
        let out = w.step(&a, &e).unwrap();
        assert_eq!(out.reward, 0.0);
        let after = w.snapshot();
        assert_eq!(after.timestep, before.timestep + 1);
        assert_eq!(after.allies, before.allies);
        assert_eq!(after.enemies, before.enemies);
    }

    #[test]
    fn shield_absorbs_damage_first() {
        let mut w = duel((UnitKind::Stalker, Vec2::new(10.0, 10.0)), (UnitKind::Stalker, Vec2::new(14.0, 10.0)));
        let out = w.step(&[Action::target(0)], &[Action::STOP]).unwrap();
        let s = w.stats(UnitKind::Stalker).clone();
        let target = w.unit(Team::Enemy, 0);
        assert!((target.shield - (1.0 - s.damage_per_hit / s.max_shield)).abs() < 1e-12);
        assert_eq!(target.health, 1.0);
        assert!((out.info.damage_dealt - s.damage_per_hit).abs() < 1e-12);
        assert_eq!(w.unit(Team::Ally, 0).cooldown, s.attack_cooldown - 1);
    }

    #[test]
    fn cooldown_blocks_consecutive_hits() {
        let mut w = duel((UnitKind::Stalker, Vec2::new(10.0, 10.0)), (UnitKind::Stalker, Vec2::new(14.0, 10.0)));
        w.step(&[Action::target(0)], &[Action::STOP]).unwrap();
        let after_first = w.unit(Team::Enemy, 0).shield;
        w.step(&[Action::target(0)], &[Action::STOP]).unwrap();
        assert_eq!(w.unit(Team::Enemy, 0).shield, after_first);
        w.step(&[Action::target(0)], &[Action::STOP]).unwrap();
        assert!(w.unit(Team::Enemy, 0).shield < after_first);
    }

    #[test]
    fn out_of_range_attack_rejected_with_diagnostic() {
        let mut w = duel((UnitKind::Stalker, Vec2::new(10.0, 10.0)), (UnitKind::Zealot, Vec2::new(20.0, 10.0)));
        let err = w.step(&[Action::target(0)], &[Action::STOP]).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("agent 0") && msg.contains("action 6"), "{msg}");
    }

    #[test]
    fn baneling_blast_kills_itself_and_splashes() {
        let spec = ScenarioSpec::builtin("zerg_5v5").unwrap();
        let mut w = WorldState::with_units(
            &spec,
            &[(UnitKind::Baneling, Vec2::new(10.0, 10.0))],
            &[(UnitKind::Zergling, Vec2::new(10.8, 10.0)), (UnitKind::Zergling, Vec2::new(11.5, 10.5)), (UnitKind::Zergling, Vec2::new(20.0, 10.0))],
        )
        .unwrap();
        let out = w.step(&[Action::target(0)], &[Action::STOP; 3]).unwrap();
        assert!(!w.unit(Team::Ally, 0).alive);
        assert!(w.unit(Team::Enemy, 0).health < 1.0);
        assert!(w.unit(Team::Enemy, 1).health < 1.0);
        assert_eq!(w.unit(Team::Enemy, 2).health, 1.0);
        assert!(out.done && !out.info.win);
    }

    #[test]
    fn medivac_heals_but_not_past_full() {
        let spec = ScenarioSpec::builtin("terran_5v5").unwrap();
        let mut w = WorldState::with_units(
            &spec,
            &[(UnitKind::Medivac, Vec2::new(10.0, 10.0)), (UnitKind::Marine, Vec2::new(11.0, 10.0))],
            &[(UnitKind::Marine, Vec2::new(25.0, 10.0))],
        )
        .unwrap();
        assert!(!w.available_actions(Team::Ally, 0).contains(&Action::target(0)), "no self-heal");
        w.unit_mut(Team::Ally, 1).health = 0.5;
        w.step(&[Action::target(1), Action::STOP], &[Action::STOP]).unwrap();
        let m = w.stats(UnitKind::Marine).max_health;
        let h = w.stats(UnitKind::Medivac).heal_per_hit;
        assert!((w.unit(Team::Ally, 1).health - (0.5 + h / m)).abs() < 1e-12);
    }

    #[test]
    fn first_spotter_is_lowest_id_and_held_while_alive() {
        let mut w = WorldState::with_units(
            &spec(),
            &[(UnitKind::Stalker, Vec2::new(2.0, 2.0)), (UnitKind::Stalker, Vec2::new(10.0, 10.0)), (UnitKind::Stalker, Vec2::new(12.0, 10.0))],
            &[(UnitKind::Stalker, Vec2::new(26.0, 10.0))],
        )
        .unwrap();
        assert_eq!(w.spotter_of(0), None);
        // move the enemy into sight of agents 1 and 2 simultaneously
        w.unit_mut(Team::Enemy, 0).pos = Vec2::new(17.0, 10.0);
        w.update_spotters();
        assert_eq!(w.spotter_of(0), Some(1));
        assert_eq!(w.observe(1).enemies.len(), 1);
        assert!(w.observe(2).enemies.is_empty());
        // agent 0 getting closer does not steal it
        w.unit_mut(Team::Ally, 0).pos = Vec2::new(16.0, 10.0);
        w.update_spotters();
        assert_eq!(w.spotter_of(0), Some(1));
        assert!(w.observe(0).enemies.is_empty());
        // once the spotter dies the next ally in sight takes over
        w.unit_mut(Team::Ally, 1).alive = false;
        w.update_spotters();
        assert_eq!(w.spotter_of(0), Some(0));
        assert_eq!(w.observe(0).enemies.len(), 1);
    }

    #[test]
    fn observation_position_reconstructs_global() {
        let w = WorldState::spawn(&spec(), 11).unwrap();
        for a in 0..5 {
            let obs = w.observe(a);
            for v in obs.allies.iter() {
                let g = v.position.scale(obs.own_sight_range) + obs.own_position.scale(MAP_SIZE);
                assert!(g.dist(w.unit(Team::Ally, v.id).pos) < 1e-9);
                assert!(v.distance < 1.0);
            }
        }
    }
}
