//! The five control templates. Each picks an action from a [`TacticContext`]
//! using the skill's score expression for target ranking and its params for
//! every spacing and threshold constant.

use std::f64::consts::PI;

use rand::seq::SliceRandom;
use rand::Rng;

use super::context::{Heading, RegionOfInterest, TacticContext};
use super::expr::{eval_score, ScoreTarget};
use super::pathfind::find_path_among;
use super::{ControlTemplate, Skill};
use crate::geom::{Vec2, MAP_SIZE};
use crate::obs_text::EntityView;
use crate::world::{Action, Team, UnitKind};

struct Run<'a, R> {
    ctx: &'a TacticContext,
    skill: &'a Skill,
    rng: &'a mut R,
}

fn centroid(units: &[&EntityView]) -> Option<Vec2> {
    Vec2::centroid(units.iter().map(|u| u.position))
}

fn sign(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Push `p` by `step` along each axis away from `away`, per axis sign.
fn offset_away(p: Vec2, away: Vec2, step: f64) -> Vec2 {
    let d = p - away;
    Vec2::new(p.x + sign(d.x) * step, p.y + sign(d.y) * step)
}

fn bearing(p: Vec2) -> f64 {
    p.y.atan2(p.x)
}

impl<'a, R: Rng> Run<'a, R> {
    fn param(&self, name: &str) -> f64 {
        self.skill.params[name]
    }

    fn sight(&self) -> f64 {
        self.ctx.obs.own_sight_range
    }

    fn last_action(&self) -> Action {
        self.ctx.obs.last_action
    }

    fn score(&self, view: &EntityView, is_enemy: bool) -> f64 {
        eval_score(&self.skill.score_expr, ScoreTarget { view, is_enemy }, self.ctx, &self.skill.params)
    }

    fn outside_gate(&self, a: Vec2, b: Vec2) -> bool {
        let gate = self.param("bearing_gate");
        let diff = (bearing(a) - bearing(b)).abs();
        gate < diff && diff < 2.0 * PI - gate
    }

    fn path(&self, target: Vec2, target_type: Option<UnitKind>) -> Option<Action> {
        let others = self.ctx.allies().iter().chain(self.ctx.enemies());
        find_path_among(&self.ctx.obs, others, target.x, target.y, target_type)
    }

    fn attack_actions(&self) -> Vec<Action> {
        self.ctx.obs.available_actions.iter().copied().filter(|a| a.is_targeted()).collect()
    }

    fn attack(&self, id: usize) -> Option<Action> {
        let a = Action::target(id);
        self.ctx.obs.is_available(a).then_some(a)
    }

    /// Keep attacking the last target, else the nearest attackable enemy,
    /// else any attack.
    fn fallback_attack(&mut self, enemies: &[&EntityView]) -> Option<Action> {
        let attacks = self.attack_actions();
        if attacks.is_empty() {
            return None;
        }
        if attacks.contains(&self.last_action()) {
            return Some(self.last_action());
        }
        let nearest = enemies.iter().filter(|e| e.can_attack).min_by(|a, b| a.distance.total_cmp(&b.distance));
        if let Some(a) = nearest.and_then(|e| self.attack(e.id)) {
            return Some(a);
        }
        attacks.choose(self.rng).copied()
    }

    /// Target relative to self, pulled back to the map centre if it would leave the map.
    fn clamp_into_map(&self, target: Vec2) -> Vec2 {
        let obs = &self.ctx.obs;
        let global = target.scale(self.sight()) + obs.own_position.scale(MAP_SIZE);
        if (0.0..=MAP_SIZE).contains(&global.x) && (0.0..=MAP_SIZE).contains(&global.y) {
            target
        } else {
            (Vec2::new(0.5, 0.5) - obs.own_position).scale(MAP_SIZE / self.sight())
        }
    }

    fn flee(&self, enemies: &[&EntityView]) -> Option<Action> {
        let c = centroid(enemies)?;
        self.path(self.clamp_into_map(-c), None)
    }

    /// Highest score; ties go to the nearest.
    fn best_by_score<'e>(&self, units: &[&'e EntityView], scores: &[f64]) -> Option<&'e EntityView> {
        let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        units
            .iter()
            .zip(scores)
            .filter(|(_, &s)| s == max)
            .map(|(u, _)| *u)
            .min_by(|a, b| a.distance.total_cmp(&b.distance))
    }

    fn enemy_center(&self, enemies: &[&EntityView]) -> Vec2 {
        let in_range: Vec<&EntityView> = enemies.iter().copied().filter(|e| e.distance < 1.0).collect();
        centroid(if in_range.is_empty() { enemies } else { &in_range }).unwrap_or_default()
    }

    fn medivac_support(&mut self) -> Option<Action> {
        let allies: Vec<&EntityView> = self.ctx.allies().iter().collect();
        let enemies: Vec<&EntityView> = self.ctx.enemies().iter().collect();
        let heals = self.attack_actions();
        if allies.is_empty() {
            return self.flee(&enemies);
        }
        let sight = self.sight();
        if !enemies.is_empty() {
            let melee: Vec<&EntityView> = allies.iter().copied().filter(|a| a.unit_type.is_melee()).collect();
            let anchor = centroid(if melee.is_empty() { &allies } else { &melee }).unwrap_or_default();
            let enemy_center = self.enemy_center(&enemies);
            let safe = offset_away(anchor, enemy_center, self.param("standoff") / sight);
            let distance = safe.norm();
            let criterion = self.param("standoff_criterion") / sight;
            if (self.last_action().is_targeted() || heals.is_empty())
                && distance > criterion
                && self.outside_gate(enemy_center, anchor)
            {
                if let Some(a) = self.path(safe, None) {
                    return Some(a);
                }
            }
        }
        let scores: Vec<f64> = allies.iter().map(|a| self.score(a, false)).collect();
        let best = self.best_by_score(&allies, &scores)?;
        let closest = allies.iter().copied().min_by(|a, b| a.distance.total_cmp(&b.distance))?;
        let lowest = allies.iter().copied().min_by(|a, b| a.health.total_cmp(&b.health))?;
        let threshold = self.param("heal_threshold");
        for cand in [best, closest, lowest] {
            if cand.health > 0.0 && cand.health < threshold {
                if let Some(a) = self.attack(cand.id) {
                    return Some(a);
                }
            }
        }
        self.path(best.position, Some(best.unit_type))
    }

    fn melee_engage(&mut self) -> Option<Action> {
        let allies: Vec<&EntityView> = self.ctx.allies().iter().collect();
        let enemies: Vec<&EntityView> = self.ctx.enemies().iter().collect();
        let sight = self.sight();
        if enemies.is_empty() {
            return self.melee_regroup(&allies);
        }
        let attacks = self.attack_actions();
        let enemy_center = self.enemy_center(&enemies);
        let melee: Vec<&EntityView> = allies.iter().copied().filter(|a| a.unit_type.is_melee()).collect();
        if let Some(c) = centroid(&melee) {
            let safe = c.scale(0.5);
            let distance = safe.norm();
            let regroup = self.param("regroup_distance");
            if (attacks.is_empty() || distance > regroup)
                && distance > self.param("regroup_criterion") / sight
                && (self.outside_gate(enemy_center, safe) || distance > regroup)
            {
                if let Some(a) = self.path(safe, None) {
                    return Some(a);
                }
            }
        }
        let radius = self.param("cluster_radius");
        let base = self.param("cluster_base");
        let scores: Vec<f64> = enemies
            .iter()
            .map(|e| {
                let cluster = enemies.iter().filter(|o| o.position.dist(e.position) <= radius).count();
                self.score(e, true) + base.powi(cluster as i32)
            })
            .collect();
        let best = self.best_by_score(&enemies, &scores)?;
        if best.can_attack {
            if let Some(a) = self.attack(best.id) {
                return Some(a);
            }
        }
        if let Some(a) = self.path(best.position, Some(best.unit_type)) {
            return Some(a);
        }
        self.fallback_attack(&enemies)
    }

    fn melee_regroup(&mut self, allies: &[&EntityView]) -> Option<Action> {
        if allies.is_empty() {
            return None;
        }
        let melee: Vec<&EntityView> = allies.iter().copied().filter(|a| a.unit_type.is_melee()).collect();
        if let Some(c) = centroid(&melee) {
            let spread = melee.iter().map(|a| a.position.dist(c)).fold(0.0, f64::max);
            if c.norm() > self.param("spacing") || spread > 0.1 {
                return self.path(c.scale(0.85), None);
            }
            return None;
        }
        let c = centroid(allies)?;
        if c.norm() > 0.05 {
            return self.path(c, None);
        }
        None
    }

    fn ranged_kite(&mut self) -> Option<Action> {
        let allies: Vec<&EntityView> = self.ctx.allies().iter().collect();
        let enemies: Vec<&EntityView> = self.ctx.enemies().iter().collect();
        let sight = self.sight();
        if enemies.is_empty() {
            let melee: Vec<&EntityView> = allies.iter().copied().filter(|a| a.unit_type.is_melee()).collect();
            let c = centroid(if melee.is_empty() { &allies } else { &melee })?;
            return if c.norm() > 0.05 { self.path(c, None) } else { None };
        }
        if allies.is_empty() {
            return self.ranged_alone(&enemies);
        }
        let attacks = self.attack_actions();
        let enemy_center = self.enemy_center(&enemies);
        let melee_allies: Vec<&EntityView> = allies.iter().copied().filter(|a| a.unit_type.is_melee()).collect();
        let anchor = match centroid(&melee_allies) {
            Some(c) => c,
            None => centroid(&allies).unwrap_or_default().scale(0.5),
        };
        let mut safe = anchor;
        if !melee_allies.is_empty() {
            safe = offset_away(safe, enemy_center, self.param("kite_offset") / sight);
        }
        let threat_range = self.param("threat_range") / sight;
        let closest_melee_enemy = enemies
            .iter()
            .copied()
            .filter(|e| e.distance < 1.0 && e.unit_type.is_melee())
            .min_by(|a, b| a.distance.total_cmp(&b.distance));
        let mut threatened = false;
        if let Some(m) = closest_melee_enemy {
            if m.distance <= threat_range {
                threatened = true;
                safe = offset_away(safe, m.position, self.param("threat_offset") / sight);
            }
        }
        let distance = safe.norm();
        let reposition = self.param("reposition_distance");
        if (self.last_action().is_targeted() || attacks.is_empty() || distance > reposition)
            && distance > threat_range
            && (self.outside_gate(enemy_center, anchor) || threatened || distance > reposition)
        {
            if let Some(a) = self.path(safe, None) {
                return Some(a);
            }
        }
        let focus_add = self.param("focus_add");
        let penalty = self.param("safe_dist_penalty");
        let scores: Vec<f64> = enemies
            .iter()
            .map(|e| {
                let attackers = allies
                    .iter()
                    .filter(|a| a.last_action.is_some_and(|l| l.target_index() == Some(e.id)))
                    .count();
                let s = self.score(e, true) + attackers as f64 * focus_add;
                s * (1.0 - e.position.dist(safe) * penalty)
            })
            .collect();
        // first maximum in id order
        let mut best_idx = 0;
        for (i, s) in scores.iter().enumerate() {
            if *s > scores[best_idx] {
                best_idx = i;
            }
        }
        let best = enemies[best_idx];
        if best.can_attack {
            if let Some(a) = self.attack(best.id) {
                return Some(a);
            }
        }
        let gate = self.param("bearing_gate");
        let diff = (bearing(best.position) - bearing(anchor)).abs();
        let aligned = diff < gate || diff > 2.0 * PI - gate;
        if (aligned || melee_allies.is_empty()) && best.distance > self.ctx.obs.own_shoot_range / sight {
            if let Some(a) = self.path(best.position, Some(best.unit_type)) {
                return Some(a);
            }
        }
        if !attacks.is_empty() {
            return self.fallback_attack(&enemies);
        }
        if distance > threat_range {
            return self.path(safe, None);
        }
        None
    }

    fn ranged_alone(&mut self, enemies: &[&EntityView]) -> Option<Action> {
        let sight = self.sight();
        let closest = enemies.iter().copied().min_by(|a, b| a.distance.total_cmp(&b.distance))?;
        if closest.unit_type.is_melee() {
            if closest.distance <= self.param("threat_range") / sight && self.last_action().is_targeted() {
                if let Some(a) = self.flee(enemies) {
                    return Some(a);
                }
            }
            return if closest.can_attack { self.attack(closest.id) } else { None };
        }
        let scores: Vec<f64> = enemies.iter().map(|e| self.score(e, true)).collect();
        let best = self.best_by_score(enemies, &scores)?;
        if best.can_attack {
            return self.attack(best.id);
        }
        if best.distance > self.ctx.obs.own_shoot_range / sight {
            if let Some(a) = self.path(best.position, Some(best.unit_type)) {
                return Some(a);
            }
            return self.fallback_attack(enemies);
        }
        None
    }

    /// Head for the region of interest, else the map centre, else act randomly.
    fn default_center(&mut self) -> Action {
        let obs = &self.ctx.obs;
        let sight = self.sight();
        let to_center = (Vec2::new(0.5, 0.5) - obs.own_position).scale(MAP_SIZE / sight);
        let roi_target = match self.ctx.region_of_interest {
            Some(RegionOfInterest::Entity { team: Team::Enemy, id }) => {
                self.ctx.enemies().iter().find(|e| e.id == id).map(|e| (e.position, Some(e.unit_type), Some(id)))
            }
            Some(RegionOfInterest::Entity { team: Team::Ally, id }) => {
                self.ctx.allies().iter().find(|a| a.id == id).map(|a| (a.position, Some(a.unit_type), None))
            }
            Some(RegionOfInterest::Location(Heading::Center)) => Some((to_center, None, None)),
            Some(RegionOfInterest::Location(h)) => Some((self.clamp_into_map(h.vector()), None, None)),
            None => None,
        };
        if let Some((target, kind, enemy)) = roi_target {
            if let Some(a) = enemy.and_then(|id| self.attack(id)) {
                if !obs.own_unit_type.is_healer() {
                    return a;
                }
            }
            if let Some(a) = self.path(target, kind) {
                return a;
            }
        }
        if let Some(a) = self.path(to_center, None) {
            return a;
        }
        let choices: Vec<Action> = obs.available_actions.iter().copied().filter(|&a| a != Action::NO_OP).collect();
        choices.choose(self.rng).copied().unwrap_or(Action::STOP)
    }
}

/// Pick an action with `skill`. Always returns a member of the available set:
/// the dead no-op when present, otherwise the template's choice, falling back
/// to centre-seeking behaviour.
pub fn execute_skill<R: Rng>(skill: &Skill, ctx: &TacticContext, rng: &mut R) -> Action {
    let obs = &ctx.obs;
    if obs.is_available(Action::NO_OP) || obs.available_actions.is_empty() {
        return Action::NO_OP;
    }
    let mut run = Run { ctx, skill, rng };
    let chosen = match skill.control_template {
        ControlTemplate::MedivacSupport => run.medivac_support(),
        ControlTemplate::MeleeEngage | ControlTemplate::BanelingAoe => run.melee_engage(),
        ControlTemplate::RangedKite => run.ranged_kite(),
        ControlTemplate::DefaultCenter => None,
    };
    match chosen {
        Some(a) if obs.is_available(a) => a,
        _ => run.default_center(),
    }
}
