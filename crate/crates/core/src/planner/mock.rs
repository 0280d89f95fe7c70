//! Deterministic rule-based backend.

use crate::geom::MAP_SIZE;
use crate::skills::{cosine, embed_text, ControlTemplate, Heading, RegionOfInterest, Skill, SkillEdit};
use crate::world::Team;

use super::{
    BackendError, PhaseContext, PlannerBackend, PreviousResult, ReflectionReport, SituationReport, SubTask,
    SubTaskTarget,
};

#[derive(Debug, Clone, PartialEq)]
pub struct MockBackend {
    /// Reflection succeeds when the skill's reward exceeds this.
    pub success_threshold: f64,
    /// Consecutive failed reflections before a directive is issued.
    pub stagnation_streak: u32,
}

impl Default for MockBackend {
    fn default() -> Self {
        MockBackend { success_threshold: 0.0, stagnation_streak: 3 }
    }
}

/// The fixed patch list for a template, in issue order. Each directive is
/// phrased so that [`parse_directive`] recovers its edit.
pub fn directive_cycle(template: ControlTemplate) -> Vec<SubTask> {
    use SubTaskTarget::{ControlLogic, ScoreTarget};
    let list: &[(&str, SubTaskTarget)] = match template {
        ControlTemplate::RangedKite => &[
            ("Scale focus_base by factor 1.25 so damaged targets draw more fire", ScoreTarget),
            ("Scale kite_offset by factor 0.75 to stay closer while kiting melee attackers", ControlLogic),
            ("Scale overcommit_factor by factor 0.6 to spread fire away from dying targets", ScoreTarget),
            ("Set threat_range to 3 so only close melee attackers trigger retreat", ControlLogic),
        ],
        ControlTemplate::MeleeEngage => &[
            ("Scale focus_base by factor 1.25 so damaged targets draw more fire", ScoreTarget),
            ("Scale cluster_base by factor 1.2 to favour clustered enemy groups", ControlLogic),
            ("Scale regroup_criterion by factor 1.5 to regroup less often", ControlLogic),
        ],
        ControlTemplate::BanelingAoe => &[
            ("Scale cluster_base by factor 1.3 to favour dense enemy clusters", ControlLogic),
            ("Scale focus_base by factor 0.8 to spread detonations", ScoreTarget),
        ],
        ControlTemplate::MedivacSupport => &[
            ("Set heal_threshold to 0.95 to top up allies earlier", ControlLogic),
            ("Scale standoff by factor 1.5 to keep further back from enemies", ControlLogic),
        ],
        ControlTemplate::DefaultCenter => &[
            ("Scale focus_base by factor 1.25 so damaged targets draw more fire", ScoreTarget),
        ],
    };
    list.iter().map(|(text, target)| SubTask { text: text.to_string(), target: *target }).collect()
}

/// Recover the edit a directive asks for. Recognized forms:
/// `scale P by factor F`, `set P to V`, `adjust P from A to B`,
/// `switch to the T control template`.
pub fn parse_directive(text: &str) -> Option<SkillEdit> {
    let words: Vec<String> = text
        .split_whitespace()
        .map(|w| w.trim_matches(|c: char| !(c.is_alphanumeric() || c == '_' || c == '.' || c == '-')).to_ascii_lowercase())
        .map(|w| w.trim_end_matches('.').to_string())
        .collect();
    let num = |i: usize| words.get(i).and_then(|w| w.parse::<f64>().ok()).filter(|v| v.is_finite());
    for i in 0..words.len() {
        match words[i].as_str() {
            "scale" => {
                let name = words.get(i + 1)?.clone();
                if words.get(i + 2).map(String::as_str) == Some("by") {
                    let f_at = if words.get(i + 3).map(String::as_str) == Some("factor") { i + 4 } else { i + 3 };
                    return Some(SkillEdit::ScaleParam { name, factor: num(f_at)? });
                }
            }
            "set" => {
                let name = words.get(i + 1)?.clone();
                if words.get(i + 2).map(String::as_str) == Some("to") {
                    return Some(SkillEdit::SetParam { name, value: num(i + 3)? });
                }
            }
            "adjust" | "increase" | "decrease" | "raise" | "lower" => {
                if words.get(i + 2).map(String::as_str) == Some("from")
                    && words.get(i + 4).map(String::as_str) == Some("to")
                {
                    return Some(SkillEdit::SetParam { name: words[i + 1].clone(), value: num(i + 5)? });
                }
            }
            "switch" => {
                let rest = &words[i + 1..];
                let template = rest.iter().find_map(|w| w.parse::<ControlTemplate>().ok())?;
                return Some(SkillEdit::Retemplate(template));
            }
            _ => {}
        }
    }
    None
}

impl PlannerBackend for MockBackend {
    fn name(&self) -> &str {
        "mock"
    }

    fn perceive(&mut self, cx: &PhaseContext<'_>) -> Result<SituationReport, BackendError> {
        let obs = cx.obs;
        let nearest = obs
            .enemies
            .iter()
            .min_by(|a, b| a.distance.total_cmp(&b.distance).then(a.id.cmp(&b.id)));
        let own = obs.own_position.scale(MAP_SIZE);
        let roi = if let Some(e) = nearest {
            RegionOfInterest::Entity { team: Team::Enemy, id: e.id }
        } else if let Some(rec) = cx
            .shared
            .iter()
            .filter(|r| r.key.team == Team::Enemy)
            .max_by(|a, b| a.observed_at.cmp(&b.observed_at).then(b.hops.cmp(&a.hops)).then(b.key.cmp(&a.key)))
        {
            RegionOfInterest::Location(Heading::from_offset(rec.global_pos - own))
        } else {
            RegionOfInterest::Location(Heading::Center)
        };
        let situation = format!(
            "{} allies and {} enemies in sight, {} shared records; health {:.2}.",
            obs.allies.len(),
            obs.enemies.len(),
            cx.shared.len(),
            obs.own_health
        );
        Ok(SituationReport { game_situation: situation, region_of_interest: roi })
    }

    fn reflect(&mut self, _cx: &PhaseContext<'_>, previous: &PreviousResult) -> Result<ReflectionReport, BackendError> {
        let success = previous.skill_reward > self.success_threshold;
        let notes = if success {
            format!("{} earned {:.4} over {} steps.", previous.skill_id, previous.skill_reward, previous.steps)
        } else {
            format!(
                "{} stagnated: {:.4} reward over {} steps.",
                previous.skill_id, previous.skill_reward, previous.steps
            )
        };
        Ok(ReflectionReport { success, notes, skill_reward: previous.skill_reward })
    }

    fn propose_subtask(
        &mut self,
        cx: &PhaseContext<'_>,
        report: Option<&ReflectionReport>,
    ) -> Result<Option<SubTask>, BackendError> {
        let memory = cx.memory;
        if report.is_none() || memory.failure_streak < self.stagnation_streak {
            return Ok(None);
        }
        let template = memory.current_template.unwrap_or(ControlTemplate::DefaultCenter);
        let cycle = directive_cycle(template);
        Ok(Some(cycle[memory.directives_issued as usize % cycle.len()].clone()))
    }

    fn generate_skill(
        &mut self,
        _cx: &PhaseContext<'_>,
        subtask: &SubTask,
        base: &Skill,
    ) -> Result<Option<SkillEdit>, BackendError> {
        let edit = parse_directive(&subtask.text).filter(|edit| match edit {
            SkillEdit::ScaleParam { name, .. } | SkillEdit::SetParam { name, .. } => base.params.contains_key(name),
            SkillEdit::Retemplate(t) => *t != base.control_template,
            SkillEdit::ReplaceScore(_) => true,
        });
        Ok(edit)
    }

    fn select_skill(
        &mut self,
        cx: &PhaseContext<'_>,
        task: &str,
        candidates: &[&Skill],
        report: Option<&ReflectionReport>,
    ) -> Result<String, BackendError> {
        let query = embed_text(task);
        let mut ranked: Vec<(&Skill, f64)> = candidates.iter().map(|s| (*s, cosine(&query, &s.embedding))).collect();
        ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.skill_id.cmp(&b.0.skill_id)));
        let (best, _) = ranked.first().ok_or_else(|| BackendError::BadReply("no candidate skills".into()))?;
        let failed = report.is_some_and(|r| !r.success);
        let repeat = cx.memory.current_skill.as_deref() == Some(best.skill_id.as_str());
        let pick = if failed && repeat && ranked.len() > 1 { ranked[1].0 } else { *best };
        Ok(pick.skill_id.clone())
    }
}
