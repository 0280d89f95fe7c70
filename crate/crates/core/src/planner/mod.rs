//! Per-agent closed decision loop: share, perceive, reflect, propose a
//! sub-task, optionally synthesize a skill, select a skill, execute.
//!
//! The language-facing phases go through a [`PlannerBackend`]. The
//! [`MockBackend`] is deterministic; [`ExternalBackend`] talks to a
//! chat-completion endpoint and any failure there falls back to the mock for
//! that phase.

mod external;
mod mock;
mod sections;

pub use external::{parse_edit_line, render_prompt, ExternalBackend, ExternalConfig, PromptSet, ENV_API_KEY, ENV_MODEL, ENV_TIMEOUT, ENV_URL};
pub use mock::{directive_cycle, parse_directive, MockBackend};
pub use sections::parse_sectioned_response;

use std::collections::{BTreeMap, VecDeque};

use log::warn;
use rand::Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::comms::{propagate, record_local, EntityRecord, GlobalEntityMemory, VisibilityGraph};
use crate::geom::MAP_SIZE;
use crate::obs_text::{render_obs, ObsData};
use crate::skills::{
    execute_skill, synthesize_variant, ControlTemplate, RegionOfInterest, Skill, SkillEdit, SkillLibrary,
    TacticContext,
};
use crate::world::{Action, Team, UnitKind, WorldState};

#[derive(Debug, Error)]
pub enum BackendError {
    #[error("reply is missing section `{0}`")]
    MissingSection(String),
    #[error("unusable reply: {0}")]
    BadReply(String),
    #[error("http: {0}")]
    Http(String),
    #[error("backend not configured: {0}")]
    NotConfigured(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SituationReport {
    pub game_situation: String,
    pub region_of_interest: RegionOfInterest,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SubTaskTarget {
    ScoreTarget,
    ControlLogic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubTask {
    pub text: String,
    pub target: SubTaskTarget,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReflectionReport {
    pub success: bool,
    pub notes: String,
    pub skill_reward: f64,
}

/// Outcome of the last decision window, input to reflection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreviousResult {
    pub skill_id: String,
    pub skill_reward: f64,
    pub steps: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistoryEntry {
    pub timestep: u32,
    pub obs_digest: String,
    pub skill_id: String,
    pub reward: f64,
}

/// What one agent remembers within an episode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalMemory {
    pub capacity: usize,
    pub history: VecDeque<HistoryEntry>,
    pub cumulative_reward_by_skill: BTreeMap<String, f64>,
    pub last_reflection: Option<ReflectionReport>,
    pub current_task: Option<SubTask>,
    /// Task text used until a sub-task replaces it.
    pub base_task: String,
    pub current_skill: Option<String>,
    pub current_template: Option<ControlTemplate>,
    pub unit_type: UnitKind,
    /// Reward accrued since the current skill was selected.
    pub window_reward: f64,
    pub window_steps: u32,
    pub failure_streak: u32,
    pub directives_issued: u32,
    pub last_report: Option<SituationReport>,
}

impl LocalMemory {
    pub const DEFAULT_CAPACITY: usize = 32;

    pub fn new(unit_type: UnitKind) -> Self {
        LocalMemory {
            capacity: Self::DEFAULT_CAPACITY,
            history: VecDeque::new(),
            cumulative_reward_by_skill: BTreeMap::new(),
            last_reflection: None,
            current_task: None,
            base_task: default_task(unit_type),
            current_skill: None,
            current_template: None,
            unit_type,
            window_reward: 0.0,
            window_steps: 0,
            failure_streak: 0,
            directives_issued: 0,
            last_report: None,
        }
    }

    pub fn task_text(&self) -> &str {
        self.current_task.as_ref().map_or(&self.base_task, |t| &t.text)
    }

    /// Credit the shared reward of the step just taken.
    pub fn record_reward(&mut self, reward: f64) {
        if let Some(last) = self.history.back_mut() {
            last.reward += reward;
            *self.cumulative_reward_by_skill.entry(last.skill_id.clone()).or_default() += reward;
            self.window_reward += reward;
        }
    }

    fn push(&mut self, entry: HistoryEntry) {
        if self.history.len() == self.capacity {
            self.history.pop_front();
        }
        self.history.push_back(entry);
        self.window_steps += 1;
    }
}

/// Starting task text; names the unit so retrieval lands on a fitting skill.
pub fn default_task(kind: UnitKind) -> String {
    let role = if kind.is_healer() {
        "heal wounded allies and keep a safe standoff"
    } else if kind == UnitKind::Baneling {
        "detonate on clustered enemies"
    } else if kind.is_melee() {
        "charge and engage the highest threat enemy"
    } else {
        "focus fire priority targets and kite melee attackers"
    };
    format!("Defeat all enemy units as a {kind}: {role}.")
}

pub trait PlannerBackend {
    fn name(&self) -> &str;
    fn perceive(&mut self, cx: &PhaseContext<'_>) -> Result<SituationReport, BackendError>;
    fn reflect(&mut self, cx: &PhaseContext<'_>, previous: &PreviousResult) -> Result<ReflectionReport, BackendError>;
    fn propose_subtask(
        &mut self,
        cx: &PhaseContext<'_>,
        report: Option<&ReflectionReport>,
    ) -> Result<Option<SubTask>, BackendError>;
    fn generate_skill(
        &mut self,
        cx: &PhaseContext<'_>,
        subtask: &SubTask,
        base: &Skill,
    ) -> Result<Option<SkillEdit>, BackendError>;
    fn select_skill(
        &mut self,
        cx: &PhaseContext<'_>,
        task: &str,
        candidates: &[&Skill],
        report: Option<&ReflectionReport>,
    ) -> Result<String, BackendError>;
}

/// Read-only view handed to every backend phase.
#[derive(Debug, Clone, Copy)]
pub struct PhaseContext<'a> {
    pub scenario: &'a str,
    pub timestep: u32,
    pub obs: &'a ObsData,
    pub shared: &'a [EntityRecord],
    pub memory: &'a LocalMemory,
    pub ally_tasks: &'a [(usize, String)],
    pub library: &'a SkillLibrary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlannerConfig {
    /// Phases 2-6 run every `decision_interval` steps; execution runs every step.
    pub decision_interval: u32,
    pub reflection_enabled: bool,
    pub synthesis_enabled: bool,
    pub retrieve_k: usize,
    pub memory_capacity: usize,
}

impl Default for PlannerConfig {
    fn default() -> Self {
        PlannerConfig {
            decision_interval: 5,
            reflection_enabled: true,
            synthesis_enabled: true,
            retrieve_k: 3,
            memory_capacity: LocalMemory::DEFAULT_CAPACITY,
        }
    }
}

/// Everything one agent produced this step.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct AgentDecision {
    pub action: Action,
    pub skill_id: Option<String>,
    pub region_of_interest: Option<RegionOfInterest>,
    pub reflection: Option<ReflectionReport>,
    pub subtask: Option<SubTask>,
    pub synthesized: Option<String>,
    pub backend_failures: Vec<String>,
}

/// Hex prefix of the SHA-256 of the rendered observation.
pub fn obs_digest(obs: &ObsData) -> String {
    let digest = Sha256::digest(render_obs(obs).as_bytes());
    hex::encode(&digest[..8])
}

fn with_fallback<T>(
    failures: &mut Vec<String>,
    phase: &str,
    primary: Result<T, BackendError>,
    fallback: impl FnOnce() -> Result<T, BackendError>,
) -> T {
    match primary {
        Ok(v) => v,
        Err(e) => {
            warn!("{phase} failed, using mock: {e}");
            failures.push(format!("{phase}: {e}"));
            fallback().expect("mock backend phases are total")
        }
    }
}

/// Inputs for one agent's decision.
#[derive(Debug, Clone, Copy)]
pub struct AgentInputs<'a> {
    pub scenario: &'a str,
    pub timestep: u32,
    pub obs: &'a ObsData,
    pub shared: &'a [EntityRecord],
    pub ally_tasks: &'a [(usize, String)],
}

/// Phases 2-7 for one agent, after the share phase has filled `shared`.
pub fn agent_step<R: Rng>(
    inputs: AgentInputs<'_>,
    backend: &mut dyn PlannerBackend,
    mock: &mut MockBackend,
    library: &mut SkillLibrary,
    memory: &mut LocalMemory,
    config: &PlannerConfig,
    rng: &mut R,
) -> AgentDecision {
    let obs = inputs.obs;
    if !obs.alive || obs.is_available(Action::NO_OP) {
        return AgentDecision { action: Action::NO_OP, ..Default::default() };
    }
    let mut out = AgentDecision::default();
    let decide = memory.current_skill.is_none() || inputs.timestep.is_multiple_of(config.decision_interval.max(1));
    if decide {
        decision_phases(inputs, backend, mock, library, memory, config, &mut out);
    }
    let skill_id = memory.current_skill.clone().expect("a skill is selected on the first decision");
    let skill = library.get(&skill_id).expect("selected skill is registered");
    let region = memory.last_report.as_ref().map(|r| r.region_of_interest);
    let ctx = TacticContext::new(obs.clone(), inputs.shared.to_vec(), library.tables.clone()).with_region(region);
    let action = execute_skill(skill, &ctx, rng);
    memory.push(HistoryEntry {
        timestep: inputs.timestep,
        obs_digest: obs_digest(obs),
        skill_id: skill_id.clone(),
        reward: 0.0,
    });
    out.action = action;
    out.skill_id = Some(skill_id);
    out.region_of_interest = region;
    out
}

/// Skills an agent of `kind` may run. The generic fallback template is only
/// offered when no specialised skill suits the unit.
fn eligible(library: &SkillLibrary, kind: UnitKind) -> impl Fn(&Skill) -> bool {
    let specialised =
        library.iter().any(|s| s.control_template != ControlTemplate::DefaultCenter && s.control_template.suits(kind));
    move |s| s.control_template.suits(kind) && !(specialised && s.control_template == ControlTemplate::DefaultCenter)
}

fn decision_phases(
    inputs: AgentInputs<'_>,
    backend: &mut dyn PlannerBackend,
    mock: &mut MockBackend,
    library: &mut SkillLibrary,
    memory: &mut LocalMemory,
    config: &PlannerConfig,
    out: &mut AgentDecision,
) {
    let failures = &mut out.backend_failures;
    macro_rules! cx {
        () => {
            PhaseContext {
                scenario: inputs.scenario,
                timestep: inputs.timestep,
                obs: inputs.obs,
                shared: inputs.shared,
                memory,
                ally_tasks: inputs.ally_tasks,
                library,
            }
        };
    }

    // perception
    let report = {
        let cx = cx!();
        with_fallback(failures, "perceive", backend.perceive(&cx), || mock.perceive(&cx))
    };
    memory.last_report = Some(report);

    // self-reflection on the window that just closed
    let mut reflection = None;
    if config.reflection_enabled {
        if let Some(skill_id) = memory.current_skill.clone() {
            let previous =
                PreviousResult { skill_id, skill_reward: memory.window_reward, steps: memory.window_steps };
            let r = {
                let cx = cx!();
                with_fallback(failures, "reflect", backend.reflect(&cx, &previous), || mock.reflect(&cx, &previous))
            };
            memory.failure_streak = if r.success { 0 } else { memory.failure_streak + 1 };
            memory.last_reflection = Some(r.clone());
            reflection = Some(r);
        }
    }

    // task reasoning
    let subtask = {
        let cx = cx!();
        with_fallback(failures, "propose_subtask", backend.propose_subtask(&cx, reflection.as_ref()), || {
            mock.propose_subtask(&cx, reflection.as_ref())
        })
    };
    if let Some(task) = &subtask {
        memory.current_task = Some(task.clone());
        memory.directives_issued += 1;
        memory.failure_streak = 0;
    }

    // skill generation
    let own_kind = inputs.obs.own_unit_type;
    if let (Some(task), true) = (&subtask, config.synthesis_enabled) {
        let base_id = memory
            .current_skill
            .clone()
            .filter(|id| library.get(id).is_some_and(|s| s.control_template.suits(own_kind)))
            .or_else(|| {
                library
                    .retrieve_where(memory.task_text(), 1, eligible(library, own_kind))
                    .ok()
                    .and_then(|v| v.first().map(|(s, _)| s.skill_id.clone()))
            });
        if let Some(base) = base_id.and_then(|id| library.get(&id).cloned()) {
            let edit = {
                let cx = cx!();
                with_fallback(failures, "generate_skill", backend.generate_skill(&cx, task, &base), || {
                    mock.generate_skill(&cx, task, &base)
                })
            };
            if let Some(edit) = edit {
                match synthesize_variant(&base, &task.text, &edit) {
                    Ok(variant) => {
                        let id = if library.contains(&variant.skill_id) {
                            variant.skill_id.clone()
                        } else {
                            library.register(variant)
                        };
                        out.synthesized = Some(id);
                    }
                    Err(e) => {
                        warn!("variant of {} rejected: {e}", base.skill_id);
                        failures.push(format!("synthesize: {e}"));
                    }
                }
            }
        }
    }

    // actor
    let reselect = memory.current_skill.is_none()
        || subtask.is_some()
        || reflection.as_ref().is_some_and(|r| !r.success)
        || !memory.current_skill.as_ref().is_some_and(|id| library.contains(id));
    if reselect {
        let task = memory.task_text().to_string();
        let ranked = library
            .retrieve_where(&task, config.retrieve_k, eligible(library, own_kind))
            .expect("library holds at least the fallback skill");
        let candidates: Vec<&Skill> = ranked.iter().map(|(s, _)| *s).collect();
        let chosen = {
            let cx = PhaseContext {
                scenario: inputs.scenario,
                timestep: inputs.timestep,
                obs: inputs.obs,
                shared: inputs.shared,
                memory,
                ally_tasks: inputs.ally_tasks,
                library,
            };
            let primary = backend
                .select_skill(&cx, &task, &candidates, reflection.as_ref())
                .and_then(|id| {
                    if candidates.iter().any(|s| s.skill_id == id) {
                        Ok(id)
                    } else {
                        Err(BackendError::BadReply(format!("`{id}` is not a candidate")))
                    }
                });
            with_fallback(failures, "select_skill", primary, || mock.select_skill(&cx, &task, &candidates, reflection.as_ref()))
        };
        memory.current_template = library.get(&chosen).map(|s| s.control_template);
        memory.current_skill = Some(chosen);
        memory.window_reward = 0.0;
        memory.window_steps = 0;
    }
    out.reflection = reflection;
    out.subtask = subtask;
}

/// Per-agent knowledge after the share phase, as `(entity, hops)` lists.
pub type KnowledgeDigest = Vec<Vec<(crate::comms::EntityKey, u32)>>;

/// The ally team's planners for one episode.
#[derive(Debug, Clone)]
pub struct Squad {
    pub config: PlannerConfig,
    pub max_hops: u32,
    pub ttl: u32,
    pub memories: Vec<LocalMemory>,
    knowledge: GlobalEntityMemory,
    ally_tasks: Vec<(usize, String)>,
}

/// Result of one squad step.
#[derive(Debug, Clone, PartialEq)]
pub struct SquadStep {
    pub actions: Vec<Action>,
    pub decisions: Vec<AgentDecision>,
    pub observations: Vec<ObsData>,
    pub knowledge: KnowledgeDigest,
}

impl Squad {
    pub fn new(world: &WorldState, config: PlannerConfig, max_hops: u32, ttl: u32) -> Self {
        let memories = world
            .units(Team::Ally)
            .iter()
            .map(|u| {
                let mut m = LocalMemory::new(u.kind);
                m.capacity = config.memory_capacity.max(1);
                m
            })
            .collect();
        Squad { config, max_hops, ttl, memories, knowledge: GlobalEntityMemory::new(max_hops), ally_tasks: Vec::new() }
    }

    /// Share phase: every living ally's hop-0 records relayed over the visibility graph.
    pub fn share(&mut self, world: &WorldState, observations: &[ObsData]) {
        let t = world.timestep();
        let mut hop0 = BTreeMap::new();
        let mut agents = Vec::new();
        for (id, obs) in observations.iter().enumerate() {
            if !obs.alive {
                continue;
            }
            hop0.insert(id, record_local(id, obs, t));
            let unit = world.unit(Team::Ally, id);
            agents.push((id, unit.pos, world.stats(unit.kind).sight_range));
        }
        let graph = VisibilityGraph::from_agents(&agents);
        let mut fresh = propagate(&hop0, &graph, self.max_hops);
        fresh.carry_over(&self.knowledge, &graph, t, self.ttl);
        self.knowledge = fresh;
    }

    pub fn knowledge(&self) -> &GlobalEntityMemory {
        &self.knowledge
    }

    /// Run every agent's loop in id order and return the joint action.
    pub fn act<R: Rng>(
        &mut self,
        world: &WorldState,
        backend: &mut dyn PlannerBackend,
        mock: &mut MockBackend,
        library: &mut SkillLibrary,
        rng: &mut R,
    ) -> SquadStep {
        let observations: Vec<ObsData> = (0..self.memories.len()).map(|i| world.observe(i)).collect();
        self.share(world, &observations);
        let scenario = world.scenario().name.clone();
        let mut decisions = Vec::with_capacity(observations.len());
        let mut knowledge = Vec::with_capacity(observations.len());
        for (id, obs) in observations.iter().enumerate() {
            // own-agent records are not useful to itself
            let shared: Vec<EntityRecord> = self
                .knowledge
                .knowledge(id)
                .filter(|r| !(r.key.team == Team::Ally && r.key.id == id))
                .cloned()
                .collect();
            knowledge.push(self.knowledge.key_hops(id));
            let inputs = AgentInputs {
                scenario: &scenario,
                timestep: world.timestep(),
                obs,
                shared: &shared,
                ally_tasks: &self.ally_tasks,
            };
            decisions.push(agent_step(inputs, backend, mock, library, &mut self.memories[id], &self.config, rng));
        }
        self.ally_tasks = self
            .memories
            .iter()
            .enumerate()
            .filter(|(id, _)| observations[*id].alive)
            .map(|(id, m)| (id, m.task_text().to_string()))
            .collect();
        SquadStep { actions: decisions.iter().map(|d| d.action).collect(), decisions, observations, knowledge }
    }

    pub fn record_reward(&mut self, reward: f64) {
        for m in &mut self.memories {
            m.record_reward(reward);
        }
    }
}

/// Global position of a shared record, relative to an observer and normalized by its sight.
pub fn relative_to(obs: &ObsData, rec: &EntityRecord) -> crate::geom::Vec2 {
    (rec.global_pos - obs.own_position.scale(MAP_SIZE)).scale(1.0 / obs.own_sight_range)
}
