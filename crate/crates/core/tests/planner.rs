use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use skirmish::geom::Vec2;
use skirmish::planner::{
    agent_step, AgentInputs, BackendError, LocalMemory, MockBackend, PhaseContext, PlannerBackend, PlannerConfig,
    PreviousResult, ReflectionReport, SituationReport, SubTask, SubTaskTarget,
};
use skirmish::skills::{bootstrap_library, ControlTemplate, Skill, SkillEdit, SkillLibrary};
use skirmish::world::{Action, ScenarioSpec, Team, UnitKind, WorldState};

/// Mock behaviour with every phase call and reflection input recorded;
/// optionally every phase fails.
#[derive(Default)]
struct Recorder {
    inner: MockBackend,
    calls: Vec<&'static str>,
    reflected: Vec<PreviousResult>,
    broken: bool,
}

impl Recorder {
    fn gate(&mut self, phase: &'static str) -> Result<(), BackendError> {
        self.calls.push(phase);
        if self.broken {
            Err(BackendError::Http("offline".into()))
        } else {
            Ok(())
        }
    }
}

impl PlannerBackend for Recorder {
    fn name(&self) -> &str {
        "recorder"
    }
    fn perceive(&mut self, cx: &PhaseContext<'_>) -> Result<SituationReport, BackendError> {
        self.gate("perceive")?;
        self.inner.perceive(cx)
    }
    fn reflect(&mut self, cx: &PhaseContext<'_>, previous: &PreviousResult) -> Result<ReflectionReport, BackendError> {
        self.reflected.push(previous.clone());
        self.gate("reflect")?;
        self.inner.reflect(cx, previous)
    }
    fn propose_subtask(
        &mut self,
        cx: &PhaseContext<'_>,
        report: Option<&ReflectionReport>,
    ) -> Result<Option<SubTask>, BackendError> {
        self.gate("propose_subtask")?;
        self.inner.propose_subtask(cx, report)
    }
    fn generate_skill(
        &mut self,
        cx: &PhaseContext<'_>,
        subtask: &SubTask,
        base: &Skill,
    ) -> Result<Option<SkillEdit>, BackendError> {
        self.gate("generate_skill")?;
        self.inner.generate_skill(cx, subtask, base)
    }
    fn select_skill(
        &mut self,
        cx: &PhaseContext<'_>,
        task: &str,
        candidates: &[&Skill],
        report: Option<&ReflectionReport>,
    ) -> Result<String, BackendError> {
        self.gate("select_skill")?;
        self.inner.select_skill(cx, task, candidates, report)
    }
}

/// A stalker and a zealot far from a lone enemy: nobody is in sight, so no
/// reward can arrive and every reflection fails.
fn quiet_world() -> WorldState {
    let spec = ScenarioSpec::builtin("protoss_5v5").unwrap();
    WorldState::with_units(
        &spec,
        &[(UnitKind::Stalker, Vec2::new(3.0, 16.0)), (UnitKind::Zealot, Vec2::new(4.0, 16.0))],
        &[(UnitKind::Stalker, Vec2::new(29.0, 16.0))],
    )
    .unwrap()
}

struct Harness {
    world: WorldState,
    library: SkillLibrary,
    memory: LocalMemory,
    mock: MockBackend,
    config: PlannerConfig,
    rng: ChaCha8Rng,
}

impl Harness {
    fn new(agent: usize) -> Self {
        let world = quiet_world();
        let kind = world.unit(Team::Ally, agent).kind;
        Harness {
            world,
            library: bootstrap_library(),
            memory: LocalMemory::new(kind),
            mock: MockBackend::default(),
            config: PlannerConfig::default(),
            rng: ChaCha8Rng::seed_from_u64(0),
        }
    }

    fn step(&mut self, agent: usize, t: u32, backend: &mut dyn PlannerBackend) -> skirmish::planner::AgentDecision {
        let obs = self.world.observe(agent);
        let inputs = AgentInputs { scenario: "test", timestep: t, obs: &obs, shared: &[], ally_tasks: &[] };
        agent_step(inputs, backend, &mut self.mock, &mut self.library, &mut self.memory, &self.config, &mut self.rng)
    }
}

#[test]
fn dead_agent_only_no_ops_and_consults_nobody() {
    let mut h = Harness::new(0);
    h.world.unit_mut(Team::Ally, 0).alive = false;
    h.world.unit_mut(Team::Ally, 0).health = 0.0;
    let mut rec = Recorder::default();
    let d = h.step(0, 0, &mut rec);
    assert_eq!(d.action, Action::NO_OP);
    assert!(d.skill_id.is_none());
    assert!(rec.calls.is_empty());
}

#[test]
fn first_decision_skips_reflection_and_picks_a_fitting_skill() {
    for (agent, template) in [(0, ControlTemplate::RangedKite), (1, ControlTemplate::MeleeEngage)] {
        let mut h = Harness::new(agent);
        let mut rec = Recorder::default();
        let d = h.step(agent, 0, &mut rec);
        assert!(d.reflection.is_none());
        assert!(!rec.calls.contains(&"reflect"));
        assert_eq!(rec.calls, vec!["perceive", "propose_subtask", "select_skill"]);
        let chosen = h.library.get(d.skill_id.as_deref().unwrap()).unwrap();
        assert_eq!(chosen.control_template, template);
        assert!(h.world.observe(agent).is_available(d.action));
    }
}

#[test]
fn phases_run_only_on_decision_steps() {
    let mut h = Harness::new(0);
    let mut rec = Recorder::default();
    for t in 0..11 {
        let before = rec.calls.iter().filter(|c| **c == "perceive").count();
        h.step(0, t, &mut rec);
        let after = rec.calls.iter().filter(|c| **c == "perceive").count();
        assert_eq!(after - before, usize::from(t % 5 == 0), "t={t}");
    }
}

#[test]
fn reflection_sees_reward_since_selection() {
    let mut h = Harness::new(0);
    let mut rec = Recorder::default();
    h.step(0, 0, &mut rec);
    let mut since_selection = 0.0;
    for t in 1..5 {
        h.step(0, t, &mut rec);
        h.memory.record_reward(0.25);
        since_selection += 0.25;
    }
    h.step(0, 5, &mut rec);
    let seen = rec.reflected.last().unwrap();
    assert_eq!(seen.skill_reward, since_selection);
    assert_eq!(seen.steps, 5);
    // positive reward is a success, so the skill and its window carry on
    assert_eq!(h.memory.failure_streak, 0);
    assert_eq!(h.memory.window_reward, since_selection);
}

#[test]
fn mock_reflection_threshold_is_strict() {
    let lib = bootstrap_library();
    let world = quiet_world();
    let obs = world.observe(0);
    let memory = LocalMemory::new(UnitKind::Stalker);
    let cx = PhaseContext {
        scenario: "test",
        timestep: 5,
        obs: &obs,
        shared: &[],
        memory: &memory,
        ally_tasks: &[],
        library: &lib,
    };
    let mut mock = MockBackend::default();
    let zero = PreviousResult { skill_id: "s".into(), skill_reward: 0.0, steps: 6 };
    let some = PreviousResult { skill_reward: 1e-9, ..zero.clone() };
    assert!(!mock.reflect(&cx, &zero).unwrap().success);
    assert!(mock.reflect(&cx, &some).unwrap().success);
}

#[test]
fn stagnation_issues_a_directive_and_the_variant_is_used() {
    let mut h = Harness::new(0);
    let mut rec = Recorder::default();
    let mut directive = None;
    for t in 0..=15 {
        let d = h.step(0, t, &mut rec);
        if let Some(task) = d.subtask {
            directive = Some((t, task, d.synthesized, d.skill_id));
        }
    }
    let (t, task, synthesized, selected) = directive.expect("three failed reflections trigger a directive");
    assert_eq!(t, 15);
    assert_eq!(task.target, SubTaskTarget::ScoreTarget);
    let variant = synthesized.expect("directive produced a variant");
    assert!(variant.starts_with("expert_ranged_kite~"));
    assert_eq!(selected.as_deref(), Some(variant.as_str()));
    assert_eq!(h.memory.failure_streak, 0);
    assert_eq!(h.library.len(), 6);
}

#[test]
fn synthesis_off_never_grows_the_library() {
    let mut h = Harness::new(0);
    h.config.synthesis_enabled = false;
    let mut rec = Recorder::default();
    for t in 0..40 {
        assert!(h.step(0, t, &mut rec).synthesized.is_none());
    }
    assert_eq!(h.library.len(), 5);
}

#[test]
fn failing_backend_falls_back_to_mock_and_reports_it() {
    let mut broken = Harness::new(0);
    let mut healthy = Harness::new(0);
    let mut rec = Recorder { broken: true, ..Default::default() };
    let mut ok = Recorder::default();
    for t in 0..12 {
        let a = broken.step(0, t, &mut rec);
        let b = healthy.step(0, t, &mut ok);
        assert_eq!(a.action, b.action, "t={t}");
        assert_eq!(a.skill_id, b.skill_id);
        if t % 5 == 0 {
            assert!(!a.backend_failures.is_empty());
            assert!(a.backend_failures.iter().any(|f| f.starts_with("perceive")));
        } else {
            assert!(a.backend_failures.is_empty());
        }
    }
}
