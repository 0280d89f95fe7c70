//! Experiment runner: seeded episodes against the scripted opponent, JSONL
//! replays, per-seed win rates and the ablation grid.

mod opponent;
mod replay;
mod stats;

pub use opponent::{scripted_opponent, scripted_policy};
pub use replay::{
    read_replay, replay_sha256, replay_to_jsonl, write_replay, AgentRecord, ReplayRecord, REPLAY_SCHEMA_VERSION,
};
pub use stats::{aggregate, median, population_std, Aggregate};

use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::comms::DEFAULT_TTL;
use crate::planner::{BackendError, ExternalBackend, MockBackend, PlannerBackend, PlannerConfig, Squad};
use crate::skills::{bootstrap_library, SkillError, SkillLibrary};
use crate::world::{Action, RewardMode, ScenarioSpec, WorldError, WorldState};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    World(#[from] WorldError),
    #[error(transparent)]
    Skill(#[from] SkillError),
    #[error(transparent)]
    Backend(#[from] BackendError),
    #[error("{0}: {1}")]
    Io(String, #[source] std::io::Error),
    #[error("{0}: {1}")]
    Json(String, #[source] serde_json::Error),
    #[error("{path}: replay schema version {found:?}, expected {expected}")]
    SchemaVersion { path: String, found: Option<u64>, expected: u32 },
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error("no episode results to aggregate")]
    EmptyResults,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum BackendKind {
    #[default]
    Mock,
    External,
}

/// Everything that determines an experiment. Loadable from JSON; missing
/// fields take their defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Built-in scenario name or path to a scenario JSON file.
    pub scenario: String,
    pub seeds: Vec<u64>,
    pub episodes_per_seed: usize,
    pub backend: BackendKind,
    pub max_hops: u32,
    pub comm_enabled: bool,
    pub reflection_enabled: bool,
    pub synthesis_enabled: bool,
    /// Overrides the scenario's reward mode when set.
    pub reward_mode: Option<RewardMode>,
    /// Overrides the scenario's episode limit when set.
    pub episode_limit: Option<u32>,
    pub decision_interval: u32,
    pub success_threshold: f64,
    pub stagnation_streak: u32,
    pub ttl: u32,
    pub retrieve_k: usize,
    /// Directory of skill files; the bootstrapped library when unset.
    pub skills_dir: Option<PathBuf>,
    /// Where summaries and replays go; nothing is written when unset.
    pub out_dir: Option<PathBuf>,
    /// Worker threads; all available cores when unset.
    pub workers: Option<usize>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            scenario: "protoss_5v5".into(),
            seeds: (0..5).collect(),
            episodes_per_seed: 40,
            backend: BackendKind::Mock,
            max_hops: crate::comms::DEFAULT_MAX_HOPS,
            comm_enabled: true,
            reflection_enabled: true,
            synthesis_enabled: true,
            reward_mode: None,
            episode_limit: None,
            decision_interval: 5,
            success_threshold: 0.0,
            stagnation_streak: 3,
            ttl: DEFAULT_TTL,
            retrieve_k: 3,
            skills_dir: None,
            out_dir: None,
            workers: None,
        }
    }
}

impl ExperimentConfig {
    pub fn from_json_file(path: &Path) -> Result<Self, HarnessError> {
        let name = path.display().to_string();
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::Io(name.clone(), e))?;
        serde_json::from_str(&text).map_err(|e| HarnessError::Json(name, e))
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.seeds.is_empty() {
            return Err(HarnessError::InvalidConfig("seeds must be non-empty".into()));
        }
        if self.episodes_per_seed == 0 {
            return Err(HarnessError::InvalidConfig("episodes_per_seed must be positive".into()));
        }
        if self.decision_interval == 0 {
            return Err(HarnessError::InvalidConfig("decision_interval must be positive".into()));
        }
        if self.workers == Some(0) {
            return Err(HarnessError::InvalidConfig("workers must be positive".into()));
        }
        Ok(())
    }

    /// Relay bound actually used; disabling comms is the same as zero hops.
    pub fn effective_max_hops(&self) -> u32 {
        if self.comm_enabled {
            self.max_hops
        } else {
            0
        }
    }

    /// Scenario with the config's overrides applied.
    pub fn scenario_spec(&self) -> Result<ScenarioSpec, HarnessError> {
        let mut spec = ScenarioSpec::resolve(&self.scenario)?;
        if let Some(mode) = self.reward_mode {
            spec.reward_mode = mode;
        }
        if let Some(limit) = self.episode_limit {
            spec.episode_limit = limit;
        }
        spec.validate()?;
        Ok(spec)
    }

    pub fn planner_config(&self) -> PlannerConfig {
        PlannerConfig {
            decision_interval: self.decision_interval,
            reflection_enabled: self.reflection_enabled,
            synthesis_enabled: self.synthesis_enabled,
            retrieve_k: self.retrieve_k,
            ..PlannerConfig::default()
        }
    }

    pub fn mock_backend(&self) -> MockBackend {
        MockBackend { success_threshold: self.success_threshold, stagnation_streak: self.stagnation_streak }
    }

    pub fn base_library(&self) -> Result<SkillLibrary, HarnessError> {
        Ok(match &self.skills_dir {
            Some(dir) => SkillLibrary::load_dir(dir)?,
            None => bootstrap_library(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeResult {
    pub seed: u64,
    pub episode: usize,
    pub win: bool,
    #[serde(rename = "return")]
    pub episode_return: f64,
    pub length: u32,
    /// Replay location relative to the output directory, when written.
    pub replay_path: Option<String>,
    pub replay_sha256: String,
    pub backend_failure_count: usize,
    pub skills_synthesized: usize,
}

/// World seed for one episode of one experiment seed.
pub fn episode_seed(seed: u64, episode: usize) -> u64 {
    seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ (episode as u64).wrapping_mul(0xD1B5_4A32_D192_ED03)
}

/// Play one episode and return its result with the full replay.
pub fn run_episode(
    config: &ExperimentConfig,
    spec: &ScenarioSpec,
    library: &SkillLibrary,
    backend: &mut dyn PlannerBackend,
    seed: u64,
    episode: usize,
) -> Result<(EpisodeResult, Vec<ReplayRecord>), HarnessError> {
    let world_seed = episode_seed(seed, episode);
    let mut world = WorldState::spawn(spec, world_seed)?;
    let mut rng = ChaCha8Rng::seed_from_u64(world_seed ^ 0x5EED);
    let mut library = library.clone();
    let mut mock = config.mock_backend();
    let mut squad = Squad::new(&world, config.planner_config(), config.effective_max_hops(), config.ttl);
    let n_allies = world.units(crate::world::Team::Ally).len();
    let n_enemies = world.units(crate::world::Team::Enemy).len();
    let mut records = vec![ReplayRecord {
        schema_version: REPLAY_SCHEMA_VERSION,
        timestep: world.timestep(),
        state: world.snapshot(),
        agents: vec![AgentRecord::default(); n_allies],
        ally_actions: vec![Action::NO_OP; n_allies],
        enemy_actions: vec![Action::NO_OP; n_enemies],
        reward: 0.0,
        done: false,
        win: false,
    }];
    let mut total = 0.0;
    let mut win = false;
    let mut failures = 0;
    let mut synthesized = 0;
    while !world.is_done() {
        let step = squad.act(&world, backend, &mut mock, &mut library, &mut rng);
        let enemy_actions = scripted_opponent(&world);
        let outcome = world.step(&step.actions, &enemy_actions)?;
        squad.record_reward(outcome.reward);
        total += outcome.reward;
        win = outcome.info.win;
        let agents = step
            .decisions
            .into_iter()
            .zip(step.observations.iter())
            .zip(step.knowledge)
            .map(|((d, obs), knowledge)| {
                failures += d.backend_failures.len();
                synthesized += usize::from(d.synthesized.is_some());
                AgentRecord {
                    obs_digest: crate::planner::obs_digest(obs),
                    knowledge,
                    skill_id: d.skill_id,
                    region_of_interest: d.region_of_interest,
                    reflection_success: d.reflection.map(|r| r.success),
                    subtask: d.subtask,
                    synthesized: d.synthesized,
                    backend_failures: d.backend_failures,
                }
            })
            .collect();
        records.push(ReplayRecord {
            schema_version: REPLAY_SCHEMA_VERSION,
            timestep: world.timestep(),
            state: world.snapshot(),
            agents,
            ally_actions: step.actions,
            enemy_actions,
            reward: outcome.reward,
            done: outcome.done,
            win: outcome.info.win,
        });
    }
    let result = EpisodeResult {
        seed,
        episode,
        win,
        episode_return: total,
        length: world.timestep(),
        replay_path: None,
        replay_sha256: replay_sha256(&records),
        backend_failure_count: failures,
        skills_synthesized: synthesized,
    };
    Ok((result, records))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedSummary {
    pub seed: u64,
    pub episodes: usize,
    pub win_rate: f64,
    pub mean_return: f64,
    pub mean_length: f64,
}

/// The `summary.json` contents. Only effective settings are recorded, so
/// equivalent configs produce identical summaries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub scenario: String,
    pub backend: BackendKind,
    pub reward_mode: RewardMode,
    pub episodes_per_seed: usize,
    pub max_hops: u32,
    pub reflection_enabled: bool,
    pub synthesis_enabled: bool,
    pub decision_interval: u32,
    pub per_seed: Vec<SeedSummary>,
    pub median_win_rate: f64,
    pub std_win_rate: f64,
    pub mean_return: f64,
    pub mean_length: f64,
    pub backend_failures: usize,
    pub skills_synthesized: usize,
    pub replay_sha256: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentReport {
    pub summary: Summary,
    /// Outer index follows `config.seeds`.
    pub episodes: Vec<Vec<EpisodeResult>>,
}

fn make_backend(config: &ExperimentConfig) -> Result<Box<dyn PlannerBackend>, HarnessError> {
    Ok(match config.backend {
        BackendKind::Mock => Box::new(config.mock_backend()),
        BackendKind::External => Box::new(ExternalBackend::from_env()?),
    })
}

fn pool(workers: Option<usize>) -> Result<rayon::ThreadPool, HarnessError> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Some(n) = workers {
        b = b.num_threads(n);
    }
    b.build().map_err(|e| HarnessError::InvalidConfig(format!("worker pool: {e}")))
}

/// Run every episode of every seed, write replays and `summary.json` when an
/// output directory is configured.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentReport, HarnessError> {
    config.validate()?;
    let spec = config.scenario_spec()?;
    let library = config.base_library()?;
    make_backend(config)?;
    let jobs: Vec<(usize, u64, usize)> = config
        .seeds
        .iter()
        .enumerate()
        .flat_map(|(i, &s)| (0..config.episodes_per_seed).map(move |e| (i, s, e)))
        .collect();
    let out_dir = config.out_dir.clone();
    let results: Vec<Result<EpisodeResult, HarnessError>> = pool(config.workers)?.install(|| {
        jobs.par_iter()
            .map(|&(_, seed, episode)| {
                let mut backend = make_backend(config)?;
                let (mut result, records) = run_episode(config, &spec, &library, backend.as_mut(), seed, episode)?;
                if let Some(dir) = &out_dir {
                    let rel = format!("replays/seed{seed}_ep{episode:03}.jsonl");
                    write_replay(&dir.join(&rel), &records)?;
                    result.replay_path = Some(rel);
                }
                Ok(result)
            })
            .collect()
    });
    let mut episodes: Vec<Vec<EpisodeResult>> = vec![Vec::new(); config.seeds.len()];
    for (&(i, _, _), r) in jobs.iter().zip(results) {
        episodes[i].push(r?);
    }
    let summary = summarize(config, &spec, &episodes)?;
    if let Some(dir) = &config.out_dir {
        write_json(&dir.join("summary.json"), &summary)?;
    }
    Ok(ExperimentReport { summary, episodes })
}

pub fn summarize(
    config: &ExperimentConfig,
    spec: &ScenarioSpec,
    episodes: &[Vec<EpisodeResult>],
) -> Result<Summary, HarnessError> {
    let agg = aggregate(episodes)?;
    let per_seed = config
        .seeds
        .iter()
        .zip(episodes)
        .zip(&agg.per_seed_win_rates)
        .map(|((&seed, eps), &win_rate)| {
            let n = eps.len() as f64;
            SeedSummary {
                seed,
                episodes: eps.len(),
                win_rate,
                mean_return: eps.iter().map(|e| e.episode_return).sum::<f64>() / n,
                mean_length: eps.iter().map(|e| e.length as f64).sum::<f64>() / n,
            }
        })
        .collect();
    let all = episodes.iter().flatten();
    Ok(Summary {
        scenario: spec.name.clone(),
        backend: config.backend,
        reward_mode: spec.reward_mode,
        episodes_per_seed: config.episodes_per_seed,
        max_hops: config.effective_max_hops(),
        reflection_enabled: config.reflection_enabled,
        synthesis_enabled: config.synthesis_enabled,
        decision_interval: config.decision_interval,
        per_seed,
        median_win_rate: agg.median_win_rate,
        std_win_rate: agg.std_win_rate,
        mean_return: agg.mean_return,
        mean_length: agg.mean_length,
        backend_failures: all.clone().map(|e| e.backend_failure_count).sum(),
        skills_synthesized: all.clone().map(|e| e.skills_synthesized).sum(),
        replay_sha256: all.map(|e| e.replay_sha256.clone()).collect(),
    })
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), HarnessError> {
    let io = |e| HarnessError::Io(path.display().to_string(), e);
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(io)?;
    }
    let text = serde_json::to_string_pretty(value).map_err(|e| HarnessError::Json(path.display().to_string(), e))?;
    std::fs::write(path, text + "\n").map_err(io)
}

/// Named variants of a base config: the full loop and one per removed phase.
pub fn ablation_conditions(base: &ExperimentConfig) -> Vec<(&'static str, ExperimentConfig)> {
    let full = ExperimentConfig { comm_enabled: true, reflection_enabled: true, synthesis_enabled: true, ..base.clone() };
    vec![
        ("full", full.clone()),
        ("no_comm", ExperimentConfig { comm_enabled: false, ..full.clone() }),
        ("no_reflection", ExperimentConfig { reflection_enabled: false, ..full.clone() }),
        ("no_synthesis", ExperimentConfig { synthesis_enabled: false, ..full }),
    ]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationRow {
    pub condition: String,
    pub median_win_rate: f64,
    pub std_win_rate: f64,
    pub per_seed_win_rates: Vec<f64>,
    pub mean_return: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AblationReport {
    pub rows: Vec<AblationRow>,
    pub reports: Vec<(String, ExperimentReport)>,
}

impl AblationReport {
    pub fn report(&self, condition: &str) -> Option<&ExperimentReport> {
        self.reports.iter().find(|(c, _)| c == condition).map(|(_, r)| r)
    }
}

/// Run every ablation condition. With an output directory each condition
/// writes into `<out>/<condition>/` and the table goes to `<out>/ablation.json`.
pub fn run_ablation(base: &ExperimentConfig) -> Result<AblationReport, HarnessError> {
    let mut rows = Vec::new();
    let mut reports = Vec::new();
    for (name, mut cfg) in ablation_conditions(base) {
        cfg.out_dir = base.out_dir.as_ref().map(|d| d.join(name));
        let report = run_experiment(&cfg)?;
        let s = &report.summary;
        rows.push(AblationRow {
            condition: name.to_string(),
            median_win_rate: s.median_win_rate,
            std_win_rate: s.std_win_rate,
            per_seed_win_rates: s.per_seed.iter().map(|p| p.win_rate).collect(),
            mean_return: s.mean_return,
        });
        reports.push((name.to_string(), report));
    }
    if let Some(dir) = &base.out_dir {
        write_json(&dir.join("ablation.json"), &rows)?;
    }
    Ok(AblationReport { rows, reports })
}
