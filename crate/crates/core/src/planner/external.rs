//! Chat-completion backend. Prompts are plain-text templates with
//! `<placeholder>` slots; replies are parsed with
//! [`parse_sectioned_response`](super::parse_sectioned_response).

use std::collections::BTreeMap;
use std::time::Duration;

use log::debug;
use serde_json::{json, Value};

use crate::obs_text::render_obs;
use crate::skills::{ControlTemplate, RegionOfInterest, Skill, SkillEdit};
use crate::world::Team;

use super::mock::parse_directive;
use super::{
    parse_sectioned_response, BackendError, PhaseContext, PlannerBackend, PreviousResult, ReflectionReport,
    SituationReport, SubTask, SubTaskTarget,
};

pub const ENV_URL: &str = "SKIRMISH_LLM_URL";
pub const ENV_API_KEY: &str = "SKIRMISH_LLM_API_KEY";
pub const ENV_MODEL: &str = "SKIRMISH_LLM_MODEL";
pub const ENV_TIMEOUT: &str = "SKIRMISH_LLM_TIMEOUT_SECS";

#[derive(Debug, Clone, PartialEq)]
pub struct ExternalConfig {
    /// Full chat-completions URL, e.g. `http://host/v1/chat/completions`.
    pub url: String,
    pub api_key: Option<String>,
    pub model: String,
    pub timeout: Duration,
}

impl ExternalConfig {
    pub const DEFAULT_MODEL: &'static str = "gpt-4o-mini";
    pub const DEFAULT_TIMEOUT_SECS: u64 = 30;

    /// Read the endpoint settings from the environment.
    pub fn from_env() -> Result<Self, BackendError> {
        let url = std::env::var(ENV_URL).map_err(|_| BackendError::NotConfigured(format!("{ENV_URL} is unset")))?;
        let timeout = match std::env::var(ENV_TIMEOUT) {
            Ok(v) => v
                .trim()
                .parse::<f64>()
                .ok()
                .filter(|s| s.is_finite() && *s > 0.0)
                .ok_or_else(|| BackendError::NotConfigured(format!("{ENV_TIMEOUT}=`{v}` is not a positive number")))?,
            Err(_) => Self::DEFAULT_TIMEOUT_SECS as f64,
        };
        Ok(ExternalConfig {
            url,
            api_key: std::env::var(ENV_API_KEY).ok().filter(|k| !k.is_empty()),
            model: std::env::var(ENV_MODEL).unwrap_or_else(|_| Self::DEFAULT_MODEL.to_string()),
            timeout: Duration::from_secs_f64(timeout),
        })
    }
}

/// The prompt templates, one per phase.
#[derive(Debug, Clone, PartialEq)]
pub struct PromptSet {
    pub system: String,
    pub perception: String,
    pub reflection: String,
    pub task_reasoning: String,
    pub skill_generation: String,
    pub actor: String,
}

impl Default for PromptSet {
    fn default() -> Self {
        PromptSet {
            system: include_str!("../../prompts/system.txt").to_string(),
            perception: include_str!("../../prompts/perception.txt").to_string(),
            reflection: include_str!("../../prompts/reflection.txt").to_string(),
            task_reasoning: include_str!("../../prompts/task_reasoning.txt").to_string(),
            skill_generation: include_str!("../../prompts/skill_generation.txt").to_string(),
            actor: include_str!("../../prompts/actor.txt").to_string(),
        }
    }
}

/// Replace every `<name>` with its value; unknown placeholders are left as is.
pub fn render_prompt(template: &str, values: &BTreeMap<&str, String>) -> String {
    let mut out = String::with_capacity(template.len());
    let mut rest = template;
    while let Some(open) = rest.find('<') {
        out.push_str(&rest[..open]);
        let tail = &rest[open..];
        let close = tail.find('>');
        let key = close.map(|c| &tail[1..c]).filter(|k| k.chars().all(|c| c.is_ascii_alphanumeric() || c == '_'));
        match (key, close) {
            (Some(k), Some(c)) if values.contains_key(k) => {
                out.push_str(&values[k]);
                rest = &tail[c + 1..];
            }
            _ => {
                out.push('<');
                rest = &tail[1..];
            }
        }
    }
    out.push_str(rest);
    out
}

pub struct ExternalBackend {
    pub config: ExternalConfig,
    pub prompts: PromptSet,
    client: reqwest::blocking::Client,
}

impl ExternalBackend {
    pub fn new(config: ExternalConfig, prompts: PromptSet) -> Result<Self, BackendError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(config.timeout)
            .build()
            .map_err(|e| BackendError::Http(e.to_string()))?;
        Ok(ExternalBackend { config, prompts, client })
    }

    pub fn from_env() -> Result<Self, BackendError> {
        Self::new(ExternalConfig::from_env()?, PromptSet::default())
    }

    fn complete(&self, prompt: String) -> Result<String, BackendError> {
        let body = json!({
            "model": self.config.model,
            "temperature": 0,
            "messages": [
                {"role": "system", "content": self.prompts.system},
                {"role": "user", "content": prompt},
            ],
        });
        let mut req = self.client.post(&self.config.url).json(&body);
        if let Some(key) = &self.config.api_key {
            req = req.bearer_auth(key);
        }
        let resp = req.send().map_err(|e| BackendError::Http(e.to_string()))?;
        let status = resp.status();
        if !status.is_success() {
            return Err(BackendError::Http(format!("status {status}")));
        }
        let value: Value = resp.json().map_err(|e| BackendError::BadReply(e.to_string()))?;
        let text = value["choices"][0]["message"]["content"]
            .as_str()
            .ok_or_else(|| BackendError::BadReply("no choices[0].message.content".into()))?;
        debug!("reply: {text}");
        Ok(text.to_string())
    }

    fn ask(
        &self,
        template: &str,
        values: &BTreeMap<&str, String>,
        required: &[&str],
    ) -> Result<BTreeMap<String, Option<String>>, BackendError> {
        let reply = self.complete(render_prompt(template, values))?;
        parse_sectioned_response(&reply, required)
    }
}

fn base_values(cx: &PhaseContext<'_>) -> BTreeMap<&'static str, String> {
    let mut v = BTreeMap::new();
    v.insert("scenario", cx.scenario.to_string());
    v.insert("timestep", cx.timestep.to_string());
    v.insert("task_description", cx.memory.task_text().to_string());
    v.insert("observation", render_obs(cx.obs));
    let tasks: Vec<String> = cx
        .ally_tasks
        .iter()
        .filter(|(id, _)| *id != cx.obs.agent_id)
        .map(|(id, t)| format!("Ally #{id}: {t}"))
        .collect();
    v.insert("ally_task", if tasks.is_empty() { "none".into() } else { tasks.join("\n") });
    let shared: Vec<String> = cx
        .shared
        .iter()
        .map(|r| {
            let team = if r.key.team == Team::Enemy { "Enemy" } else { "Ally" };
            format!(
                "{team} #{} {} at ({:.1}, {:.1}), health {:.2}, seen {} steps ago, {} hops",
                r.key.id,
                r.unit_type,
                r.global_pos.x,
                r.global_pos.y,
                r.health,
                cx.timestep.saturating_sub(r.observed_at),
                r.hops
            )
        })
        .collect();
    v.insert("shared_entities", if shared.is_empty() { "none".into() } else { shared.join("\n") });
    v.insert("minimap", String::new());
    v.insert("web_search", String::new());
    let current = cx.memory.current_skill.clone().unwrap_or_else(|| "none".into());
    v.insert("current_skill", current.clone());
    v.insert("last_skill", current);
    v.insert(
        "reflection",
        cx.memory.last_reflection.as_ref().map_or("none".into(), |r| {
            format!("{} ({})", r.notes, if r.success { "success" } else { "failure" })
        }),
    );
    v.insert("failure_streak", cx.memory.failure_streak.to_string());
    v.insert(
        "region_of_interest",
        cx.memory.last_report.as_ref().map_or("none".into(), |r| r.region_of_interest.to_string()),
    );
    let params = cx
        .memory
        .current_skill
        .as_ref()
        .and_then(|id| cx.library.get(id))
        .map_or("none".into(), format_params);
    v.insert("skill_params", params);
    let history: Vec<String> =
        cx.memory.history.iter().map(|h| format!("{} {} {:.4}", h.timestep, h.skill_id, h.reward)).collect();
    v.insert("history", history.join("\n"));
    v
}

fn format_params(skill: &Skill) -> String {
    skill.params.iter().map(|(k, v)| format!("{k} = {v}")).collect::<Vec<_>>().join("\n")
}

fn required(sections: &BTreeMap<String, Option<String>>, name: &str) -> Result<String, BackendError> {
    sections
        .get(name)
        .cloned()
        .flatten()
        .ok_or_else(|| BackendError::BadReply(format!("section `{name}` is null")))
}

/// Whether `roi` names a unit the agent currently knows about.
fn roi_is_known(cx: &PhaseContext<'_>, roi: &RegionOfInterest) -> bool {
    match *roi {
        RegionOfInterest::Location(_) => true,
        RegionOfInterest::Entity { team, id } => {
            let seen = match team {
                Team::Enemy => cx.obs.enemies.iter().any(|e| e.id == id),
                Team::Ally => cx.obs.allies.iter().any(|e| e.id == id),
            };
            seen || cx.shared.iter().any(|r| r.key.team == team && r.key.id == id)
        }
    }
}

/// Parse a one-line edit as asked for by the skill-generation prompt.
pub fn parse_edit_line(line: &str) -> Option<SkillEdit> {
    let line = line.lines().map(str::trim).find(|l| !l.is_empty())?;
    if let Some(expr) = line.strip_prefix("score:").or_else(|| line.strip_prefix("Score:")) {
        return Some(SkillEdit::ReplaceScore(expr.trim().to_string()));
    }
    parse_directive(line)
}

impl PlannerBackend for ExternalBackend {
    fn name(&self) -> &str {
        "external"
    }

    fn perceive(&mut self, cx: &PhaseContext<'_>) -> Result<SituationReport, BackendError> {
        let s = self.ask(&self.prompts.perception, &base_values(cx), &["Game_situation", "Region_of_interest"])?;
        let roi: RegionOfInterest = required(&s, "Region_of_interest")?.parse().map_err(BackendError::BadReply)?;
        if !roi_is_known(cx, &roi) {
            return Err(BackendError::BadReply(format!("{roi} is not in current knowledge")));
        }
        Ok(SituationReport { game_situation: s["Game_situation"].clone().unwrap_or_default(), region_of_interest: roi })
    }

    fn reflect(&mut self, cx: &PhaseContext<'_>, previous: &PreviousResult) -> Result<ReflectionReport, BackendError> {
        let mut values = base_values(cx);
        values.insert("last_skill", previous.skill_id.clone());
        values.insert("skill_reward", format!("{:.4}", previous.skill_reward));
        values.insert("skill_steps", previous.steps.to_string());
        let s = self.ask(&self.prompts.reflection, &values, &["Success", "Reflection"])?;
        let verdict = required(&s, "Success")?.to_ascii_lowercase();
        let success = match verdict.trim_matches(|c: char| !c.is_alphabetic()) {
            "yes" | "true" | "success" => true,
            "no" | "false" | "failure" => false,
            other => return Err(BackendError::BadReply(format!("success verdict `{other}`"))),
        };
        let notes = s["Reflection"].clone().unwrap_or_default();
        Ok(ReflectionReport { success, notes, skill_reward: previous.skill_reward })
    }

    fn propose_subtask(
        &mut self,
        cx: &PhaseContext<'_>,
        report: Option<&ReflectionReport>,
    ) -> Result<Option<SubTask>, BackendError> {
        let mut values = base_values(cx);
        if let Some(r) = report {
            values.insert("reflection", format!("{} ({})", r.notes, if r.success { "success" } else { "failure" }));
        }
        let s = self.ask(&self.prompts.task_reasoning, &values, &["Task"])?;
        let Some(text) = s["Task"].clone().filter(|t| !t.trim().is_empty()) else {
            return Ok(None);
        };
        let target = match s.get("Target").cloned().flatten().as_deref().map(str::trim) {
            Some(t) if t.eq_ignore_ascii_case("control_logic") => SubTaskTarget::ControlLogic,
            _ => SubTaskTarget::ScoreTarget,
        };
        Ok(Some(SubTask { text: text.trim().to_string(), target }))
    }

    fn generate_skill(
        &mut self,
        cx: &PhaseContext<'_>,
        subtask: &SubTask,
        base: &Skill,
    ) -> Result<Option<SkillEdit>, BackendError> {
        let mut values = base_values(cx);
        values.insert("subtask", subtask.text.clone());
        values.insert("subtask_target", serde_json::to_string(&subtask.target).unwrap_or_default().replace('"', ""));
        values.insert("base_skill", base.skill_id.clone());
        values.insert("base_doc", base.doc.clone());
        values.insert("score_expr", base.score_source.clone());
        values.insert("control_template", base.control_template.to_string());
        values.insert("skill_params", format_params(base));
        values.insert("templates", ControlTemplate::ALL.map(|t| t.name()).join(", "));
        let s = self.ask(&self.prompts.skill_generation, &values, &["Skill_generation"])?;
        match s["Skill_generation"].as_deref() {
            None => Ok(None),
            Some(line) => {
                parse_edit_line(line).map(Some).ok_or_else(|| BackendError::BadReply(format!("unparseable edit `{line}`")))
            }
        }
    }

    fn select_skill(
        &mut self,
        cx: &PhaseContext<'_>,
        _task: &str,
        candidates: &[&Skill],
        report: Option<&ReflectionReport>,
    ) -> Result<String, BackendError> {
        let mut values = base_values(cx);
        if let Some(r) = report {
            values.insert("reflection", format!("{} ({})", r.notes, if r.success { "success" } else { "failure" }));
        }
        let list: Vec<String> = candidates.iter().map(|s| format!("{}: {}", s.skill_id, s.doc.replace('\n', " "))).collect();
        values.insert("candidates", list.join("\n"));
        let s = self.ask(&self.prompts.actor, &values, &["Skills"])?;
        let call = required(&s, "Skills")?;
        let id = call.split('(').next().unwrap_or("").trim().trim_matches('`').to_string();
        if id.is_empty() {
            return Err(BackendError::BadReply(format!("no skill name in `{call}`")));
        }
        Ok(id)
    }
}
