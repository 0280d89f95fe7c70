//! Deterministic two-team micro-combat simulator on a 32x32 continuous map.
//!
//! A [`WorldState`] is spawned from a [`ScenarioSpec`] and a seed, advanced by
//! [`WorldState::step`] with one action per living unit, and observed per ally
//! agent through [`WorldState::observe`]. Enemy observability follows the
//! first-spotter rule when `extended_partial_obs` is set.

mod action;
mod scenario;
mod state;
mod units;

pub use action::Action;
pub use scenario::{MixEntry, RewardMode, ScenarioSpec};
pub use state::{StepInfo, StepOutcome, Team, UnitState, WorldSnapshot, WorldState};
pub use units::{Race, StatTable, UnitKind, UnitStats};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum WorldError {
    #[error("unknown unit type `{0}`")]
    UnknownUnit(String),
    #[error("unknown scenario `{0}`")]
    UnknownScenario(String),
    #[error("invalid scenario {0}")]
    InvalidScenario(String),
    #[error("invalid stats for {unit}: {reason}")]
    InvalidStats { unit: UnitKind, reason: String },
    #[error("{team:?} agent {agent} chose action {action}, which is not in its mask {mask:?}")]
    IllegalAction { team: Team, agent: usize, action: Action, mask: Vec<Action> },
    #[error("expected {expected} actions for the {team:?} team, got {got}")]
    ActionCount { team: Team, expected: usize, got: usize },
    #[error("episode already finished")]
    Finished,
    #[error("{0}: {1}")]
    Io(String, #[source] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
