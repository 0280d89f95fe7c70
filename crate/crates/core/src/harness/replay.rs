//! JSONL episode replays: one record per timestep, starting with the initial state.

use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::comms::EntityKey;
use crate::planner::SubTask;
use crate::skills::RegionOfInterest;
use crate::world::{Action, WorldSnapshot};

use super::HarnessError;

pub const REPLAY_SCHEMA_VERSION: u32 = 1;

/// Per-agent planner output for one step.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct AgentRecord {
    /// Digest of the rendered observation the agent acted on.
    pub obs_digest: String,
    /// Entities the agent knew after the share phase, with relay hops.
    pub knowledge: Vec<(EntityKey, u32)>,
    pub skill_id: Option<String>,
    pub region_of_interest: Option<RegionOfInterest>,
    pub reflection_success: Option<bool>,
    pub subtask: Option<SubTask>,
    pub synthesized: Option<String>,
    pub backend_failures: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplayRecord {
    pub schema_version: u32,
    pub timestep: u32,
    /// World state after this step (before any step for the first record).
    pub state: WorldSnapshot,
    pub agents: Vec<AgentRecord>,
    pub ally_actions: Vec<Action>,
    pub enemy_actions: Vec<Action>,
    pub reward: f64,
    pub done: bool,
    pub win: bool,
}

/// Serialized replay, one JSON object per line.
pub fn replay_to_jsonl(records: &[ReplayRecord]) -> String {
    let mut out = String::new();
    for r in records {
        out.push_str(&serde_json::to_string(r).expect("replay record serializes"));
        out.push('\n');
    }
    out
}

/// Hex SHA-256 of [`replay_to_jsonl`].
pub fn replay_sha256(records: &[ReplayRecord]) -> String {
    hex::encode(Sha256::digest(replay_to_jsonl(records).as_bytes()))
}

pub fn write_replay(path: &Path, records: &[ReplayRecord]) -> Result<(), HarnessError> {
    let io = |e| HarnessError::Io(path.display().to_string(), e);
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(io)?;
    }
    let mut file = std::fs::File::create(path).map_err(io)?;
    file.write_all(replay_to_jsonl(records).as_bytes()).map_err(io)
}

pub fn read_replay(path: &Path) -> Result<Vec<ReplayRecord>, HarnessError> {
    let name = path.display().to_string();
    let file = std::fs::File::open(path).map_err(|e| HarnessError::Io(name.clone(), e))?;
    let mut records = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| HarnessError::Io(name.clone(), e))?;
        if line.trim().is_empty() {
            continue;
        }
        let value: serde_json::Value =
            serde_json::from_str(&line).map_err(|e| HarnessError::Json(format!("{name}:{}", i + 1), e))?;
        let found = value.get("schema_version").and_then(|v| v.as_u64());
        if found != Some(REPLAY_SCHEMA_VERSION as u64) {
            return Err(HarnessError::SchemaVersion { path: name, found, expected: REPLAY_SCHEMA_VERSION });
        }
        records.push(serde_json::from_value(value).map_err(|e| HarnessError::Json(format!("{name}:{}", i + 1), e))?);
    }
    Ok(records)
}
