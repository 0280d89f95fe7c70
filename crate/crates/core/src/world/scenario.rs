use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::units::{Race, UnitKind, UnitStats};
use super::WorldError;
use crate::geom::Rect;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum RewardMode {
    #[default]
    Dense,
    Sparse,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixEntry {
    pub unit: UnitKind,
    pub weight: f64,
}

/// Scenario description, loadable from JSON. See `docs/scenario.md`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub name: String,
    pub race: Race,
    pub n_allies: usize,
    pub n_enemies: usize,
    pub ally_mix: Vec<MixEntry>,
    pub enemy_mix: Vec<MixEntry>,
    pub ally_spawn: Rect,
    pub enemy_spawn: Rect,
    #[serde(default)]
    pub reward_mode: RewardMode,
    #[serde(default = "default_episode_limit")]
    pub episode_limit: u32,
    /// First-spotter rule: only the ally that first sighted an enemy keeps
    /// observing it directly.
    #[serde(default = "yes")]
    pub extended_partial_obs: bool,
    /// Enemy unit `i < n_allies` copies ally unit `i`'s type; extras are drawn
    /// from `enemy_mix`.
    #[serde(default = "yes")]
    pub mirror_teams: bool,
    /// Baneling blast radius as a fraction of the baneling's sight range.
    #[serde(default = "default_aoe_fraction")]
    pub aoe_radius_fraction: f64,
    #[serde(default)]
    pub stat_overrides: BTreeMap<UnitKind, UnitStats>,
}

fn default_episode_limit() -> u32 {
    150
}

fn yes() -> bool {
    true
}

fn default_aoe_fraction() -> f64 {
    0.3
}

const MIX_WEIGHTS: [f64; 3] = [0.45, 0.45, 0.1];

fn race_mix(race: Race) -> Vec<MixEntry> {
    let kinds = match race {
        Race::Protoss => [UnitKind::Stalker, UnitKind::Zealot, UnitKind::Colossus],
        Race::Terran => [UnitKind::Marine, UnitKind::Marauder, UnitKind::Medivac],
        Race::Zerg => [UnitKind::Zergling, UnitKind::Hydralisk, UnitKind::Baneling],
    };
    kinds.iter().zip(MIX_WEIGHTS).map(|(&unit, weight)| MixEntry { unit, weight }).collect()
}

impl ScenarioSpec {
    /// Two-team skirmish with opposing spawn rectangles on the west and east flanks.
    pub fn standard(race: Race, n_allies: usize, n_enemies: usize) -> Self {
        ScenarioSpec {
            name: format!("{race}_{n_allies}v{n_enemies}"),
            race,
            n_allies,
            n_enemies,
            ally_mix: race_mix(race),
            enemy_mix: race_mix(race),
            ally_spawn: Rect::new(3.0, 8.0, 9.0, 24.0),
            enemy_spawn: Rect::new(23.0, 8.0, 29.0, 24.0),
            reward_mode: RewardMode::Dense,
            episode_limit: default_episode_limit(),
            extended_partial_obs: true,
            mirror_teams: true,
            aoe_radius_fraction: default_aoe_fraction(),
            stat_overrides: BTreeMap::new(),
        }
    }

    /// The six built-in scenarios: `{protoss,terran,zerg}_{5v5,5v6}`.
    pub fn builtin(name: &str) -> Result<Self, WorldError> {
        let (race, rest) = name.split_once('_').ok_or_else(|| WorldError::UnknownScenario(name.to_string()))?;
        let race = match race {
            "protoss" => Race::Protoss,
            "terran" => Race::Terran,
            "zerg" => Race::Zerg,
            _ => return Err(WorldError::UnknownScenario(name.to_string())),
        };
        let n_enemies = match rest {
            "5v5" => 5,
            "5v6" => 6,
            _ => return Err(WorldError::UnknownScenario(name.to_string())),
        };
        Ok(Self::standard(race, 5, n_enemies))
    }

    pub const BUILTIN_NAMES: [&'static str; 6] =
        ["protoss_5v5", "protoss_5v6", "terran_5v5", "terran_5v6", "zerg_5v5", "zerg_5v6"];

    pub fn from_json_file(path: &Path) -> Result<Self, WorldError> {
        let text = std::fs::read_to_string(path).map_err(|e| WorldError::Io(path.display().to_string(), e))?;
        let spec: ScenarioSpec = serde_json::from_str(&text)?;
        spec.validate()?;
        Ok(spec)
    }

    /// Resolve a built-in name, or a path to a JSON scenario file.
    pub fn resolve(name_or_path: &str) -> Result<Self, WorldError> {
        if name_or_path.ends_with(".json") {
            Self::from_json_file(Path::new(name_or_path))
        } else {
            Self::builtin(name_or_path)
        }
    }

    pub fn validate(&self) -> Result<(), WorldError> {
        let invalid = |why: &str| Err(WorldError::InvalidScenario(format!("{}: {why}", self.name)));
        if self.n_allies == 0 || self.n_enemies == 0 {
            return invalid("each team needs at least one unit");
        }
        if !self.ally_spawn.is_valid_in_map() || !self.enemy_spawn.is_valid_in_map() {
            return invalid("spawn rectangle outside the map");
        }
        for mix in [&self.ally_mix, &self.enemy_mix] {
            if mix.is_empty() || mix.iter().any(|m| !(m.weight >= 0.0)) || mix.iter().all(|m| m.weight == 0.0) {
                return invalid("unit mix needs non-negative weights with a positive total");
            }
        }
        if self.episode_limit == 0 {
            return invalid("episode_limit must be positive");
        }
        if !(self.aoe_radius_fraction >= 0.0) {
            return invalid("aoe_radius_fraction must be non-negative");
        }
        for (kind, stats) in &self.stat_overrides {
            stats.validate(*kind)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtins_resolve() {
        for name in ScenarioSpec::BUILTIN_NAMES {
            let spec = ScenarioSpec::builtin(name).unwrap();
            spec.validate().unwrap();
            assert_eq!(spec.name, name);
        }
        assert_eq!(ScenarioSpec::builtin("protoss_5v6").unwrap().n_enemies, 6);
        assert!(ScenarioSpec::builtin("protoss_9v9").is_err());
    }

    #[test]
    fn rejects_empty_team_and_out_of_bounds_spawn() {
        let mut spec = ScenarioSpec::builtin("terran_5v5").unwrap();
        spec.n_allies = 0;
        assert!(spec.validate().is_err());
        let mut spec = ScenarioSpec::builtin("terran_5v5").unwrap();
        spec.enemy_spawn = Rect::new(30.0, 0.0, 40.0, 4.0);
        assert!(spec.validate().is_err());
    }

    #[test]
    fn json_roundtrip_with_defaults() {
        let spec = ScenarioSpec::builtin("zerg_5v6").unwrap();
        let text = serde_json::to_string(&spec).unwrap();
        let back: ScenarioSpec = serde_json::from_str(&text).unwrap();
        assert_eq!(spec, back);

        let minimal = r#"{"name":"m","race":"protoss","n_allies":1,"n_enemies":1,
            "ally_mix":[{"unit":"stalker","weight":1}],"enemy_mix":[{"unit":"zealot","weight":1}],
            "ally_spawn":{"min":{"x":1,"y":1},"max":{"x":2,"y":2}},
            "enemy_spawn":{"min":{"x":5,"y":5},"max":{"x":6,"y":6}}}"#;
        let m: ScenarioSpec = serde_json::from_str(minimal).unwrap();
        assert_eq!(m.episode_limit, 150);
        assert!(m.extended_partial_obs);
        m.validate().unwrap();
    }
}
