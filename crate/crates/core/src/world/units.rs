use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::WorldError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Race {
    Protoss,
    Terran,
    Zerg,
}

impl fmt::Display for Race {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Race::Protoss => "protoss",
            Race::Terran => "terran",
            Race::Zerg => "zerg",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum UnitKind {
    Stalker,
    Zealot,
    Colossus,
    Marine,
    Marauder,
    Medivac,
    Zergling,
    Hydralisk,
    Baneling,
}

impl UnitKind {
    pub const ALL: [UnitKind; 9] = [
        UnitKind::Stalker,
        UnitKind::Zealot,
        UnitKind::Colossus,
        UnitKind::Marine,
        UnitKind::Marauder,
        UnitKind::Medivac,
        UnitKind::Zergling,
        UnitKind::Hydralisk,
        UnitKind::Baneling,
    ];

    pub fn name(self) -> &'static str {
        match self {
            UnitKind::Stalker => "stalker",
            UnitKind::Zealot => "zealot",
            UnitKind::Colossus => "colossus",
            UnitKind::Marine => "marine",
            UnitKind::Marauder => "marauder",
            UnitKind::Medivac => "medivac",
            UnitKind::Zergling => "zergling",
            UnitKind::Hydralisk => "hydralisk",
            UnitKind::Baneling => "baneling",
        }
    }

    pub fn race(self) -> Race {
        match self {
            UnitKind::Stalker | UnitKind::Zealot | UnitKind::Colossus => Race::Protoss,
            UnitKind::Marine | UnitKind::Marauder | UnitKind::Medivac => Race::Terran,
            UnitKind::Zergling | UnitKind::Hydralisk | UnitKind::Baneling => Race::Zerg,
        }
    }

    /// Melee classification used by the tactical scripts (zealot, zergling, baneling).
    pub fn is_melee(self) -> bool {
        matches!(self, UnitKind::Zealot | UnitKind::Zergling | UnitKind::Baneling)
    }

    /// Role classification used by tactics; the stat table may still override flags.
    pub fn is_healer(self) -> bool {
        self == UnitKind::Medivac
    }
}

impl fmt::Display for UnitKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for UnitKind {
    type Err = WorldError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let lower = s.to_ascii_lowercase();
        UnitKind::ALL
            .iter()
            .copied()
            .find(|k| k.name() == lower)
            .ok_or_else(|| WorldError::UnknownUnit(s.to_string()))
    }
}

/// Combat statistics for one unit type. Distances are in grid units,
/// hit points are absolute, cooldowns are in timesteps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnitStats {
    pub sight_range: f64,
    pub shoot_range: f64,
    pub damage_per_hit: f64,
    #[serde(default)]
    pub heal_per_hit: f64,
    pub attack_cooldown: u32,
    pub max_health: f64,
    #[serde(default)]
    pub max_shield: f64,
    pub move_speed: f64,
    pub collision_radius: f64,
    #[serde(default)]
    pub is_melee: bool,
    #[serde(default)]
    pub is_healer: bool,
    #[serde(default)]
    pub is_suicide_aoe: bool,
}

impl UnitStats {
    pub fn validate(&self, kind: UnitKind) -> Result<(), WorldError> {
        let bad = |why: &str| Err(WorldError::InvalidStats { unit: kind, reason: why.to_string() });
        if !(self.sight_range > 0.0) || !(self.shoot_range > 0.0) {
            return bad("ranges must be positive");
        }
        if self.shoot_range > self.sight_range {
            return bad("shoot_range exceeds sight_range");
        }
        if self.is_melee && self.shoot_range > 1.0 {
            return bad("melee shoot_range above 1.0");
        }
        if self.is_healer && self.damage_per_hit != 0.0 {
            return bad("healer with non-zero damage");
        }
        if !(self.max_health > 0.0) || self.max_shield < 0.0 {
            return bad("max_health must be positive and max_shield non-negative");
        }
        if kind.race() != Race::Protoss && self.max_shield != 0.0 {
            return bad("only protoss units carry shields");
        }
        if !(self.move_speed > 0.0) || self.collision_radius < 0.0 {
            return bad("move_speed must be positive");
        }
        Ok(())
    }
}

/// Per-type stat table. Values are configuration; the defaults loosely follow
/// SC2 proportions on a 32x32 map.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct StatTable(BTreeMap<UnitKind, UnitStats>);

impl StatTable {
    pub fn get(&self, kind: UnitKind) -> &UnitStats {
        // Construction guarantees totality over UnitKind.
        &self.0[&kind]
    }

    pub fn with_overrides(mut self, overrides: &BTreeMap<UnitKind, UnitStats>) -> Result<Self, WorldError> {
        for (kind, stats) in overrides {
            stats.validate(*kind)?;
            self.0.insert(*kind, stats.clone());
        }
        Ok(self)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&UnitKind, &UnitStats)> {
        self.0.iter()
    }
}

impl Default for StatTable {
    fn default() -> Self {
        fn ranged(sight: f64, shoot: f64, dmg: f64, cd: u32, hp: f64, sh: f64, speed: f64, r: f64) -> UnitStats {
            UnitStats {
                sight_range: sight,
                shoot_range: shoot,
                damage_per_hit: dmg,
                heal_per_hit: 0.0,
                attack_cooldown: cd,
                max_health: hp,
                max_shield: sh,
                move_speed: speed,
                collision_radius: r,
                is_melee: false,
                is_healer: false,
                is_suicide_aoe: false,
            }
        }
        fn melee(sight: f64, dmg: f64, cd: u32, hp: f64, sh: f64, speed: f64, r: f64) -> UnitStats {
            UnitStats { is_melee: true, ..ranged(sight, 1.0, dmg, cd, hp, sh, speed, r) }
        }

        let mut t = BTreeMap::new();
        t.insert(UnitKind::Stalker, ranged(9.0, 6.0, 13.0, 2, 80.0, 80.0, 1.0, 0.625));
        t.insert(UnitKind::Zealot, melee(9.0, 16.0, 2, 100.0, 50.0, 1.0, 0.5));
        t.insert(UnitKind::Colossus, ranged(10.0, 7.0, 20.0, 2, 200.0, 150.0, 0.8, 1.0));
        t.insert(UnitKind::Marine, ranged(9.0, 5.0, 6.0, 1, 45.0, 0.0, 0.9, 0.375));
        t.insert(UnitKind::Marauder, ranged(10.0, 6.0, 10.0, 2, 125.0, 0.0, 0.9, 0.5625));
        t.insert(
            UnitKind::Medivac,
            UnitStats {
                is_healer: true,
                damage_per_hit: 0.0,
                heal_per_hit: 9.0,
                ..ranged(11.0, 4.0, 0.0, 1, 150.0, 0.0, 1.1, 0.75)
            },
        );
        t.insert(UnitKind::Zergling, melee(8.0, 5.0, 1, 35.0, 0.0, 1.4, 0.375));
        t.insert(UnitKind::Hydralisk, ranged(9.0, 5.0, 12.0, 2, 90.0, 0.0, 0.9, 0.625));
        t.insert(
            UnitKind::Baneling,
            UnitStats { is_suicide_aoe: true, ..melee(8.0, 16.0, 1, 30.0, 0.0, 1.1, 0.375) },
        );
        StatTable(t)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_table_is_valid_and_total() {
        let table = StatTable::default();
        for kind in UnitKind::ALL {
            table.get(kind).validate(kind).unwrap();
            assert_eq!(table.get(kind).is_melee, kind.is_melee());
        }
        assert!(table.get(UnitKind::Medivac).is_healer);
        assert!(table.get(UnitKind::Baneling).is_suicide_aoe);
    }

    #[test]
    fn stalker_ranges_follow_sc2_convention() {
        let s = StatTable::default().get(UnitKind::Stalker).clone();
        assert_eq!((s.sight_range, s.shoot_range), (9.0, 6.0));
        assert_eq!(StatTable::default().get(UnitKind::Zealot).shoot_range, 1.0);
    }

    #[test]
    fn invalid_override_rejected() {
        let mut bad = StatTable::default().get(UnitKind::Stalker).clone();
        bad.shoot_range = 12.0;
        let overrides = BTreeMap::from([(UnitKind::Stalker, bad)]);
        assert!(StatTable::default().with_overrides(&overrides).is_err());
    }

    #[test]
    fn unit_names_parse_case_insensitively() {
        assert_eq!("Zealot".parse::<UnitKind>().unwrap(), UnitKind::Zealot);
        assert!("ultralisk".parse::<UnitKind>().is_err());
    }
}
