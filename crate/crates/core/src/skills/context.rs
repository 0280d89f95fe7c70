use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::comms::EntityRecord;
use crate::geom::{Vec2, MAP_SIZE};
use crate::obs_text::{EntityView, ObsData};
use crate::world::{Action, Team, UnitKind};

/// Target priority per unit type and matchup multipliers `counter[own][target]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TacticTables {
    pub priority: BTreeMap<UnitKind, f64>,
    pub counter: BTreeMap<UnitKind, BTreeMap<UnitKind, f64>>,
}

impl TacticTables {
    pub const DEFAULT_PRIORITY: f64 = 5.0;

    pub fn priority(&self, kind: UnitKind) -> f64 {
        self.priority.get(&kind).copied().unwrap_or(Self::DEFAULT_PRIORITY)
    }

    pub fn matchup(&self, own: UnitKind, target: UnitKind) -> f64 {
        self.counter.get(&own).and_then(|row| row.get(&target)).copied().unwrap_or(1.0)
    }

    /// Fill every missing entry so both tables are total over unit types.
    pub fn completed(mut self) -> Self {
        for kind in UnitKind::ALL {
            self.priority.entry(kind).or_insert(Self::DEFAULT_PRIORITY);
            let row = self.counter.entry(kind).or_default();
            for other in UnitKind::ALL {
                row.entry(other).or_insert(1.0);
            }
        }
        self
    }
}

/// Eight-way heading used in a location-type region of interest.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Heading {
    North,
    South,
    East,
    West,
    Northeast,
    Northwest,
    Southeast,
    Southwest,
    Center,
}

impl Heading {
    pub const ALL: [Heading; 9] = [
        Heading::North,
        Heading::South,
        Heading::East,
        Heading::West,
        Heading::Northeast,
        Heading::Northwest,
        Heading::Southeast,
        Heading::Southwest,
        Heading::Center,
    ];

    /// Nearest of the eight headings for a displacement.
    pub fn from_offset(d: Vec2) -> Heading {
        if d.norm() < 1e-12 {
            return Heading::Center;
        }
        let sector = ((d.y.atan2(d.x) / std::f64::consts::FRAC_PI_4).round() as i64).rem_euclid(8);
        [
            Heading::East,
            Heading::Northeast,
            Heading::North,
            Heading::Northwest,
            Heading::West,
            Heading::Southwest,
            Heading::South,
            Heading::Southeast,
        ][sector as usize]
    }

    /// Unit vector for the heading, zero for `Center`.
    pub fn vector(self) -> Vec2 {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        match self {
            Heading::North => Vec2::new(0.0, 1.0),
            Heading::South => Vec2::new(0.0, -1.0),
            Heading::East => Vec2::new(1.0, 0.0),
            Heading::West => Vec2::new(-1.0, 0.0),
            Heading::Northeast => Vec2::new(h, h),
            Heading::Northwest => Vec2::new(-h, h),
            Heading::Southeast => Vec2::new(h, -h),
            Heading::Southwest => Vec2::new(-h, -h),
            Heading::Center => Vec2::new(0.0, 0.0),
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Heading::North => "North",
            Heading::South => "South",
            Heading::East => "East",
            Heading::West => "West",
            Heading::Northeast => "Northeast",
            Heading::Northwest => "Northwest",
            Heading::Southeast => "Southeast",
            Heading::Southwest => "Southwest",
            Heading::Center => "Center",
        }
    }
}

/// Where an agent should direct attention: a known unit, or a map heading.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RegionOfInterest {
    Entity { team: Team, id: usize },
    Location(Heading),
}

impl fmt::Display for RegionOfInterest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RegionOfInterest::Entity { team: Team::Enemy, id } => write!(f, "Enemy #{id}"),
            RegionOfInterest::Entity { team: Team::Ally, id } => write!(f, "Ally #{id}"),
            RegionOfInterest::Location(h) => write!(f, "Location: {}", h.label()),
        }
    }
}

impl FromStr for RegionOfInterest {
    type Err = String;

    /// Accepts `Enemy #3`, `Ally #1` or `Location: Northeast` (case-insensitive).
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim().trim_matches(|c| c == '[' || c == ']').trim();
        let lower = s.to_ascii_lowercase();
        if let Some(rest) = lower.strip_prefix("location:") {
            let rest = rest.trim();
            return Heading::ALL
                .into_iter()
                .find(|h| h.label().eq_ignore_ascii_case(rest))
                .map(RegionOfInterest::Location)
                .ok_or_else(|| format!("unknown heading `{rest}`"));
        }
        for (prefix, team) in [("enemy", Team::Enemy), ("ally", Team::Ally)] {
            if let Some(rest) = lower.strip_prefix(prefix) {
                let id = rest.trim().trim_start_matches('#').trim();
                return id.parse().map(|id| RegionOfInterest::Entity { team, id }).map_err(|_| format!("bad unit id in `{s}`"));
            }
        }
        Err(format!("unrecognised region of interest `{s}`"))
    }
}

/// Everything a skill sees when choosing an action.
#[derive(Debug, Clone)]
pub struct TacticContext {
    pub obs: ObsData,
    pub shared: Vec<EntityRecord>,
    pub tables: Arc<TacticTables>,
    pub region_of_interest: Option<RegionOfInterest>,
    enemies: Vec<EntityView>,
}

impl TacticContext {
    /// Enemies known only through shared records are appended to the visible
    /// ones, positioned relative to this agent; they may lie beyond sight range.
    pub fn new(obs: ObsData, shared: Vec<EntityRecord>, tables: Arc<TacticTables>) -> Self {
        let mut enemies = obs.enemies.clone();
        if obs.alive {
            let origin = obs.own_position.scale(MAP_SIZE);
            for rec in &shared {
                if rec.key.team != Team::Enemy || enemies.iter().any(|e| e.id == rec.key.id) {
                    continue;
                }
                let position = (rec.global_pos - origin).scale(1.0 / obs.own_sight_range);
                enemies.push(EntityView {
                    id: rec.key.id,
                    unit_type: rec.unit_type,
                    position,
                    distance: position.norm(),
                    health: rec.health,
                    shield: rec.shield,
                    can_attack: obs.is_available(Action::target(rec.key.id)) && !obs.own_unit_type.is_healer(),
                    last_action: None,
                });
            }
            enemies.sort_by_key(|e| e.id);
        }
        TacticContext { obs, shared, tables, region_of_interest: None, enemies }
    }

    pub fn with_region(mut self, roi: Option<RegionOfInterest>) -> Self {
        self.region_of_interest = roi;
        self
    }

    /// Visible enemies plus those known from shared records.
    pub fn enemies(&self) -> &[EntityView] {
        &self.enemies
    }

    pub fn allies(&self) -> &[EntityView] {
        &self.obs.allies
    }
}
