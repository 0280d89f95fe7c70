use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::context::TacticTables;
use super::embed::{cosine, embed_text};
use super::{parse_score_expr, ControlTemplate, Skill, SkillError};
use crate::world::UnitKind;

/// Target score shared by the bootstrapped skills.
///
/// Enemies: type priority and matchup, closeness, support from nearby ranged
/// allies (melee only), a persistence bonus for the current target, focus
/// fire growing with the number of allies already on the target (damped for
/// zerg melee when three or more pile on), local advantage and missing health.
/// Allies: priority, missing health and closeness.
pub const BOOTSTRAP_SCORE_EXPR: &str = r#"if unit.health <= 0 then -1
else if unit.is_enemy then
    priority(unit) * matchup(self, unit)
    * max(2 - unit.distance, 0.5)
    * (if is_melee(self) and ranged_ally_count() > 0 then max(2 - ranged_centroid_distance(unit), 0.5) else 1)
    * (if unit.id == self.last_action - 6 then $persistence_bonus else 1)
    * (if allies_attacking(unit) == 0 then 1
       else if allies_attacking(unit) >= 3 and unit.id != self.last_action - 6
               and (self.unit_type == "zergling" or self.unit_type == "baneling") then $overcommit_factor
       else $focus_base ^ allies_attacking(unit))
    * advantage(unit)
    * (2 - unit.health)
else
    priority(unit) * matchup(self, unit) * (2 - unit.health) * max(2 - unit.distance, 0.5)"#;

fn score_params() -> BTreeMap<String, f64> {
    BTreeMap::from([
        ("persistence_bonus".to_string(), 2.0),
        ("focus_base".to_string(), 1.2),
        ("overcommit_factor".to_string(), 0.5),
    ])
}

/// Priority and counter tables of the bootstrapped expert skill.
pub fn bootstrap_tables() -> TacticTables {
    use UnitKind::*;
    let priority = BTreeMap::from([
        (Colossus, 35.0),
        (Stalker, 30.0),
        (Zealot, 45.0),
        (Marine, 45.0),
        (Marauder, 35.0),
        (Medivac, 30.0),
        (Hydralisk, 30.0),
        (Zergling, 35.0),
        (Baneling, 45.0),
    ]);
    let protoss = BTreeMap::from([(Colossus, 1.2), (Stalker, 1.0), (Zealot, 1.5)]);
    let terran = BTreeMap::from([(Marine, 1.5), (Medivac, 1.0), (Marauder, 1.2)]);
    let hydra = BTreeMap::from([(Hydralisk, 1.0), (Zergling, 1.2), (Baneling, 1.5)]);
    let zerg_melee = BTreeMap::from([(Hydralisk, 1.2), (Zergling, 1.5), (Baneling, 1.0)]);
    let counter = BTreeMap::from([
        (Colossus, protoss.clone()),
        (Stalker, protoss.clone()),
        (Zealot, protoss),
        (Marine, terran.clone()),
        (Marauder, terran.clone()),
        (Medivac, terran),
        (Hydralisk, hydra),
        (Zergling, zerg_melee.clone()),
        (Baneling, zerg_melee),
    ]);
    TacticTables { priority, counter }.completed()
}

const BOOTSTRAP_DOCS: [(ControlTemplate, &str); 5] = [
    (
        ControlTemplate::MedivacSupport,
        "Medivac healer support. Heal the most valuable wounded ally below ninety percent health, \
         otherwise the closest or the lowest health ally. Keep a standoff distance behind the melee \
         allies, away from the enemy centroid, and flee from enemies when no allies remain.",
    ),
    (
        ControlTemplate::MeleeEngage,
        "Melee assault for zealot and zergling. Charge the highest threat enemy, preferring clustered \
         groups and targets that allies already hit. Pursue out of reach targets with pathfinding \
         around units and regroup with other melee allies before engaging.",
    ),
    (
        ControlTemplate::RangedKite,
        "Ranged kiting for stalker, colossus, hydralisk, marine and marauder. Focus fire the target \
         shared with other allies, stay behind the melee line at a safe point, and step back from \
         melee attackers that close within four range after each shot.",
    ),
    (
        ControlTemplate::BanelingAoe,
        "Baneling splash detonation. Seek the densest enemy cluster within a wide radius and roll \
         into it so the blast catches as many enemies as possible, moving together with the swarm \
         of melee allies.",
    ),
    (
        ControlTemplate::DefaultCenter,
        "Default fallback movement. Head to the reported region of interest, a known enemy or a \
         named map location, otherwise walk to the center of the map, otherwise pick a random \
         available action.",
    ),
];

/// One JSON skill document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkillFile {
    pub skill_id: String,
    pub doc: String,
    pub score_expr: String,
    pub control_template: ControlTemplate,
    pub params: BTreeMap<String, f64>,
}

impl SkillFile {
    pub fn into_skill(self) -> Result<Skill, SkillError> {
        Skill::new(self.skill_id, self.doc, &self.score_expr, self.control_template, self.params)
    }
}

/// Registered skills keyed by id, plus the tables their expressions read.
#[derive(Debug, Clone)]
pub struct SkillLibrary {
    skills: BTreeMap<String, Skill>,
    pub tables: Arc<TacticTables>,
}

/// The five expert skills, one per control template.
pub fn bootstrap_library() -> SkillLibrary {
    let mut lib = SkillLibrary::new(bootstrap_tables());
    for (template, doc) in BOOTSTRAP_DOCS {
        let mut params = score_params();
        params.extend(template.default_params());
        let skill = Skill::new(format!("expert_{}", template.name()), doc, BOOTSTRAP_SCORE_EXPR, template, params)
            .expect("bootstrapped skill is valid");
        lib.register(skill);
    }
    lib
}

impl SkillLibrary {
    pub fn new(tables: TacticTables) -> Self {
        SkillLibrary { skills: BTreeMap::new(), tables: Arc::new(tables.completed()) }
    }

    pub fn len(&self) -> usize {
        self.skills.len()
    }

    pub fn is_empty(&self) -> bool {
        self.skills.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&Skill> {
        self.skills.get(id)
    }

    pub fn contains(&self, id: &str) -> bool {
        self.skills.contains_key(id)
    }

    pub fn iter(&self) -> impl Iterator<Item = &Skill> {
        self.skills.values()
    }

    /// Insert a validated skill; a taken id gets a numeric suffix. Returns the id used.
    pub fn register(&mut self, mut skill: Skill) -> String {
        if self.skills.contains_key(&skill.skill_id) {
            let base = skill.skill_id.clone();
            let n = (2..).find(|n| !self.skills.contains_key(&format!("{base}#{n}"))).unwrap();
            skill.skill_id = format!("{base}#{n}");
        }
        let id = skill.skill_id.clone();
        self.skills.insert(id.clone(), skill);
        id
    }

    /// Top-`k` skills by cosine similarity to `query`, ties by id.
    pub fn retrieve(&self, query: &str, k: usize) -> Result<Vec<(&Skill, f64)>, SkillError> {
        self.retrieve_where(query, k, |_| true)
    }

    /// [`retrieve`](Self::retrieve) restricted to skills accepted by `filter`.
    pub fn retrieve_where(
        &self,
        query: &str,
        k: usize,
        filter: impl Fn(&Skill) -> bool,
    ) -> Result<Vec<(&Skill, f64)>, SkillError> {
        self.retrieve_vector(&embed_text(query), k, filter)
    }

    pub fn retrieve_vector(
        &self,
        query: &[f64],
        k: usize,
        filter: impl Fn(&Skill) -> bool,
    ) -> Result<Vec<(&Skill, f64)>, SkillError> {
        if self.skills.is_empty() {
            return Err(SkillError::EmptyLibrary);
        }
        let mut ranked: Vec<(&Skill, f64)> =
            self.skills.values().filter(|s| filter(s)).map(|s| (s, cosine(query, &s.embedding))).collect();
        // ids iterate in order, so a stable sort keeps ties lexicographic
        ranked.sort_by(|a, b| b.1.total_cmp(&a.1));
        ranked.truncate(k.max(1));
        Ok(ranked)
    }

    /// Write one `<skill_id>.json` per skill plus `tables.json`.
    pub fn dump_dir(&self, dir: &Path) -> Result<usize, SkillError> {
        let io = |e| SkillError::Io(dir.display().to_string(), e);
        std::fs::create_dir_all(dir).map_err(io)?;
        for skill in self.skills.values() {
            let path = dir.join(format!("{}.json", file_stem(&skill.skill_id)));
            let text = serde_json::to_string_pretty(&skill.to_file()).expect("skill serializes");
            std::fs::write(&path, text + "\n").map_err(|e| SkillError::Io(path.display().to_string(), e))?;
        }
        let tables = serde_json::to_string_pretty(&*self.tables).expect("tables serialize");
        std::fs::write(dir.join("tables.json"), tables + "\n").map_err(io)?;
        Ok(self.skills.len())
    }

    /// Load every `*.json` skill in `dir`; `tables.json` replaces the tables
    /// when present, otherwise the bootstrapped tables are used.
    pub fn load_dir(dir: &Path) -> Result<SkillLibrary, SkillError> {
        let io = |e| SkillError::Io(dir.display().to_string(), e);
        let mut paths: Vec<_> = std::fs::read_dir(dir)
            .map_err(io)?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "json"))
            .collect();
        paths.sort();
        let mut tables = bootstrap_tables();
        let mut skills = Vec::new();
        for path in paths {
            let name = path.display().to_string();
            let text = std::fs::read_to_string(&path).map_err(|e| SkillError::Io(name.clone(), e))?;
            if path.file_name().is_some_and(|n| n == "tables.json") {
                tables = serde_json::from_str(&text).map_err(|e| SkillError::Json(name, e))?;
                continue;
            }
            let file: SkillFile = serde_json::from_str(&text).map_err(|e| SkillError::Json(name, e))?;
            skills.push(file.into_skill()?);
        }
        let mut lib = SkillLibrary::new(tables);
        for s in skills {
            lib.register(s);
        }
        Ok(lib)
    }
}

fn file_stem(id: &str) -> String {
    id.chars().map(|c| if c.is_alphanumeric() || c == '_' || c == '-' { c } else { '_' }).collect()
}

/// A concrete change to apply to a base skill.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum SkillEdit {
    /// Multiply an existing param.
    ScaleParam { name: String, factor: f64 },
    /// Overwrite an existing param.
    SetParam { name: String, value: f64 },
    /// New score expression text; may only reference existing params.
    ReplaceScore(String),
    /// Switch control template, adding any params it needs at their defaults.
    Retemplate(ControlTemplate),
}

impl SkillEdit {
    fn tag(&self) -> String {
        match self {
            SkillEdit::ScaleParam { name, factor } => format!("{name}x{factor}"),
            SkillEdit::SetParam { name, value } => format!("{name}={value}"),
            SkillEdit::ReplaceScore(text) => {
                let h = super::embed::tokenize(text).join(" ");
                format!("score{:08x}", crc(&h))
            }
            SkillEdit::Retemplate(t) => t.name().to_string(),
        }
    }
}

fn crc(s: &str) -> u32 {
    s.bytes().fold(0x811c_9dc5u32, |h, b| (h ^ b as u32).wrapping_mul(0x0100_0193))
}

/// Build (but do not register) a variant of `base` with `edit` applied.
/// Exactly the edited component changes; `directive` is appended to the doc.
pub fn synthesize_variant(base: &Skill, directive: &str, edit: &SkillEdit) -> Result<Skill, SkillError> {
    let mut params = base.params.clone();
    let mut score = base.score_source.clone();
    let mut template = base.control_template;
    match edit {
        SkillEdit::ScaleParam { name, factor } => {
            let v = params.get_mut(name).ok_or_else(|| SkillError::BadEdit(format!("no param `{name}`")))?;
            *v *= factor;
        }
        SkillEdit::SetParam { name, value } => {
            let v = params.get_mut(name).ok_or_else(|| SkillError::BadEdit(format!("no param `{name}`")))?;
            *v = *value;
        }
        SkillEdit::ReplaceScore(text) => {
            parse_score_expr(text).map_err(|source| SkillError::Expr { id: base.skill_id.clone(), source })?;
            score = text.clone();
        }
        SkillEdit::Retemplate(t) => {
            template = *t;
            for (k, v) in t.default_params() {
                params.entry(k).or_insert(v);
            }
        }
    }
    let id = format!("{}~{}", base.skill_id, edit.tag());
    let doc = format!("{}\nVariant: {}", base.doc, directive.trim());
    Skill::new(id, doc, &score, template, params)
}
