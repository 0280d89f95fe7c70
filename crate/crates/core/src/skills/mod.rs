//! Skill library: skills as data (a score expression plus a parameterized
//! control template), hashed-embedding retrieval, grid pathfinding and
//! variant synthesis.

mod context;
mod embed;
pub mod expr;
mod library;
pub mod pathfind;
mod templates;

pub use context::{Heading, RegionOfInterest, TacticContext, TacticTables};
pub use embed::{cosine, embed_text, tokenize, EMBED_DIM};
pub use expr::{check_score_expr, eval_score, eval_score_traced, parse_score_expr, EvalWarning, Expr, ExprError, ScoreTarget};
pub use library::{
    bootstrap_library, bootstrap_tables, synthesize_variant, SkillEdit, SkillFile, SkillLibrary, BOOTSTRAP_SCORE_EXPR,
};
pub use pathfind::{find_path, find_path_among};
pub use templates::execute_skill;

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::world::UnitKind;

#[derive(Debug, Error)]
pub enum SkillError {
    #[error("skill `{id}`: {source}")]
    Expr {
        id: String,
        #[source]
        source: ExprError,
    },
    #[error("skill `{id}`: template {template} needs param `{param}`")]
    MissingParam { id: String, template: ControlTemplate, param: String },
    #[error("skill `{id}`: param `{param}` is not finite")]
    BadParam { id: String, param: String },
    #[error("unknown skill `{0}`")]
    UnknownSkill(String),
    #[error("unknown control template `{0}`")]
    UnknownTemplate(String),
    #[error("skill library is empty")]
    EmptyLibrary,
    #[error("edit not applicable: {0}")]
    BadEdit(String),
    #[error("{0}: {1}")]
    Io(String, #[source] std::io::Error),
    #[error("{0}: {1}")]
    Json(String, #[source] serde_json::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ControlTemplate {
    MedivacSupport,
    MeleeEngage,
    RangedKite,
    BanelingAoe,
    DefaultCenter,
}

impl ControlTemplate {
    pub const ALL: [ControlTemplate; 5] = [
        ControlTemplate::MedivacSupport,
        ControlTemplate::MeleeEngage,
        ControlTemplate::RangedKite,
        ControlTemplate::BanelingAoe,
        ControlTemplate::DefaultCenter,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ControlTemplate::MedivacSupport => "medivac_support",
            ControlTemplate::MeleeEngage => "melee_engage",
            ControlTemplate::RangedKite => "ranged_kite",
            ControlTemplate::BanelingAoe => "baneling_aoe",
            ControlTemplate::DefaultCenter => "default_center",
        }
    }

    /// Params the template reads, with their bootstrapped values.
    pub fn default_params(self) -> BTreeMap<String, f64> {
        let gate = PI / 9.0;
        let pairs: &[(&str, f64)] = match self {
            ControlTemplate::MedivacSupport => {
                &[("heal_threshold", 0.9), ("standoff", 2.0), ("standoff_criterion", 5.0), ("bearing_gate", gate)]
            }
            ControlTemplate::MeleeEngage => &[
                ("cluster_radius", 0.2),
                ("cluster_base", 1.2),
                ("regroup_distance", 0.5),
                ("regroup_criterion", 2.0),
                ("spacing", 0.05),
                ("bearing_gate", gate),
            ],
            ControlTemplate::BanelingAoe => &[
                ("cluster_radius", 0.3),
                ("cluster_base", 1.5),
                ("regroup_distance", 0.5),
                ("regroup_criterion", 2.0),
                ("spacing", 0.1),
                ("bearing_gate", gate),
            ],
            ControlTemplate::RangedKite => &[
                ("kite_offset", 2.0),
                ("threat_offset", 1.0),
                ("threat_range", 4.0),
                ("reposition_distance", 0.9),
                ("focus_add", 0.5),
                ("safe_dist_penalty", 0.3),
                ("bearing_gate", gate),
            ],
            ControlTemplate::DefaultCenter => &[],
        };
        pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
    }

    /// Whether a unit of `kind` can sensibly run this template.
    pub fn suits(self, kind: UnitKind) -> bool {
        match self {
            ControlTemplate::MedivacSupport => kind.is_healer(),
            ControlTemplate::MeleeEngage => kind.is_melee(),
            ControlTemplate::BanelingAoe => kind == UnitKind::Baneling,
            ControlTemplate::RangedKite => !kind.is_melee() && !kind.is_healer(),
            ControlTemplate::DefaultCenter => true,
        }
    }
}

impl fmt::Display for ControlTemplate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ControlTemplate {
    type Err = SkillError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        ControlTemplate::ALL
            .into_iter()
            .find(|t| t.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| SkillError::UnknownTemplate(s.to_string()))
    }
}

/// A documented, retrievable tactic.
#[derive(Debug, Clone, PartialEq)]
pub struct Skill {
    pub skill_id: String,
    pub doc: String,
    pub embedding: Vec<f64>,
    /// Source text of `score_expr`, kept for dumps.
    pub score_source: String,
    pub score_expr: Expr,
    pub control_template: ControlTemplate,
    pub params: BTreeMap<String, f64>,
}

impl Skill {
    /// Parse, type-check and embed; fails if any referenced param is absent.
    pub fn new(
        skill_id: impl Into<String>,
        doc: impl Into<String>,
        score_source: &str,
        control_template: ControlTemplate,
        params: BTreeMap<String, f64>,
    ) -> Result<Skill, SkillError> {
        let skill_id = skill_id.into();
        let doc = doc.into();
        let wrap = |source| SkillError::Expr { id: skill_id.clone(), source };
        let score_expr = parse_score_expr(score_source).map_err(wrap)?;
        check_score_expr(&score_expr, &params).map_err(wrap)?;
        for param in control_template.default_params().keys() {
            if !params.contains_key(param) {
                return Err(SkillError::MissingParam { id: skill_id, template: control_template, param: param.clone() });
            }
        }
        if let Some((param, _)) = params.iter().find(|(_, v)| !v.is_finite()) {
            return Err(SkillError::BadParam { id: skill_id, param: param.clone() });
        }
        Ok(Skill {
            embedding: embed_text(&doc),
            skill_id,
            doc,
            score_source: score_source.to_string(),
            score_expr,
            control_template,
            params,
        })
    }

    pub fn to_file(&self) -> SkillFile {
        SkillFile {
            skill_id: self.skill_id.clone(),
            doc: self.doc.clone(),
            score_expr: self.score_source.clone(),
            control_template: self.control_template,
            params: self.params.clone(),
        }
    }
}
