//! Canonical text form of an agent's local observation.
//!
//! This is the only wire format between the simulator and skills or planner
//! prompts. The grammar is in `docs/obs_grammar.ebnf`; an alive agent renders as
//!
//! ```text
//! Agent #0 (stalker)
//! Health: 1.0000
//! Shield: 0.7500
//! Position: (0.2500, 0.5000)
//! Sight range: 9.0000
//! Shoot range: 6.0000
//! Can move North: yes
//! Can move South: yes
//! Can move East: yes
//! Can move West: no
//! Last action: 1
//! Ally #1 (zealot): distance 0.5000, position (0.3000, -0.4000), health 1.0000, shield 1.0000, can_attack: no, last_action 4
//! Enemy #2 (stalker): distance 0.6000, position (0.6000, 0.0000), health 0.5000, shield 0.0000, can_attack: yes
//! Available actions: [1, 2, 3, 4, 8]
//! ```
//!
//! and a dead agent as its header line followed by `Available actions: [0]`.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geom::{Direction, Vec2};
use crate::world::{Action, UnitKind};

/// One other unit as seen by the observer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntityView {
    pub id: usize,
    pub unit_type: UnitKind,
    /// Offset from the observer, divided by the observer's sight range.
    pub position: Vec2,
    /// Norm of `position`; below 1 for anything directly observed.
    pub distance: f64,
    pub health: f64,
    pub shield: f64,
    /// The observer's attack (or heal) action on this unit is available.
    pub can_attack: bool,
    /// Allies only.
    pub last_action: Option<Action>,
}

/// Structured local observation (`obs_data` in the skill scripts).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObsData {
    pub agent_id: usize,
    pub own_unit_type: UnitKind,
    pub alive: bool,
    /// Absolute position divided by the map size.
    pub own_position: Vec2,
    pub own_health: f64,
    pub own_shield: f64,
    pub own_sight_range: f64,
    pub own_shoot_range: f64,
    /// Indexed by [`Direction::index`].
    pub can_move: [bool; 4],
    pub last_action: Action,
    pub allies: Vec<EntityView>,
    pub enemies: Vec<EntityView>,
    pub available_actions: Vec<Action>,
}

pub type LocalObservation = ObsData;

impl ObsData {
    /// Observation of a dead agent: nothing but the no-op.
    pub fn dead(agent_id: usize, kind: UnitKind) -> Self {
        ObsData {
            agent_id,
            own_unit_type: kind,
            alive: false,
            own_position: Vec2::ZERO,
            own_health: 0.0,
            own_shield: 0.0,
            own_sight_range: 0.0,
            own_shoot_range: 0.0,
            can_move: [false; 4],
            last_action: Action::NO_OP,
            allies: Vec::new(),
            enemies: Vec::new(),
            available_actions: vec![Action::NO_OP],
        }
    }

    pub fn can_move(&self, dir: Direction) -> bool {
        self.can_move[dir.index()]
    }

    pub fn is_available(&self, action: Action) -> bool {
        self.available_actions.contains(&action)
    }

    /// Copy with every real number rounded to four decimals, i.e. what
    /// survives a trip through the text form.
    pub fn quantized(&self) -> ObsData {
        let q = quantize;
        let qv = |v: Vec2| Vec2::new(q(v.x), q(v.y));
        let qe = |e: &EntityView| EntityView {
            position: qv(e.position),
            distance: q(e.distance),
            health: q(e.health),
            shield: q(e.shield),
            ..e.clone()
        };
        ObsData {
            own_position: qv(self.own_position),
            own_health: q(self.own_health),
            own_shield: q(self.own_shield),
            own_sight_range: q(self.own_sight_range),
            own_shoot_range: q(self.own_shoot_range),
            allies: self.allies.iter().map(qe).collect(),
            enemies: self.enemies.iter().map(qe).collect(),
            ..self.clone()
        }
    }
}

/// Round to the four-decimal precision of the text form.
pub fn quantize(x: f64) -> f64 {
    let r = (x * 1e4).round() / 1e4;
    if r == 0.0 {
        0.0
    } else {
        r
    }
}

fn fmt_num(out: &mut String, x: f64) {
    // normalise -0.0000 so the text never carries a signed zero
    let q = quantize(x);
    let _ = write!(out, "{q:.4}");
}

fn yes_no(b: bool) -> &'static str {
    if b {
        "yes"
    } else {
        "no"
    }
}

/// Render the canonical text form.
pub fn render_obs(obs: &ObsData) -> String {
    let mut s = String::with_capacity(512);
    let _ = writeln!(s, "Agent #{} ({})", obs.agent_id, obs.own_unit_type);
    if obs.alive {
        s.push_str("Health: ");
        fmt_num(&mut s, obs.own_health);
        s.push_str("\nShield: ");
        fmt_num(&mut s, obs.own_shield);
        s.push_str("\nPosition: (");
        fmt_num(&mut s, obs.own_position.x);
        s.push_str(", ");
        fmt_num(&mut s, obs.own_position.y);
        s.push_str(")\nSight range: ");
        fmt_num(&mut s, obs.own_sight_range);
        s.push_str("\nShoot range: ");
        fmt_num(&mut s, obs.own_shoot_range);
        s.push('\n');
        for dir in Direction::ALL {
            let _ = writeln!(s, "Can move {}: {}", dir.label(), yes_no(obs.can_move(dir)));
        }
        let _ = writeln!(s, "Last action: {}", obs.last_action);
        for (label, list) in [("Ally", &obs.allies), ("Enemy", &obs.enemies)] {
            for e in list {
                let _ = write!(s, "{label} #{} ({}): distance ", e.id, e.unit_type);
                fmt_num(&mut s, e.distance);
                s.push_str(", position (");
                fmt_num(&mut s, e.position.x);
                s.push_str(", ");
                fmt_num(&mut s, e.position.y);
                s.push_str("), health ");
                fmt_num(&mut s, e.health);
                s.push_str(", shield ");
                fmt_num(&mut s, e.shield);
                let _ = write!(s, ", can_attack: {}", yes_no(e.can_attack));
                if let Some(a) = e.last_action {
                    let _ = write!(s, ", last_action {a}");
                }
                s.push('\n');
            }
        }
    }
    s.push_str("Available actions: [");
    for (i, a) in obs.available_actions.iter().enumerate() {
        if i > 0 {
            s.push_str(", ");
        }
        let _ = write!(s, "{a}");
    }
    s.push_str("]\n");
    s
}

#[derive(Debug, Error, PartialEq)]
#[error("line {line}: expected {expected}")]
pub struct ObsParseError {
    /// 1-based line number; one past the last line when input ended early.
    pub line: usize,
    pub expected: String,
}

/// Parse result with the number of ignored trailing lines.
#[derive(Debug, Clone, PartialEq)]
pub struct ParsedObs {
    pub data: ObsData,
    pub warnings: usize,
}

/// Strict single-line scanner. Numbers must be in canonical form
/// (`-?digits.dddd` for reals, no leading zeros for integers).
struct Cursor<'a> {
    rest: &'a str,
    line: usize,
}

impl<'a> Cursor<'a> {
    fn err<T>(&self, expected: impl Into<String>) -> Result<T, ObsParseError> {
        Err(ObsParseError { line: self.line, expected: expected.into() })
    }

    fn lit(&mut self, token: &str) -> Result<(), ObsParseError> {
        match self.rest.strip_prefix(token) {
            Some(r) => {
                self.rest = r;
                Ok(())
            }
            None => self.err(format!("`{token}`")),
        }
    }

    fn take_while(&mut self, f: impl Fn(char) -> bool) -> &'a str {
        let end = self.rest.find(|c: char| !f(c)).unwrap_or(self.rest.len());
        let (tok, rest) = self.rest.split_at(end);
        self.rest = rest;
        tok
    }

    fn int(&mut self) -> Result<u64, ObsParseError> {
        let tok = self.take_while(|c| c.is_ascii_digit());
        if tok.is_empty() || (tok.len() > 1 && tok.starts_with('0')) {
            return self.err("integer");
        }
        tok.parse().or_else(|_| self.err("integer"))
    }

    fn real(&mut self) -> Result<f64, ObsParseError> {
        let tok = self.take_while(|c| c.is_ascii_digit() || c == '.' || c == '-');
        let body = tok.strip_prefix('-').unwrap_or(tok);
        let canonical = match body.split_once('.') {
            Some((int, frac)) => {
                !int.is_empty()
                    && int.chars().all(|c| c.is_ascii_digit())
                    && !(int.len() > 1 && int.starts_with('0'))
                    && frac.len() == 4
                    && frac.chars().all(|c| c.is_ascii_digit())
            }
            None => false,
        };
        if !canonical || tok == "-0.0000" {
            return self.err("number with four decimals");
        }
        tok.parse().or_else(|_| self.err("number with four decimals"))
    }

    fn yes_no(&mut self) -> Result<bool, ObsParseError> {
        if self.rest.starts_with("yes") {
            self.rest = &self.rest[3..];
            Ok(true)
        } else if self.rest.starts_with("no") {
            self.rest = &self.rest[2..];
            Ok(false)
        } else {
            self.err("`yes` or `no`")
        }
    }

    fn unit_kind(&mut self) -> Result<UnitKind, ObsParseError> {
        let tok = self.take_while(|c| c.is_ascii_lowercase());
        match UnitKind::ALL.iter().find(|k| k.name() == tok) {
            Some(&k) => Ok(k),
            None => self.err("unit type"),
        }
    }

    fn pair(&mut self) -> Result<Vec2, ObsParseError> {
        self.lit("(")?;
        let x = self.real()?;
        self.lit(", ")?;
        let y = self.real()?;
        self.lit(")")?;
        Ok(Vec2::new(x, y))
    }

    fn end(&self) -> Result<(), ObsParseError> {
        if self.rest.is_empty() {
            Ok(())
        } else {
            self.err("end of line")
        }
    }
}

/// Parse the canonical text form.
pub fn parse_obs(text: &str) -> Result<ObsData, ObsParseError> {
    parse_obs_with_warnings(text).map(|p| p.data)
}

pub fn parse_obs_with_warnings(text: &str) -> Result<ParsedObs, ObsParseError> {
    let lines: Vec<&str> = text.lines().collect();
    let mut idx = 0usize;
    let cursor = |idx: usize| Cursor { rest: lines.get(idx).copied().unwrap_or(""), line: idx + 1 };
    let missing = |idx: usize, what: &str| ObsParseError { line: idx + 1, expected: what.to_string() };

    if lines.is_empty() {
        return Err(missing(0, "`Agent #`"));
    }
    let mut c = cursor(idx);
    c.lit("Agent #")?;
    let agent_id = c.int()? as usize;
    c.lit(" (")?;
    let kind = c.unit_kind()?;
    c.lit(")")?;
    c.end()?;
    idx += 1;

    let parse_available = |idx: usize| -> Result<Vec<Action>, ObsParseError> {
        let mut c = cursor(idx);
        if idx >= lines.len() {
            return Err(missing(idx, "`Available actions: [`"));
        }
        c.lit("Available actions: [")?;
        let mut actions = Vec::new();
        if !c.rest.starts_with(']') {
            loop {
                actions.push(Action(c.int()? as u32));
                if c.rest.starts_with(']') {
                    break;
                }
                c.lit(", ")?;
            }
        }
        c.lit("]")?;
        c.end()?;
        if actions.windows(2).any(|w| w[0] >= w[1]) {
            return c.err("strictly increasing action list");
        }
        Ok(actions)
    };

    if lines[idx].starts_with("Available actions:") {
        let available = parse_available(idx)?;
        if available != [Action::NO_OP] {
            return cursor(idx).err("`[0]` for an observation without stats");
        }
        return Ok(ParsedObs { data: ObsData::dead(agent_id, kind), warnings: lines.len() - idx - 1 });
    }

    let scalar = |idx: &mut usize, label: &str| -> Result<f64, ObsParseError> {
        let mut c = cursor(*idx);
        if *idx >= lines.len() {
            return Err(missing(*idx, &format!("`{label}`")));
        }
        c.lit(label)?;
        let v = c.real()?;
        c.end()?;
        *idx += 1;
        Ok(v)
    };
    let own_health = scalar(&mut idx, "Health: ")?;
    let own_shield = scalar(&mut idx, "Shield: ")?;
    let own_position = {
        let mut c = cursor(idx);
        c.lit("Position: ")?;
        let p = c.pair()?;
        c.end()?;
        idx += 1;
        p
    };
    let own_sight_range = scalar(&mut idx, "Sight range: ")?;
    let own_shoot_range = scalar(&mut idx, "Shoot range: ")?;
    let mut can_move = [false; 4];
    for dir in Direction::ALL {
        let mut c = cursor(idx);
        c.lit(&format!("Can move {}: ", dir.label()))?;
        can_move[dir.index()] = c.yes_no()?;
        c.end()?;
        idx += 1;
    }
    let last_action = {
        let mut c = cursor(idx);
        c.lit("Last action: ")?;
        let a = Action(c.int()? as u32);
        c.end()?;
        idx += 1;
        a
    };

    let mut allies = Vec::new();
    let mut enemies = Vec::new();
    while idx < lines.len() && !lines[idx].starts_with("Available actions:") {
        let mut c = cursor(idx);
        let is_ally = if c.rest.starts_with("Ally #") {
            if !enemies.is_empty() {
                return c.err("ally lines before enemy lines");
            }
            c.lit("Ally #")?;
            true
        } else if c.rest.starts_with("Enemy #") {
            c.lit("Enemy #")?;
            false
        } else {
            return c.err("`Ally #`, `Enemy #` or `Available actions:`");
        };
        let id = c.int()? as usize;
        c.lit(" (")?;
        let unit_type = c.unit_kind()?;
        c.lit("): distance ")?;
        let distance = c.real()?;
        c.lit(", position ")?;
        let position = c.pair()?;
        c.lit(", health ")?;
        let health = c.real()?;
        c.lit(", shield ")?;
        let shield = c.real()?;
        c.lit(", can_attack: ")?;
        let can_attack = c.yes_no()?;
        let last_action = if is_ally {
            c.lit(", last_action ")?;
            Some(Action(c.int()? as u32))
        } else {
            None
        };
        c.end()?;
        let view = EntityView { id, unit_type, position, distance, health, shield, can_attack, last_action };
        if is_ally {
            allies.push(view);
        } else {
            enemies.push(view);
        }
        idx += 1;
    }
    let available_actions = parse_available(idx)?;
    for dir in Direction::ALL {
        if can_move[dir.index()] != available_actions.contains(&Action::movement(dir)) {
            return cursor(idx).err(format!("move {} availability consistent with `Can move {}`", dir.label(), dir.label()));
        }
    }
    if available_actions.contains(&Action::NO_OP) {
        return cursor(idx).err("no `0` action for a living agent");
    }
    let warnings = lines.len() - idx - 1;
    if warnings > 0 {
        log::warn!("ignored {warnings} trailing observation line(s)");
    }
    Ok(ParsedObs {
        data: ObsData {
            agent_id,
            own_unit_type: kind,
            alive: true,
            own_position,
            own_health,
            own_shield,
            own_sight_range,
            own_shoot_range,
            can_move,
            last_action,
            allies,
            enemies,
            available_actions,
        },
        warnings,
    })
}
