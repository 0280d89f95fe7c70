//! Score-expression language: lexer, parser, type checker and evaluator.
//!
//! Grammar is in `docs/score_expr.ebnf`. Precedence from tightest:
//! `^` (right-assoc), unary `-`, `* /`, `+ -`, comparisons, `not`, `and`, `or`,
//! then `if .. then .. else`.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::context::TacticContext;
use crate::geom::Vec2;
use crate::obs_text::EntityView;
use crate::world::UnitKind;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExprError {
    #[error("syntax error at {pos}: {message}")]
    Syntax { pos: usize, message: String },
    #[error("unknown identifier `{name}` at {pos}")]
    UnknownIdentifier { pos: usize, name: String },
    #[error("`{name}` at {pos} takes {expected} argument(s), got {got}")]
    Arity { pos: usize, name: String, expected: usize, got: usize },
    #[error("type error: {0}")]
    Type(String),
    #[error("parameter `${0}` is not defined")]
    MissingParam(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Subject {
    Unit,
    SelfAgent,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Field {
    Health,
    Shield,
    Distance,
    Id,
    LastAction,
    PosX,
    PosY,
    CanAttack,
    IsEnemy,
    UnitType,
    SightRange,
    ShootRange,
}

impl Field {
    fn lookup(subject: Subject, path: &str) -> Option<Field> {
        use Field::*;
        let f = match path {
            "health" => Health,
            "shield" => Shield,
            "id" => Id,
            "last_action" => LastAction,
            "position.x" => PosX,
            "position.y" => PosY,
            "unit_type" => UnitType,
            "distance" if subject == Subject::Unit => Distance,
            "can_attack" if subject == Subject::Unit => CanAttack,
            "is_enemy" if subject == Subject::Unit => IsEnemy,
            "sight_range" if subject == Subject::SelfAgent => SightRange,
            "shoot_range" if subject == Subject::SelfAgent => ShootRange,
            _ => return None,
        };
        Some(f)
    }

    fn path(self) -> &'static str {
        use Field::*;
        match self {
            Health => "health",
            Shield => "shield",
            Distance => "distance",
            Id => "id",
            LastAction => "last_action",
            PosX => "position.x",
            PosY => "position.y",
            CanAttack => "can_attack",
            IsEnemy => "is_enemy",
            UnitType => "unit_type",
            SightRange => "sight_range",
            ShootRange => "shoot_range",
        }
    }

    fn ty(self) -> Ty {
        match self {
            Field::CanAttack | Field::IsEnemy => Ty::Bool,
            Field::UnitType => Ty::Str,
            _ => Ty::Num,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Builtin {
    AlliesAttacking,
    ClusterSize,
    Priority,
    IsMelee,
    Matchup,
    Advantage,
    RangedAllyCount,
    RangedCentroidDistance,
    Min,
    Max,
    Abs,
}

impl Builtin {
    fn lookup(name: &str) -> Option<Builtin> {
        use Builtin::*;
        Some(match name {
            "allies_attacking" => AlliesAttacking,
            "cluster_size" => ClusterSize,
            "priority" => Priority,
            "is_melee" => IsMelee,
            "matchup" => Matchup,
            "advantage" => Advantage,
            "ranged_ally_count" => RangedAllyCount,
            "ranged_centroid_distance" => RangedCentroidDistance,
            "min" => Min,
            "max" => Max,
            "abs" => Abs,
            _ => return None,
        })
    }

    pub fn name(self) -> &'static str {
        use Builtin::*;
        match self {
            AlliesAttacking => "allies_attacking",
            ClusterSize => "cluster_size",
            Priority => "priority",
            IsMelee => "is_melee",
            Matchup => "matchup",
            Advantage => "advantage",
            RangedAllyCount => "ranged_ally_count",
            RangedCentroidDistance => "ranged_centroid_distance",
            Min => "min",
            Max => "max",
            Abs => "abs",
        }
    }

    fn signature(self) -> (&'static [Ty], Ty) {
        use Builtin::*;
        const E: Ty = Ty::Entity;
        const N: Ty = Ty::Num;
        match self {
            AlliesAttacking | Priority | Advantage | RangedCentroidDistance => (&[E], N),
            ClusterSize => (&[E, N], N),
            IsMelee => (&[E], Ty::Bool),
            Matchup => (&[E, E], N),
            RangedAllyCount => (&[], N),
            Min | Max => (&[N, N], N),
            Abs => (&[N], N),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
    Lt,
    Le,
    Gt,
    Ge,
    Eq,
    Ne,
    And,
    Or,
}

impl BinOp {
    fn symbol(self) -> &'static str {
        use BinOp::*;
        match self {
            Add => "+",
            Sub => "-",
            Mul => "*",
            Div => "/",
            Pow => "^",
            Lt => "<",
            Le => "<=",
            Gt => ">",
            Ge => ">=",
            Eq => "==",
            Ne => "!=",
            And => "and",
            Or => "or",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Expr {
    Num(f64),
    Bool(bool),
    Str(String),
    Param(String),
    Subject(Subject),
    Field(Subject, Field),
    Neg(Box<Expr>),
    Not(Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    If(Box<Expr>, Box<Expr>, Box<Expr>),
    Call(Builtin, Vec<Expr>),
}

impl Expr {
    /// Every `$name` referenced, sorted and deduplicated.
    pub fn params(&self) -> Vec<String> {
        let mut out = Vec::new();
        self.visit(&mut |e| {
            if let Expr::Param(p) = e {
                out.push(p.clone());
            }
        });
        out.sort();
        out.dedup();
        out
    }

    fn visit(&self, f: &mut impl FnMut(&Expr)) {
        f(self);
        match self {
            Expr::Neg(a) | Expr::Not(a) => a.visit(f),
            Expr::Binary(_, a, b) => {
                a.visit(f);
                b.visit(f);
            }
            Expr::If(c, a, b) => {
                c.visit(f);
                a.visit(f);
                b.visit(f);
            }
            Expr::Call(_, args) => args.iter().for_each(|a| a.visit(f)),
            _ => {}
        }
    }
}

impl fmt::Display for Subject {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Subject::Unit => "unit",
            Subject::SelfAgent => "self",
        })
    }
}

/// Fully parenthesized canonical form; parses back to an equal AST.
impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Num(n) => write!(f, "{n:?}"),
            Expr::Bool(b) => write!(f, "{b}"),
            Expr::Str(s) => write!(f, "\"{s}\""),
            Expr::Param(p) => write!(f, "${p}"),
            Expr::Subject(s) => write!(f, "{s}"),
            Expr::Field(s, field) => write!(f, "{s}.{}", field.path()),
            Expr::Neg(a) => write!(f, "(-{a})"),
            Expr::Not(a) => write!(f, "(not {a})"),
            Expr::Binary(op, a, b) => write!(f, "({a} {} {b})", op.symbol()),
            Expr::If(c, a, b) => write!(f, "(if {c} then {a} else {b})"),
            Expr::Call(b, args) => {
                write!(f, "{}(", b.name())?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{a}")?;
                }
                f.write_str(")")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Str(String),
    Ident(String),
    Param(String),
    Op(&'static str),
    LParen,
    RParen,
    Comma,
    Dot,
    Eof,
}

fn lex(src: &str) -> Result<Vec<(usize, Tok)>, ExprError> {
    let mut out = Vec::new();
    let chars: Vec<(usize, char)> = src.char_indices().collect();
    let mut i = 0;
    let syntax = |pos: usize, message: String| ExprError::Syntax { pos, message };
    while i < chars.len() {
        let (pos, c) = chars[i];
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        if c.is_ascii_digit() || (c == '.' && chars.get(i + 1).is_some_and(|(_, d)| d.is_ascii_digit())) {
            let start = i;
            while i < chars.len() && (chars[i].1.is_ascii_digit() || chars[i].1 == '.') {
                i += 1;
            }
            if i < chars.len() && matches!(chars[i].1, 'e' | 'E') {
                let mut j = i + 1;
                if j < chars.len() && matches!(chars[j].1, '+' | '-') {
                    j += 1;
                }
                if j < chars.len() && chars[j].1.is_ascii_digit() {
                    i = j;
                    while i < chars.len() && chars[i].1.is_ascii_digit() {
                        i += 1;
                    }
                }
            }
            let end = chars.get(i).map_or(src.len(), |c| c.0);
            let text = &src[pos..end];
            let value: f64 = text.parse().map_err(|_| syntax(chars[start].0, format!("bad number `{text}`")))?;
            out.push((pos, Tok::Num(value)));
            continue;
        }
        if c.is_alphabetic() || c == '_' || c == '$' {
            let start = if c == '$' { i + 1 } else { i };
            i = start;
            while i < chars.len() && (chars[i].1.is_alphanumeric() || chars[i].1 == '_') {
                i += 1;
            }
            let end = chars.get(i).map_or(src.len(), |c| c.0);
            let begin = chars.get(start).map_or(src.len(), |c| c.0);
            let word = src[begin..end].to_string();
            if word.is_empty() {
                return Err(syntax(pos, "expected a parameter name after `$`".into()));
            }
            out.push((pos, if c == '$' { Tok::Param(word) } else { Tok::Ident(word) }));
            continue;
        }
        if c == '"' {
            let mut j = i + 1;
            while j < chars.len() && chars[j].1 != '"' {
                j += 1;
            }
            if j == chars.len() {
                return Err(syntax(pos, "unterminated string".into()));
            }
            let text: String = chars[i + 1..j].iter().map(|c| c.1).collect();
            out.push((pos, Tok::Str(text)));
            i = j + 1;
            continue;
        }
        let next = chars.get(i + 1).map(|c| c.1);
        let (tok, len) = match (c, next) {
            ('<', Some('=')) => (Tok::Op("<="), 2),
            ('>', Some('=')) => (Tok::Op(">="), 2),
            ('=', Some('=')) => (Tok::Op("=="), 2),
            ('!', Some('=')) => (Tok::Op("!="), 2),
            ('*', Some('*')) => (Tok::Op("^"), 2),
            ('≤', _) => (Tok::Op("<="), 1),
            ('≥', _) => (Tok::Op(">="), 1),
            ('≠', _) => (Tok::Op("!="), 1),
            ('<', _) => (Tok::Op("<"), 1),
            ('>', _) => (Tok::Op(">"), 1),
            ('+', _) => (Tok::Op("+"), 1),
            ('-' | '−', _) => (Tok::Op("-"), 1),
            ('*' | '×', _) => (Tok::Op("*"), 1),
            ('/' | '÷', _) => (Tok::Op("/"), 1),
            ('^', _) => (Tok::Op("^"), 1),
            ('(', _) => (Tok::LParen, 1),
            (')', _) => (Tok::RParen, 1),
            (',', _) => (Tok::Comma, 1),
            ('.', _) => (Tok::Dot, 1),
            _ => return Err(syntax(pos, format!("unexpected character `{c}`"))),
        };
        out.push((pos, tok));
        i += len;
    }
    out.push((src.len(), Tok::Eof));
    Ok(out)
}

struct Parser {
    toks: Vec<(usize, Tok)>,
    at: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.at].1
    }

    fn pos(&self) -> usize {
        self.toks[self.at].0
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.at].1.clone();
        if self.at + 1 < self.toks.len() {
            self.at += 1;
        }
        t
    }

    fn error<T>(&self, what: &str) -> Result<T, ExprError> {
        let found = match self.peek() {
            Tok::Eof => "end of input".to_string(),
            t => format!("{t:?}"),
        };
        Err(ExprError::Syntax { pos: self.pos(), message: format!("expected {what}, found {found}") })
    }

    fn is_keyword(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Ident(w) if w == kw)
    }

    fn expect_keyword(&mut self, kw: &str) -> Result<(), ExprError> {
        if self.is_keyword(kw) {
            self.bump();
            Ok(())
        } else {
            self.error(&format!("`{kw}`"))
        }
    }

    fn expect(&mut self, tok: Tok, what: &str) -> Result<(), ExprError> {
        if *self.peek() == tok {
            self.bump();
            Ok(())
        } else {
            self.error(what)
        }
    }

    fn expr(&mut self) -> Result<Expr, ExprError> {
        if self.is_keyword("if") {
            self.bump();
            let cond = self.expr()?;
            self.expect_keyword("then")?;
            let then = self.expr()?;
            self.expect_keyword("else")?;
            let other = self.expr()?;
            return Ok(Expr::If(Box::new(cond), Box::new(then), Box::new(other)));
        }
        self.or()
    }

    fn or(&mut self) -> Result<Expr, ExprError> {
        let mut lhs = self.and()?;
        while self.is_keyword("or") {
            self.bump();
            let rhs = self.and()?;
            lhs = Expr::Binary(BinOp::Or, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn and(&mut self) -> Result<Expr, ExprError> {
        let mut lhs = self.not()?;
        while self.is_keyword("and") {
            self.bump();
            let rhs = self.not()?;
            lhs = Expr::Binary(BinOp::And, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn not(&mut self) -> Result<Expr, ExprError> {
        if self.is_keyword("not") {
            self.bump();
            return Ok(Expr::Not(Box::new(self.not()?)));
        }
        self.comparison()
    }

    fn comparison(&mut self) -> Result<Expr, ExprError> {
        let lhs = self.additive()?;
        let op = match self.peek() {
            Tok::Op("<") => BinOp::Lt,
            Tok::Op("<=") => BinOp::Le,
            Tok::Op(">") => BinOp::Gt,
            Tok::Op(">=") => BinOp::Ge,
            Tok::Op("==") => BinOp::Eq,
            Tok::Op("!=") => BinOp::Ne,
            _ => return Ok(lhs),
        };
        self.bump();
        let rhs = self.additive()?;
        Ok(Expr::Binary(op, Box::new(lhs), Box::new(rhs)))
    }

    fn additive(&mut self) -> Result<Expr, ExprError> {
        let mut lhs = self.multiplicative()?;
        loop {
            let op = match self.peek() {
                Tok::Op("+") => BinOp::Add,
                Tok::Op("-") => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.multiplicative()?;
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn multiplicative(&mut self) -> Result<Expr, ExprError> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek() {
                Tok::Op("*") => BinOp::Mul,
                Tok::Op("/") => BinOp::Div,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.unary()?;
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn unary(&mut self) -> Result<Expr, ExprError> {
        if *self.peek() == Tok::Op("-") {
            self.bump();
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ExprError> {
        let base = self.primary()?;
        if *self.peek() == Tok::Op("^") {
            self.bump();
            let exp = self.unary()?;
            return Ok(Expr::Binary(BinOp::Pow, Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn primary(&mut self) -> Result<Expr, ExprError> {
        let pos = self.pos();
        match self.bump() {
            Tok::Num(n) => Ok(Expr::Num(n)),
            Tok::Str(s) => Ok(Expr::Str(s)),
            Tok::Param(p) => Ok(Expr::Param(p)),
            Tok::LParen => {
                let inner = self.expr()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(inner)
            }
            Tok::Ident(word) => match word.as_str() {
                "true" => Ok(Expr::Bool(true)),
                "false" => Ok(Expr::Bool(false)),
                "unit" | "self" => {
                    let subject = if word == "unit" { Subject::Unit } else { Subject::SelfAgent };
                    if *self.peek() != Tok::Dot {
                        return Ok(Expr::Subject(subject));
                    }
                    let mut path = String::new();
                    while *self.peek() == Tok::Dot {
                        self.bump();
                        match self.bump() {
                            Tok::Ident(seg) => {
                                if !path.is_empty() {
                                    path.push('.');
                                }
                                path.push_str(&seg);
                            }
                            _ => {
                                self.at -= 1;
                                return self.error("a field name");
                            }
                        }
                    }
                    Field::lookup(subject, &path)
                        .map(|f| Expr::Field(subject, f))
                        .ok_or(ExprError::UnknownIdentifier { pos, name: format!("{word}.{path}") })
                }
                _ => {
                    let builtin = Builtin::lookup(&word).ok_or(ExprError::UnknownIdentifier { pos, name: word.clone() })?;
                    self.expect(Tok::LParen, "`(`")?;
                    let mut args = Vec::new();
                    if *self.peek() != Tok::RParen {
                        loop {
                            args.push(self.expr()?);
                            if *self.peek() == Tok::Comma {
                                self.bump();
                            } else {
                                break;
                            }
                        }
                    }
                    self.expect(Tok::RParen, "`)` or `,`")?;
                    let expected = builtin.signature().0.len();
                    if args.len() != expected {
                        return Err(ExprError::Arity { pos, name: word, expected, got: args.len() });
                    }
                    Ok(Expr::Call(builtin, args))
                }
            },
            _ => {
                self.at -= 1;
                self.error("an expression")
            }
        }
    }
}

pub fn parse_score_expr(text: &str) -> Result<Expr, ExprError> {
    let mut p = Parser { toks: lex(text)?, at: 0 };
    let e = p.expr()?;
    if *p.peek() != Tok::Eof {
        return p.error("end of input");
    }
    Ok(e)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Ty {
    Num,
    Bool,
    Str,
    Entity,
}

fn type_of(e: &Expr, params: &BTreeMap<String, f64>) -> Result<Ty, ExprError> {
    let want = |e: &Expr, t: Ty| -> Result<(), ExprError> {
        let got = type_of(e, params)?;
        if got == t {
            Ok(())
        } else {
            Err(ExprError::Type(format!("expected {t:?}, found {got:?} in `{e}`")))
        }
    };
    Ok(match e {
        Expr::Num(_) => Ty::Num,
        Expr::Bool(_) => Ty::Bool,
        Expr::Str(s) => {
            s.parse::<UnitKind>().map_err(|_| ExprError::Type(format!("`\"{s}\"` is not a unit type")))?;
            Ty::Str
        }
        Expr::Param(p) => {
            if !params.contains_key(p) {
                return Err(ExprError::MissingParam(p.clone()));
            }
            Ty::Num
        }
        Expr::Subject(_) => Ty::Entity,
        Expr::Field(_, f) => f.ty(),
        Expr::Neg(a) => {
            want(a, Ty::Num)?;
            Ty::Num
        }
        Expr::Not(a) => {
            want(a, Ty::Bool)?;
            Ty::Bool
        }
        Expr::Binary(op, a, b) => {
            use BinOp::*;
            match op {
                Add | Sub | Mul | Div | Pow => {
                    want(a, Ty::Num)?;
                    want(b, Ty::Num)?;
                    Ty::Num
                }
                Lt | Le | Gt | Ge => {
                    want(a, Ty::Num)?;
                    want(b, Ty::Num)?;
                    Ty::Bool
                }
                Eq | Ne => {
                    let ta = type_of(a, params)?;
                    if ta == Ty::Entity {
                        return Err(ExprError::Type(format!("cannot compare entities in `{e}`")));
                    }
                    want(b, ta)?;
                    Ty::Bool
                }
                And | Or => {
                    want(a, Ty::Bool)?;
                    want(b, Ty::Bool)?;
                    Ty::Bool
                }
            }
        }
        Expr::If(c, a, b) => {
            want(c, Ty::Bool)?;
            let ta = type_of(a, params)?;
            want(b, ta)?;
            ta
        }
        Expr::Call(builtin, args) => {
            let (sig, ret) = builtin.signature();
            for (arg, &t) in args.iter().zip(sig) {
                want(arg, t)?;
            }
            ret
        }
    })
}

/// A score expression must be numeric and only reference defined params.
pub fn check_score_expr(e: &Expr, params: &BTreeMap<String, f64>) -> Result<(), ExprError> {
    match type_of(e, params)? {
        Ty::Num => Ok(()),
        t => Err(ExprError::Type(format!("score must be a number, found {t:?}"))),
    }
}

/// The entity being scored, with its side.
#[derive(Debug, Clone, Copy)]
pub struct ScoreTarget<'a> {
    pub view: &'a EntityView,
    pub is_enemy: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EvalWarning {
    DivisionByZero,
    NonFinite,
}

#[derive(Clone, Copy)]
enum Val<'a> {
    Num(f64),
    Bool(bool),
    Str(&'a str),
    Entity(Subject),
}

struct Eval<'a> {
    ctx: &'a TacticContext,
    params: &'a BTreeMap<String, f64>,
    target: ScoreTarget<'a>,
    warnings: Vec<EvalWarning>,
}

struct EntityFacts {
    kind: UnitKind,
    pos: Vec2,
}

impl<'a> Eval<'a> {
    fn num(&mut self, e: &'a Expr) -> f64 {
        match self.eval(e) {
            Val::Num(n) => n,
            _ => unreachable!("checked expression"),
        }
    }

    fn boolean(&mut self, e: &'a Expr) -> bool {
        match self.eval(e) {
            Val::Bool(b) => b,
            _ => unreachable!("checked expression"),
        }
    }

    fn entity(&mut self, e: &'a Expr) -> Subject {
        match self.eval(e) {
            Val::Entity(s) => s,
            _ => unreachable!("checked expression"),
        }
    }

    fn facts(&self, s: Subject) -> EntityFacts {
        match s {
            Subject::Unit => EntityFacts { kind: self.target.view.unit_type, pos: self.target.view.position },
            Subject::SelfAgent => EntityFacts { kind: self.ctx.obs.own_unit_type, pos: Vec2::new(0.0, 0.0) },
        }
    }

    fn finite(&mut self, x: f64) -> f64 {
        if x.is_finite() {
            x
        } else {
            self.warnings.push(EvalWarning::NonFinite);
            0.0
        }
    }

    fn field(&self, s: Subject, f: Field) -> Val<'a> {
        let obs = &self.ctx.obs;
        let v = self.target.view;
        let last = |a: Option<crate::world::Action>| a.map_or(-1.0, |a| a.0 as f64);
        match (s, f) {
            (Subject::Unit, Field::Health) => Val::Num(v.health),
            (Subject::Unit, Field::Shield) => Val::Num(v.shield),
            (Subject::Unit, Field::Distance) => Val::Num(v.distance),
            (Subject::Unit, Field::Id) => Val::Num(v.id as f64),
            (Subject::Unit, Field::LastAction) => Val::Num(last(v.last_action)),
            (Subject::Unit, Field::PosX) => Val::Num(v.position.x),
            (Subject::Unit, Field::PosY) => Val::Num(v.position.y),
            (Subject::Unit, Field::CanAttack) => Val::Bool(v.can_attack),
            (Subject::Unit, Field::IsEnemy) => Val::Bool(self.target.is_enemy),
            (Subject::Unit, Field::UnitType) => Val::Str(v.unit_type.name()),
            (Subject::SelfAgent, Field::Health) => Val::Num(obs.own_health),
            (Subject::SelfAgent, Field::Shield) => Val::Num(obs.own_shield),
            (Subject::SelfAgent, Field::Id) => Val::Num(obs.agent_id as f64),
            (Subject::SelfAgent, Field::LastAction) => Val::Num(obs.last_action.0 as f64),
            (Subject::SelfAgent, Field::PosX) => Val::Num(0.0),
            (Subject::SelfAgent, Field::PosY) => Val::Num(0.0),
            (Subject::SelfAgent, Field::UnitType) => Val::Str(obs.own_unit_type.name()),
            (Subject::SelfAgent, Field::SightRange) => Val::Num(obs.own_sight_range),
            (Subject::SelfAgent, Field::ShootRange) => Val::Num(obs.own_shoot_range),
            _ => unreachable!("field validated at parse time"),
        }
    }

    fn eval(&mut self, e: &'a Expr) -> Val<'a> {
        match e {
            Expr::Num(n) => Val::Num(*n),
            Expr::Bool(b) => Val::Bool(*b),
            Expr::Str(s) => Val::Str(s.as_str()),
            Expr::Param(p) => Val::Num(self.params[p]),
            Expr::Subject(s) => Val::Entity(*s),
            Expr::Field(s, f) => self.field(*s, *f),
            Expr::Neg(a) => Val::Num(-self.num(a)),
            Expr::Not(a) => Val::Bool(!self.boolean(a)),
            Expr::If(c, a, b) => {
                if self.boolean(c) {
                    self.eval(a)
                } else {
                    self.eval(b)
                }
            }
            Expr::Binary(op, a, b) => self.binary(*op, a, b),
            Expr::Call(builtin, args) => self.call(*builtin, args),
        }
    }

    fn binary(&mut self, op: BinOp, a: &'a Expr, b: &'a Expr) -> Val<'a> {
        use BinOp::*;
        match op {
            And => return Val::Bool(self.boolean(a) && self.boolean(b)),
            Or => return Val::Bool(self.boolean(a) || self.boolean(b)),
            Eq | Ne => {
                let equal = match (self.eval(a), self.eval(b)) {
                    (Val::Num(x), Val::Num(y)) => x == y,
                    (Val::Bool(x), Val::Bool(y)) => x == y,
                    (Val::Str(x), Val::Str(y)) => x.eq_ignore_ascii_case(y),
                    _ => unreachable!("checked expression"),
                };
                return Val::Bool(equal == (op == Eq));
            }
            _ => {}
        }
        let x = self.num(a);
        let y = self.num(b);
        match op {
            Add => Val::Num(self.finite(x + y)),
            Sub => Val::Num(self.finite(x - y)),
            Mul => Val::Num(self.finite(x * y)),
            Div => {
                if y == 0.0 {
                    self.warnings.push(EvalWarning::DivisionByZero);
                    Val::Num(0.0)
                } else {
                    Val::Num(self.finite(x / y))
                }
            }
            Pow => Val::Num(self.finite(x.powf(y))),
            Lt => Val::Bool(x < y),
            Le => Val::Bool(x <= y),
            Gt => Val::Bool(x > y),
            Ge => Val::Bool(x >= y),
            _ => unreachable!(),
        }
    }

    fn call(&mut self, builtin: Builtin, args: &'a [Expr]) -> Val<'a> {
        use Builtin::*;
        let ctx = self.ctx;
        match builtin {
            AlliesAttacking => {
                let s = self.entity(&args[0]);
                let id = match s {
                    Subject::Unit => self.target.view.id,
                    Subject::SelfAgent => ctx.obs.agent_id,
                };
                Val::Num(allies_attacking(ctx, id) as f64)
            }
            ClusterSize => {
                let s = self.entity(&args[0]);
                let radius = self.num(&args[1]);
                let centre = self.facts(s).pos;
                let pool = if s == Subject::Unit && self.target.is_enemy { ctx.enemies() } else { &ctx.obs.allies };
                Val::Num(pool.iter().filter(|o| o.position.dist(centre) <= radius).count() as f64)
            }
            Priority => {
                let s = self.entity(&args[0]);
                Val::Num(ctx.tables.priority(self.facts(s).kind))
            }
            IsMelee => {
                let s = self.entity(&args[0]);
                Val::Bool(self.facts(s).kind.is_melee())
            }
            Matchup => {
                let a = self.entity(&args[0]);
                let b = self.entity(&args[1]);
                Val::Num(ctx.tables.matchup(self.facts(a).kind, self.facts(b).kind))
            }
            Advantage => {
                let s = self.entity(&args[0]);
                Val::Num(advantage_factor(ctx, self.facts(s).pos))
            }
            RangedAllyCount => Val::Num(ctx.obs.allies.iter().filter(|a| !a.unit_type.is_melee()).count() as f64),
            RangedCentroidDistance => {
                let s = self.entity(&args[0]);
                let pos = self.facts(s).pos;
                let c = Vec2::centroid(ctx.obs.allies.iter().filter(|a| !a.unit_type.is_melee()).map(|a| a.position));
                Val::Num(c.map_or(0.0, |c| c.dist(pos)))
            }
            Min => {
                let (x, y) = (self.num(&args[0]), self.num(&args[1]));
                Val::Num(x.min(y))
            }
            Max => {
                let (x, y) = (self.num(&args[0]), self.num(&args[1]));
                Val::Num(x.max(y))
            }
            Abs => {
                let x = self.num(&args[0]);
                Val::Num(x.abs())
            }
        }
    }
}

/// Allies whose last action was an attack on enemy `id`.
pub fn allies_attacking(ctx: &TacticContext, id: usize) -> usize {
    ctx.obs
        .allies
        .iter()
        .filter(|a| a.last_action.is_some_and(|l| l.is_targeted() && l.target_index() == Some(id)))
        .count()
}

struct CombatPower {
    power: f64,
    melee: usize,
    ranged: usize,
}

fn combat_power(ctx: &TacticContext, units: &[EntityView], at: Vec2, radius: f64) -> CombatPower {
    let mut power = 0.0;
    let (mut melee, mut ranged) = (0, 0);
    for u in units {
        let dist = u.position.dist(at);
        if dist > radius {
            continue;
        }
        let mut base = ctx.tables.priority(u.unit_type);
        if u.unit_type.is_melee() {
            melee += 1;
            if melee >= 2 {
                base *= 1.4;
            }
        } else {
            ranged += 1;
            base *= 1.3;
        }
        let health = if u.health > 0.7 {
            1.5
        } else if u.health > 0.4 {
            1.0
        } else {
            0.6
        };
        power += base * health * (1.3 - dist / radius);
    }
    let mut cohesion = 0.0;
    if units.len() > 2 {
        if let Some(c) = Vec2::centroid(units.iter().map(|u| u.position)) {
            let avg = units.iter().map(|u| u.position.dist(c)).sum::<f64>() / units.len() as f64;
            cohesion = 2.0 / (1.0 + avg / 0.3);
        }
    }
    CombatPower { power: power * (1.0 + cohesion), melee, ranged }
}

/// Local force comparison around `at`: rewards local superiority and isolated enemies.
pub fn advantage_factor(ctx: &TacticContext, at: Vec2) -> f64 {
    let allies = combat_power(ctx, &ctx.obs.allies, at, 0.5);
    let enemies = combat_power(ctx, ctx.enemies(), at, 0.5);
    let mut factor = 1.0;
    if allies.power > enemies.power * 1.3 {
        factor = 1.2;
        if allies.melee >= 3 {
            factor *= 1.2;
        }
    }
    if enemies.melee + enemies.ranged == 1 {
        factor *= 2.0;
    } else if allies.melee + allies.ranged > enemies.melee + enemies.ranged {
        factor *= 1.2;
    }
    factor
}

/// Evaluate a checked expression against one target. Never fails: division by
/// zero and non-finite intermediates become 0 and are reported as warnings.
pub fn eval_score_traced(
    expr: &Expr,
    target: ScoreTarget<'_>,
    ctx: &TacticContext,
    params: &BTreeMap<String, f64>,
) -> (f64, Vec<EvalWarning>) {
    let mut ev = Eval { ctx, params, target, warnings: Vec::new() };
    let value = ev.num(expr);
    (value, ev.warnings)
}

pub fn eval_score(expr: &Expr, target: ScoreTarget<'_>, ctx: &TacticContext, params: &BTreeMap<String, f64>) -> f64 {
    eval_score_traced(expr, target, ctx, params).0
}
