//! Attribute schema, values and project state.
//!
//! A [`State`] is an immutable snapshot of attribute values. Every update
//! produces a new state; nothing in this crate mutates a state in place.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Kind {
    Number,
    Enum,
    Flag,
}

impl fmt::Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Kind::Number => "number",
            Kind::Enum => "enum",
            Kind::Flag => "flag",
        })
    }
}

/// How concurrent writes from parallel branches are joined.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MergePolicy {
    #[default]
    Agree,
    Additive,
    Max,
    Min,
}

impl MergePolicy {
    /// Policies whose result does not depend on the order of writes.
    pub fn is_commutative(self) -> bool {
        !matches!(self, MergePolicy::Agree)
    }
}

impl fmt::Display for MergePolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MergePolicy::Agree => "agree",
            MergePolicy::Additive => "additive",
            MergePolicy::Max => "max",
            MergePolicy::Min => "min",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttributeDef {
    pub name: String,
    pub kind: Kind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub unit: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub domain: Vec<String>,
    #[serde(default)]
    pub merge: MergePolicy,
}

impl AttributeDef {
    pub fn number(name: &str) -> Self {
        Self {
            name: name.to_string(),
            kind: Kind::Number,
            unit: None,
            domain: Vec::new(),
            merge: MergePolicy::Agree,
        }
    }

    pub fn enumeration<S: AsRef<str>>(name: &str, domain: &[S]) -> Self {
        Self {
            name: name.to_string(),
            kind: Kind::Enum,
            unit: None,
            domain: domain.iter().map(|s| s.as_ref().to_string()).collect(),
            merge: MergePolicy::Agree,
        }
    }

    pub fn flag(name: &str) -> Self {
        Self {
            name: name.to_string(),
            kind: Kind::Flag,
            unit: None,
            domain: Vec::new(),
            merge: MergePolicy::Agree,
        }
    }

    pub fn with_merge(mut self, merge: MergePolicy) -> Self {
        self.merge = merge;
        self
    }

    pub fn with_unit(mut self, unit: &str) -> Self {
        self.unit = Some(unit.to_string());
        self
    }

    fn validate(&self) -> Result<()> {
        if !is_identifier(&self.name) {
            return Err(Error::InvalidSchema(format!(
                "`{}` is not a valid identifier",
                self.name
            )));
        }
        match self.kind {
            Kind::Enum => {
                if self.domain.is_empty() {
                    return Err(Error::InvalidSchema(format!(
                        "enum attribute `{}` has an empty domain",
                        self.name
                    )));
                }
                let mut seen = std::collections::BTreeSet::new();
                for lit in &self.domain {
                    if !seen.insert(lit.as_str()) {
                        return Err(Error::InvalidSchema(format!(
                            "enum attribute `{}` repeats literal `{lit}`",
                            self.name
                        )));
                    }
                }
            }
            Kind::Number | Kind::Flag if !self.domain.is_empty() => {
                return Err(Error::InvalidSchema(format!(
                    "{} attribute `{}` cannot declare a domain",
                    self.kind, self.name
                )));
            }
            _ => {}
        }
        if self.unit.is_some() && self.kind != Kind::Number {
            return Err(Error::InvalidSchema(format!(
                "only number attributes carry units (`{}`)",
                self.name
            )));
        }
        if self.merge != MergePolicy::Agree && self.kind != Kind::Number {
            return Err(Error::InvalidSchema(format!(
                "merge policy `{}` is not legal for {} attribute `{}`",
                self.merge, self.kind, self.name
            )));
        }
        Ok(())
    }

    /// Checks that `value` has this attribute's kind (and domain, for enums).
    pub fn check(&self, value: &Value) -> Result<()> {
        match (self.kind, value) {
            (Kind::Number, Value::Number(n)) if n.is_finite() => Ok(()),
            (Kind::Number, Value::Number(_)) => Err(Error::NonFinite(self.name.clone())),
            (Kind::Flag, Value::Flag(_)) => Ok(()),
            (Kind::Enum, Value::Enum(lit)) if self.domain.contains(lit) => Ok(()),
            (Kind::Enum, Value::Enum(lit)) => Err(Error::TypeMismatch(format!(
                "`{lit}` is not in the domain of `{}` {:?}",
                self.name, self.domain
            ))),
            (kind, value) => Err(Error::TypeMismatch(format!(
                "`{}` is a {kind} attribute but got {} {value}",
                self.name,
                value.kind()
            ))),
        }
    }
}

pub fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Schema {
    attributes: BTreeMap<String, AttributeDef>,
}

impl Schema {
    pub fn new(defs: impl IntoIterator<Item = AttributeDef>) -> Result<Self> {
        let mut attributes = BTreeMap::new();
        let mut problems = Vec::new();
        for def in defs {
            if let Err(e) = def.validate() {
                problems.push(e);
                continue;
            }
            if attributes.contains_key(&def.name) {
                problems.push(Error::DuplicateId(def.name.clone()));
                continue;
            }
            attributes.insert(def.name.clone(), def);
        }
        Error::collect(problems)?;
        Ok(Self { attributes })
    }

    pub fn get(&self, name: &str) -> Option<&AttributeDef> {
        self.attributes.get(name)
    }

    pub fn attributes(&self) -> impl Iterator<Item = &AttributeDef> {
        self.attributes.values()
    }

    pub fn len(&self) -> usize {
        self.attributes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.attributes.is_empty()
    }

    /// True when `name` is a literal of at least one enum domain.
    pub fn is_enum_literal(&self, name: &str) -> bool {
        self.attributes
            .values()
            .any(|d| d.kind == Kind::Enum && d.domain.iter().any(|l| l == name))
    }

    /// Builds a [`State`] from raw values, reporting every violation.
    pub fn validate_state(&self, raw: impl IntoIterator<Item = (String, Value)>) -> Result<State> {
        let mut values = BTreeMap::new();
        let mut problems = Vec::new();
        for (name, value) in raw {
            match self.attributes.get(&name) {
                None => problems.push(Error::UnknownAttribute(name)),
                Some(def) => match def.check(&value) {
                    Ok(()) => {
                        values.insert(name, value);
                    }
                    Err(e) => problems.push(e),
                },
            }
        }
        Error::collect(problems)?;
        Ok(State { values })
    }
}

impl Serialize for Schema {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_seq(self.attributes.values())
    }
}

impl<'de> Deserialize<'de> for Schema {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let defs = Vec::<AttributeDef>::deserialize(deserializer)?;
        Schema::new(defs).map_err(serde::de::Error::custom)
    }
}

/// An attribute value. JSON maps numbers, strings and booleans onto the
/// three variants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Value {
    Number(f64),
    Flag(bool),
    Enum(String),
}

impl Value {
    pub fn kind(&self) -> Kind {
        match self {
            Value::Number(_) => Kind::Number,
            Value::Enum(_) => Kind::Enum,
            Value::Flag(_) => Kind::Flag,
        }
    }

    pub fn as_number(&self) -> Option<f64> {
        match self {
            Value::Number(n) => Some(*n),
            _ => None,
        }
    }

    pub fn enumeration(lit: &str) -> Self {
        Value::Enum(lit.to_string())
    }
}

impl From<f64> for Value {
    fn from(n: f64) -> Self {
        Value::Number(n)
    }
}

impl From<bool> for Value {
    fn from(b: bool) -> Self {
        Value::Flag(b)
    }
}

impl From<&str> for Value {
    fn from(s: &str) -> Self {
        Value::Enum(s.to_string())
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Number(n) => write!(f, "{n}"),
            Value::Enum(s) => write!(f, "'{s}'"),
            Value::Flag(b) => write!(f, "{b}"),
        }
    }
}

/// Project state: a snapshot of attribute values.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct State {
    values: BTreeMap<String, Value>,
}

impl State {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, name: &str) -> Option<&Value> {
        self.values.get(name)
    }

    /// Returns a new state with `name` bound to `value`.
    #[must_use]
    pub fn with(&self, name: &str, value: Value) -> State {
        let mut values = self.values.clone();
        values.insert(name.to_string(), value);
        State { values }
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Value)> {
        self.values.iter().map(|(k, v)| (k.as_str(), v))
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn contains(&self, name: &str) -> bool {
        self.values.contains_key(name)
    }
}

impl<K: Into<String>, V: Into<Value>> FromIterator<(K, V)> for State {
    /// Unchecked construction; use [`Schema::validate_state`] for input data.
    fn from_iter<I: IntoIterator<Item = (K, V)>>(iter: I) -> Self {
        State {
            values: iter.into_iter().map(|(k, v)| (k.into(), v.into())).collect(),
        }
    }
}

impl fmt::Display for State {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, (k, v)) in self.values.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{k}: {v}")?;
        }
        f.write_str("}")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RelOp {
    #[serde(rename = "<")]
    Lt,
    #[serde(rename = "<=")]
    Le,
    #[serde(rename = ">")]
    Gt,
    #[serde(rename = ">=")]
    Ge,
    #[serde(rename = "=")]
    Eq,
    #[serde(rename = "!=")]
    Ne,
}

impl RelOp {
    pub fn symbol(self) -> &'static str {
        match self {
            RelOp::Lt => "<",
            RelOp::Le => "<=",
            RelOp::Gt => ">",
            RelOp::Ge => ">=",
            RelOp::Eq => "=",
            RelOp::Ne => "!=",
        }
    }

    pub fn is_ordering(self) -> bool {
        matches!(self, RelOp::Lt | RelOp::Le | RelOp::Gt | RelOp::Ge)
    }
}

impl fmt::Display for RelOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

/// Numeric equality tolerance: `|a-b| <= abs + rel * max(|a|, |b|)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerance {
    pub rel: f64,
    pub abs: f64,
}

impl Default for Tolerance {
    fn default() -> Self {
        Self {
            rel: 1e-9,
            abs: 1e-12,
        }
    }
}

impl Tolerance {
    pub fn approx_eq(&self, a: f64, b: f64) -> bool {
        a == b || (a - b).abs() <= self.abs + self.rel * a.abs().max(b.abs())
    }
}

/// Compares two values of the same kind.
///
/// Ordering operators are only defined for numbers. On numbers `<` holds when
/// `a < b` and the two are not equal under the tolerance, so exactly one of
/// `<`, `=`, `>` holds for every pair.
pub fn compare(a: &Value, b: &Value, op: RelOp, tol: Tolerance) -> Result<bool> {
    let eq = match (a, b) {
        (Value::Number(x), Value::Number(y)) => {
            let eq = tol.approx_eq(*x, *y);
            return Ok(match op {
                RelOp::Eq => eq,
                RelOp::Ne => !eq,
                RelOp::Lt => !eq && x < y,
                RelOp::Le => eq || x < y,
                RelOp::Gt => !eq && x > y,
                RelOp::Ge => eq || x > y,
            });
        }
        (Value::Enum(x), Value::Enum(y)) => x == y,
        (Value::Flag(x), Value::Flag(y)) => x == y,
        _ => {
            return Err(Error::TypeMismatch(format!(
                "cannot compare {} {a} with {} {b}",
                a.kind(),
                b.kind()
            )))
        }
    };
    match op {
        RelOp::Eq => Ok(eq),
        RelOp::Ne => Ok(!eq),
        _ => Err(Error::TypeMismatch(format!(
            "`{op}` requires numbers, got {} {a} and {} {b}",
            a.kind(),
            b.kind()
        ))),
    }
}

/// Joins the writes that parallel branches made to one attribute.
///
/// `base` is the attribute's value on entry to the parallel block. Additive
/// merges sum the per-branch deltas in sorted order, so the result is
/// bit-identical for every permutation of `writes`.
pub fn merge(def: &AttributeDef, base: &Value, writes: &[Value], tol: Tolerance) -> Result<Value> {
    let first = writes
        .first()
        .ok_or_else(|| Error::TypeMismatch(format!("merge of `{}` without writes", def.name)))?;
    for w in writes {
        def.check(w)?;
    }
    let numbers = || -> Result<Vec<f64>> {
        writes
            .iter()
            .map(|w| {
                w.as_number().ok_or_else(|| {
                    Error::TypeMismatch(format!("`{}` merge needs numbers, got {w}", def.name))
                })
            })
            .collect()
    };
    let merged = match def.merge {
        MergePolicy::Agree => {
            for w in &writes[1..] {
                if !compare(first, w, RelOp::Eq, tol)? {
                    let shown: Vec<String> = writes.iter().map(Value::to_string).collect();
                    return Err(Error::ParallelWriteConflict {
                        attribute: def.name.clone(),
                        values: shown.join(", "),
                    });
                }
            }
            first.clone()
        }
        MergePolicy::Additive if writes.len() == 1 => first.clone(),
        MergePolicy::Additive => {
            let base = base.as_number().ok_or_else(|| {
                Error::TypeMismatch(format!("`{}` base value {base} is not a number", def.name))
            })?;
            let mut deltas: Vec<f64> = numbers()?.into_iter().map(|w| w - base).collect();
            deltas.sort_by(f64::total_cmp);
            Value::Number(base + deltas.iter().sum::<f64>())
        }
        MergePolicy::Max => Value::Number(
            numbers()?
                .into_iter()
                .max_by(f64::total_cmp)
                .expect("non-empty"),
        ),
        MergePolicy::Min => Value::Number(
            numbers()?
                .into_iter()
                .min_by(f64::total_cmp)
                .expect("non-empty"),
        ),
    };
    if let Value::Number(n) = merged {
        if !n.is_finite() {
            return Err(Error::NonFinite(def.name.clone()));
        }
    }
    Ok(merged)
}
