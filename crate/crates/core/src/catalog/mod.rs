//! Pattern catalogs: schema, quality models and process patterns.
//!
//! A catalog is loaded from JSON, validated as a whole (every problem is
//! reported, not just the first) and immutable afterwards.

mod quality;
pub(crate) mod typing;

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::{
    eval_goal, parse_assignment, parse_expression, parse_goal, render_expression, render_goal,
    eval_expression, Env, Expr, Functions, Goal,
};
use crate::model::{is_identifier, AttributeDef, Kind, Schema, State, Tolerance, Value};

pub use quality::{eval_function, ModelBody, QualityModel};
use typing::{bind_assignment, bind_goal, SchemaScope, Scope};

/// `target := rhs`
#[derive(Debug, Clone, PartialEq)]
pub struct Transformation {
    pub target: String,
    pub rhs: Expr,
}

impl std::fmt::Display for Transformation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} := {}", self.target, render_expression(&self.rhs))
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Significance {
    #[serde(default)]
    pub usage_count: u64,
    #[serde(default)]
    pub contexts: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProcessPattern {
    pub id: String,
    pub title: String,
    pub characterization: BTreeMap<String, Value>,
    pub significance: Significance,
    pub goal: Goal,
    pub transformations: Vec<Transformation>,
    pub consumes: BTreeSet<String>,
    pub produces: BTreeSet<String>,
    pub refines: Option<String>,
}

impl ProcessPattern {
    /// Attributes assigned by this pattern, in order of first assignment.
    pub fn targets(&self) -> Vec<&str> {
        let mut out: Vec<&str> = Vec::new();
        for t in &self.transformations {
            if !out.contains(&t.target.as_str()) {
                out.push(&t.target);
            }
        }
        out
    }
}

/// Result of applying one pattern.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AtomTrace {
    pub pattern: String,
    pub before: State,
    pub after: State,
    pub goal_satisfied: bool,
}

#[derive(Debug, Clone, Default)]
pub struct Catalog {
    schema: Schema,
    functions: BTreeMap<String, QualityModel>,
    patterns: BTreeMap<String, ProcessPattern>,
    tolerance: Tolerance,
}

// ---------------------------------------------------------------------------
// File format
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CatalogDocument {
    #[serde(default)]
    pub schema: Vec<AttributeDef>,
    #[serde(default)]
    pub functions: Vec<FunctionDocument>,
    #[serde(default)]
    pub patterns: Vec<PatternDocument>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FunctionDocument {
    pub name: String,
    #[serde(default)]
    pub params: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub body: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub table: Option<Vec<(f64, f64)>>,
}

fn default_goal() -> String {
    "true".to_string()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PatternDocument {
    pub id: String,
    #[serde(default)]
    pub title: String,
    #[serde(default)]
    pub characterization: BTreeMap<String, Value>,
    #[serde(default)]
    pub significance: Significance,
    #[serde(default = "default_goal")]
    pub goal: String,
    #[serde(default)]
    pub transformations: Vec<String>,
    #[serde(default)]
    pub consumes: BTreeSet<String>,
    #[serde(default)]
    pub produces: BTreeSet<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub refines: Option<String>,
}

impl From<&ProcessPattern> for PatternDocument {
    fn from(p: &ProcessPattern) -> Self {
        Self {
            id: p.id.clone(),
            title: p.title.clone(),
            characterization: p.characterization.clone(),
            significance: p.significance.clone(),
            goal: render_goal(&p.goal),
            transformations: p.transformations.iter().map(|t| t.to_string()).collect(),
            consumes: p.consumes.clone(),
            produces: p.produces.clone(),
            refines: p.refines.clone(),
        }
    }
}

impl From<&QualityModel> for FunctionDocument {
    fn from(m: &QualityModel) -> Self {
        let (body, table) = match &m.body {
            ModelBody::Expression(e) => (Some(render_expression(e)), None),
            ModelBody::Table(points) => (None, Some(points.clone())),
        };
        Self {
            name: m.name.clone(),
            params: m.params.clone(),
            body,
            table,
        }
    }
}

/// Parses and validates a catalog JSON document.
pub fn load_catalog(text: &str) -> Result<Catalog> {
    let doc: CatalogDocument =
        serde_json::from_str(text).map_err(|e| Error::InvalidDocument(e.to_string()))?;
    Catalog::from_document(&doc)
}

struct FunctionScope<'a> {
    defs: Vec<AttributeDef>,
    arity: &'a dyn Fn(&str) -> Option<usize>,
}

impl Scope for FunctionScope<'_> {
    fn attribute(&self, name: &str) -> Option<&AttributeDef> {
        self.defs.iter().find(|d| d.name == name)
    }

    fn literal_fallback(&self, _name: &str) -> bool {
        false
    }

    fn function_arity(&self, name: &str) -> Option<usize> {
        (self.arity)(name)
    }
}

impl<'a> FunctionScope<'a> {
    fn new(params: &'a [String], arity: &'a dyn Fn(&str) -> Option<usize>) -> Self {
        Self {
            defs: params.iter().map(|p| AttributeDef::number(p)).collect(),
            arity,
        }
    }
}

fn find_recursion(functions: &BTreeMap<String, QualityModel>) -> Option<String> {
    fn calls(model: &QualityModel) -> Vec<&str> {
        let mut out = Vec::new();
        if let ModelBody::Expression(e) = &model.body {
            e.for_each_call(&mut |name, _| out.push(name));
        }
        out
    }
    // 0 = unvisited, 1 = on stack, 2 = done
    fn visit<'a>(
        name: &'a str,
        functions: &'a BTreeMap<String, QualityModel>,
        marks: &mut BTreeMap<&'a str, u8>,
    ) -> bool {
        match marks.get(name) {
            Some(1) => return true,
            Some(2) => return false,
            _ => {}
        }
        marks.insert(name, 1);
        if let Some(model) = functions.get(name) {
            for callee in calls(model) {
                if visit(callee, functions, marks) {
                    return true;
                }
            }
        }
        marks.insert(name, 2);
        false
    }
    let mut marks = BTreeMap::new();
    functions
        .keys()
        .find(|name| visit(name, functions, &mut marks))
        .cloned()
}

impl Catalog {
    pub fn from_document(doc: &CatalogDocument) -> Result<Catalog> {
        let schema = Schema::new(doc.schema.iter().cloned()).map_err(|e| e.context("schema"))?;
        let mut problems = Vec::new();

        // Functions: collect declarations first so bodies may call each other.
        let mut functions = BTreeMap::new();
        for f in &doc.functions {
            let ctx = format!("function `{}`", f.name);
            let body = match (&f.body, &f.table) {
                (Some(text), None) => parse_expression(text).map(ModelBody::Expression).map_err(Error::from),
                (None, Some(points)) => Ok(ModelBody::Table(points.clone())),
                _ => Err(Error::InvalidDocument("exactly one of `body` or `table` is required".into())),
            };
            let model = match body {
                Ok(body) => QualityModel {
                    name: f.name.clone(),
                    params: f.params.clone(),
                    body,
                },
                Err(e) => {
                    problems.push(e.context(ctx));
                    continue;
                }
            };
            if !is_identifier(&f.name) {
                problems.push(Error::InvalidDocument("name is not an identifier".into()).context(ctx));
                continue;
            }
            let mut seen = BTreeSet::new();
            if let Some(p) = f.params.iter().find(|p| !is_identifier(p) || !seen.insert(p.as_str())) {
                problems.push(
                    Error::InvalidDocument(format!("bad or repeated parameter `{p}`")).context(ctx),
                );
                continue;
            }
            if let Err(e) = model.validate_table() {
                problems.push(e.context(ctx));
                continue;
            }
            if functions.insert(f.name.clone(), model).is_some() {
                problems.push(Error::DuplicateId(f.name.clone()).context(ctx));
            }
        }
        let arities: BTreeMap<String, usize> =
            functions.iter().map(|(k, m)| (k.clone(), m.params.len())).collect();
        let arity = |name: &str| arities.get(name).copied();
        for model in functions.values() {
            if let ModelBody::Expression(body) = &model.body {
                let scope = FunctionScope::new(&model.params, &arity);
                // A body is checked like an assignment to a number.
                if let Err(e) = bind_assignment(&AttributeDef::number("result"), body, &scope) {
                    problems.push(e.context(format!("function `{}`", model.name)));
                }
            }
        }
        if let Some(name) = find_recursion(&functions) {
            problems.push(Error::RecursiveFunction(name));
        }

        let scope = SchemaScope {
            schema: &schema,
            arity: &arity,
        };
        let ids: BTreeSet<&str> = doc.patterns.iter().map(|p| p.id.as_str()).collect();
        let mut patterns = BTreeMap::new();
        for p in &doc.patterns {
            let ctx = format!("pattern `{}`", p.id);
            let before = problems.len();
            if !is_identifier(&p.id) {
                problems.push(Error::InvalidDocument("id is not an identifier".into()).context(&ctx));
            }
            for (name, value) in &p.characterization {
                let checked = schema
                    .get(name)
                    .ok_or_else(|| Error::UnknownAttribute(name.clone()))
                    .and_then(|def| def.check(value));
                if let Err(e) = checked {
                    problems.push(e.context(format!("{ctx}, characterization")));
                }
            }
            let goal = parse_goal(&p.goal)
                .map_err(Error::from)
                .and_then(|g| bind_goal(&g, &scope));
            let goal = match goal {
                Ok(g) => g,
                Err(e) => {
                    problems.push(e.context(format!("{ctx}, goal")));
                    Goal::Const(true)
                }
            };
            let mut transformations = Vec::new();
            for (i, text) in p.transformations.iter().enumerate() {
                let bound = parse_assignment(text).map_err(Error::from).and_then(|(target, rhs)| {
                    let def = schema
                        .get(&target)
                        .ok_or_else(|| Error::UnknownAttribute(target.clone()))?;
                    Ok(Transformation {
                        rhs: bind_assignment(def, &rhs, &scope)?,
                        target,
                    })
                });
                match bound {
                    Ok(t) => transformations.push(t),
                    Err(e) => problems.push(e.context(format!("{ctx}, transformation {}", i + 1))),
                }
            }
            if let Some(target) = &p.refines {
                if target == &p.id || !ids.contains(target.as_str()) {
                    problems.push(
                        Error::BadRefinesTarget {
                            pattern: p.id.clone(),
                            target: target.clone(),
                        }
                        .context(&ctx),
                    );
                }
            }
            if patterns.contains_key(&p.id) {
                problems.push(Error::DuplicateId(p.id.clone()).context(&ctx));
                continue;
            }
            if problems.len() > before {
                continue;
            }
            patterns.insert(
                p.id.clone(),
                ProcessPattern {
                    id: p.id.clone(),
                    title: p.title.clone(),
                    characterization: p.characterization.clone(),
                    significance: p.significance.clone(),
                    goal,
                    transformations,
                    consumes: p.consumes.clone(),
                    produces: p.produces.clone(),
                    refines: p.refines.clone(),
                },
            );
        }
        Error::collect(problems)?;
        Ok(Catalog {
            schema,
            functions,
            patterns,
            tolerance: Tolerance::default(),
        })
    }

    pub fn to_document(&self) -> CatalogDocument {
        CatalogDocument {
            schema: self.schema.attributes().cloned().collect(),
            functions: self.functions.values().map(FunctionDocument::from).collect(),
            patterns: self.patterns.values().map(PatternDocument::from).collect(),
        }
    }

    #[must_use]
    pub fn with_tolerance(mut self, tolerance: Tolerance) -> Self {
        self.tolerance = tolerance;
        self
    }

    pub fn tolerance(&self) -> Tolerance {
        self.tolerance
    }

    pub fn env(&self) -> Env<'_> {
        Env::new(self).with_tolerance(self.tolerance)
    }

    pub fn schema(&self) -> &Schema {
        &self.schema
    }

    pub fn pattern(&self, id: &str) -> Result<&ProcessPattern> {
        self.patterns
            .get(id)
            .ok_or_else(|| Error::UnknownPattern(id.to_string()))
    }

    /// Patterns ordered by id.
    pub fn patterns(&self) -> impl Iterator<Item = &ProcessPattern> {
        self.patterns.values()
    }

    pub fn len(&self) -> usize {
        self.patterns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.patterns.is_empty()
    }

    pub fn function(&self, name: &str) -> Option<&QualityModel> {
        self.functions.get(name)
    }

    pub fn functions(&self) -> impl Iterator<Item = &QualityModel> {
        self.functions.values()
    }

    pub(crate) fn arity(&self, name: &str) -> Option<usize> {
        self.functions.get(name).map(|m| m.params.len())
    }

    /// Resolves names in a goal against the schema and checks kinds.
    pub fn bind_goal(&self, goal: &Goal) -> Result<Goal> {
        let arity = |name: &str| self.arity(name);
        bind_goal(
            goal,
            &SchemaScope {
                schema: &self.schema,
                arity: &arity,
            },
        )
    }

    pub fn parse_goal(&self, text: &str) -> Result<Goal> {
        self.bind_goal(&parse_goal(text)?)
    }

    pub fn validate_state(&self, raw: impl IntoIterator<Item = (String, Value)>) -> Result<State> {
        self.schema.validate_state(raw)
    }

    /// Applies a pattern's transformations in order; later right-hand sides
    /// see earlier assignments.
    pub fn apply_pattern(&self, pattern: &ProcessPattern, state: &State) -> Result<(State, AtomTrace)> {
        let env = self.env();
        let mut current = state.clone();
        for t in &pattern.transformations {
            let value = eval_expression(&t.rhs, &current, &env)
                .map_err(|e| e.context(format!("pattern `{}`: {t}", pattern.id)))?;
            if let Some(def) = self.schema.get(&t.target) {
                def.check(&value)
                    .map_err(|e| e.context(format!("pattern `{}`: {t}", pattern.id)))?;
            }
            current = current.with(&t.target, value);
        }
        let (goal_satisfied, _) = eval_goal(&pattern.goal, &current, &env)
            .map_err(|e| e.context(format!("pattern `{}` goal", pattern.id)))?;
        let trace = AtomTrace {
            pattern: pattern.id.clone(),
            before: state.clone(),
            after: current.clone(),
            goal_satisfied,
        };
        Ok((current, trace))
    }

    /// Number-kind attribute definition, or a kind error.
    pub fn numeric_attribute(&self, name: &str) -> Result<&AttributeDef> {
        let def = self
            .schema
            .get(name)
            .ok_or_else(|| Error::UnknownAttribute(name.to_string()))?;
        if def.kind != Kind::Number {
            return Err(Error::TypeMismatch(format!(
                "`{name}` is a {} attribute, a number is required",
                def.kind
            )));
        }
        Ok(def)
    }
}

impl Functions for Catalog {
    fn call(&self, name: &str, args: &[f64]) -> Result<f64> {
        let model = self
            .functions
            .get(name)
            .ok_or_else(|| Error::UnknownFunction(name.to_string()))?;
        eval_function(model, args, self, self.tolerance)
    }
}
