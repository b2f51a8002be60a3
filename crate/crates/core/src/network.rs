//! Composition networks: which patterns may follow each other, which may
//! appear together, and which artifacts must exist before a pattern runs.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::catalog::typing::{bind_goal, Scope};
use crate::catalog::{Catalog, ProcessPattern};
use crate::composition::{Combination, Path};
use crate::error::{Error, Result};
use crate::expr::{eval_goal, parse_goal, Goal};
use crate::model::{AttributeDef, State};

pub const WILDCARD: &str = "*";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdjacencyRule {
    pub from: String,
    pub to: String,
}

impl AdjacencyRule {
    pub fn matches(&self, from: &str, to: &str) -> bool {
        (self.from == WILDCARD || self.from == from) && (self.to == WILDCARD || self.to == to)
    }
}

/// Predicate over `left.<attr>` / `right.<attr>`, the characterizations of
/// two patterns.
#[derive(Debug, Clone, PartialEq)]
pub struct Compatibility {
    pub text: String,
    pub goal: Goal,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Network {
    pub adjacency: Vec<AdjacencyRule>,
    pub compatibility: Vec<Compatibility>,
    pub initial_artifacts: BTreeSet<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkDocument {
    #[serde(default)]
    pub adjacency: Vec<AdjacencyRule>,
    #[serde(default)]
    pub compatibility: Vec<String>,
    #[serde(default)]
    pub initial_artifacts: BTreeSet<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ViolationKind {
    Adjacency,
    Compatibility,
    ArtifactFlow,
}

impl fmt::Display for ViolationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ViolationKind::Adjacency => "adjacency",
            ViolationKind::Compatibility => "compatibility",
            ViolationKind::ArtifactFlow => "artifact_flow",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Location {
    Path(Path),
    Pair(String, String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub kind: ViolationKind,
    pub location: Location,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.location {
            Location::Path(p) => write!(f, "{} at {:?}: {}", self.kind, p, self.message),
            Location::Pair(a, b) => write!(f, "{} between {a} and {b}: {}", self.kind, self.message),
        }
    }
}

struct PairScope<'a> {
    catalog: &'a Catalog,
}

fn split_side(name: &str) -> Option<&str> {
    name.strip_prefix("left.").or_else(|| name.strip_prefix("right."))
}

impl Scope for PairScope<'_> {
    fn attribute(&self, name: &str) -> Option<&AttributeDef> {
        self.catalog.schema().get(split_side(name)?)
    }

    fn literal_fallback(&self, name: &str) -> bool {
        self.catalog.schema().is_enum_literal(name)
    }

    fn function_arity(&self, name: &str) -> Option<usize> {
        self.catalog.arity(name)
    }
}

/// Parses and validates a network JSON document against a catalog.
pub fn load_network(text: &str, catalog: &Catalog) -> Result<Network> {
    let doc: NetworkDocument =
        serde_json::from_str(text).map_err(|e| Error::InvalidDocument(e.to_string()))?;
    Network::from_document(&doc, catalog)
}

impl Network {
    pub fn from_document(doc: &NetworkDocument, catalog: &Catalog) -> Result<Network> {
        let mut problems = Vec::new();
        for (i, rule) in doc.adjacency.iter().enumerate() {
            for id in [&rule.from, &rule.to] {
                if id != WILDCARD {
                    if let Err(e) = catalog.pattern(id) {
                        problems.push(e.context(format!("adjacency rule {i}")));
                    }
                }
            }
        }
        let scope = PairScope { catalog };
        let mut compatibility = Vec::new();
        for text in &doc.compatibility {
            let bound = parse_goal(text)
                .map_err(Error::from)
                .and_then(|g| bind_goal(&g, &scope));
            match bound {
                Ok(goal) => compatibility.push(Compatibility {
                    text: text.clone(),
                    goal,
                }),
                Err(e) => problems.push(e.context(format!("compatibility `{text}`"))),
            }
        }
        Error::collect(problems)?;
        Ok(Network {
            adjacency: doc.adjacency.clone(),
            compatibility,
            initial_artifacts: doc.initial_artifacts.clone(),
        })
    }

    pub fn to_document(&self) -> NetworkDocument {
        NetworkDocument {
            adjacency: self.adjacency.clone(),
            compatibility: self.compatibility.iter().map(|c| c.text.clone()).collect(),
            initial_artifacts: self.initial_artifacts.clone(),
        }
    }

    /// Same network with extra artifacts available from the start.
    pub fn with_artifacts<I: IntoIterator<Item = String>>(&self, artifacts: I) -> Network {
        let mut out = self.clone();
        out.initial_artifacts.extend(artifacts);
        out
    }

    /// Whether `to` may directly follow `from` in a sequence.
    pub fn adjacent(&self, from: &str, to: &str) -> bool {
        self.adjacency.is_empty() || self.adjacency.iter().any(|r| r.matches(from, to))
    }

    /// First compatibility predicate that fails for the pair, in either
    /// orientation. A predicate naming an attribute one of the patterns is
    /// not characterized by does not apply to that pair.
    pub fn incompatibility(&self, catalog: &Catalog, a: &ProcessPattern, b: &ProcessPattern) -> Option<String> {
        for pred in &self.compatibility {
            for (left, right) in [(a, b), (b, a)] {
                match pair_holds(catalog, &pred.goal, left, right) {
                    Ok(true) => {}
                    Ok(false) => {
                        return Some(format!(
                            "`{}` fails with left = {}, right = {}",
                            pred.text, left.id, right.id
                        ))
                    }
                    Err(e) => return Some(format!("`{}` could not be evaluated: {e}", pred.text)),
                }
            }
        }
        None
    }

    /// Every violation of the three constraint families, in a stable order:
    /// adjacency, then compatibility, then artifact flow.
    pub fn check_combination(&self, catalog: &Catalog, comb: &Combination) -> Vec<Violation> {
        let mut out = Vec::new();
        self.check_adjacency(comb, &mut Vec::new(), &mut out);
        self.check_compatibility(catalog, comb, &mut out);
        let mut path = Vec::new();
        flow(catalog, comb, &self.initial_artifacts, &mut path, &mut out);
        out
    }

    fn check_adjacency(&self, comb: &Combination, path: &mut Path, out: &mut Vec<Violation>) {
        match comb {
            Combination::Seq(_) => {
                let mut items = Vec::new();
                linearize(comb, path, &mut items);
                for pair in items.windows(2) {
                    if let ((Combination::Atom(a), _), (Combination::Atom(b), at)) = (&pair[0], &pair[1]) {
                        if !self.adjacent(a, b) {
                            out.push(Violation {
                                kind: ViolationKind::Adjacency,
                                location: Location::Path(at.clone()),
                                message: format!("no rule allows {b} directly after {a}"),
                            });
                        }
                    }
                }
                for (item, at) in items {
                    if !matches!(item, Combination::Atom(_)) {
                        let mut at = at;
                        self.check_adjacency(item, &mut at, out);
                    }
                }
            }
            _ => {
                for (i, child) in comb.children().into_iter().enumerate() {
                    path.push(i);
                    self.check_adjacency(child, path, out);
                    path.pop();
                }
            }
        }
    }

    fn check_compatibility(&self, catalog: &Catalog, comb: &Combination, out: &mut Vec<Violation>) {
        if self.compatibility.is_empty() {
            return;
        }
        let mut ids: Vec<&str> = Vec::new();
        for id in comb.atoms() {
            if !ids.contains(&id) {
                ids.push(id);
            }
        }
        for (i, a) in ids.iter().enumerate() {
            for b in &ids[i + 1..] {
                let (Ok(pa), Ok(pb)) = (catalog.pattern(a), catalog.pattern(b)) else {
                    continue;
                };
                if let Some(message) = self.incompatibility(catalog, pa, pb) {
                    out.push(Violation {
                        kind: ViolationKind::Compatibility,
                        location: Location::Pair(a.to_string(), b.to_string()),
                        message,
                    });
                }
            }
        }
    }

    /// Patterns that may come next: adjacent to `last` (no constraint when
    /// there is none, e.g. after a `par` step), compatible with every `used`
    /// pattern and with all inputs in `available`. Sorted by id.
    pub fn successors_after(
        &self,
        catalog: &Catalog,
        last: Option<&str>,
        used: &[&str],
        available: &BTreeSet<String>,
    ) -> Vec<String> {
        let used: Vec<&ProcessPattern> = used.iter().filter_map(|id| catalog.pattern(id).ok()).collect();
        catalog
            .patterns()
            .filter(|p| last.is_none_or(|l| self.adjacent(l, &p.id)))
            .filter(|p| p.consumes.is_subset(available))
            .filter(|p| {
                used.iter()
                    .all(|u| u.id == p.id || self.incompatibility(catalog, u, p).is_none())
            })
            .map(|p| p.id.clone())
            .collect()
    }

    /// [`Network::successors_after`] with the last prefix atom as `last`.
    pub fn allowed_successors(
        &self,
        catalog: &Catalog,
        prefix_atoms: &[&str],
        available: &BTreeSet<String>,
    ) -> Vec<String> {
        self.successors_after(catalog, prefix_atoms.last().copied(), prefix_atoms, available)
    }
}

fn pair_holds(catalog: &Catalog, goal: &Goal, left: &ProcessPattern, right: &ProcessPattern) -> Result<bool> {
    let mut state = State::new();
    for name in goal.attributes() {
        let (side, attr) = match name.split_once('.') {
            Some(("left", attr)) => (left, attr),
            Some(("right", attr)) => (right, attr),
            _ => return Err(Error::UnknownAttribute(name.to_string())),
        };
        match side.characterization.get(attr) {
            Some(v) => state = state.with(&name, v.clone()),
            None => return Ok(true),
        }
    }
    eval_goal(goal, &state, &catalog.env()).map(|(v, _)| v)
}

/// Flattens nested `seq` nodes into (item, path) pairs.
fn linearize<'a>(comb: &'a Combination, path: &mut Path, out: &mut Vec<(&'a Combination, Path)>) {
    match comb {
        Combination::Seq(cs) => {
            for (i, c) in cs.iter().enumerate() {
                path.push(i);
                linearize(c, path, out);
                path.pop();
            }
        }
        _ => out.push((comb, path.clone())),
    }
}

/// Checks consumption against `available`; returns what is guaranteed to be
/// available afterwards.
fn flow(
    catalog: &Catalog,
    comb: &Combination,
    available: &BTreeSet<String>,
    path: &mut Path,
    out: &mut Vec<Violation>,
) -> BTreeSet<String> {
    match comb {
        Combination::Atom(id) => {
            let Ok(p) = catalog.pattern(id) else {
                return available.clone();
            };
            let missing: Vec<&str> = p.consumes.difference(available).map(String::as_str).collect();
            if !missing.is_empty() {
                out.push(Violation {
                    kind: ViolationKind::ArtifactFlow,
                    location: Location::Path(path.clone()),
                    message: format!("{id} consumes {} before it is produced", missing.join(", ")),
                });
            }
            available.union(&p.produces).cloned().collect()
        }
        Combination::Seq(cs) => {
            let mut now = available.clone();
            for (i, c) in cs.iter().enumerate() {
                path.push(i);
                now = flow(catalog, c, &now, path, out);
                path.pop();
            }
            now
        }
        Combination::Par(cs) => {
            let mut after = available.clone();
            for (i, c) in cs.iter().enumerate() {
                path.push(i);
                after.extend(flow(catalog, c, available, path, out));
                path.pop();
            }
            after
        }
        Combination::Cond { .. } | Combination::Iter { .. } => {
            for (i, c) in comb.children().into_iter().enumerate() {
                path.push(i);
                flow(catalog, c, available, path, out);
                path.pop();
            }
            available.clone()
        }
    }
}

impl fmt::Display for Network {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} adjacency rule(s), {} compatibility predicate(s), initial artifacts {{{}}}",
            self.adjacency.len(),
            self.compatibility.len(),
            self.initial_artifacts.iter().cloned().collect::<Vec<_>>().join(", ")
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::load_catalog;
    use crate::composition::parse_combination;
    use serde_json::json;

    const FIG2_CATALOG: &str = include_str!("../../../fixtures/fig2/catalog.json");
    const FIG2_NETWORK: &str = include_str!("../../../fixtures/fig2/network.json");
    const A_CATALOG: &str = include_str!("../../../fixtures/cluster_a/catalog.json");
    const A_NETWORK: &str = include_str!("../../../fixtures/cluster_a/network.json");
    const CASE_CATALOG: &str = include_str!("../../../fixtures/case_study/catalog.json");
    const CASE_NETWORK: &str = include_str!("../../../fixtures/case_study/network.json");

    fn load(catalog: &str, network: &str) -> (Catalog, Network) {
        let c = load_catalog(catalog).unwrap();
        let n = load_network(network, &c).unwrap();
        (c, n)
    }

    fn kinds(net: &Network, c: &Catalog, text: &str) -> Vec<ViolationKind> {
        let comb = c.parse_combination(text).unwrap();
        net.check_combination(c, &comb).into_iter().map(|v| v.kind).collect()
    }

    #[test]
    fn figure_two_is_clean() {
        let (c, n) = load(FIG2_CATALOG, FIG2_NETWORK);
        assert!(kinds(&n, &c, "seq(par(elicit_functional, elicit_nonfunctional), verify_requirements)").is_empty());
    }

    #[test]
    fn consuming_before_production() {
        let (c, n) = load(FIG2_CATALOG, FIG2_NETWORK);
        let comb = parse_combination("seq(verify_requirements, elicit_functional)").unwrap();
        let v = n.check_combination(&c, &comb);
        assert!(v.iter().any(|v| v.kind == ViolationKind::ArtifactFlow && v.location == Location::Path(vec![0])));
        assert!(v.iter().any(|v| v.kind == ViolationKind::Adjacency));
    }

    #[test]
    fn siblings_cannot_feed_each_other() {
        let (c, n) = load(FIG2_CATALOG, FIG2_NETWORK);
        assert_eq!(
            kinds(&n, &c, "par(elicit_functional, elicit_nonfunctional, verify_requirements)"),
            [ViolationKind::ArtifactFlow]
        );
    }

    #[test]
    fn conditional_productions_are_not_guaranteed() {
        let (c, _) = load(FIG2_CATALOG, FIG2_NETWORK);
        let n = Network {
            initial_artifacts: ["problem_statement".to_string()].into(),
            ..Network::default()
        };
        let text = "seq(if(effort < 10, par(elicit_functional, elicit_nonfunctional)), verify_requirements)";
        assert_eq!(kinds(&n, &c, text), [ViolationKind::ArtifactFlow]);
        let text = "seq(par(elicit_functional, elicit_nonfunctional), while(effort < 10, verify_requirements))";
        assert!(kinds(&n, &c, text).is_empty());
    }

    #[test]
    fn mixed_tools_are_incompatible() {
        let (c, n) = load(CASE_CATALOG, CASE_NETWORK);
        let v = n.check_combination(&c, &parse_combination("seq(kickoff_meeting, risk_analysis)").unwrap());
        assert_eq!(v.len(), 1, "{v:?}");
        assert_eq!(v[0].kind, ViolationKind::Compatibility);
        assert_eq!(v[0].location, Location::Pair("kickoff_meeting".into(), "risk_analysis".into()));
        assert!(v[0].message.contains("left.tool = right.tool"));
    }

    #[test]
    fn adjacency_only_between_sequence_neighbours() {
        let (c, n) = load(FIG2_CATALOG, FIG2_NETWORK);
        let n = n.with_artifacts(["functional_requirements".into(), "nonfunctional_requirements".into()]);
        assert_eq!(kinds(&n, &c, "seq(elicit_functional, elicit_nonfunctional)"), [ViolationKind::Adjacency]);
        // nested sequences are flattened
        assert_eq!(
            kinds(&n, &c, "seq(elicit_functional, seq(elicit_nonfunctional, verify_requirements))"),
            [ViolationKind::Adjacency]
        );
        assert!(kinds(&n, &c, "seq(par(elicit_nonfunctional, elicit_functional), verify_requirements)").is_empty());
        assert!(kinds(&n, &c, "seq(elicit_nonfunctional, verify_requirements)").is_empty());
    }

    #[test]
    fn successors() {
        let (c, n) = load(A_CATALOG, A_NETWORK);
        let start = n.initial_artifacts.clone();
        assert_eq!(
            n.allowed_successors(&c, &[], &start),
            ["rap_architecture_formal", "rap_architecture_lightweight"]
        );
        let mut after = start.clone();
        after.insert("rap_architecture_model".into());
        assert_eq!(
            n.allowed_successors(&c, &["rap_architecture_formal"], &after),
            ["rap_design_inspection", "rap_design_review"]
        );
    }

    #[test]
    fn successors_respect_tool_choice() {
        let (c, n) = load(CASE_CATALOG, CASE_NETWORK);
        let available = n.initial_artifacts.clone();
        let next = n.allowed_successors(&c, &["risk_analysis"], &available);
        assert!(!next.is_empty());
        for id in next {
            assert_eq!(c.pattern(&id).unwrap().characterization["tool"], "stp".into());
        }
    }

    #[test]
    fn load_errors() {
        let c = load_catalog(FIG2_CATALOG).unwrap();
        let err = load_network(&json!({"adjacency": [{"from": "x", "to": "*"}]}).to_string(), &c).unwrap_err();
        assert_eq!(err.code(), "UNKNOWN_PATTERN");
        let err = load_network(&json!({"compatibility": ["left.tool = right.tool"]}).to_string(), &c).unwrap_err();
        assert_eq!(err.code(), "UNKNOWN_ATTRIBUTE");
        let err = load_network(&json!({"compatibility": ["effort = right.effort"]}).to_string(), &c).unwrap_err();
        assert_eq!(err.code(), "UNKNOWN_ATTRIBUTE");
        let err = load_network(&json!({"compatibility": ["left.effort <"]}).to_string(), &c).unwrap_err();
        assert_eq!(err.code(), "PARSE_ERROR");
        let n = load_network(&json!({"compatibility": ["left.effort <= right.effort + 1"]}).to_string(), &c).unwrap();
        assert!(n.adjacency.is_empty());
        assert_eq!(n.to_document().compatibility, ["left.effort <= right.effort + 1"]);
    }

    #[test]
    fn single_atom_with_available_inputs() {
        let (c, n) = load(FIG2_CATALOG, FIG2_NETWORK);
        assert!(kinds(&n, &c, "elicit_functional").is_empty());
    }
}
