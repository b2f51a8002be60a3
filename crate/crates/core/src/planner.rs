//! Goal-oriented search over network-admissible combinations.
//!
//! The search space is sequences of steps, each step a single pattern or a
//! `par` group of distinct patterns, with no pattern used twice.
//! [`enumerate_all`] lists that space by brute force; [`plan`] expands it
//! through [`Network::successors_after`], evaluating incrementally, and keeps
//! the combinations whose final state satisfies the goal.

use std::cmp::Ordering;
use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Deserializer, Serialize};

use crate::catalog::Catalog;
use crate::composition::{evaluate, render_combination, Combination, DEFAULT_ITERATION_CAP};
use crate::error::{Error, Result};
use crate::expr::{eval_goal, Goal};
use crate::model::State;
use crate::network::Network;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Limits {
    pub max_atoms: usize,
    pub max_par_width: usize,
    pub allow_par: bool,
    pub iteration_cap: usize,
    pub max_results: usize,
}

impl Default for Limits {
    fn default() -> Self {
        Self {
            max_atoms: 6,
            max_par_width: 3,
            allow_par: true,
            iteration_cap: DEFAULT_ITERATION_CAP,
            max_results: 10,
        }
    }
}

impl Limits {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("max_atoms", self.max_atoms),
            ("max_par_width", self.max_par_width),
            ("iteration_cap", self.iteration_cap),
            ("max_results", self.max_results),
        ];
        match fields.iter().find(|(_, v)| *v == 0) {
            Some((name, _)) => Err(Error::InvalidDocument(format!("limit `{name}` must be positive"))),
            None => Ok(()),
        }
    }

    fn par_width(&self) -> usize {
        if self.allow_par {
            self.max_par_width
        } else {
            1
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    #[serde(alias = "min")]
    Minimize,
    #[serde(alias = "max")]
    Maximize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Criterion {
    pub attribute: String,
    pub direction: Direction,
}

/// Lexicographic criteria; ties go to the higher summed usage count, then
/// to the smaller combination text.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct Ranking {
    pub criteria: Vec<Criterion>,
}

impl Ranking {
    pub fn minimize(attribute: &str) -> Self {
        Ranking {
            criteria: vec![Criterion {
                attribute: attribute.to_string(),
                direction: Direction::Minimize,
            }],
        }
    }

    pub fn validate(&self, catalog: &Catalog) -> Result<()> {
        self.criteria
            .iter()
            .try_for_each(|c| catalog.numeric_attribute(&c.attribute).map(drop))
    }

    fn score(&self, state: &State) -> Result<Vec<f64>> {
        self.criteria
            .iter()
            .map(|c| {
                state.get(&c.attribute).and_then(|v| v.as_number()).ok_or_else(|| {
                    Error::TypeMismatch(format!("ranking attribute `{}` has no numeric value", c.attribute))
                })
            })
            .collect()
    }

    fn compare(&self, a: &Candidate, b: &Candidate) -> Ordering {
        for (i, c) in self.criteria.iter().enumerate() {
            let ord = a.score[i].total_cmp(&b.score[i]);
            let ord = match c.direction {
                Direction::Minimize => ord,
                Direction::Maximize => ord.reverse(),
            };
            if ord != Ordering::Equal {
                return ord;
            }
        }
        b.usage_total
            .cmp(&a.usage_total)
            .then_with(|| a.combination_text.cmp(&b.combination_text))
    }
}

/// `"min effort, max reliability"`
impl FromStr for Ranking {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        let mut criteria = Vec::new();
        for part in text.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let mut words = part.split_whitespace();
            let (Some(dir), Some(attribute), None) = (words.next(), words.next(), words.next()) else {
                return Err(Error::InvalidDocument(format!(
                    "ranking criterion `{part}` should read `min <attribute>` or `max <attribute>`"
                )));
            };
            let direction = match dir {
                "min" | "minimize" => Direction::Minimize,
                "max" | "maximize" => Direction::Maximize,
                other => return Err(Error::InvalidDocument(format!("unknown ranking direction `{other}`"))),
            };
            criteria.push(Criterion {
                attribute: attribute.to_string(),
                direction,
            });
        }
        Ok(Ranking { criteria })
    }
}

impl fmt::Display for Ranking {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .criteria
            .iter()
            .map(|c| {
                let dir = match c.direction {
                    Direction::Minimize => "min",
                    Direction::Maximize => "max",
                };
                format!("{dir} {}", c.attribute)
            })
            .collect();
        f.write_str(&parts.join(", "))
    }
}

/// Accepts `"min effort"` or a list of criteria.
impl<'de> Deserialize<'de> for Ranking {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Form {
            Text(String),
            List(Vec<Criterion>),
            Object { criteria: Vec<Criterion> },
        }
        match Form::deserialize(deserializer)? {
            Form::Text(t) => t.parse().map_err(serde::de::Error::custom),
            Form::List(criteria) | Form::Object { criteria } => Ok(Ranking { criteria }),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub combination: Combination,
    pub combination_text: String,
    pub final_state: State,
    pub score: Vec<f64>,
    pub usage_total: u64,
}

impl Candidate {
    fn new(catalog: &Catalog, combination: Combination, final_state: State, ranking: &Ranking) -> Result<Self> {
        let usage_total = combination
            .atoms()
            .iter()
            .filter_map(|id| catalog.pattern(id).ok())
            .map(|p| p.significance.usage_count)
            .sum();
        Ok(Candidate {
            combination_text: render_combination(&combination),
            score: ranking.score(&final_state)?,
            combination,
            final_state,
            usage_total,
        })
    }
}

/// Orders candidates by `ranking`, recomputing scores from final states.
pub fn rank(candidates: Vec<Candidate>, ranking: &Ranking) -> Result<Vec<Candidate>> {
    let mut out = candidates
        .into_iter()
        .map(|c| {
            Ok(Candidate {
                score: ranking.score(&c.final_state)?,
                ..c
            })
        })
        .collect::<Result<Vec<_>>>()?;
    out.sort_by(|a, b| ranking.compare(a, b));
    Ok(out)
}

type Step = Vec<String>;

fn build(steps: &[Step]) -> Combination {
    let node = |s: &Step| match s.as_slice() {
        [one] => Combination::Atom(one.clone()),
        many => Combination::Par(many.iter().cloned().map(Combination::Atom).collect()),
    };
    match steps {
        [one] => node(one),
        many => Combination::Seq(many.iter().map(node).collect()),
    }
}

/// Sorted subsets of `pool` with `min..=max` members; `keep` prunes partial
/// subsets (it must reject every superset of a rejected subset).
fn subsets(pool: &[String], min: usize, max: usize, keep: &dyn Fn(&[String]) -> bool) -> Vec<Step> {
    fn go(pool: &[String], from: usize, cur: &mut Step, min: usize, max: usize, keep: &dyn Fn(&[String]) -> bool, out: &mut Vec<Step>) {
        if cur.len() >= min {
            out.push(cur.clone());
        }
        if cur.len() == max {
            return;
        }
        for i in from..pool.len() {
            cur.push(pool[i].clone());
            if keep(cur) {
                go(pool, i + 1, cur, min, max, keep, out);
            }
            cur.pop();
        }
    }
    let mut out = Vec::new();
    go(pool, 0, &mut Vec::new(), min, max, keep, &mut out);
    out.retain(|s| !s.is_empty());
    out
}

/// Every network-valid combination in the bounded space, sorted by text.
pub fn enumerate_all(catalog: &Catalog, net: &Network, limits: &Limits) -> Vec<Combination> {
    fn grow(
        catalog: &Catalog,
        net: &Network,
        limits: &Limits,
        steps: &mut Vec<Step>,
        used: usize,
        ids: &[String],
        out: &mut Vec<Combination>,
    ) {
        let free: Vec<String> = ids
            .iter()
            .filter(|id| !steps.iter().flatten().any(|u| u == *id))
            .cloned()
            .collect();
        let room = limits.max_atoms.saturating_sub(used);
        // A group that breaks compatibility or artifact flow breaks it for
        // every superset; adjacency never applies inside a group.
        let viable = |group: &[String]| {
            let mut probe: Vec<Combination> = steps.iter().map(|s| build(std::slice::from_ref(s))).collect();
            probe.push(Combination::Par(group.iter().cloned().map(Combination::Atom).collect()));
            net.check_combination(catalog, &Combination::Seq(probe)).is_empty()
        };
        for step in subsets(&free, 1, limits.par_width().min(room), &viable) {
            let size = step.len();
            steps.push(step);
            let comb = build(steps);
            // violations only accumulate as steps are appended
            if net.check_combination(catalog, &comb).is_empty() {
                out.push(comb);
                grow(catalog, net, limits, steps, used + size, ids, out);
            }
            steps.pop();
        }
    }
    let ids: Vec<String> = catalog.patterns().map(|p| p.id.clone()).collect();
    let mut out = Vec::new();
    grow(catalog, net, limits, &mut Vec::new(), 0, &ids, &mut out);
    let mut keyed: Vec<(String, Combination)> = out.into_iter().map(|c| (render_combination(&c), c)).collect();
    keyed.sort_by(|a, b| a.0.cmp(&b.0));
    keyed.into_iter().map(|(_, c)| c).collect()
}

struct Search<'a> {
    catalog: &'a Catalog,
    net: &'a Network,
    goal: &'a Goal,
    limits: &'a Limits,
    ranking: &'a Ranking,
}

struct Node {
    steps: Vec<Step>,
    state: State,
    available: BTreeSet<String>,
}

impl Search<'_> {
    fn options(&self, node: &Node) -> Vec<Step> {
        let used: Vec<&str> = node.steps.iter().flatten().map(String::as_str).collect();
        let room = self.limits.max_atoms.saturating_sub(used.len());
        if room == 0 {
            return Vec::new();
        }
        let last = match node.steps.last().map(Vec::as_slice) {
            Some([one]) => Some(one.as_str()),
            _ => None,
        };
        let fresh = |ids: Vec<String>| -> Vec<String> {
            ids.into_iter().filter(|id| !used.contains(&id.as_str())).collect()
        };
        let mut out: Vec<Step> = fresh(self.net.successors_after(self.catalog, last, &used, &node.available))
            .into_iter()
            .map(|id| vec![id])
            .collect();
        let width = self.limits.par_width().min(room);
        if width >= 2 {
            let pool = fresh(self.net.successors_after(self.catalog, None, &used, &node.available));
            let compatible = |group: &[String]| {
                let (newest, rest) = group.split_last().expect("non-empty");
                let Ok(n) = self.catalog.pattern(newest) else { return false };
                rest.iter().all(|id| {
                    self.catalog
                        .pattern(id)
                        .is_ok_and(|p| self.net.incompatibility(self.catalog, p, n).is_none())
                })
            };
            out.extend(subsets(&pool, 2, width, &compatible));
        }
        out
    }

    /// Applies `step` to `node`; `None` when the step's parallel writes
    /// cannot be merged.
    fn advance(&self, node: &Node, step: Step) -> Result<Option<Node>> {
        let comb = build(std::slice::from_ref(&step));
        let state = match evaluate(&comb, &node.state, self.catalog, self.limits.iteration_cap) {
            Ok(ev) => ev.final_state,
            Err(e) if matches!(e.root(), Error::ParallelWriteConflict { .. }) => return Ok(None),
            Err(e) => return Err(e),
        };
        let mut available = node.available.clone();
        for id in &step {
            available.extend(self.catalog.pattern(id)?.produces.iter().cloned());
        }
        let mut steps = node.steps.clone();
        steps.push(step);
        Ok(Some(Node {
            steps,
            state,
            available,
        }))
    }

    fn visit(&self, node: Node, out: &mut Vec<Candidate>) -> Result<()> {
        let (ok, _) = eval_goal(self.goal, &node.state, &self.catalog.env())?;
        if ok {
            out.push(Candidate::new(self.catalog, build(&node.steps), node.state.clone(), self.ranking)?);
        }
        self.expand(&node, out)
    }

    fn expand(&self, node: &Node, out: &mut Vec<Candidate>) -> Result<()> {
        for step in self.options(node) {
            if let Some(next) = self.advance(node, step)? {
                self.visit(next, out)?;
            }
        }
        Ok(())
    }
}

/// Every satisfying candidate, ranked (no `max_results` truncation).
pub fn plan_all(
    catalog: &Catalog,
    net: &Network,
    state: &State,
    goal: &Goal,
    limits: &Limits,
    ranking: &Ranking,
) -> Result<Vec<Candidate>> {
    limits.validate()?;
    ranking.validate(catalog)?;
    let search = Search {
        catalog,
        net,
        goal,
        limits,
        ranking,
    };
    let root = Node {
        steps: Vec::new(),
        state: state.clone(),
        available: net.initial_artifacts.clone(),
    };
    let found: Vec<Vec<Candidate>> = search
        .options(&root)
        .into_par_iter()
        .map(|step| {
            let mut out = Vec::new();
            if let Some(next) = search.advance(&root, step)? {
                search.visit(next, &mut out)?;
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;
    let mut all: Vec<Candidate> = found.into_iter().flatten().collect();
    all.sort_by(|a, b| ranking.compare(a, b));
    Ok(all)
}

/// The best `limits.max_results` satisfying candidates.
pub fn plan(
    catalog: &Catalog,
    net: &Network,
    state: &State,
    goal: &Goal,
    limits: &Limits,
    ranking: &Ranking,
) -> Result<Vec<Candidate>> {
    let mut all = plan_all(catalog, net, state, goal, limits, ranking)?;
    all.truncate(limits.max_results);
    Ok(all)
}
