//! Denotation of a combination as a state transformer.
//!
//! * atom: apply the pattern
//! * `seq`: left-to-right function composition
//! * `par`: every branch starts from the same input; each attribute written
//!   by some branch is merged once at the join with its schema policy
//! * `if`: test the guard on the current state; a missing else is identity
//! * `while`: `[while(c, t)](s) = [if(c, seq(t, while(c, t)))](s)`, bounded
//!   by an iteration cap

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::catalog::Catalog;
use crate::error::{Error, Result};
use crate::expr::{eval_goal, Breakdown, Goal};
use crate::model::{merge, Kind, MergePolicy, State, Value};

use super::Combination;

pub const DEFAULT_ITERATION_CAP: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    Then,
    Else,
    /// Guard false and no else branch.
    Skip,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum TraceEvent {
    AtomApplied {
        pattern: String,
        before: State,
        after: State,
        goal_satisfied: bool,
    },
    ParMerged {
        attribute: String,
        policy: MergePolicy,
        branch_values: Vec<Value>,
        merged: Value,
    },
    CondTaken {
        branch: Branch,
        guard: bool,
    },
    IterCount {
        count: usize,
    },
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Trace {
    pub events: Vec<TraceEvent>,
}

impl Trace {
    /// Rebuilds the final state from the atom and merge events alone.
    pub fn replay(&self, initial: &State) -> State {
        let mut state = initial.clone();
        for event in &self.events {
            match event {
                TraceEvent::AtomApplied { after, .. } => state = after.clone(),
                TraceEvent::ParMerged {
                    attribute, merged, ..
                } => state = state.with(attribute, merged.clone()),
                TraceEvent::CondTaken { .. } | TraceEvent::IterCount { .. } => {}
            }
        }
        state
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    /// Human-readable, one line per event.
    pub fn lines(&self) -> Vec<String> {
        self.events
            .iter()
            .map(|event| match event {
                TraceEvent::AtomApplied {
                    pattern,
                    after,
                    goal_satisfied,
                    ..
                } => format!(
                    "apply {pattern} -> {after}{}",
                    if *goal_satisfied { "" } else { "  (pattern goal not met)" }
                ),
                TraceEvent::ParMerged {
                    attribute,
                    policy,
                    branch_values,
                    merged,
                } => {
                    let vals: Vec<String> = branch_values.iter().map(Value::to_string).collect();
                    format!("merge {attribute} ({policy}) [{}] -> {merged}", vals.join(", "))
                }
                TraceEvent::CondTaken { branch, guard } => {
                    format!("if: guard {guard}, {branch:?} branch").to_lowercase()
                }
                TraceEvent::IterCount { count } => format!("while: {count} iteration(s)"),
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub final_state: State,
    pub trace: Trace,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub verified: bool,
    pub final_state: State,
    pub breakdown: Breakdown,
    pub trace: Trace,
}

struct Run<'a> {
    catalog: &'a Catalog,
    cap: usize,
    events: Vec<TraceEvent>,
}

impl Run<'_> {
    fn guard(&self, guard: &Goal, state: &State) -> Result<bool> {
        eval_goal(guard, state, &self.catalog.env())
            .map(|(v, _)| v)
            .map_err(|e| e.context(format!("condition `{guard}`")))
    }

    /// Evaluates `comb`, recording every attribute assigned into `written`.
    fn eval(&mut self, comb: &Combination, state: State, written: &mut BTreeSet<String>) -> Result<State> {
        match comb {
            Combination::Atom(id) => {
                let pattern = self.catalog.pattern(id)?;
                let (after, trace) = self.catalog.apply_pattern(pattern, &state)?;
                written.extend(pattern.targets().into_iter().map(str::to_string));
                self.events.push(TraceEvent::AtomApplied {
                    pattern: trace.pattern,
                    before: trace.before,
                    after: trace.after,
                    goal_satisfied: trace.goal_satisfied,
                });
                Ok(after)
            }
            Combination::Seq(children) => children
                .iter()
                .try_fold(state, |s, child| self.eval(child, s, written)),
            Combination::Par(children) => self.par(children, state, written),
            Combination::Cond {
                guard,
                then,
                otherwise,
            } => {
                let holds = self.guard(guard, &state)?;
                let (branch, body) = match (holds, otherwise) {
                    (true, _) => (Branch::Then, Some(then.as_ref())),
                    (false, Some(e)) => (Branch::Else, Some(e.as_ref())),
                    (false, None) => (Branch::Skip, None),
                };
                self.events.push(TraceEvent::CondTaken {
                    branch,
                    guard: holds,
                });
                match body {
                    Some(body) => self.eval(body, state, written),
                    None => Ok(state),
                }
            }
            Combination::Iter { guard, body } => {
                let mut state = state;
                let mut count = 0;
                while self.guard(guard, &state)? {
                    if count == self.cap {
                        return Err(Error::IterationLimitExceeded { cap: self.cap });
                    }
                    state = self.eval(body, state, written)?;
                    count += 1;
                }
                self.events.push(TraceEvent::IterCount { count });
                Ok(state)
            }
        }
    }

    fn par(&mut self, children: &[Combination], input: State, written: &mut BTreeSet<String>) -> Result<State> {
        let mut branches = Vec::with_capacity(children.len());
        for child in children {
            let mut branch_written = BTreeSet::new();
            let out = self.eval(child, input.clone(), &mut branch_written)?;
            branches.push((out, branch_written));
        }
        let all: BTreeSet<&String> = branches.iter().flat_map(|(_, w)| w.iter()).collect();
        let mut result = input.clone();
        for attribute in all {
            let def = self
                .catalog
                .schema()
                .get(attribute)
                .ok_or_else(|| Error::UnknownAttribute(attribute.clone()))?;
            let writes: Vec<Value> = branches
                .iter()
                .filter(|(_, w)| w.contains(attribute))
                .filter_map(|(s, _)| s.get(attribute).cloned())
                .collect();
            let base = match (input.get(attribute), def.kind) {
                (Some(v), _) => v.clone(),
                (None, Kind::Number) => Value::Number(0.0),
                (None, _) => writes[0].clone(),
            };
            let merged = merge(def, &base, &writes, self.catalog.tolerance())?;
            self.events.push(TraceEvent::ParMerged {
                attribute: attribute.clone(),
                policy: def.merge,
                branch_values: writes,
                merged: merged.clone(),
            });
            result = result.with(attribute, merged);
            written.insert(attribute.clone());
        }
        Ok(result)
    }
}

/// Computes `[comb](state)` with a full trace.
pub fn evaluate(comb: &Combination, state: &State, catalog: &Catalog, iteration_cap: usize) -> Result<Evaluation> {
    let mut run = Run {
        catalog,
        cap: iteration_cap,
        events: Vec::new(),
    };
    let final_state = run.eval(comb, state.clone(), &mut BTreeSet::new())?;
    Ok(Evaluation {
        final_state,
        trace: Trace { events: run.events },
    })
}

/// Evaluates `comb` on `state` and tests `goal` on the result.
pub fn verify(
    comb: &Combination,
    state: &State,
    goal: &Goal,
    catalog: &Catalog,
    iteration_cap: usize,
) -> Result<VerifyReport> {
    let Evaluation { final_state, trace } = evaluate(comb, state, catalog, iteration_cap)?;
    let (verified, breakdown) = eval_goal(goal, &final_state, &catalog.env())?;
    Ok(VerifyReport {
        verified,
        final_state,
        breakdown,
        trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::load_catalog;
    use crate::composition::parse_combination;
    use serde_json::json;

    fn catalog() -> Catalog {
        let doc = json!({
            "schema": [
                {"name": "effort", "kind": "number", "merge": "additive"},
                {"name": "requirements_document", "kind": "enum",
                 "domain": ["incomplete", "complete", "verified"]},
                {"name": "reliability", "kind": "number", "merge": "max"}
            ],
            "patterns": [
                {"id": "elicit_functional", "transformations": [
                    "effort := effort + 250", "requirements_document := 'complete'"]},
                {"id": "elicit_nonfunctional", "transformations": [
                    "effort := effort + 204", "requirements_document := 'complete'"]},
                {"id": "verify_requirements", "goal": "requirements_document = 'verified'",
                 "transformations": ["effort := effort + 200", "requirements_document := 'verified'"]},
                {"id": "add_ten", "transformations": ["effort := effort + 10"]},
                {"id": "inspect", "transformations": ["reliability := reliability * 1.15"]},
                {"id": "noop"}
            ]
        });
        load_catalog(&doc.to_string()).unwrap()
    }

    fn start() -> State {
        [
            ("effort", Value::Number(0.0)),
            ("requirements_document", Value::from("incomplete")),
            ("reliability", Value::Number(0.8)),
        ]
        .into_iter()
        .collect()
    }

    fn run(text: &str, state: &State) -> Result<Evaluation> {
        let c = catalog();
        evaluate(&c.parse_combination(text)?, state, &c, DEFAULT_ITERATION_CAP)
    }

    #[test]
    fn figure_two() {
        let ev = run("seq(par(elicit_functional, elicit_nonfunctional), verify_requirements)", &start()).unwrap();
        assert_eq!(ev.final_state.get("effort"), Some(&Value::Number(654.0)));
        assert_eq!(ev.final_state.get("requirements_document"), Some(&Value::from("verified")));
        assert_eq!(ev.trace.replay(&start()), ev.final_state);
        let merged: Vec<&str> = ev
            .trace
            .events
            .iter()
            .filter_map(|e| match e {
                TraceEvent::ParMerged { attribute, .. } => Some(attribute.as_str()),
                _ => None,
            })
            .collect();
        assert_eq!(merged, ["effort", "requirements_document"]);
    }

    #[test]
    fn conditional_without_else_is_identity() {
        let ev = run("if(requirements_document = 'complete', verify_requirements)", &start()).unwrap();
        assert_eq!(ev.final_state, start());
        assert_eq!(
            ev.trace.events,
            [TraceEvent::CondTaken {
                branch: Branch::Skip,
                guard: false
            }]
        );
        let ev = run("if(effort > 5, add_ten, inspect)", &start()).unwrap();
        assert!(matches!(ev.trace.events[0], TraceEvent::CondTaken { branch: Branch::Else, .. }));
    }

    #[test]
    fn while_loop_counts_iterations() {
        let ev = run("while(effort < 100, add_ten)", &start()).unwrap();
        assert_eq!(ev.final_state.get("effort"), Some(&Value::Number(100.0)));
        assert_eq!(ev.trace.events.last(), Some(&TraceEvent::IterCount { count: 10 }));
    }

    #[test]
    fn iteration_cap() {
        let c = catalog();
        let comb = c.parse_combination("while(effort < 100, add_ten)").unwrap();
        assert!(evaluate(&comb, &start(), &c, 10).is_ok());
        let err = evaluate(&comb, &start(), &c, 9).unwrap_err();
        assert_eq!(err.code(), "ITERATION_LIMIT");
        let err = run("while(true, noop)", &start()).unwrap_err();
        assert_eq!(err.code(), "ITERATION_LIMIT");
    }

    #[test]
    fn conflicting_parallel_writes() {
        let err = run("par(elicit_functional, verify_requirements)", &start()).unwrap_err();
        assert_eq!(err.code(), "PARALLEL_CONFLICT");
        // equal values agree
        assert!(run("par(elicit_functional, elicit_nonfunctional)", &start()).is_ok());
    }

    #[test]
    fn max_merge_and_untouched_attributes() {
        let ev = run("par(inspect, add_ten)", &start()).unwrap();
        let r = ev.final_state.get("reliability").and_then(Value::as_number).unwrap();
        assert!((r - 0.92).abs() <= 1e-12);
        assert_eq!(ev.final_state.get("requirements_document"), Some(&Value::from("incomplete")));
    }

    #[test]
    fn verify_examples() {
        let c = catalog();
        let comb = c
            .parse_combination("seq(par(elicit_functional, elicit_nonfunctional), verify_requirements)")
            .unwrap();
        let ok = c.parse_goal("effort < 700 & requirements_document = 'verified'").unwrap();
        let tight = c.parse_goal("effort < 600 & requirements_document = 'verified'").unwrap();
        let report = verify(&comb, &start(), &ok, &c, DEFAULT_ITERATION_CAP).unwrap();
        assert!(report.verified);
        assert_eq!(report.breakdown.value, report.verified);
        assert!(!verify(&comb, &start(), &tight, &c, DEFAULT_ITERATION_CAP).unwrap().verified);
        let noop = parse_combination("noop").unwrap();
        let t = c.parse_goal("true").unwrap();
        assert!(verify(&noop, &start(), &t, &c, DEFAULT_ITERATION_CAP).unwrap().verified);
    }

    #[test]
    fn pattern_goal_recorded_per_application() {
        let ev = run("seq(elicit_functional, verify_requirements)", &start()).unwrap();
        let flags: Vec<bool> = ev
            .trace
            .events
            .iter()
            .filter_map(|e| match e {
                TraceEvent::AtomApplied { goal_satisfied, .. } => Some(*goal_satisfied),
                _ => None,
            })
            .collect();
        assert_eq!(flags, [true, true]);
        assert_eq!(ev.trace.lines().len(), 2);
    }
}
