//! Goal-oriented composition of software process patterns.
//!
//! Patterns transform a project [`State`]; combinations of patterns (sequence,
//! parallel, conditional, loop) denote state transformers. A combination is
//! verified against a project [`Goal`] by evaluating it on the initial state
//! and testing the goal on the result. The planner searches the space allowed
//! by a composition [`Network`] for combinations that verify.

pub mod catalog;
pub mod composition;
pub mod error;
pub mod expr;
pub mod model;
pub mod network;
pub mod planner;
pub mod project;

pub use catalog::{load_catalog, Catalog, ProcessPattern, QualityModel};
pub use composition::{
    evaluate, parse_combination, render_combination, rewrite, verify, Combination, Edit, Evaluation, Trace,
    TraceEvent, VerifyReport,
};
pub use error::{Error, ParseError, Result};
pub use expr::{Expr, Goal};
pub use network::{load_network, Network, Violation, ViolationKind};
pub use planner::{enumerate_all, plan, plan_all, rank, Candidate, Limits, Ranking};
pub use project::{load_project, Project};
pub use model::{AttributeDef, Kind, MergePolicy, RelOp, Schema, State, Tolerance, Value};
