//! Project files: the initial state, the project goal and the artifacts
//! already at hand.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::catalog::Catalog;
use crate::error::{Error, Result};
use crate::expr::Goal;
use crate::model::{State, Value};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProjectDocument {
    pub state: BTreeMap<String, Value>,
    #[serde(default = "always")]
    pub goal: String,
    #[serde(default)]
    pub artifacts: BTreeSet<String>,
}

fn always() -> String {
    "true".into()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Project {
    pub state: State,
    pub goal: Goal,
    pub artifacts: BTreeSet<String>,
}

pub fn load_project(text: &str, catalog: &Catalog) -> Result<Project> {
    let doc: ProjectDocument =
        serde_json::from_str(text).map_err(|e| Error::InvalidDocument(e.to_string()))?;
    let state = catalog.validate_state(doc.state).map_err(|e| e.context("project state"));
    let goal = catalog
        .parse_goal(&doc.goal)
        .map_err(|e| e.context(format!("project goal `{}`", doc.goal)));
    match (state, goal) {
        (Ok(state), Ok(goal)) => Ok(Project {
            state,
            goal,
            artifacts: doc.artifacts,
        }),
        (Err(a), Err(b)) => Err(Error::Invalid(vec![a, b])),
        (Err(e), _) | (_, Err(e)) => Err(e),
    }
}
