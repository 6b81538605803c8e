//! Task-tree JSON:
//!
//! ```json
//! {
//!   "goal": {"name": "mac and cheese", "states": []},
//!   "functional_units": [
//!     {"inputs": [{"name": "macaroni", "states": ["cooked"]}],
//!      "motion": "mix",
//!      "outputs": [{"name": "mac and cheese", "states": []}]}
//!   ]
//! }
//! ```

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use super::model::{FoonGraph, FunctionalUnit, ObjectNode};
use super::validate::{validate_task_tree, ValidationReport};

/// Why a task-tree document was rejected. The three categories are kept
/// apart because callers route on them.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TaskTreeError {
    #[error("invalid JSON: {0}")]
    JsonSyntax(String),
    #[error("schema error: {0}")]
    Schema(String),
    #[error("structural error: {0}")]
    Structural(ValidationReport),
}

/// A goal-rooted, acyclic, connected FOON graph. Only constructible through
/// validation.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawTaskTree", into = "RawTaskTree")]
pub struct TaskTree {
    graph: FoonGraph,
    goal: ObjectNode,
}

impl TaskTree {
    pub fn new(graph: FoonGraph, goal: ObjectNode) -> Result<Self, ValidationReport> {
        let report = validate_task_tree(&graph, &goal);
        if report.ok() {
            Ok(Self { graph, goal })
        } else {
            Err(report)
        }
    }

    pub fn graph(&self) -> &FoonGraph {
        &self.graph
    }

    pub fn goal(&self) -> &ObjectNode {
        &self.goal
    }

    pub fn units(&self) -> &[FunctionalUnit] {
        &self.graph.units
    }

    pub fn into_parts(self) -> (FoonGraph, ObjectNode) {
        (self.graph, self.goal)
    }
}

#[derive(Serialize, Deserialize)]
struct RawTaskTree {
    goal: ObjectNode,
    functional_units: Vec<FunctionalUnit>,
}

impl TryFrom<RawTaskTree> for TaskTree {
    type Error = TaskTreeError;

    fn try_from(raw: RawTaskTree) -> Result<Self, Self::Error> {
        if raw.functional_units.is_empty() {
            return Err(TaskTreeError::Schema("empty task tree".into()));
        }
        for (i, unit) in raw.functional_units.iter().enumerate() {
            if unit.inputs.is_empty() {
                return Err(TaskTreeError::Schema(format!(
                    "functional_units[{i}] has no inputs"
                )));
            }
            if unit.outputs.is_empty() {
                return Err(TaskTreeError::Schema(format!(
                    "functional_units[{i}] has no outputs"
                )));
            }
        }
        TaskTree::new(FoonGraph::new(raw.functional_units), raw.goal)
            .map_err(TaskTreeError::Structural)
    }
}

impl From<TaskTree> for RawTaskTree {
    fn from(tree: TaskTree) -> Self {
        RawTaskTree {
            goal: tree.goal,
            functional_units: tree.graph.units,
        }
    }
}

/// Parses and validates a task tree.
pub fn parse_task_tree_json(source: &str) -> Result<TaskTree, TaskTreeError> {
    let value: Value =
        serde_json::from_str(source).map_err(|e| TaskTreeError::JsonSyntax(e.to_string()))?;
    let Value::Object(object) = &value else {
        return Err(TaskTreeError::Schema(
            "expected a JSON object at the top level".into(),
        ));
    };
    if let Some(Value::Array(units)) = object.get("functional_units") {
        if units.is_empty() {
            return Err(TaskTreeError::Schema("empty task tree".into()));
        }
    }
    let raw: RawTaskTree =
        serde_json::from_value(value).map_err(|e| TaskTreeError::Schema(e.to_string()))?;
    TaskTree::try_from(raw)
}

/// Pretty-printed JSON with fixed key order and a trailing newline.
pub fn serialize_task_tree_json(tree: &TaskTree) -> String {
    let mut text = serde_json::to_string_pretty(tree).expect("task trees always serialize");
    text.push('\n');
    text
}
