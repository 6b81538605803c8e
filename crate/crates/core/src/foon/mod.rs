//! FOON data model: object and motion nodes, functional units, graphs and
//! goal-rooted task trees, with their text and JSON encodings.

mod json;
mod model;
mod retrieve;
mod text;
mod validate;

use thiserror::Error;

pub use json::{parse_task_tree_json, serialize_task_tree_json, TaskTree, TaskTreeError};
pub use model::{
    merge_graphs, normalize_name, FoonGraph, FunctionalUnit, MotionNode, NodeKey, ObjectNode,
    UnitKey,
};
pub use retrieve::{retrieve_task_tree, RetrievalError};
pub use text::{parse_foon_text, serialize_foon_text};
pub use validate::{
    derived_edges, validate_graph, validate_task_tree, Location, RuleId, ValidationReport, Vertex,
    Violation,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FoonError {
    #[error("no functional units found")]
    NoUnits,
    #[error("line {line}: expected {expected}, found {found:?}")]
    Syntax {
        line: usize,
        expected: &'static str,
        found: String,
    },
    #[error("line {line}: unit {unit} has no {side}")]
    EmptyUnit {
        line: usize,
        unit: usize,
        side: &'static str,
    },
    #[error("line {line}: unit {unit} has more than one M line")]
    DuplicateMotion { line: usize, unit: usize },
    #[error("invalid {kind} name {value:?}: {reason}")]
    InvalidName {
        kind: &'static str,
        value: String,
        reason: &'static str,
    },
    #[error("line {line}: invalid {kind} name {value:?}: {reason}")]
    InvalidNameAt {
        line: usize,
        kind: &'static str,
        value: String,
        reason: &'static str,
    },
}

impl FoonError {
    pub(crate) fn at_line(self, line: usize) -> Self {
        match self {
            FoonError::InvalidName {
                kind,
                value,
                reason,
            } => FoonError::InvalidNameAt {
                line,
                kind,
                value,
                reason,
            },
            other => other,
        }
    }
}
