//! Structural checks over FOON graphs and task trees. Violations are data:
//! the validator always returns a full report rather than stopping at the
//! first problem.

use std::collections::{BTreeSet, VecDeque};
use std::fmt;

use petgraph::algo::tarjan_scc;
use petgraph::graph::DiGraph;
use serde::{Deserialize, Serialize};

use super::model::{FoonGraph, NodeKey, ObjectNode};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RuleId {
    Bipartite,
    Arity,
    NoOpUnit,
    Cycle,
    Goal,
    Disconnected,
}

impl RuleId {
    pub fn as_str(self) -> &'static str {
        match self {
            RuleId::Bipartite => "bipartite",
            RuleId::Arity => "arity",
            RuleId::NoOpUnit => "no-op-unit",
            RuleId::Cycle => "cycle",
            RuleId::Goal => "goal",
            RuleId::Disconnected => "disconnected",
        }
    }
}

impl fmt::Display for RuleId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Where a violation was found. Unit indices are zero-based.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Location {
    Unit(usize),
    Units(Vec<usize>),
    Node(String),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub rule: RuleId,
    pub message: String,
    pub location: Option<Location>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    ok: bool,
    violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn from_violations(violations: Vec<Violation>) -> Self {
        Self {
            ok: violations.is_empty(),
            violations,
        }
    }

    pub fn ok(&self) -> bool {
        self.ok
    }

    pub fn violations(&self) -> &[Violation] {
        &self.violations
    }

    pub fn has(&self, rule: RuleId) -> bool {
        self.violations.iter().any(|v| v.rule == rule)
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.ok {
            return f.write_str("ok");
        }
        for (i, v) in self.violations.iter().enumerate() {
            if i > 0 {
                f.write_str("; ")?;
            }
            write!(f, "{}: {}", v.rule, v.message)?;
        }
        Ok(())
    }
}

/// A vertex of the bipartite object/motion graph. Motions are identified by
/// the index of the unit that owns them.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Vertex {
    Object(NodeKey),
    Motion(usize),
}

/// The directed edge set implied by the units: input object -> motion ->
/// output object.
pub fn derived_edges(graph: &FoonGraph) -> Vec<(Vertex, Vertex)> {
    let mut edges = Vec::new();
    for (i, unit) in graph.units.iter().enumerate() {
        for input in &unit.inputs {
            edges.push((Vertex::Object(input.key()), Vertex::Motion(i)));
        }
        for output in &unit.outputs {
            edges.push((Vertex::Motion(i), Vertex::Object(output.key())));
        }
    }
    edges
}

fn violation(rule: RuleId, message: String, location: Option<Location>) -> Violation {
    Violation {
        rule,
        message,
        location,
    }
}

fn check_units(graph: &FoonGraph, out: &mut Vec<Violation>) {
    for (from, to) in derived_edges(graph) {
        let mixed = matches!(
            (&from, &to),
            (Vertex::Object(_), Vertex::Motion(_)) | (Vertex::Motion(_), Vertex::Object(_))
        );
        if !mixed {
            out.push(violation(
                RuleId::Bipartite,
                format!("edge {from:?} -> {to:?} does not join an object and a motion"),
                None,
            ));
        }
    }

    for (i, unit) in graph.units.iter().enumerate() {
        if unit.inputs.is_empty() {
            out.push(violation(
                RuleId::Arity,
                format!("unit {i} ({}) has no input objects", unit.motion),
                Some(Location::Unit(i)),
            ));
        }
        if unit.outputs.is_empty() {
            out.push(violation(
                RuleId::Arity,
                format!("unit {i} ({}) has no output objects", unit.motion),
                Some(Location::Unit(i)),
            ));
        }
        if let Some(same) = unit
            .outputs
            .iter()
            .find(|o| unit.inputs.iter().any(|i| i.same_node(o)))
        {
            out.push(violation(
                RuleId::NoOpUnit,
                format!(
                    "unit {i} ({}) outputs {same} unchanged from its inputs",
                    unit.motion
                ),
                Some(Location::Unit(i)),
            ));
        }
    }
}

/// Groups of units (each of size two or more) that form a dependency cycle.
/// Self-dependencies are reported as no-op units instead.
fn unit_cycles(graph: &FoonGraph) -> Vec<Vec<usize>> {
    let mut deps: DiGraph<usize, ()> = DiGraph::new();
    let nodes: Vec<_> = (0..graph.len()).map(|i| deps.add_node(i)).collect();
    for (a, producer) in graph.units.iter().enumerate() {
        for (b, consumer) in graph.units.iter().enumerate() {
            if a != b && producer.outputs.iter().any(|o| consumer.consumes(&o.key())) {
                deps.add_edge(nodes[a], nodes[b], ());
            }
        }
    }
    let mut cycles: Vec<Vec<usize>> = tarjan_scc(&deps)
        .into_iter()
        .filter(|scc| scc.len() > 1)
        .map(|scc| {
            let mut units: Vec<usize> = scc.into_iter().map(|n| deps[n]).collect();
            units.sort_unstable();
            units
        })
        .collect();
    cycles.sort();
    cycles
}

/// Units with a directed path to (a unit producing) `goal`.
fn units_reaching(graph: &FoonGraph, goal: &NodeKey) -> BTreeSet<usize> {
    let mut reached: BTreeSet<usize> = graph.producers_of(goal).into_iter().collect();
    let mut queue: VecDeque<usize> = reached.iter().copied().collect();
    while let Some(consumer) = queue.pop_front() {
        for input in &graph.units[consumer].inputs {
            for producer in graph.producers_of(&input.key()) {
                if reached.insert(producer) {
                    queue.push_back(producer);
                }
            }
        }
    }
    reached
}

fn check_tree(graph: &FoonGraph, goal: Option<&NodeKey>, out: &mut Vec<Violation>) {
    for cycle in unit_cycles(graph) {
        out.push(violation(
            RuleId::Cycle,
            format!("units {cycle:?} depend on each other in a cycle"),
            Some(Location::Units(cycle)),
        ));
    }

    let goal = match goal {
        Some(goal) => {
            let mut goal_ok = true;
            if graph.producers_of(goal).is_empty() {
                out.push(violation(
                    RuleId::Goal,
                    format!("goal {goal} is not produced by any unit"),
                    Some(Location::Node(goal.to_string())),
                ));
                goal_ok = false;
            }
            let consumers: Vec<usize> = graph
                .units
                .iter()
                .enumerate()
                .filter(|(_, u)| u.consumes(goal))
                .map(|(i, _)| i)
                .collect();
            if !consumers.is_empty() {
                out.push(violation(
                    RuleId::Goal,
                    format!("goal {goal} is consumed by units {consumers:?}"),
                    Some(Location::Node(goal.to_string())),
                ));
            }
            if !goal_ok {
                return;
            }
            goal.clone()
        }
        None => {
            let terminals = terminal_objects(graph);
            match terminals.as_slice() {
                [only] => only.clone(),
                [] => {
                    out.push(violation(
                        RuleId::Goal,
                        "no goal: every output is consumed by another unit".to_string(),
                        None,
                    ));
                    return;
                }
                many => {
                    let names: Vec<String> = many.iter().map(NodeKey::to_string).collect();
                    out.push(violation(
                        RuleId::Goal,
                        format!("ambiguous goal: unconsumed outputs {}", names.join(", ")),
                        None,
                    ));
                    return;
                }
            }
        }
    };

    let reached = units_reaching(graph, &goal);
    for i in (0..graph.len()).filter(|i| !reached.contains(i)) {
        out.push(violation(
            RuleId::Disconnected,
            format!(
                "unit {i} ({}) has no path to goal {goal}",
                graph.units[i].motion
            ),
            Some(Location::Unit(i)),
        ));
    }
}

/// Objects that some unit outputs and no unit consumes, in first-mention order.
pub(crate) fn terminal_objects(graph: &FoonGraph) -> Vec<NodeKey> {
    let mut seen = BTreeSet::new();
    let mut terminals = Vec::new();
    for unit in &graph.units {
        for output in &unit.outputs {
            let key = output.key();
            if seen.insert(key.clone()) && !graph.units.iter().any(|u| u.consumes(&key)) {
                terminals.push(key);
            }
        }
    }
    terminals
}

/// Checks unit arity, no-op units and the bipartite edge set; with
/// `as_task_tree` also acyclicity, a unique goal (the single unconsumed
/// output) and connectivity to it.
pub fn validate_graph(graph: &FoonGraph, as_task_tree: bool) -> ValidationReport {
    let mut violations = Vec::new();
    check_units(graph, &mut violations);
    if as_task_tree {
        check_tree(graph, None, &mut violations);
    }
    ValidationReport::from_violations(violations)
}

/// Task-tree validation against an explicit goal. Other unconsumed outputs
/// (side products) are allowed here.
pub fn validate_task_tree(graph: &FoonGraph, goal: &ObjectNode) -> ValidationReport {
    let mut violations = Vec::new();
    check_units(graph, &mut violations);
    check_tree(graph, Some(&goal.key()), &mut violations);
    ValidationReport::from_violations(violations)
}
