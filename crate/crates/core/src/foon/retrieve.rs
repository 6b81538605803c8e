//! Goal-directed backward retrieval of a task tree from a FOON graph.
//!
//! Starting from the goal, every object that is needed but neither
//! available nor produced by an already selected unit is expanded by
//! choosing one of its producing units, whose inputs then become needs.
//! The search deepens the unit budget one step at a time, so the first
//! budget that yields a valid tree gives the minimum unit count; among
//! trees of that size, the one whose sorted unit indices compare lowest
//! wins.

use std::collections::{BTreeSet, VecDeque};

use thiserror::Error;

use super::json::TaskTree;
use super::model::{FoonGraph, NodeKey, ObjectNode};
use super::validate::validate_task_tree;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RetrievalError {
    #[error("goal {0} does not appear in the graph")]
    GoalNotInGraph(String),
    #[error("goal not producible: no unit outputs {0}")]
    GoalNotProducible(String),
    #[error("{object} is neither available nor produced by any unit")]
    Unsatisfiable { object: String },
    #[error("no acyclic task tree produces {0}")]
    NoValidTree(String),
}

struct Search<'a> {
    graph: &'a FoonGraph,
    goal: &'a ObjectNode,
    goal_key: NodeKey,
    available: &'a BTreeSet<NodeKey>,
    budget: usize,
    best: Option<Vec<usize>>,
}

impl Search<'_> {
    fn satisfied(&self, need: &NodeKey, selected: &BTreeSet<usize>) -> bool {
        (*need != self.goal_key && self.available.contains(need))
            || selected.iter().any(|&u| self.graph.units[u].produces(need))
    }

    fn subgraph(&self, selected: &BTreeSet<usize>) -> FoonGraph {
        FoonGraph::new(selected.iter().map(|&u| self.graph.units[u].clone()).collect())
    }

    fn expand(&mut self, selected: &mut BTreeSet<usize>, needs: &mut Vec<NodeKey>, cursor: usize) {
        let mut cursor = cursor;
        while cursor < needs.len() && self.satisfied(&needs[cursor], selected) {
            cursor += 1;
        }
        if cursor == needs.len() {
            let candidate: Vec<usize> = selected.iter().copied().collect();
            let better = self.best.as_ref().is_none_or(|best| candidate < *best);
            if better && validate_task_tree(&self.subgraph(selected), self.goal).ok() {
                self.best = Some(candidate);
            }
            return;
        }
        if selected.len() == self.budget {
            return;
        }
        let need = needs[cursor].clone();
        for producer in self.graph.producers_of(&need) {
            let unit = &self.graph.units[producer];
            if unit.consumes(&self.goal_key) {
                continue;
            }
            selected.insert(producer);
            let mark = needs.len();
            needs.extend(unit.inputs.iter().map(ObjectNode::key));
            self.expand(selected, needs, cursor + 1);
            needs.truncate(mark);
            selected.remove(&producer);
        }
    }
}

/// First object, in breadth-first order from the goal across all producers,
/// that is neither available nor produced by any unit.
fn first_unsatisfiable(
    graph: &FoonGraph,
    goal: &NodeKey,
    available: &BTreeSet<NodeKey>,
) -> Option<NodeKey> {
    let mut visited = BTreeSet::from([goal.clone()]);
    let mut queue = VecDeque::from([goal.clone()]);
    while let Some(key) = queue.pop_front() {
        if key != *goal && available.contains(&key) {
            continue;
        }
        let producers = graph.producers_of(&key);
        if producers.is_empty() {
            return Some(key);
        }
        for producer in producers {
            for input in &graph.units[producer].inputs {
                let input = input.key();
                if visited.insert(input.clone()) {
                    queue.push_back(input);
                }
            }
        }
    }
    None
}

/// Retrieves the smallest task tree that produces `goal` from the
/// `available` objects. The returned tree keeps the graph's unit order.
pub fn retrieve_task_tree(
    graph: &FoonGraph,
    goal: &ObjectNode,
    available: &BTreeSet<NodeKey>,
) -> Result<TaskTree, RetrievalError> {
    let goal_key = goal.key();
    if !graph.contains_node(&goal_key) {
        return Err(RetrievalError::GoalNotInGraph(goal_key.to_string()));
    }
    if graph.producers_of(&goal_key).is_empty() {
        return Err(RetrievalError::GoalNotProducible(goal_key.to_string()));
    }

    let mut search = Search {
        graph,
        goal,
        goal_key: goal_key.clone(),
        available,
        budget: 0,
        best: None,
    };
    for budget in 1..=graph.len() {
        search.budget = budget;
        let mut selected = BTreeSet::new();
        let mut needs = vec![goal_key.clone()];
        search.expand(&mut selected, &mut needs, 0);
        if let Some(best) = search.best.take() {
            let units = best.iter().map(|&u| graph.units[u].clone()).collect();
            return Ok(TaskTree::new(FoonGraph::new(units), goal.clone())
                .expect("search only accepts validated trees"));
        }
    }

    match first_unsatisfiable(graph, &goal_key, available) {
        Some(object) => Err(RetrievalError::Unsatisfiable {
            object: object.to_string(),
        }),
        None => Err(RetrievalError::NoValidTree(goal_key.to_string())),
    }
}
