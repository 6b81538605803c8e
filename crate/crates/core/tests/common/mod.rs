//! Generators and reference checks shared by the property suites.
#![allow(dead_code)]

use std::collections::{BTreeSet, VecDeque};

use foonforge_core::foon::{FoonGraph, FunctionalUnit, MotionNode, NodeKey, ObjectNode};
use foonforge_core::prompt::DishSpec;
use proptest::prelude::*;
use proptest::sample::subsequence;

pub fn obj(name: &str, states: &[&str]) -> ObjectNode {
    ObjectNode::with_states(name, states).unwrap()
}

pub fn unit(inputs: Vec<ObjectNode>, motion: &str, outputs: Vec<ObjectNode>) -> FunctionalUnit {
    FunctionalUnit::new(inputs, MotionNode::new(motion).unwrap(), outputs)
}

/// Water and raw macaroni boiled, cheese grated, both mixed.
pub fn macaroni_graph() -> FoonGraph {
    FoonGraph::new(vec![
        unit(
            vec![obj("water", &[]), obj("macaroni", &["raw"])],
            "pour+boil",
            vec![obj("macaroni", &["cooked"])],
        ),
        unit(vec![obj("cheese", &[])], "grate", vec![obj("cheese", &["grated"])]),
        unit(
            vec![obj("macaroni", &["cooked"]), obj("cheese", &["grated"])],
            "mix",
            vec![obj("mac and cheese", &[])],
        ),
    ])
}

// Round-trip graphs ---------------------------------------------------------

const NAMES: &[&str] = &["egg", "bread", "olive oil", "pan", "salt", "crème fraîche", "bowl"];
const STATES: &[&str] = &["raw", "sliced", "hot", "mixed", "whole"];
const MOTIONS: &[&str] = &["pour", "mix", "slice", "fry", "pick-and-place", "stir"];

fn any_object() -> impl Strategy<Value = ObjectNode> {
    (
        prop::sample::select(NAMES),
        subsequence(STATES, 0..=2),
        prop::option::weighted(0.3, subsequence(NAMES, 1..=3)),
    )
        .prop_map(|(name, states, ingredients)| {
            let mut o = ObjectNode::with_states(name, states).unwrap();
            if let Some(ingredients) = ingredients {
                o.set_ingredients(ingredients).unwrap();
            }
            o
        })
}

fn any_side() -> impl Strategy<Value = Vec<ObjectNode>> {
    prop::collection::vec(any_object(), 1..=3)
}

/// Units with non-empty sides and no object unchanged across the motion.
fn any_valid_unit() -> impl Strategy<Value = FunctionalUnit> {
    (any_side(), prop::sample::select(MOTIONS), any_side()).prop_map(|(inputs, motion, outputs)| {
        let outputs: Vec<ObjectNode> = outputs
            .into_iter()
            .filter(|o| !inputs.iter().any(|i| i.same_node(o)))
            .collect();
        let outputs = if outputs.is_empty() {
            vec![obj("result", &["done"])]
        } else {
            outputs
        };
        unit(inputs, motion, outputs)
    })
}

pub fn valid_graph(max_units: usize) -> impl Strategy<Value = FoonGraph> {
    prop::collection::vec(any_valid_unit(), 1..=max_units).prop_map(FoonGraph::new)
}

// Retrieval graphs ----------------------------------------------------------

fn small_key() -> impl Strategy<Value = (usize, bool)> {
    (0usize..4, any::<bool>())
}

fn small_obj((name, cut): (usize, bool)) -> ObjectNode {
    let name = ["a", "b", "c", "d"][name];
    if cut {
        obj(name, &["cut"])
    } else {
        obj(name, &[])
    }
}

fn small_unit() -> impl Strategy<Value = FunctionalUnit> {
    (
        prop::collection::btree_set(small_key(), 1..=2),
        prop::sample::select(MOTIONS),
        prop::collection::btree_set(small_key(), 1..=2),
    )
        .prop_map(|(inputs, motion, outputs)| {
            unit(
                inputs.into_iter().map(small_obj).collect(),
                motion,
                outputs.into_iter().map(small_obj).collect(),
            )
        })
}

/// A graph of up to `max_units` units over eight object nodes, with a goal
/// and an availability set drawn from the same nodes. No-op units and
/// cycles are allowed in the input graph. Most goals are taken from the
/// outputs of the last units so that deeper trees come up often.
pub fn retrieval_case(
    max_units: usize,
) -> impl Strategy<Value = (FoonGraph, ObjectNode, BTreeSet<NodeKey>)> {
    (
        prop::collection::vec((small_unit(), any::<Option<prop::sample::Index>>()), 1..=max_units),
        small_key(),
        prop::option::weighted(0.8, (any::<prop::sample::Index>(), any::<prop::sample::Index>())),
        prop::option::weighted(0.4, prop::collection::btree_set(small_key(), 0..=6)),
    )
        .prop_map(|(raw, random_goal, pick, available)| {
            // Optionally feed each unit an output of an earlier one.
            let mut units: Vec<FunctionalUnit> = Vec::with_capacity(raw.len());
            for (mut u, link) in raw {
                if let (Some(link), false) = (link, units.is_empty()) {
                    let from = &units[link.index(units.len())];
                    let fed = from.outputs[0].clone();
                    if !u.outputs.iter().any(|o| o.same_node(&fed))
                        && !u.inputs.iter().any(|i| i.same_node(&fed))
                    {
                        u.inputs[0] = fed;
                    }
                }
                units.push(u);
            }
            let goal = match pick {
                Some((u, o)) => {
                    let tail = units.len().min(2);
                    let unit = &units[units.len() - 1 - u.index(tail)];
                    unit.outputs[o.index(unit.outputs.len())].clone()
                }
                None => small_obj(random_goal),
            };
            let graph = FoonGraph::new(units);
            // Usually every raw input is on hand, sometimes an arbitrary set.
            let available = match available {
                Some(keys) => keys.into_iter().map(|k| small_obj(k).key()).collect(),
                None => graph
                    .units
                    .iter()
                    .flat_map(|u| u.inputs.iter().map(ObjectNode::key))
                    .filter(|k| graph.producers_of(k).is_empty())
                    .collect(),
            };
            (graph, goal, available)
        })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum OracleOutcome {
    Tree(Vec<usize>),
    GoalNotInGraph,
    GoalNotProducible,
    Unsatisfiable(String),
    NoValidTree,
}

fn outputs_of(u: &FunctionalUnit) -> BTreeSet<NodeKey> {
    u.outputs.iter().map(ObjectNode::key).collect()
}

fn inputs_of(u: &FunctionalUnit) -> BTreeSet<NodeKey> {
    u.inputs.iter().map(ObjectNode::key).collect()
}

/// Whether the units at `subset` form an executable, goal-rooted task tree.
fn feasible(graph: &FoonGraph, subset: &[usize], goal: &NodeKey, available: &BTreeSet<NodeKey>) -> bool {
    let units: Vec<&FunctionalUnit> = subset.iter().map(|&i| &graph.units[i]).collect();
    let produced: BTreeSet<NodeKey> = units.iter().flat_map(|u| outputs_of(u)).collect();
    if !produced.contains(goal) {
        return false;
    }
    for u in &units {
        let (ins, outs) = (inputs_of(u), outputs_of(u));
        if ins.is_empty() || outs.is_empty() || ins.intersection(&outs).next().is_some() {
            return false;
        }
        if ins.contains(goal) {
            return false;
        }
        if !ins.iter().all(|k| available.contains(k) || produced.contains(k)) {
            return false;
        }
    }

    // Kahn's algorithm on the unit dependency graph.
    let n = units.len();
    let edge = |a: usize, b: usize| {
        a != b && outputs_of(units[a]).intersection(&inputs_of(units[b])).next().is_some()
    };
    let mut indegree: Vec<usize> = (0..n).map(|b| (0..n).filter(|&a| edge(a, b)).count()).collect();
    let mut ready: Vec<usize> = (0..n).filter(|&b| indegree[b] == 0).collect();
    let mut ordered = 0;
    while let Some(a) = ready.pop() {
        ordered += 1;
        for (b, degree) in indegree.iter_mut().enumerate() {
            if edge(a, b) {
                *degree -= 1;
                if *degree == 0 {
                    ready.push(b);
                }
            }
        }
    }
    if ordered != n {
        return false;
    }

    // Every unit must feed the goal.
    let mut reaches: Vec<bool> = units.iter().map(|u| outputs_of(u).contains(goal)).collect();
    loop {
        let mut changed = false;
        for a in 0..n {
            if !reaches[a] && (0..n).any(|b| reaches[b] && edge(a, b)) {
                reaches[a] = true;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    reaches.into_iter().all(|r| r)
}

fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn go(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            go(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    go(0, n, k, &mut Vec::new(), &mut out);
    out
}

/// Exhaustive search over unit subsets in order of size, then sorted index
/// order. The goal itself never counts as available.
pub fn brute_force_retrieval(
    graph: &FoonGraph,
    goal: &ObjectNode,
    available: &BTreeSet<NodeKey>,
) -> OracleOutcome {
    let goal = goal.key();
    let mentioned = graph
        .units
        .iter()
        .any(|u| inputs_of(u).contains(&goal) || outputs_of(u).contains(&goal));
    if !mentioned {
        return OracleOutcome::GoalNotInGraph;
    }
    if !graph.units.iter().any(|u| outputs_of(u).contains(&goal)) {
        return OracleOutcome::GoalNotProducible;
    }
    let mut available = available.clone();
    available.remove(&goal);
    for size in 1..=graph.len() {
        for subset in combinations(graph.len(), size) {
            if feasible(graph, &subset, &goal, &available) {
                return OracleOutcome::Tree(subset);
            }
        }
    }

    // Breadth-first from the goal through every producer's inputs.
    let mut seen = BTreeSet::from([goal.clone()]);
    let mut queue = VecDeque::from([goal.clone()]);
    while let Some(key) = queue.pop_front() {
        if available.contains(&key) {
            continue;
        }
        let producers: Vec<&FunctionalUnit> =
            graph.units.iter().filter(|u| outputs_of(u).contains(&key)).collect();
        if producers.is_empty() {
            return OracleOutcome::Unsatisfiable(key.to_string());
        }
        for p in producers {
            for input in &p.inputs {
                if seen.insert(input.key()) {
                    queue.push_back(input.key());
                }
            }
        }
    }
    OracleOutcome::NoValidTree
}

// Mutation suite -------------------------------------------------------------

/// Task trees known to be valid, each with its goal.
pub fn valid_fixtures() -> Vec<(FoonGraph, ObjectNode)> {
    vec![
        (macaroni_graph(), obj("mac and cheese", &[])),
        (
            FoonGraph::new(vec![
                unit(vec![obj("egg", &[]), obj("bowl", &[])], "crack", vec![obj("bowl", &["full"])]),
                unit(vec![obj("bowl", &["full"]), obj("whisk", &[])], "whisk", vec![obj("egg", &["beaten"])]),
                unit(vec![obj("pan", &[]), obj("butter", &[])], "melt", vec![obj("pan", &["greased"])]),
                unit(vec![obj("egg", &["beaten"]), obj("pan", &["greased"])], "fry", vec![obj("omelette", &[])]),
            ]),
            obj("omelette", &[]),
        ),
        (
            FoonGraph::new(vec![
                unit(vec![obj("bread", &[]), obj("knife", &[])], "slice", vec![obj("bread", &["sliced"])]),
                unit(vec![obj("bread", &["sliced"]), obj("toaster", &[])], "toast", vec![obj("bread", &["sliced", "toasted"])]),
                unit(vec![obj("bread", &["sliced", "toasted"]), obj("butter", &[])], "spread", vec![obj("buttered toast", &[])]),
            ]),
            obj("buttered toast", &[]),
        ),
    ]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MutationKind {
    Cycle,
    EmptyInputs,
    EmptyOutputs,
    NoOp,
    Disconnected,
}

pub struct Mutant {
    pub kind: MutationKind,
    pub graph: FoonGraph,
    pub goal: ObjectNode,
}

/// Every single-fault mutant of every valid fixture.
pub fn mutants() -> Vec<Mutant> {
    let mut out = Vec::new();
    for (graph, goal) in valid_fixtures() {
        let goal_key = goal.key();
        for (i, u) in graph.units.iter().enumerate() {
            let mut push = |kind, graph| {
                out.push(Mutant {
                    kind,
                    graph,
                    goal: goal.clone(),
                })
            };

            let mut g = graph.clone();
            g.units[i].inputs.clear();
            push(MutationKind::EmptyInputs, g);

            let mut g = graph.clone();
            g.units[i].outputs.clear();
            push(MutationKind::EmptyOutputs, g);

            let mut g = graph.clone();
            let echoed = g.units[i].inputs[0].clone();
            g.units[i].outputs.push(echoed);
            push(MutationKind::NoOp, g);

            // A back edge from a non-goal output to this unit's first input.
            if let Some(out_obj) = u.outputs.iter().find(|o| o.key() != goal_key) {
                let mut g = graph.clone();
                g.units.push(unit(vec![out_obj.clone()], "undo", vec![u.inputs[0].clone()]));
                push(MutationKind::Cycle, g);
            }

            let mut g = graph.clone();
            g.units.insert(
                i,
                unit(vec![obj(&format!("stray {i}"), &[])], "chop", vec![obj(&format!("stray {i}"), &["chopped"])]),
            );
            push(MutationKind::Disconnected, g);
        }
    }
    out
}

// Metric cases --------------------------------------------------------------

const INGREDIENTS: &[&str] = &["flour", "sugar", "egg", "milk", "butter", "salt", "yeast", "honey"];
const TOOLS: &[&str] = &["bowl", "whisk", "oven", "pan"];

/// A dish, plus a chained tree over some of its ingredients and tools and
/// possibly a name the dish does not list.
pub fn metric_case() -> impl Strategy<Value = (DishSpec, Vec<Vec<String>>, bool, bool)> {
    (
        subsequence(INGREDIENTS, 1..=INGREDIENTS.len()),
        subsequence(TOOLS, 0..=TOOLS.len()),
        1usize..=4,
        any::<bool>(),
        any::<bool>(),
        any::<u64>(),
    )
        .prop_map(|(ingredients, tools, steps, wrong_goal, hallucinate, seed)| {
            let dish = DishSpec::new("baking", "bread", &ingredients, &tools).unwrap();
            let pool: Vec<String> = ingredients.iter().chain(&tools).map(|s| s.to_string()).collect();
            let mut per_step = vec![Vec::new(); steps];
            for (j, name) in pool.into_iter().enumerate() {
                let pick = (seed >> (j % 64)) & 1 == 1;
                if pick {
                    per_step[j % steps].push(name);
                }
            }
            (dish, per_step, wrong_goal, hallucinate)
        })
}

/// Builds the chained tree for a metric case: step `k` consumes the previous
/// stage plus its raw items.
pub fn metric_tree(
    per_step: &[Vec<String>],
    goal: &str,
    hallucinate: bool,
) -> foonforge_core::foon::TaskTree {
    let steps = per_step.len();
    let mut units = Vec::new();
    for (k, raw) in per_step.iter().enumerate() {
        let mut inputs: Vec<ObjectNode> = raw.iter().map(|n| obj(n, &[])).collect();
        if k > 0 {
            inputs.push(obj(&format!("stage {}", k - 1), &[]));
        }
        if hallucinate && k == 0 {
            inputs.push(obj("saffron", &[]));
        }
        if inputs.is_empty() {
            inputs.push(obj("water", &[]));
        }
        let output = if k + 1 == steps {
            obj(goal, &[])
        } else {
            obj(&format!("stage {k}"), &[])
        };
        units.push(unit(inputs, "mix", vec![output]));
    }
    foonforge_core::foon::TaskTree::new(FoonGraph::new(units), obj(goal, &[])).unwrap()
}

// Property bodies -------------------------------------------------------------

use foonforge_core::eval::{score_accuracy, score_completeness, score_record, MetricScores};
use foonforge_core::foon::{
    parse_foon_text, retrieve_task_tree, serialize_foon_text, validate_graph, validate_task_tree,
    RetrievalError, RuleId,
};
use foonforge_core::pipeline::{FallbackReason, Outcome, OutputRecord};
use foonforge_core::prompt::Strategy as PromptStrategy;
use proptest::test_runner::TestCaseError;

/// serialize -> parse -> serialize is a fixed point and parsing recovers the
/// graph.
pub fn check_round_trip(graph: &FoonGraph) -> Result<(), TestCaseError> {
    let text = serialize_foon_text(graph);
    let parsed = parse_foon_text(&text).map_err(|e| TestCaseError::fail(format!("{e}\n{text}")))?;
    prop_assert_eq!(&parsed, graph);
    prop_assert_eq!(serialize_foon_text(&parsed), text);
    Ok(())
}

pub fn check_retrieval(
    graph: &FoonGraph,
    goal: &ObjectNode,
    available: &BTreeSet<NodeKey>,
) -> Result<(), TestCaseError> {
    let expected = brute_force_retrieval(graph, goal, available);
    let actual = retrieve_task_tree(graph, goal, available);
    match (&expected, &actual) {
        (OracleOutcome::Tree(subset), Ok(tree)) => {
            let units: Vec<FunctionalUnit> = subset.iter().map(|&i| graph.units[i].clone()).collect();
            prop_assert_eq!(tree.units(), units.as_slice());
            prop_assert!(validate_task_tree(tree.graph(), goal).ok());
        }
        (OracleOutcome::GoalNotInGraph, Err(RetrievalError::GoalNotInGraph(_)))
        | (OracleOutcome::GoalNotProducible, Err(RetrievalError::GoalNotProducible(_)))
        | (OracleOutcome::NoValidTree, Err(RetrievalError::NoValidTree(_))) => {}
        (OracleOutcome::Unsatisfiable(want), Err(RetrievalError::Unsatisfiable { object })) => {
            prop_assert_eq!(want, object);
        }
        _ => {
            return Err(TestCaseError::fail(format!(
                "oracle {expected:?} but retrieval gave {actual:?}"
            )))
        }
    }
    Ok(())
}

/// Flags every mutant with the rule its fault violates, and nothing on the
/// unmutated fixtures. Returns the number of mutants checked.
pub fn check_mutation_suite() -> Result<usize, String> {
    for (graph, goal) in valid_fixtures() {
        let loose = validate_graph(&graph, true);
        let rooted = validate_task_tree(&graph, &goal);
        if !loose.ok() || !rooted.ok() {
            return Err(format!("false positive on valid fixture: {loose} / {rooted}"));
        }
    }
    let all = mutants();
    for (i, m) in all.iter().enumerate() {
        let rule = match m.kind {
            MutationKind::Cycle => RuleId::Cycle,
            MutationKind::EmptyInputs | MutationKind::EmptyOutputs => RuleId::Arity,
            MutationKind::NoOp => RuleId::NoOpUnit,
            MutationKind::Disconnected => RuleId::Disconnected,
        };
        let report = validate_task_tree(&m.graph, &m.goal);
        if !report.has(rule) {
            return Err(format!("mutant {i} ({:?}) not flagged as {}: {report}", m.kind, rule.as_str()));
        }
    }
    Ok(all.len())
}

const SCORE_LEVELS: [f64; 6] = [0.0, 0.2, 0.4, 0.6, 0.8, 1.0];

pub fn check_metrics(
    dish: &DishSpec,
    per_step: &[Vec<String>],
    wrong_goal: bool,
    hallucinate: bool,
) -> Result<(), TestCaseError> {
    let goal = if wrong_goal { "cake" } else { dish.name.as_str() };
    let tree = metric_tree(per_step, goal, hallucinate);

    let accuracy = score_accuracy(&tree, dish);
    prop_assert!(SCORE_LEVELS.contains(&accuracy), "accuracy {}", accuracy);
    let completeness = score_completeness(&tree, dish);
    prop_assert!((0.0..=1.0).contains(&completeness));

    let used: BTreeSet<&String> = per_step.iter().flatten().collect();
    if let Some(missing) = dish.ingredients.iter().find(|i| !used.contains(i)) {
        let mut more = per_step.to_vec();
        more[0].push(missing.clone());
        let richer = metric_tree(&more, goal, hallucinate);
        prop_assert!(score_completeness(&richer, dish) > completeness);
        prop_assert!(score_accuracy(&richer, dish) >= accuracy);
    }

    let fallback = OutputRecord {
        dish: dish.clone(),
        strategy: PromptStrategy::ExampleBased,
        outcome: Outcome::TextFallback,
        tree: None,
        raw_text: serialize_foon_text(tree.graph()),
        fallback_reason: Some(FallbackReason::JsonSyntax),
        fallback_detail: None,
        output_path: String::new(),
    };
    prop_assert_eq!(score_record(&fallback), MetricScores::ZERO);
    Ok(())
}
