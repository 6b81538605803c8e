//! Object nodes, motion nodes, functional units and the graphs built from them.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use super::FoonError;

/// Trims ASCII whitespace and lowercases. Every name stored in the model
/// passes through here.
pub fn normalize_name(raw: &str) -> String {
    raw.trim_matches(|c: char| c.is_ascii_whitespace())
        .to_lowercase()
}

fn check_token(kind: &'static str, raw: &str) -> Result<String, FoonError> {
    let name = normalize_name(raw);
    if name.is_empty() {
        return Err(FoonError::InvalidName {
            kind,
            value: raw.to_string(),
            reason: "empty",
        });
    }
    if name.contains(['\t', '\n', '\r']) {
        return Err(FoonError::InvalidName {
            kind,
            value: raw.to_string(),
            reason: "contains a tab or newline",
        });
    }
    Ok(name)
}

/// Identity of an object node: its name plus its sorted state set.
///
/// Contained ingredients are deliberately not part of the key.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeKey {
    pub name: String,
    pub states: BTreeSet<String>,
}

impl NodeKey {
    /// Parses `name` or `name[state,state]`.
    pub fn parse_label(label: &str) -> Result<Self, FoonError> {
        let node = ObjectNode::parse_label(label)?;
        Ok(node.key())
    }
}

impl fmt::Display for NodeKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name)?;
        if !self.states.is_empty() {
            let states: Vec<&str> = self.states.iter().map(String::as_str).collect();
            write!(f, "[{}]", states.join(","))?;
        }
        Ok(())
    }
}

/// An ingredient, utensil or intermediate product, possibly carrying states
/// such as "chopped" and, for containers, the ingredients it holds.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawObject", into = "RawObject")]
pub struct ObjectNode {
    name: String,
    states: BTreeSet<String>,
    ingredients: Option<Vec<String>>,
}

impl ObjectNode {
    pub fn new(name: &str) -> Result<Self, FoonError> {
        Ok(Self {
            name: check_token("object", name)?,
            states: BTreeSet::new(),
            ingredients: None,
        })
    }

    pub fn with_states<I, S>(name: &str, states: I) -> Result<Self, FoonError>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut node = Self::new(name)?;
        for state in states {
            node.add_state(state.as_ref())?;
        }
        Ok(node)
    }

    /// Parses the `name[state,state]` label form used on the command line.
    pub fn parse_label(label: &str) -> Result<Self, FoonError> {
        let trimmed = label.trim();
        match trimmed.strip_suffix(']').and_then(|s| s.split_once('[')) {
            Some((name, states)) => Self::with_states(
                name,
                states.split(',').filter(|s| !s.trim().is_empty()),
            ),
            None => Self::new(trimmed),
        }
    }

    pub fn add_state(&mut self, state: &str) -> Result<(), FoonError> {
        self.states.insert(check_token("state", state)?);
        Ok(())
    }

    /// Sets the contained-ingredient list. Names may not contain commas since
    /// the text format joins them with one.
    pub fn set_ingredients<I, S>(&mut self, ingredients: I) -> Result<(), FoonError>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut list = Vec::new();
        for raw in ingredients {
            let name = check_token("ingredient", raw.as_ref())?;
            if name.contains(',') {
                return Err(FoonError::InvalidName {
                    kind: "ingredient",
                    value: raw.as_ref().to_string(),
                    reason: "contains a comma",
                });
            }
            list.push(name);
        }
        self.ingredients = Some(list);
        Ok(())
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn states(&self) -> &BTreeSet<String> {
        &self.states
    }

    pub fn ingredients(&self) -> Option<&[String]> {
        self.ingredients.as_deref()
    }

    pub fn key(&self) -> NodeKey {
        NodeKey {
            name: self.name.clone(),
            states: self.states.clone(),
        }
    }

    /// True when `other` is the same node (name and states), ignoring
    /// contained ingredients.
    pub fn same_node(&self, other: &ObjectNode) -> bool {
        self.name == other.name && self.states == other.states
    }
}

impl fmt::Display for ObjectNode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.key().fmt(f)
    }
}

/// Wire form of an object node in task-tree JSON.
#[derive(Serialize, Deserialize)]
struct RawObject {
    name: String,
    #[serde(default)]
    states: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    ingredients: Option<Vec<String>>,
}

impl TryFrom<RawObject> for ObjectNode {
    type Error = FoonError;

    fn try_from(raw: RawObject) -> Result<Self, Self::Error> {
        let mut node = ObjectNode::with_states(&raw.name, &raw.states)?;
        if let Some(ingredients) = raw.ingredients {
            node.set_ingredients(ingredients)?;
        }
        Ok(node)
    }
}

impl From<ObjectNode> for RawObject {
    fn from(node: ObjectNode) -> Self {
        RawObject {
            name: node.name,
            states: node.states.into_iter().collect(),
            ingredients: node.ingredients,
        }
    }
}

/// The manipulation verb of a functional unit.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct MotionNode(String);

impl MotionNode {
    pub fn new(name: &str) -> Result<Self, FoonError> {
        check_token("motion", name).map(Self)
    }

    pub fn name(&self) -> &str {
        &self.0
    }
}

impl TryFrom<String> for MotionNode {
    type Error = FoonError;

    fn try_from(value: String) -> Result<Self, Self::Error> {
        MotionNode::new(&value)
    }
}

impl From<MotionNode> for String {
    fn from(motion: MotionNode) -> Self {
        motion.0
    }
}

impl fmt::Display for MotionNode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// One manipulation action: input objects, a motion, output objects.
///
/// Fields are public so malformed units can be represented and reported by
/// the validator; the parsers never produce units with empty sides.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FunctionalUnit {
    pub inputs: Vec<ObjectNode>,
    pub motion: MotionNode,
    pub outputs: Vec<ObjectNode>,
}

/// Identity of a unit for deduplication: sorted input keys, motion, sorted
/// output keys.
pub type UnitKey = (Vec<NodeKey>, MotionNode, Vec<NodeKey>);

impl FunctionalUnit {
    pub fn new(inputs: Vec<ObjectNode>, motion: MotionNode, outputs: Vec<ObjectNode>) -> Self {
        Self {
            inputs,
            motion,
            outputs,
        }
    }

    pub fn key(&self) -> UnitKey {
        let mut inputs: Vec<NodeKey> = self.inputs.iter().map(ObjectNode::key).collect();
        let mut outputs: Vec<NodeKey> = self.outputs.iter().map(ObjectNode::key).collect();
        inputs.sort();
        outputs.sort();
        (inputs, self.motion.clone(), outputs)
    }

    pub fn consumes(&self, key: &NodeKey) -> bool {
        self.inputs.iter().any(|o| o.key() == *key)
    }

    pub fn produces(&self, key: &NodeKey) -> bool {
        self.outputs.iter().any(|o| o.key() == *key)
    }
}

/// An ordered collection of functional units. Object nodes are shared
/// between units by identity (name, states).
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoonGraph {
    pub units: Vec<FunctionalUnit>,
}

impl FoonGraph {
    pub fn new(units: Vec<FunctionalUnit>) -> Self {
        Self { units }
    }

    pub fn is_empty(&self) -> bool {
        self.units.is_empty()
    }

    pub fn len(&self) -> usize {
        self.units.len()
    }

    /// Distinct object nodes mapped to a dense id, in order of first mention.
    pub fn node_index(&self) -> BTreeMap<NodeKey, usize> {
        let mut index = BTreeMap::new();
        for unit in &self.units {
            for object in unit.inputs.iter().chain(&unit.outputs) {
                let next = index.len();
                index.entry(object.key()).or_insert(next);
            }
        }
        index
    }

    pub fn contains_node(&self, key: &NodeKey) -> bool {
        self.units
            .iter()
            .any(|u| u.consumes(key) || u.produces(key))
    }

    /// Indices of units that output `key`, ascending.
    pub fn producers_of(&self, key: &NodeKey) -> Vec<usize> {
        self.units
            .iter()
            .enumerate()
            .filter(|(_, u)| u.produces(key))
            .map(|(i, _)| i)
            .collect()
    }

    /// The graph with exact-duplicate units removed, first occurrence kept.
    pub fn canonical(&self) -> FoonGraph {
        merge_graphs(self, &FoonGraph::default())
    }
}

/// Unit-level union of two graphs. Exact duplicates (same unit key) keep
/// their first occurrence; `a`'s units come first.
pub fn merge_graphs(a: &FoonGraph, b: &FoonGraph) -> FoonGraph {
    let mut seen = BTreeSet::new();
    let units = a
        .units
        .iter()
        .chain(&b.units)
        .filter(|unit| seen.insert(unit.key()))
        .cloned()
        .collect();
    FoonGraph { units }
}
