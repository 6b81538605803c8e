//! Prompt construction for the three prompting strategies.
//!
//! Rendering is pure: the same dish, examples, instructions and template
//! always give the same text and the same `context_hash`.

mod template;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::foon::{normalize_name, parse_task_tree_json, serialize_task_tree_json, TaskTree, TaskTreeError};

pub use template::{schema_block, Template, PLACEHOLDERS};

#[derive(Debug, Error)]
pub enum PromptError {
    #[error("example-based prompting needs at least one example")]
    EmptyExamples,
    #[error("user-guided prompting needs non-empty instructions")]
    EmptyInstructions,
    #[error("contextual prompting needs at least one available tool or ingredient")]
    EmptyAvailability,
    #[error("invalid dish: {0}")]
    InvalidDish(String),
    #[error("template error: {0}")]
    Template(String),
    #[error("examples directory {0} does not exist")]
    MissingPath(PathBuf),
    #[error("reading {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Strategy {
    ExampleBased,
    UserGuided,
    Contextual,
}

impl Strategy {
    pub const ALL: [Strategy; 3] = [
        Strategy::ExampleBased,
        Strategy::UserGuided,
        Strategy::Contextual,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Strategy::ExampleBased => "example-based",
            Strategy::UserGuided => "user-guided",
            Strategy::Contextual => "contextual",
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Strategy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Strategy::ALL
            .into_iter()
            .find(|strategy| strategy.as_str() == s)
            .ok_or_else(|| {
                format!("unknown strategy {s:?}; expected example-based, user-guided or contextual")
            })
    }
}

/// One dish request: names are normalized (trimmed, lowercase) and
/// ingredients are unique.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawDish")]
pub struct DishSpec {
    pub category: String,
    pub name: String,
    pub ingredients: Vec<String>,
    pub tools: Vec<String>,
}

#[derive(Deserialize)]
struct RawDish {
    category: String,
    name: String,
    ingredients: Vec<String>,
    #[serde(default)]
    tools: Vec<String>,
}

impl TryFrom<RawDish> for DishSpec {
    type Error = PromptError;

    fn try_from(raw: RawDish) -> Result<Self, Self::Error> {
        DishSpec::new(&raw.category, &raw.name, &raw.ingredients, &raw.tools)
    }
}

impl DishSpec {
    pub fn new<S: AsRef<str>, T: AsRef<str>>(
        category: &str,
        name: &str,
        ingredients: &[S],
        tools: &[T],
    ) -> Result<Self, PromptError> {
        let name = normalize_name(name);
        if name.is_empty() {
            return Err(PromptError::InvalidDish("dish name is empty".into()));
        }
        let mut seen = BTreeSet::new();
        let mut normalized = Vec::with_capacity(ingredients.len());
        for ingredient in ingredients {
            let ingredient = normalize_name(ingredient.as_ref());
            if ingredient.is_empty() {
                return Err(PromptError::InvalidDish(format!("{name}: empty ingredient name")));
            }
            if !seen.insert(ingredient.clone()) {
                return Err(PromptError::InvalidDish(format!(
                    "{name}: duplicate ingredient {ingredient:?}"
                )));
            }
            normalized.push(ingredient);
        }
        if normalized.is_empty() {
            return Err(PromptError::InvalidDish(format!("{name}: no ingredients")));
        }
        let mut tool_set = BTreeSet::new();
        let tools = tools
            .iter()
            .map(|t| normalize_name(t.as_ref()))
            .filter(|t| !t.is_empty() && tool_set.insert(t.clone()))
            .collect();
        Ok(Self {
            category: normalize_name(category),
            name,
            ingredients: normalized,
            tools,
        })
    }
}

/// A rendered prompt ready to send.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptBundle {
    pub strategy: Strategy,
    pub text: String,
    pub examples_used: usize,
    /// Hex SHA-256 of the strategy name and prompt text; keys replay fixtures.
    pub context_hash: String,
}

impl PromptBundle {
    fn new(strategy: Strategy, text: String, examples_used: usize) -> Self {
        let mut hasher = Sha256::new();
        hasher.update(strategy.as_str().as_bytes());
        hasher.update([0u8]);
        hasher.update(text.as_bytes());
        let context_hash = hex::encode(hasher.finalize());
        Self {
            strategy,
            text,
            examples_used,
            context_hash,
        }
    }
}

fn sorted_list<S: AsRef<str>>(items: &[S]) -> String {
    let set: BTreeSet<String> = items
        .iter()
        .map(|s| normalize_name(s.as_ref()))
        .filter(|s| !s.is_empty())
        .collect();
    if set.is_empty() {
        "none".to_string()
    } else {
        set.into_iter().collect::<Vec<_>>().join(", ")
    }
}

fn dish_values(dish: &DishSpec) -> BTreeMap<&'static str, String> {
    BTreeMap::from([
        ("dish_name", dish.name.clone()),
        ("category", dish.category.clone()),
        ("ingredients", sorted_list(&dish.ingredients)),
        ("tools", sorted_list(&dish.tools)),
        ("schema", schema_block().to_string()),
    ])
}

/// Utensils of an example tree: raw inputs that come out of the unit
/// consuming them still under the same name (a pan stays a pan).
fn example_utensils(tree: &TaskTree) -> Vec<String> {
    let graph = tree.graph();
    let mut utensils = BTreeSet::new();
    for unit in tree.units() {
        for input in &unit.inputs {
            let raw = graph.producers_of(&input.key()).is_empty();
            if raw && unit.outputs.iter().any(|o| o.name() == input.name()) {
                utensils.insert(input.name().to_string());
            }
        }
    }
    utensils.into_iter().collect()
}

/// The annotation line that introduces one example.
pub fn example_header(tree: &TaskTree) -> String {
    format!(
        "# example: {}, {} steps, tools: {}",
        tree.goal().name(),
        tree.units().len(),
        sorted_list(&example_utensils(tree))
    )
}

pub fn render_example_based(
    dish: &DishSpec,
    examples: &[TaskTree],
    template: &Template,
) -> Result<PromptBundle, PromptError> {
    if examples.is_empty() {
        return Err(PromptError::EmptyExamples);
    }
    let block = examples
        .iter()
        .map(|tree| format!("{}\n{}", example_header(tree), serialize_task_tree_json(tree)))
        .collect::<Vec<_>>()
        .join("\n");
    let mut values = dish_values(dish);
    values.insert("examples", block.trim_end().to_string());
    Ok(PromptBundle::new(
        Strategy::ExampleBased,
        template.render(&values),
        examples.len(),
    ))
}

pub fn render_user_guided(
    dish: &DishSpec,
    instructions: &str,
    template: &Template,
) -> Result<PromptBundle, PromptError> {
    if instructions.trim().is_empty() {
        return Err(PromptError::EmptyInstructions);
    }
    let mut values = dish_values(dish);
    values.insert("instructions", instructions.to_string());
    Ok(PromptBundle::new(
        Strategy::UserGuided,
        template.render(&values),
        0,
    ))
}

pub fn render_contextual<S: AsRef<str>, T: AsRef<str>>(
    dish: &DishSpec,
    available_tools: &[S],
    available_ingredients: &[T],
    template: &Template,
) -> Result<PromptBundle, PromptError> {
    let not_blank = |s: &str| !normalize_name(s).is_empty();
    if !available_tools.iter().any(|s| not_blank(s.as_ref()))
        && !available_ingredients.iter().any(|s| not_blank(s.as_ref()))
    {
        return Err(PromptError::EmptyAvailability);
    }
    let availability = format!(
        "Available tools: {}\nAvailable ingredients: {}\n\
         Use only the tools and ingredients listed above. The plan must be \
         executable with these resources alone.",
        sorted_list(available_tools),
        sorted_list(available_ingredients),
    );
    let mut values = dish_values(dish);
    values.insert("availability", availability);
    Ok(PromptBundle::new(
        Strategy::Contextual,
        template.render(&values),
        0,
    ))
}

/// Example trees read from a directory, plus the files that were skipped.
#[derive(Debug, Default)]
pub struct LoadedExamples {
    pub trees: Vec<TaskTree>,
    pub warnings: Vec<(String, TaskTreeError)>,
}

/// Reads every `*.json` file directly inside `dir`, in filename order.
/// Files that do not parse as task trees are skipped and reported.
pub fn load_examples(dir: &Path) -> Result<LoadedExamples, PromptError> {
    if !dir.is_dir() {
        return Err(PromptError::MissingPath(dir.to_path_buf()));
    }
    let io_err = |source| PromptError::Io {
        path: dir.to_path_buf(),
        source,
    };
    let mut files = Vec::new();
    for entry in std::fs::read_dir(dir).map_err(io_err)? {
        let path = entry.map_err(io_err)?.path();
        if path.is_file() && path.extension().is_some_and(|e| e == "json") {
            files.push(path);
        }
    }
    files.sort();

    let mut loaded = LoadedExamples::default();
    for path in files {
        let source = std::fs::read_to_string(&path).map_err(|source| PromptError::Io {
            path: path.clone(),
            source,
        })?;
        let file_name = path
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_default();
        match parse_task_tree_json(&source) {
            Ok(tree) => loaded.trees.push(tree),
            Err(err) => loaded.warnings.push((file_name, err)),
        }
    }
    Ok(loaded)
}

/// Everything needed to render the prompt for any dish under one strategy.
#[derive(Clone, Debug)]
pub struct PromptPlan {
    pub strategy: Strategy,
    pub template: Template,
    pub examples: Vec<TaskTree>,
    pub instructions: Option<String>,
}

impl PromptPlan {
    pub fn new(strategy: Strategy) -> Self {
        Self {
            strategy,
            template: Template::default_for(strategy),
            examples: Vec::new(),
            instructions: None,
        }
    }

    pub fn with_template(mut self, template: Template) -> Self {
        self.template = template;
        self
    }

    pub fn with_examples(mut self, examples: Vec<TaskTree>) -> Self {
        self.examples = examples;
        self
    }

    pub fn with_instructions(mut self, instructions: impl Into<String>) -> Self {
        self.instructions = Some(instructions.into());
        self
    }

    /// Renders the prompt for `dish`. Contextual prompts take the dish's own
    /// ingredients and tools as the kitchen's available resources.
    pub fn render(&self, dish: &DishSpec) -> Result<PromptBundle, PromptError> {
        match self.strategy {
            Strategy::ExampleBased => render_example_based(dish, &self.examples, &self.template),
            Strategy::UserGuided => render_user_guided(
                dish,
                self.instructions.as_deref().unwrap_or_default(),
                &self.template,
            ),
            Strategy::Contextual => {
                render_contextual(dish, &dish.tools, &dish.ingredients, &self.template)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn omelette() -> DishSpec {
        DishSpec::new("breakfast", "Omelette", &["egg", "salt", "butter"], &["pan", "whisk"]).unwrap()
    }

    fn example(goal: &str) -> TaskTree {
        let src = format!(
            r#"{{"goal": {{"name": "{goal}"}}, "functional_units": [
                {{"inputs": [{{"name": "pan"}}, {{"name": "bread"}}], "motion": "toast",
                  "outputs": [{{"name": "pan", "states": ["hot"]}}, {{"name": "{goal}"}}]}}]}}"#
        );
        parse_task_tree_json(&src).unwrap()
    }

    #[test]
    fn dish_normalization_and_duplicates() {
        let dish = omelette();
        assert_eq!(dish.name, "omelette");
        assert!(DishSpec::new("x", "y", &["Egg", "egg "], &[] as &[&str]).is_err());
        assert!(DishSpec::new("x", " ", &["egg"], &[] as &[&str]).is_err());
        assert!(DishSpec::new("x", "y", &[] as &[&str], &[] as &[&str]).is_err());
    }

    #[test]
    fn example_based_prompt() {
        let examples = vec![example("toast"), example("french toast")];
        let template = Template::default_for(Strategy::ExampleBased);
        let bundle = render_example_based(&omelette(), &examples, &template).unwrap();
        assert_eq!(bundle.examples_used, 2);
        for tree in &examples {
            assert!(bundle.text.contains(&serialize_task_tree_json(tree)));
        }
        assert!(bundle
            .text
            .contains("# example: toast, 1 steps, tools: pan"));
        let again = render_example_based(&omelette(), &examples, &template).unwrap();
        assert_eq!(bundle, again);
        assert!(matches!(
            render_example_based(&omelette(), &[], &template),
            Err(PromptError::EmptyExamples)
        ));
    }

    #[test]
    fn user_guided_prompt_embeds_instructions() {
        let template = Template::default_for(Strategy::UserGuided);
        let bundle = render_user_guided(&omelette(), "vegetarian, no oven", &template).unwrap();
        assert!(bundle.text.contains("vegetarian, no oven"));
        let multi = "use butter\n  not oil\nserve hot";
        assert!(render_user_guided(&omelette(), multi, &template)
            .unwrap()
            .text
            .contains(multi));
        assert!(matches!(
            render_user_guided(&omelette(), "  ", &template),
            Err(PromptError::EmptyInstructions)
        ));
    }

    #[test]
    fn contextual_prompt_lists_resources() {
        let template = Template::default_for(Strategy::Contextual);
        let bundle = render_contextual(&omelette(), &["pan"], &["salt", "egg"], &template).unwrap();
        assert!(bundle.text.contains("Available tools: pan\n"));
        assert!(bundle.text.contains("Available ingredients: egg, salt\n"));
        let dup = render_contextual(&omelette(), &["pan", "Pan"], &["egg", "egg", "salt"], &template)
            .unwrap();
        assert_eq!(dup.text, bundle.text);
        assert!(matches!(
            render_contextual(&omelette(), &[] as &[&str], &[] as &[&str], &template),
            Err(PromptError::EmptyAvailability)
        ));
    }

    #[test]
    fn schema_block_appears_once() {
        let dish = omelette();
        let bundles = [
            render_example_based(&dish, &[example("toast")], &Template::default_for(Strategy::ExampleBased)).unwrap(),
            render_user_guided(&dish, "quick", &Template::default_for(Strategy::UserGuided)).unwrap(),
            render_contextual(&dish, &["pan"], &["egg"], &Template::default_for(Strategy::Contextual)).unwrap(),
        ];
        for bundle in bundles {
            assert_eq!(bundle.text.matches(schema_block()).count(), 1);
        }
    }

    #[test]
    fn hash_depends_on_strategy_and_text() {
        let a = PromptBundle::new(Strategy::ExampleBased, "x".into(), 0);
        let b = PromptBundle::new(Strategy::UserGuided, "x".into(), 0);
        assert_ne!(a.context_hash, b.context_hash);
        assert_eq!(a.context_hash.len(), 64);
    }

    #[test]
    fn loads_examples_in_filename_order() {
        let dir = tempfile::tempdir().unwrap();
        assert!(load_examples(dir.path()).unwrap().trees.is_empty());
        let write = |name: &str, text: &str| std::fs::write(dir.path().join(name), text).unwrap();
        write("b.json", &serialize_task_tree_json(&example("toast")));
        write("a.json", &serialize_task_tree_json(&example("french toast")));
        write("c.json", "not json");
        write("notes.txt", "ignored");
        let loaded = load_examples(dir.path()).unwrap();
        assert_eq!(loaded.trees.len(), 2);
        assert_eq!(loaded.trees[0].goal().name(), "french toast");
        assert_eq!(loaded.warnings.len(), 1);
        assert_eq!(loaded.warnings[0].0, "c.json");
        let again = load_examples(dir.path()).unwrap();
        assert_eq!(again.trees, loaded.trees);
        assert!(matches!(
            load_examples(&dir.path().join("missing")),
            Err(PromptError::MissingPath(_))
        ));
    }

    #[test]
    fn strategy_names() {
        for s in Strategy::ALL {
            assert_eq!(s.as_str().parse::<Strategy>().unwrap(), s);
        }
        assert!("few-shot".parse::<Strategy>().is_err());
    }
}
