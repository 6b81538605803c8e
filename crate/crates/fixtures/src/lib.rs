//! Deterministic acceptance data: a 34-dish manifest, example task trees,
//! user instructions, and replay fixtures for three trial runs of every
//! prompting strategy.
//!
//! Everything under `data/` is produced by [`build`]; run the
//! `regenerate-fixtures` binary after changing this file.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use foonforge_core::client::{FinishReason, FixtureEntry, ReplayFixture};
use foonforge_core::foon::{parse_task_tree_json, serialize_task_tree_json};
use foonforge_core::pipeline::{parse_manifest, InputManifest};
use foonforge_core::prompt::{DishSpec, PromptPlan, Strategy};
use serde_json::{json, Value};

pub const TRIAL_RUNS: usize = 3;

pub const MANIFEST_FILE: &str = "manifest.json";
pub const EXAMPLES_DIR: &str = "examples";
pub const INSTRUCTIONS_FILE: &str = "instructions.txt";

pub fn data_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("data")
}

pub fn manifest_path() -> PathBuf {
    data_dir().join(MANIFEST_FILE)
}

pub fn examples_dir() -> PathBuf {
    data_dir().join(EXAMPLES_DIR)
}

pub fn instructions_path() -> PathBuf {
    data_dir().join(INSTRUCTIONS_FILE)
}

fn trial_relative(strategy: Strategy, run: usize) -> PathBuf {
    Path::new("trials")
        .join(strategy.as_str())
        .join(format!("run_{run}.json"))
}

/// Replay fixture for trial `run` (1-based) of `strategy`.
pub fn trial_fixture_path(strategy: Strategy, run: usize) -> PathBuf {
    data_dir().join(trial_relative(strategy, run))
}

/// The single-run fixture behind the 34 / 27 / 7 generation summary. It is
/// the first example-based trial.
pub fn summary_fixture_path() -> PathBuf {
    trial_fixture_path(Strategy::ExampleBased, 1)
}

type Dish = (&'static str, &'static str, &'static [&'static str], &'static [&'static str]);

const DISHES: &[Dish] = &[
    ("breakfast", "Pancakes", &["flour", "milk", "egg", "sugar", "butter"], &["bowl", "whisk", "pan"]),
    ("breakfast", "French Toast", &["bread", "egg", "milk", "cinnamon"], &["bowl", "pan"]),
    ("breakfast", "Scrambled Eggs", &["egg", "butter", "salt"], &["bowl", "pan", "spatula"]),
    ("breakfast", "Oatmeal", &["oats", "milk", "honey"], &["pot", "spoon"]),
    ("breakfast", "Avocado Toast", &["bread", "avocado", "lemon juice", "salt"], &["toaster", "knife"]),
    ("breakfast", "Fruit Smoothie", &["banana", "strawberries", "yogurt", "milk"], &["blender", "glass"]),
    ("pasta", "Mac & Cheese", &["macaroni", "cheddar cheese", "milk", "butter", "flour"], &["pot", "saucepan", "colander"]),
    ("pasta", "Spaghetti Carbonara", &["spaghetti", "egg", "pancetta", "parmesan", "black pepper"], &["pot", "pan", "bowl"]),
    ("pasta", "Penne Arrabbiata", &["penne", "tomato", "garlic", "chili flakes", "olive oil"], &["pot", "pan"]),
    ("pasta", "Pasta Primavera", &["fettuccine", "zucchini", "bell pepper", "peas", "olive oil"], &["pot", "pan", "knife"]),
    ("pasta", "Lasagna", &["lasagna sheets", "ground beef", "tomato sauce", "ricotta", "mozzarella"], &["baking dish", "pan", "oven"]),
    ("pasta", "Pesto Pasta", &["linguine", "basil", "pine nuts", "parmesan", "olive oil"], &["pot", "food processor"]),
    ("salads", "Caesar Salad", &["romaine lettuce", "croutons", "parmesan", "caesar dressing"], &["salad bowl", "knife"]),
    ("salads", "Greek Salad", &["cucumber", "tomato", "feta", "olives", "red onion"], &["salad bowl", "knife", "cutting board"]),
    ("salads", "Caprese Salad", &["tomato", "mozzarella", "basil", "balsamic vinegar"], &["plate", "knife"]),
    ("salads", "Potato Salad", &["potato", "mayonnaise", "celery", "mustard"], &["pot", "bowl", "knife"]),
    ("salads", "Fruit Salad", &["apple", "orange", "grapes", "kiwi"], &["bowl", "knife"]),
    ("soups", "Tomato Soup", &["tomato", "onion", "garlic", "vegetable stock", "cream"], &["pot", "blender"]),
    ("soups", "Chicken Noodle Soup", &["chicken", "egg noodles", "carrot", "celery", "chicken stock"], &["pot", "knife"]),
    ("soups", "Minestrone", &["zucchini", "carrot", "kidney beans", "ditalini", "tomato"], &["pot", "ladle"]),
    ("soups", "Miso Soup", &["miso paste", "tofu", "wakame", "scallion"], &["pot", "whisk"]),
    ("soups", "French Onion Soup", &["onion", "beef stock", "butter", "baguette", "gruyere"], &["pot", "oven", "soup bowl"]),
    ("mains", "Grilled Cheese", &["bread", "cheddar cheese", "butter"], &["pan", "spatula"]),
    ("mains", "Chicken Stir Fry", &["chicken", "broccoli", "soy sauce", "garlic", "ginger"], &["wok", "knife"]),
    ("mains", "Beef Tacos", &["ground beef", "taco shells", "lettuce", "tomato", "cheddar cheese"], &["pan", "knife"]),
    ("mains", "Fish & Chips", &["cod", "potato", "flour", "beer"], &["deep fryer", "bowl"]),
    ("mains", "Fish and Chips", &["haddock", "potato", "flour", "sparkling water"], &["deep fryer", "bowl"]),
    ("mains", "Margherita Pizza", &["pizza dough", "tomato sauce", "mozzarella", "basil"], &["oven", "baking sheet"]),
    ("mains", "Fried Rice", &["rice", "egg", "peas", "soy sauce", "scallion"], &["wok", "spatula"]),
    ("desserts", "Chocolate Chip Cookies", &["flour", "butter", "sugar", "chocolate chips", "egg"], &["bowl", "baking sheet", "oven"]),
    ("desserts", "Crème Brûlée", &["cream", "egg yolk", "sugar", "vanilla"], &["ramekin", "oven", "torch"]),
    ("desserts", "Banana Bread", &["banana", "flour", "sugar", "egg", "baking soda"], &["loaf pan", "bowl", "oven"]),
    ("desserts", "Apple Pie", &["apple", "pie crust", "sugar", "cinnamon"], &["pie dish", "oven"]),
    ("desserts", "Brownies", &["chocolate", "butter", "sugar", "egg", "flour"], &["baking pan", "bowl", "oven"]),
];

pub const INSTRUCTIONS: &str = "Break the recipe into small physical steps a robot can carry out. \
Name the utensil each step happens in, and mark every change of state on the object it applies to.\n";

fn manifest_json() -> String {
    let mut categories: Vec<(String, Vec<Value>)> = Vec::new();
    for (category, name, ingredients, tools) in DISHES {
        let dish = json!({"name": name, "ingredients": ingredients, "tools": tools});
        match categories.iter_mut().find(|(c, _)| c == category) {
            Some((_, dishes)) => dishes.push(dish),
            None => categories.push((category.to_string(), vec![dish])),
        }
    }
    let categories: Vec<Value> = categories
        .into_iter()
        .map(|(name, dishes)| json!({"name": name, "dishes": dishes}))
        .collect();
    let mut text = serde_json::to_string_pretty(&json!({ "categories": categories })).unwrap();
    text.push('\n');
    text
}

pub fn manifest() -> InputManifest {
    parse_manifest(&manifest_json()).expect("shipped manifest parses")
}

fn example_sources() -> Vec<(&'static str, Value)> {
    let o = |name: &str, states: &[&str]| json!({"name": name, "states": states});
    vec![
        (
            "01_boiled_egg.json",
            json!({
                "goal": o("egg", &["boiled", "peeled"]),
                "functional_units": [
                    {"inputs": [o("pot", &[]), o("water", &[])], "motion": "pour",
                     "outputs": [{"name": "pot", "states": ["full"], "ingredients": ["water"]}]},
                    {"inputs": [o("pot", &["full"]), o("egg", &["raw"]), o("stove", &[])], "motion": "boil",
                     "outputs": [o("egg", &["boiled"]), o("stove", &["on"])]},
                    {"inputs": [o("egg", &["boiled"])], "motion": "peel",
                     "outputs": [o("egg", &["boiled", "peeled"])]},
                ]
            }),
        ),
        (
            "02_buttered_toast.json",
            json!({
                "goal": o("buttered toast", &[]),
                "functional_units": [
                    {"inputs": [o("bread", &["sliced"]), o("toaster", &[])], "motion": "toast",
                     "outputs": [o("bread", &["toasted"]), o("toaster", &["warm"])]},
                    {"inputs": [o("bread", &["toasted"]), o("butter", &[]), o("knife", &[])], "motion": "spread",
                     "outputs": [o("buttered toast", &[]), o("knife", &["used"])]},
                ]
            }),
        ),
        (
            "03_green_tea.json",
            json!({
                "goal": o("green tea", &[]),
                "functional_units": [
                    {"inputs": [o("kettle", &[]), o("water", &[])], "motion": "boil",
                     "outputs": [o("water", &["hot"]), o("kettle", &["hot"])]},
                    {"inputs": [o("cup", &[]), o("tea bag", &[]), o("water", &["hot"])], "motion": "steep",
                     "outputs": [o("green tea", &[]), o("cup", &["full"])]},
                ]
            }),
        ),
    ]
}

/// The example trees in the order `load_examples` reads them back.
pub fn examples() -> Vec<foonforge_core::foon::TaskTree> {
    example_sources()
        .into_iter()
        .map(|(_, v)| parse_task_tree_json(&v.to_string()).expect("shipped examples are valid"))
        .collect()
}

pub fn plan(strategy: Strategy) -> PromptPlan {
    match strategy {
        Strategy::ExampleBased => PromptPlan::new(strategy).with_examples(examples()),
        Strategy::UserGuided => PromptPlan::new(strategy).with_instructions(INSTRUCTIONS),
        Strategy::Contextual => PromptPlan::new(strategy),
    }
}

/// Responses that stay unusable even after fence stripping, one per way a
/// model reply goes wrong.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Failure {
    Prose,
    Truncated,
    ProseAroundFence,
    MissingMotion,
    NoUnits,
    Cycle,
    GoalConsumed,
}

impl Failure {
    pub const ALL: [Failure; 7] = [
        Failure::Prose,
        Failure::Truncated,
        Failure::ProseAroundFence,
        Failure::MissingMotion,
        Failure::NoUnits,
        Failure::Cycle,
        Failure::GoalConsumed,
    ];
}

/// Shape of a usable response.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Tree {
    /// Use every ingredient and tool, or only the first half of the
    /// ingredients and no tools.
    pub complete: bool,
    /// Name the goal after the dish.
    pub right_goal: bool,
    /// Add an ingredient the dish does not list.
    pub hallucinated: bool,
    /// Wrap the JSON in a Markdown code fence.
    pub fenced: bool,
}

impl Tree {
    pub const PERFECT: Tree = Tree {
        complete: true,
        right_goal: true,
        hallucinated: false,
        fenced: false,
    };
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Response {
    Tree(Tree),
    Failure(Failure),
}

fn goal_name(dish: &DishSpec, shape: Tree) -> String {
    if shape.right_goal {
        dish.name.clone()
    } else {
        format!("homemade {}", dish.name)
    }
}

fn tree_value(dish: &DishSpec, shape: Tree) -> Value {
    let o = |name: &str| json!({ "name": name });
    let used: Vec<&String> = if shape.complete {
        dish.ingredients.iter().collect()
    } else {
        dish.ingredients.iter().take(dish.ingredients.len().div_ceil(2)).collect()
    };
    let tools: &[String] = if shape.complete { &dish.tools } else { &[] };

    let mut first_inputs: Vec<Value> = used.iter().map(|i| o(i)).collect();
    if shape.hallucinated {
        first_inputs.push(o("truffle oil"));
    }
    let mut second_inputs = vec![json!({"name": "mixture", "states": ["combined"]})];
    if let Some((vessel, rest)) = tools.split_first() {
        first_inputs.push(o(vessel));
        second_inputs.extend(rest.iter().map(|t| o(t)));
    }
    let goal = goal_name(dish, shape);
    json!({
        "goal": o(&goal),
        "functional_units": [
            {"inputs": first_inputs, "motion": "combine",
             "outputs": [{"name": "mixture", "states": ["combined"], "ingredients": used}]},
            {"inputs": second_inputs, "motion": "cook", "outputs": [o(&goal)]},
        ]
    })
}

fn failure_text(dish: &DishSpec, failure: Failure) -> (String, FinishReason) {
    let name = &dish.name;
    let good = tree_value(dish, Tree::PERFECT);
    let text = match failure {
        Failure::Prose => format!(
            "To make {name}, start by gathering {}. Combine them carefully, cook until done and serve warm.",
            dish.ingredients.join(", ")
        ),
        Failure::Truncated => {
            let full = serde_json::to_string_pretty(&good).unwrap();
            let cut = full.len() * 2 / 3;
            let cut = (0..=cut).rev().find(|&i| full.is_char_boundary(i)).unwrap_or(0);
            return (full[..cut].to_string(), FinishReason::Truncated);
        }
        Failure::ProseAroundFence => format!(
            "Here is the task tree for {name}:\n```json\n{}\n```\nLet me know if you need changes.",
            serde_json::to_string_pretty(&good).unwrap()
        ),
        Failure::MissingMotion => json!({
            "goal": {"name": name},
            "functional_units": [
                {"inputs": dish.ingredients.iter().map(|i| json!({"name": i})).collect::<Vec<_>>(),
                 "outputs": [{"name": name}]}
            ]
        })
        .to_string(),
        Failure::NoUnits => json!({"goal": {"name": name}, "functional_units": []}).to_string(),
        Failure::Cycle => json!({
            "goal": {"name": name},
            "functional_units": [
                {"inputs": [{"name": "dough"}], "motion": "knead", "outputs": [{"name": "batter"}]},
                {"inputs": [{"name": "batter"}], "motion": "rest", "outputs": [{"name": "dough"}]},
                {"inputs": [{"name": "batter"}, {"name": dish.ingredients[0]}], "motion": "bake",
                 "outputs": [{"name": name}]}
            ]
        })
        .to_string(),
        Failure::GoalConsumed => json!({
            "goal": {"name": name},
            "functional_units": [
                {"inputs": [{"name": dish.ingredients[0]}], "motion": "cook", "outputs": [{"name": name}]},
                {"inputs": [{"name": name}, {"name": "plate"}], "motion": "serve",
                 "outputs": [{"name": "plate", "states": ["full"]}]}
            ]
        })
        .to_string(),
    };
    (text, FinishReason::Complete)
}

pub fn response_text(dish: &DishSpec, response: Response) -> (String, FinishReason) {
    match response {
        Response::Tree(shape) => {
            let value = tree_value(dish, shape);
            let text = if shape.fenced {
                format!("```json\n{}\n```", serde_json::to_string_pretty(&value).unwrap())
            } else {
                value.to_string()
            };
            (text, FinishReason::Complete)
        }
        Response::Failure(failure) => failure_text(dish, failure),
    }
}

/// Number of usable responses in each trial of each strategy.
pub fn usable_count(strategy: Strategy, run: usize) -> usize {
    match (strategy, run) {
        (Strategy::ExampleBased, 1) => 27,
        (Strategy::ExampleBased, 2) => 28,
        (Strategy::ExampleBased, _) => 27,
        (Strategy::UserGuided, 1) => 24,
        (Strategy::UserGuided, 2) => 28,
        (Strategy::UserGuided, _) => 32,
        (Strategy::Contextual, 1) => 2,
        (Strategy::Contextual, 2) => 12,
        (Strategy::Contextual, _) => 28,
    }
}

fn usable_shape(strategy: Strategy, index: usize) -> Tree {
    match strategy {
        Strategy::ExampleBased => Tree {
            fenced: index % 5 == 1,
            ..Tree::PERFECT
        },
        Strategy::UserGuided => Tree {
            complete: false,
            right_goal: false,
            hallucinated: false,
            fenced: index.is_multiple_of(4),
        },
        Strategy::Contextual => Tree {
            complete: false,
            right_goal: false,
            hallucinated: true,
            fenced: false,
        },
    }
}

/// The response planned for every dish, in manifest order. Failures are
/// spread evenly over the manifest and cycle through every failure kind.
pub fn responses(strategy: Strategy, run: usize) -> Vec<Response> {
    let total = DISHES.len();
    let failures = total - usable_count(strategy, run);
    let offset = run - 1;
    let failing: Vec<usize> = (0..failures)
        .map(|k| ((k * total) / failures.max(1) + offset) % total)
        .collect();
    let mut kinds = Failure::ALL.iter().cycle().skip(offset);
    (0..total)
        .map(|i| {
            if failing.contains(&i) {
                Response::Failure(*kinds.next().unwrap())
            } else {
                Response::Tree(usable_shape(strategy, i))
            }
        })
        .collect()
}

pub fn trial_fixture(strategy: Strategy, run: usize) -> ReplayFixture {
    let manifest = manifest();
    let plan = plan(strategy);
    let mut fixture = ReplayFixture::default();
    for (dish, response) in manifest.dishes().zip(responses(strategy, run)) {
        let prompt = plan.render(dish).expect("shipped plans render");
        let (text, finish_reason) = response_text(dish, response);
        fixture.insert(prompt.context_hash, FixtureEntry { text, finish_reason });
    }
    fixture
}

/// Every shipped file, keyed by its path relative to [`data_dir`].
pub fn build() -> BTreeMap<PathBuf, String> {
    let mut files = BTreeMap::new();
    files.insert(PathBuf::from(MANIFEST_FILE), manifest_json());
    files.insert(PathBuf::from(INSTRUCTIONS_FILE), INSTRUCTIONS.to_string());
    for (file, value) in example_sources() {
        let tree = parse_task_tree_json(&value.to_string()).expect("shipped examples are valid");
        files.insert(Path::new(EXAMPLES_DIR).join(file), serialize_task_tree_json(&tree));
    }
    for strategy in Strategy::ALL {
        for run in 1..=TRIAL_RUNS {
            files.insert(trial_relative(strategy, run), trial_fixture(strategy, run).to_json());
        }
    }
    files
}

pub fn write_all(dir: &Path) -> std::io::Result<()> {
    for (relative, contents) in build() {
        let path = dir.join(relative);
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent)?;
        }
        std::fs::write(path, contents)?;
    }
    Ok(())
}
