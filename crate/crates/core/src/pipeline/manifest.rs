//! Input manifest:
//!
//! ```json
//! {"categories": [
//!   {"name": "pasta", "dishes": [
//!     {"name": "mac and cheese", "ingredients": ["macaroni", "cheese"], "tools": ["pot"]}
//!   ]}
//! ]}
//! ```

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::Value;
use thiserror::Error;

use crate::prompt::DishSpec;

#[derive(Debug, Error)]
pub enum ManifestError {
    #[error("reading manifest {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("manifest is not valid JSON: {0}")]
    JsonSyntax(String),
    #[error("manifest schema error at {pointer}: {message}")]
    Schema { pointer: String, message: String },
}

fn schema(pointer: impl Into<String>, message: impl Into<String>) -> ManifestError {
    ManifestError::Schema {
        pointer: pointer.into(),
        message: message.into(),
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Category {
    pub name: String,
    pub dishes: Vec<DishSpec>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct InputManifest {
    pub categories: Vec<Category>,
}

impl InputManifest {
    /// All dishes in manifest order.
    pub fn dishes(&self) -> impl Iterator<Item = &DishSpec> {
        self.categories.iter().flat_map(|c| c.dishes.iter())
    }

    pub fn dish_count(&self) -> usize {
        self.categories.iter().map(|c| c.dishes.len()).sum()
    }
}

fn string_list(value: &Value, pointer: &str) -> Result<Vec<String>, ManifestError> {
    let items = value
        .as_array()
        .ok_or_else(|| schema(pointer, "expected an array of strings"))?;
    items
        .iter()
        .enumerate()
        .map(|(i, item)| {
            item.as_str()
                .map(str::to_string)
                .ok_or_else(|| schema(format!("{pointer}/{i}"), "expected a string"))
        })
        .collect()
}

fn required_str<'a>(
    object: &'a serde_json::Map<String, Value>,
    key: &str,
    pointer: &str,
) -> Result<&'a str, ManifestError> {
    match object.get(key) {
        Some(Value::String(s)) if !s.trim().is_empty() => Ok(s),
        Some(Value::String(_)) => Err(schema(format!("{pointer}/{key}"), "must not be empty")),
        Some(_) => Err(schema(format!("{pointer}/{key}"), "expected a string")),
        None => Err(schema(pointer, format!("missing required field {key:?}"))),
    }
}

pub fn parse_manifest(text: &str) -> Result<InputManifest, ManifestError> {
    let root: Value =
        serde_json::from_str(text).map_err(|e| ManifestError::JsonSyntax(e.to_string()))?;
    let root = root
        .as_object()
        .ok_or_else(|| schema("", "expected a JSON object"))?;
    let categories = match root.get("categories") {
        Some(Value::Array(list)) => list,
        Some(_) => return Err(schema("/categories", "expected an array")),
        None => return Err(schema("", "missing required field \"categories\"")),
    };
    if categories.is_empty() {
        return Err(schema("/categories", "at least one category is required"));
    }

    let mut seen: BTreeMap<String, String> = BTreeMap::new();
    let mut out = Vec::with_capacity(categories.len());
    for (ci, category) in categories.iter().enumerate() {
        let cat_ptr = format!("/categories/{ci}");
        let category = category
            .as_object()
            .ok_or_else(|| schema(&cat_ptr, "expected an object"))?;
        let cat_name = required_str(category, "name", &cat_ptr)?;
        let dishes = match category.get("dishes") {
            Some(Value::Array(list)) => list,
            Some(_) => return Err(schema(format!("{cat_ptr}/dishes"), "expected an array")),
            None => return Err(schema(&cat_ptr, "missing required field \"dishes\"")),
        };

        let mut specs = Vec::with_capacity(dishes.len());
        for (di, dish) in dishes.iter().enumerate() {
            let dish_ptr = format!("{cat_ptr}/dishes/{di}");
            let dish = dish
                .as_object()
                .ok_or_else(|| schema(&dish_ptr, "expected an object"))?;
            let name = required_str(dish, "name", &dish_ptr)?;
            let ingredients = match dish.get("ingredients") {
                Some(v) => string_list(v, &format!("{dish_ptr}/ingredients"))?,
                None => return Err(schema(&dish_ptr, "missing required field \"ingredients\"")),
            };
            if ingredients.is_empty() {
                return Err(schema(
                    format!("{dish_ptr}/ingredients"),
                    "at least one ingredient is required",
                ));
            }
            let tools = match dish.get("tools") {
                Some(v) => string_list(v, &format!("{dish_ptr}/tools"))?,
                None => Vec::new(),
            };
            let spec = DishSpec::new(cat_name, name, &ingredients, &tools)
                .map_err(|e| schema(&dish_ptr, e.to_string()))?;
            if let Some(first) = seen.insert(spec.name.clone(), dish_ptr.clone()) {
                return Err(schema(
                    format!("{dish_ptr}/name"),
                    format!("duplicate dish {:?} (first defined at {first})", spec.name),
                ));
            }
            specs.push(spec);
        }
        out.push(Category {
            name: crate::foon::normalize_name(cat_name),
            dishes: specs,
        });
    }
    Ok(InputManifest { categories: out })
}

pub fn read_manifest(path: &Path) -> Result<InputManifest, ManifestError> {
    let text = std::fs::read_to_string(path).map_err(|source| ManifestError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_manifest(&text)
}
