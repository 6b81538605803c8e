//! Persisting one model response: a validated task tree as `.json`, or the
//! raw response as `.txt` with the reason it was rejected.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::PipelineError;
use crate::client::{FinishReason, ModelResponse};
use crate::foon::{parse_task_tree_json, serialize_task_tree_json, TaskTree, TaskTreeError};
use crate::prompt::{DishSpec, Strategy};

const MAX_FILENAME: usize = 120;

/// Lowercases, spells `&` as "and", collapses every run of characters other
/// than ASCII letters and digits into one `_`, trims `_` from both ends and
/// caps the length at 120. An empty result becomes "unnamed".
pub fn sanitize_filename(name: &str) -> String {
    let lowered = name.to_lowercase().replace('&', "and");
    let mut out = String::with_capacity(lowered.len());
    for c in lowered.chars() {
        if c.is_ascii_alphanumeric() {
            out.push(c);
        } else if !out.ends_with('_') {
            out.push('_');
        }
    }
    let mut trimmed = out.trim_matches('_').to_string();
    if trimmed.len() > MAX_FILENAME {
        trimmed.truncate(MAX_FILENAME);
        trimmed = trimmed.trim_end_matches('_').to_string();
    }
    if trimmed.is_empty() {
        "unnamed".to_string()
    } else {
        trimmed
    }
}

/// Removes one Markdown code fence wrapping the whole response, including
/// an info string such as `json` on the opening line. Returns `None` when
/// the trimmed text is not fenced at both ends.
pub fn strip_code_fence(text: &str) -> Option<&str> {
    let inner = text.trim().strip_prefix("```")?.strip_suffix("```")?;
    let body = match inner.split_once('\n') {
        Some((info, body))
            if info
                .trim()
                .chars()
                .all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_') =>
        {
            body
        }
        _ => inner,
    };
    Some(body.trim())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Outcome {
    JsonOk,
    TextFallback,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FallbackReason {
    JsonSyntax,
    Schema,
    Structural,
    /// The backend returned an error instead of text.
    ModelError,
}

impl From<&TaskTreeError> for FallbackReason {
    fn from(err: &TaskTreeError) -> Self {
        match err {
            TaskTreeError::JsonSyntax(_) => FallbackReason::JsonSyntax,
            TaskTreeError::Schema(_) => FallbackReason::Schema,
            TaskTreeError::Structural(_) => FallbackReason::Structural,
        }
    }
}

/// What happened to one dish.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutputRecord {
    pub dish: DishSpec,
    pub strategy: Strategy,
    pub outcome: Outcome,
    pub tree: Option<TaskTree>,
    pub raw_text: String,
    pub fallback_reason: Option<FallbackReason>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fallback_detail: Option<String>,
    /// Relative to the run's output directory, `/`-separated.
    pub output_path: String,
}

impl OutputRecord {
    pub fn is_consistent(&self) -> bool {
        match self.outcome {
            Outcome::JsonOk => self.tree.is_some() && self.fallback_reason.is_none(),
            Outcome::TextFallback => self.tree.is_none() && self.fallback_reason.is_some(),
        }
    }
}

/// Where one dish's output goes: `<root>/<stem>.{json,txt}`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OutputSlot {
    pub root: PathBuf,
    /// `<category>/<dish>` with both parts sanitized.
    pub stem: String,
}

impl OutputSlot {
    pub fn for_dish(root: &Path, dish: &DishSpec) -> Self {
        Self {
            root: root.to_path_buf(),
            stem: format!(
                "{}/{}",
                sanitize_filename(&dish.category),
                sanitize_filename(&dish.name)
            ),
        }
    }

    fn relative(&self, extension: &str) -> String {
        format!("{}.{extension}", self.stem)
    }

    fn write(&self, extension: &str, contents: &str) -> Result<String, PipelineError> {
        let relative = self.relative(extension);
        let path = self.root.join(&relative);
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent).map_err(|source| PipelineError::Io {
                path: parent.to_path_buf(),
                source,
            })?;
        }
        std::fs::write(&path, contents).map_err(|source| PipelineError::Io { path, source })?;
        Ok(relative)
    }
}

/// Hands out slots for dishes in order, appending `_2`, `_3`, ... when two
/// dishes sanitize to the same stem.
#[derive(Debug, Default)]
pub struct SlotAllocator {
    used: BTreeSet<String>,
}

impl SlotAllocator {
    pub fn allocate(&mut self, root: &Path, dish: &DishSpec) -> OutputSlot {
        let mut slot = OutputSlot::for_dish(root, dish);
        let base = slot.stem.clone();
        let mut n = 2;
        while !self.used.insert(slot.stem.clone()) {
            slot.stem = format!("{base}_{n}");
            n += 1;
        }
        slot
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct HandleOptions {
    /// Strip a wrapping Markdown code fence before parsing.
    pub lenient_json: bool,
}

impl Default for HandleOptions {
    fn default() -> Self {
        Self { lenient_json: true }
    }
}

/// Parses the response as a task tree and writes it out, falling back to
/// the raw text. Only IO failures are errors.
pub fn handle_response(
    response: &ModelResponse,
    dish: &DishSpec,
    strategy: Strategy,
    slot: &OutputSlot,
    options: HandleOptions,
) -> Result<OutputRecord, PipelineError> {
    if response.finish_reason == FinishReason::Error {
        return record_model_error(dish, strategy, slot, &response.text);
    }
    let candidate = if options.lenient_json {
        strip_code_fence(&response.text).unwrap_or(&response.text)
    } else {
        &response.text
    };
    match parse_task_tree_json(candidate) {
        Ok(tree) => {
            let output_path = slot.write("json", &serialize_task_tree_json(&tree))?;
            Ok(OutputRecord {
                dish: dish.clone(),
                strategy,
                outcome: Outcome::JsonOk,
                tree: Some(tree),
                raw_text: response.text.clone(),
                fallback_reason: None,
                fallback_detail: None,
                output_path,
            })
        }
        Err(err) => {
            let output_path = slot.write("txt", &response.text)?;
            Ok(OutputRecord {
                dish: dish.clone(),
                strategy,
                outcome: Outcome::TextFallback,
                tree: None,
                raw_text: response.text.clone(),
                fallback_reason: Some(FallbackReason::from(&err)),
                fallback_detail: Some(err.to_string()),
                output_path,
            })
        }
    }
}

/// Text fallback for a request that produced no usable response; the error
/// text is what gets preserved.
pub fn record_model_error(
    dish: &DishSpec,
    strategy: Strategy,
    slot: &OutputSlot,
    error_text: &str,
) -> Result<OutputRecord, PipelineError> {
    let output_path = slot.write("txt", error_text)?;
    Ok(OutputRecord {
        dish: dish.clone(),
        strategy,
        outcome: Outcome::TextFallback,
        tree: None,
        raw_text: error_text.to_string(),
        fallback_reason: Some(FallbackReason::ModelError),
        fallback_detail: Some(error_text.to_string()),
        output_path,
    })
}
