use std::collections::BTreeMap;

use super::{PromptError, Strategy};

/// Placeholders a template may reference.
pub const PLACEHOLDERS: [&str; 8] = [
    "dish_name",
    "category",
    "ingredients",
    "tools",
    "examples",
    "instructions",
    "availability",
    "schema",
];

/// The output-format block substituted for `{{schema}}`.
pub fn schema_block() -> &'static str {
    include_str!("../../templates/schema.txt").trim_end()
}

#[derive(Clone, Debug)]
enum Piece {
    Literal(String),
    Slot(&'static str),
}

/// A prompt template with `{{placeholder}}` slots. Parsing checks that every
/// slot is a known placeholder and that `{{schema}}` appears exactly once.
#[derive(Clone, Debug)]
pub struct Template {
    pieces: Vec<Piece>,
}

impl Template {
    pub fn parse(source: &str) -> Result<Self, PromptError> {
        let mut pieces = Vec::new();
        let mut rest = source;
        let mut schema_slots = 0;
        while let Some(open) = rest.find("{{") {
            let after = &rest[open + 2..];
            let close = after.find("}}").ok_or_else(|| {
                PromptError::Template(format!(
                    "unclosed placeholder near {:?}",
                    truncate(&rest[open..], 24)
                ))
            })?;
            let name = after[..close].trim();
            let slot = PLACEHOLDERS
                .iter()
                .copied()
                .find(|p| *p == name)
                .ok_or_else(|| PromptError::Template(format!("unknown placeholder {{{{{name}}}}}")))?;
            if slot == "schema" {
                schema_slots += 1;
            }
            if open > 0 {
                pieces.push(Piece::Literal(rest[..open].to_string()));
            }
            pieces.push(Piece::Slot(slot));
            rest = &after[close + 2..];
        }
        if !rest.is_empty() {
            pieces.push(Piece::Literal(rest.to_string()));
        }
        if schema_slots != 1 {
            return Err(PromptError::Template(format!(
                "template must contain {{{{schema}}}} exactly once, found {schema_slots}"
            )));
        }
        Ok(Self { pieces })
    }

    /// The template shipped for `strategy`.
    pub fn default_for(strategy: Strategy) -> Self {
        let source = match strategy {
            Strategy::ExampleBased => include_str!("../../templates/example_based.txt"),
            Strategy::UserGuided => include_str!("../../templates/user_guided.txt"),
            Strategy::Contextual => include_str!("../../templates/contextual.txt"),
        };
        Self::parse(source).expect("shipped templates are valid")
    }

    pub fn uses(&self, placeholder: &str) -> bool {
        self.pieces
            .iter()
            .any(|p| matches!(p, Piece::Slot(s) if *s == placeholder))
    }

    /// Substitutes values; slots without a value render empty.
    pub fn render(&self, values: &BTreeMap<&'static str, String>) -> String {
        let mut out = String::new();
        for piece in &self.pieces {
            match piece {
                Piece::Literal(text) => out.push_str(text),
                Piece::Slot(name) => {
                    if let Some(value) = values.get(name) {
                        out.push_str(value);
                    }
                }
            }
        }
        out
    }
}

fn truncate(s: &str, max: usize) -> &str {
    match s.char_indices().nth(max) {
        Some((i, _)) => &s[..i],
        None => s,
    }
}
