//! Line-oriented FOON text format.
//!
//! ```text
//! O<TAB>macaroni
//! S<TAB>raw
//! M<TAB>boil
//! O<TAB>macaroni
//! S<TAB>cooked
//! //
//! ```
//!
//! Each unit lists its input objects, exactly one `M` line, then its output
//! objects. An object is an `O` line, an optional `I` line with
//! comma-separated contained ingredients, then any number of `S` lines.
//! Units are separated by a line holding exactly `//`; a trailing separator
//! after the last unit is accepted. Blank lines are ignored.

use super::model::{FoonGraph, FunctionalUnit, MotionNode, ObjectNode};
use super::FoonError;

const SEPARATOR: &str = "//";

#[derive(Default)]
struct UnitBuilder {
    start_line: usize,
    inputs: Vec<ObjectNode>,
    motion: Option<MotionNode>,
    outputs: Vec<ObjectNode>,
    /// Whether the last line was the `O` of the current object, which is
    /// the only place an `I` line may appear.
    just_opened: bool,
    has_lines: bool,
}

impl UnitBuilder {
    fn current_object(&mut self) -> Option<&mut ObjectNode> {
        if self.motion.is_some() {
            self.outputs.last_mut()
        } else {
            self.inputs.last_mut()
        }
    }

    fn finish(self, unit_number: usize) -> Result<FunctionalUnit, FoonError> {
        let Some(motion) = self.motion else {
            return Err(FoonError::Syntax {
                line: self.start_line,
                expected: "an M line in unit",
                found: format!("unit {unit_number} without a motion"),
            });
        };
        if self.inputs.is_empty() || self.outputs.is_empty() {
            return Err(FoonError::EmptyUnit {
                line: self.start_line,
                unit: unit_number,
                side: if self.inputs.is_empty() { "inputs" } else { "outputs" },
            });
        }
        Ok(FunctionalUnit::new(self.inputs, motion, self.outputs))
    }
}

/// Parses FOON text into a graph, preserving unit order.
pub fn parse_foon_text(source: &str) -> Result<FoonGraph, FoonError> {
    let mut units = Vec::new();
    let mut builder = UnitBuilder {
        start_line: 1,
        ..UnitBuilder::default()
    };

    for (idx, raw_line) in source.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw_line.strip_suffix('\r').unwrap_or(raw_line);
        if line.trim().is_empty() {
            continue;
        }
        if line == SEPARATOR {
            let finished = std::mem::replace(
                &mut builder,
                UnitBuilder {
                    start_line: line_no + 1,
                    ..UnitBuilder::default()
                },
            );
            if !finished.has_lines {
                return Err(FoonError::EmptyUnit {
                    line: line_no,
                    unit: units.len() + 1,
                    side: "inputs",
                });
            }
            units.push(finished.finish(units.len() + 1)?);
            continue;
        }

        if !builder.has_lines {
            builder.start_line = line_no;
            builder.has_lines = true;
        }
        let syntax = |expected: &'static str| FoonError::Syntax {
            line: line_no,
            expected,
            found: line.to_string(),
        };
        let (tag, value) = line
            .split_once('\t')
            .ok_or_else(|| syntax("a tag (O, S, I, M) followed by a tab"))?;
        let opened_before = std::mem::replace(&mut builder.just_opened, false);
        let at_line = |e: FoonError| e.at_line(line_no);

        match tag {
            "O" => {
                let object = ObjectNode::new(value).map_err(at_line)?;
                if builder.motion.is_some() {
                    builder.outputs.push(object);
                } else {
                    builder.inputs.push(object);
                }
                builder.just_opened = true;
            }
            "S" => {
                let object = builder
                    .current_object()
                    .ok_or_else(|| syntax("an O line before S"))?;
                object.add_state(value).map_err(at_line)?;
            }
            "I" => {
                if !opened_before {
                    return Err(syntax("I directly after its O line"));
                }
                let object = builder
                    .current_object()
                    .ok_or_else(|| syntax("an O line before I"))?;
                object
                    .set_ingredients(value.split(','))
                    .map_err(at_line)?;
            }
            "M" => {
                if builder.motion.is_some() {
                    return Err(FoonError::DuplicateMotion {
                        line: line_no,
                        unit: units.len() + 1,
                    });
                }
                if builder.inputs.is_empty() {
                    return Err(FoonError::EmptyUnit {
                        line: line_no,
                        unit: units.len() + 1,
                        side: "inputs",
                    });
                }
                builder.motion = Some(MotionNode::new(value).map_err(at_line)?);
            }
            _ => return Err(syntax("one of the tags O, S, I, M")),
        }
    }

    if builder.has_lines {
        units.push(builder.finish(units.len() + 1)?);
    }
    if units.is_empty() {
        return Err(FoonError::NoUnits);
    }
    Ok(FoonGraph::new(units))
}

fn write_object(out: &mut String, object: &ObjectNode) {
    out.push_str("O\t");
    out.push_str(object.name());
    out.push('\n');
    if let Some(ingredients) = object.ingredients() {
        out.push_str("I\t");
        out.push_str(&ingredients.join(","));
        out.push('\n');
    }
    for state in object.states() {
        out.push_str("S\t");
        out.push_str(state);
        out.push('\n');
    }
}

/// Canonical text form. An empty graph serializes to the empty string.
pub fn serialize_foon_text(graph: &FoonGraph) -> String {
    let mut out = String::new();
    for (i, unit) in graph.units.iter().enumerate() {
        if i > 0 {
            out.push_str(SEPARATOR);
            out.push('\n');
        }
        for object in &unit.inputs {
            write_object(&mut out, object);
        }
        out.push_str("M\t");
        out.push_str(unit.motion.name());
        out.push('\n');
        for object in &unit.outputs {
            write_object(&mut out, object);
        }
    }
    out
}
