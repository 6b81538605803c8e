//! Scoring generated task trees and summarizing runs.
//!
//! Accuracy is the fraction of five equally weighted format rules a tree
//! satisfies:
//!
//! 1. the goal is named after the dish;
//! 2. every motion is a verb (contains at least one letter);
//! 3. every raw input and container ingredient is one of the dish's
//!    ingredients or tools;
//! 4. the tree satisfies the task-tree structure (always true for a parsed
//!    `TaskTree`, kept so the scale runs over five rules);
//! 5. every output of a unit that does not produce the goal is consumed by
//!    another unit.
//!
//! Completeness is the mean of ingredient coverage and tool coverage, or
//! ingredient coverage alone when the dish lists no tools.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use serde::Serialize;
use thiserror::Error;

use crate::foon::{validate_task_tree, TaskTree};
use crate::pipeline::{Outcome, OutputRecord, RunReport};
use crate::prompt::{DishSpec, Strategy};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum EvalError {
    #[error("no runs to compare")]
    EmptyRuns,
    #[error("strategy {0} has no runs")]
    NoRunsFor(Strategy),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MetricScores {
    pub accuracy: f64,
    pub completeness: f64,
}

impl MetricScores {
    pub const ZERO: MetricScores = MetricScores {
        accuracy: 0.0,
        completeness: 0.0,
    };
}

/// Pass/fail for each accuracy rule, in the order listed in the module docs.
pub fn accuracy_rules(tree: &TaskTree, dish: &DishSpec) -> [bool; 5] {
    let graph = tree.graph();
    let goal = tree.goal().key();

    let goal_named = tree.goal().name() == dish.name;

    let motions_are_verbs = tree
        .units()
        .iter()
        .all(|u| u.motion.name().chars().any(char::is_alphabetic));

    let produced: BTreeSet<&str> = tree
        .units()
        .iter()
        .flat_map(|u| u.outputs.iter().map(|o| o.name()))
        .collect();
    let allowed: BTreeSet<&str> = dish
        .ingredients
        .iter()
        .chain(&dish.tools)
        .map(String::as_str)
        .collect();
    let no_hallucinations = tree.units().iter().all(|unit| {
        let raw_inputs_ok = unit
            .inputs
            .iter()
            .filter(|input| graph.producers_of(&input.key()).is_empty())
            .all(|input| allowed.contains(input.name()));
        let contents_ok = unit
            .inputs
            .iter()
            .chain(&unit.outputs)
            .flat_map(|o| o.ingredients().unwrap_or_default())
            .all(|name| allowed.contains(name.as_str()) || produced.contains(name.as_str()));
        raw_inputs_ok && contents_ok
    });

    let structural = validate_task_tree(graph, tree.goal()).ok();

    let intermediates_consumed = tree
        .units()
        .iter()
        .enumerate()
        .filter(|(_, unit)| !unit.produces(&goal))
        .all(|(i, unit)| {
            unit.outputs.iter().all(|output| {
                let key = output.key();
                tree.units()
                    .iter()
                    .enumerate()
                    .any(|(j, other)| j != i && other.consumes(&key))
            })
        });

    [
        goal_named,
        motions_are_verbs,
        no_hallucinations,
        structural,
        intermediates_consumed,
    ]
}

pub fn score_accuracy(tree: &TaskTree, dish: &DishSpec) -> f64 {
    let passed = accuracy_rules(tree, dish).iter().filter(|&&ok| ok).count();
    passed as f64 / 5.0
}

fn coverage(wanted: &[String], present: &BTreeSet<&str>) -> f64 {
    let hits = wanted.iter().filter(|w| present.contains(w.as_str())).count();
    hits as f64 / wanted.len() as f64
}

pub fn score_completeness(tree: &TaskTree, dish: &DishSpec) -> f64 {
    let mut ingredient_mentions = BTreeSet::new();
    let mut object_names = BTreeSet::new();
    for unit in tree.units() {
        for input in &unit.inputs {
            ingredient_mentions.insert(input.name());
        }
        for object in unit.inputs.iter().chain(&unit.outputs) {
            object_names.insert(object.name());
            for contained in object.ingredients().unwrap_or_default() {
                ingredient_mentions.insert(contained.as_str());
            }
        }
    }
    let ingredients = coverage(&dish.ingredients, &ingredient_mentions);
    if dish.tools.is_empty() {
        ingredients
    } else {
        (ingredients + coverage(&dish.tools, &object_names)) / 2.0
    }
}

pub fn score_tree(tree: &TaskTree, dish: &DishSpec) -> MetricScores {
    MetricScores {
        accuracy: score_accuracy(tree, dish),
        completeness: score_completeness(tree, dish),
    }
}

/// Scores a record; text fallbacks score zero on both metrics.
pub fn score_record(record: &OutputRecord) -> MetricScores {
    match (&record.outcome, &record.tree) {
        (Outcome::JsonOk, Some(tree)) => score_tree(tree, &record.dish),
        _ => MetricScores::ZERO,
    }
}

fn mean(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        None
    } else {
        Some(values.iter().sum::<f64>() / values.len() as f64)
    }
}

/// Population standard deviation.
fn std_dev(values: &[f64]) -> f64 {
    let Some(mu) = mean(values) else { return 0.0 };
    let var = values.iter().map(|v| (v - mu).powi(2)).sum::<f64>() / values.len() as f64;
    var.sqrt()
}

/// Counts for one run, plus rates and scores derived from them.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunSummary {
    pub strategy: Strategy,
    pub total: usize,
    pub json_ok: usize,
    pub text_fallback: usize,
    /// `json_ok / total`; absent for an empty run.
    pub success_rate: Option<f64>,
    /// Over JSON_OK records only.
    pub mean_accuracy: Option<f64>,
    pub mean_completeness: Option<f64>,
}

pub fn summarize_run(report: &RunReport) -> RunSummary {
    let scores: Vec<MetricScores> = report
        .records
        .iter()
        .filter(|r| r.outcome == Outcome::JsonOk)
        .map(score_record)
        .collect();
    let accuracy: Vec<f64> = scores.iter().map(|s| s.accuracy).collect();
    let completeness: Vec<f64> = scores.iter().map(|s| s.completeness).collect();
    RunSummary {
        strategy: report.strategy,
        total: report.total,
        json_ok: report.json_ok,
        text_fallback: report.text_fallback,
        success_rate: (report.total > 0).then(|| report.json_ok as f64 / report.total as f64),
        mean_accuracy: mean(&accuracy),
        mean_completeness: mean(&completeness),
    }
}

fn fmt_rate(value: Option<f64>) -> String {
    value.map_or_else(|| "n/a".to_string(), |v| format!("{v:.3}"))
}

impl RunSummary {
    /// `(metric, value, notes)` rows: the three counts, then derived figures.
    pub fn rows(&self) -> Vec<(&'static str, String, &'static str)> {
        vec![
            ("total_generated", self.total.to_string(), "recipes attempted from the input manifest"),
            ("json_outputs", self.json_ok.to_string(), "responses saved as validated task-tree JSON"),
            ("text_outputs", self.text_fallback.to_string(), "responses saved as text after a parse or validation failure"),
            ("success_rate", fmt_rate(self.success_rate), "json_outputs / total_generated"),
            ("mean_accuracy", fmt_rate(self.mean_accuracy), "mean over JSON outputs"),
            ("mean_completeness", fmt_rate(self.mean_completeness), "mean over JSON outputs"),
        ]
    }

    pub fn to_text(&self) -> String {
        let rows = self.rows();
        let name_w = rows.iter().map(|r| r.0.len()).max().unwrap_or(6).max(6);
        let value_w = rows.iter().map(|r| r.1.len()).max().unwrap_or(5).max(5);
        let mut out = String::new();
        let _ = writeln!(out, "{:<name_w$}  {:>value_w$}  notes", "metric", "value");
        for (metric, value, notes) in rows {
            let _ = writeln!(out, "{metric:<name_w$}  {value:>value_w$}  {notes}");
        }
        out
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("metric,value,notes\n");
        for (metric, value, notes) in self.rows() {
            let _ = writeln!(out, "{metric},{value},{notes}");
        }
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub enum Band {
    Low,
    Medium,
    High,
}

impl Band {
    pub fn from_mean(value: f64) -> Band {
        if value >= 0.75 {
            Band::High
        } else if value >= 0.5 {
            Band::Medium
        } else {
            Band::Low
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub enum Reliability {
    Inconsistent,
    Variable,
    Consistent,
}

impl Reliability {
    pub fn from_std_dev(value: f64) -> Reliability {
        if value <= 0.05 {
            Reliability::Consistent
        } else if value <= 0.15 {
            Reliability::Variable
        } else {
            Reliability::Inconsistent
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StrategyRow {
    pub strategy: Strategy,
    pub runs: usize,
    pub mean_accuracy: f64,
    pub mean_completeness: f64,
    pub accuracy_std_dev: f64,
    pub accuracy_band: Band,
    pub completeness_band: Band,
    pub reliability: Reliability,
    /// Reliability cannot be measured from one run; it is reported as
    /// consistent and flagged.
    pub single_run: bool,
}

impl StrategyRow {
    pub fn reliability_label(&self) -> String {
        if self.single_run {
            format!("{:?} (single run)", self.reliability)
        } else {
            format!("{:?}", self.reliability)
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StrategyComparison {
    pub rows: Vec<StrategyRow>,
}

/// Mean accuracy and completeness of one run over all its records, with
/// fallbacks counted as zero.
pub fn run_means(report: &RunReport) -> MetricScores {
    let scores: Vec<MetricScores> = report.records.iter().map(score_record).collect();
    let accuracy: Vec<f64> = scores.iter().map(|s| s.accuracy).collect();
    let completeness: Vec<f64> = scores.iter().map(|s| s.completeness).collect();
    MetricScores {
        accuracy: mean(&accuracy).unwrap_or(0.0),
        completeness: mean(&completeness).unwrap_or(0.0),
    }
}

/// Per-strategy means over runs, banded (High >= 0.75, Medium >= 0.5, else
/// Low), with reliability from the spread of per-run mean accuracy
/// (Consistent <= 0.05, Variable <= 0.15, else Inconsistent).
pub fn compare_strategies(
    runs: &BTreeMap<Strategy, Vec<RunReport>>,
) -> Result<StrategyComparison, EvalError> {
    if runs.is_empty() {
        return Err(EvalError::EmptyRuns);
    }
    let mut rows = Vec::new();
    for (&strategy, reports) in runs {
        if reports.is_empty() {
            return Err(EvalError::NoRunsFor(strategy));
        }
        let per_run: Vec<MetricScores> = reports.iter().map(run_means).collect();
        let accuracy: Vec<f64> = per_run.iter().map(|s| s.accuracy).collect();
        let completeness: Vec<f64> = per_run.iter().map(|s| s.completeness).collect();
        let mean_accuracy = mean(&accuracy).unwrap_or(0.0);
        let mean_completeness = mean(&completeness).unwrap_or(0.0);
        let single_run = reports.len() == 1;
        let accuracy_std_dev = std_dev(&accuracy);
        rows.push(StrategyRow {
            strategy,
            runs: reports.len(),
            mean_accuracy,
            mean_completeness,
            accuracy_std_dev,
            accuracy_band: Band::from_mean(mean_accuracy),
            completeness_band: Band::from_mean(mean_completeness),
            reliability: if single_run {
                Reliability::Consistent
            } else {
                Reliability::from_std_dev(accuracy_std_dev)
            },
            single_run,
        });
    }
    Ok(StrategyComparison { rows })
}

impl StrategyComparison {
    pub fn row(&self, strategy: Strategy) -> Option<&StrategyRow> {
        self.rows.iter().find(|r| r.strategy == strategy)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:<14}  {:>4}  {:>8}  {:>12}  {:<8}  {:<12}  reliability",
            "strategy", "runs", "accuracy", "completeness", "acc_band", "compl_band"
        );
        for row in &self.rows {
            let _ = writeln!(
                out,
                "{:<14}  {:>4}  {:>8.3}  {:>12.3}  {:<8}  {:<12}  {}",
                row.strategy.as_str(),
                row.runs,
                row.mean_accuracy,
                row.mean_completeness,
                format!("{:?}", row.accuracy_band),
                format!("{:?}", row.completeness_band),
                row.reliability_label()
            );
        }
        out
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "strategy,runs,mean_accuracy,mean_completeness,accuracy_std_dev,accuracy_band,completeness_band,reliability\n",
        );
        for row in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{:.4},{:.4},{:.4},{:?},{:?},{}",
                row.strategy.as_str(),
                row.runs,
                row.mean_accuracy,
                row.mean_completeness,
                row.accuracy_std_dev,
                row.accuracy_band,
                row.completeness_band,
                row.reliability_label()
            );
        }
        out
    }
}
