//! Batch generation: read the manifest, render and send one prompt per
//! dish, persist each response as a task tree or a text fallback, and write
//! `run_report.json`.

mod manifest;
mod output;

use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::Mutex;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::client::{ClientError, GenerationParams, TextGenerator};
use crate::prompt::{PromptBundle, PromptError, PromptPlan, Strategy};

pub use manifest::{parse_manifest, read_manifest, Category, InputManifest, ManifestError};
pub use output::{
    handle_response, record_model_error, sanitize_filename, strip_code_fence, FallbackReason,
    HandleOptions, Outcome, OutputRecord, OutputSlot, SlotAllocator,
};

pub const REPORT_FILE: &str = "run_report.json";

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Manifest(#[from] ManifestError),
    #[error(transparent)]
    Prompt(#[from] PromptError),
    #[error(transparent)]
    Client(#[from] ClientError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("invalid run report {path}: {message}")]
    Report { path: PathBuf, message: String },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RunOptions {
    pub handle: HandleOptions,
    /// Maximum number of requests in flight at once.
    pub concurrency: usize,
    /// Abort the run on a replay fixture miss instead of recording it as a
    /// fallback.
    pub strict_fixtures: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            handle: HandleOptions::default(),
            concurrency: 4,
            strict_fixtures: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub strategy: Strategy,
    pub total: usize,
    pub json_ok: usize,
    pub text_fallback: usize,
    pub records: Vec<OutputRecord>,
    #[serde(with = "rfc3339")]
    pub started: DateTime<Utc>,
    #[serde(with = "rfc3339")]
    pub finished: DateTime<Utc>,
}

mod rfc3339 {
    use chrono::{DateTime, SecondsFormat, Utc};
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(t: &DateTime<Utc>, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&t.to_rfc3339_opts(SecondsFormat::AutoSi, true))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<DateTime<Utc>, D::Error> {
        let text = String::deserialize(d)?;
        DateTime::parse_from_rfc3339(&text)
            .map(|t| t.with_timezone(&Utc))
            .map_err(serde::de::Error::custom)
    }
}

impl RunReport {
    pub fn from_records(
        strategy: Strategy,
        records: Vec<OutputRecord>,
        started: DateTime<Utc>,
        finished: DateTime<Utc>,
    ) -> Self {
        let json_ok = records
            .iter()
            .filter(|r| r.outcome == Outcome::JsonOk)
            .count();
        Self {
            strategy,
            total: records.len(),
            json_ok,
            text_fallback: records.len() - json_ok,
            records,
            started,
            finished,
        }
    }

    /// Checks the counting identity and each record's outcome invariant.
    pub fn check(&self) -> Result<(), String> {
        if self.total != self.records.len() || self.total != self.json_ok + self.text_fallback {
            return Err(format!(
                "counts do not add up: total={} json_ok={} text_fallback={} records={}",
                self.total,
                self.json_ok,
                self.text_fallback,
                self.records.len()
            ));
        }
        let ok = self
            .records
            .iter()
            .filter(|r| r.outcome == Outcome::JsonOk)
            .count();
        if ok != self.json_ok {
            return Err(format!("json_ok={} but {ok} records are JSON_OK", self.json_ok));
        }
        if let Some((i, _)) = self
            .records
            .iter()
            .enumerate()
            .find(|(_, r)| !r.is_consistent())
        {
            return Err(format!("record {i} has an inconsistent outcome"));
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        let mut text = serde_json::to_string_pretty(self).expect("reports always serialize");
        text.push('\n');
        text
    }

    pub fn load(path: &Path) -> Result<Self, PipelineError> {
        let text = std::fs::read_to_string(path).map_err(|source| PipelineError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let report: RunReport =
            serde_json::from_str(&text).map_err(|e| PipelineError::Report {
                path: path.to_path_buf(),
                message: e.to_string(),
            })?;
        report.check().map_err(|message| PipelineError::Report {
            path: path.to_path_buf(),
            message,
        })?;
        Ok(report)
    }
}

struct Job<'a> {
    dish: &'a crate::prompt::DishSpec,
    prompt: PromptBundle,
    slot: OutputSlot,
}

/// Runs one strategy over every dish in the manifest.
///
/// Requests run on up to `options.concurrency` threads; records come back in
/// manifest order regardless. Model failures become text fallbacks; only
/// configuration, prompt rendering, IO and (in strict mode) fixture misses
/// abort the run.
pub fn run_generation(
    manifest: &InputManifest,
    plan: &PromptPlan,
    params: &GenerationParams,
    client: &dyn TextGenerator,
    out_dir: &Path,
    options: RunOptions,
) -> Result<RunReport, PipelineError> {
    params.validate()?;
    let started = Utc::now();

    let mut slots = SlotAllocator::default();
    let jobs = manifest
        .dishes()
        .map(|dish| {
            Ok(Job {
                dish,
                prompt: plan.render(dish)?,
                slot: slots.allocate(out_dir, dish),
            })
        })
        .collect::<Result<Vec<_>, PipelineError>>()?;

    std::fs::create_dir_all(out_dir).map_err(|source| PipelineError::Io {
        path: out_dir.to_path_buf(),
        source,
    })?;

    let results: Vec<Mutex<Option<Result<OutputRecord, PipelineError>>>> =
        jobs.iter().map(|_| Mutex::new(None)).collect();
    let next = AtomicUsize::new(0);
    let abort = AtomicBool::new(false);
    let workers = options.concurrency.clamp(1, jobs.len().max(1));

    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                if abort.load(Ordering::SeqCst) {
                    break;
                }
                let i = next.fetch_add(1, Ordering::SeqCst);
                let Some(job) = jobs.get(i) else { break };
                let result = run_job(job, plan.strategy, params, client, options);
                if result.is_err() {
                    abort.store(true, Ordering::SeqCst);
                }
                *results[i].lock().unwrap_or_else(|e| e.into_inner()) = Some(result);
            });
        }
    });

    let mut records = Vec::with_capacity(jobs.len());
    for slot in results {
        match slot.into_inner().unwrap_or_else(|e| e.into_inner()) {
            Some(Ok(record)) => records.push(record),
            Some(Err(err)) => return Err(err),
            // Skipped after another job aborted; that job's error is
            // returned when reached.
            None => continue,
        }
    }

    let report = RunReport::from_records(plan.strategy, records, started, Utc::now());
    let report_path = out_dir.join(REPORT_FILE);
    std::fs::write(&report_path, report.to_json()).map_err(|source| PipelineError::Io {
        path: report_path,
        source,
    })?;
    Ok(report)
}

fn run_job(
    job: &Job<'_>,
    strategy: Strategy,
    params: &GenerationParams,
    client: &dyn TextGenerator,
    options: RunOptions,
) -> Result<OutputRecord, PipelineError> {
    match client.generate(&job.prompt, params) {
        Ok(response) => handle_response(&response, job.dish, strategy, &job.slot, options.handle),
        Err(err @ ClientError::FixtureMiss { .. }) if options.strict_fixtures => Err(err.into()),
        Err(ClientError::Io { path, source }) => Err(PipelineError::Io { path, source }),
        Err(err) => record_model_error(job.dish, strategy, &job.slot, &err.to_string()),
    }
}
