use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::{Backend, ClientError, FinishReason, GenerationParams, ModelResponse, TextGenerator};
use crate::prompt::PromptBundle;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FixtureEntry {
    pub text: String,
    pub finish_reason: FinishReason,
}

/// Canned responses keyed by `PromptBundle::context_hash`. Stored on disk as
/// a JSON object mapping hex hash to `{text, finish_reason}`.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ReplayFixture {
    pub entries: BTreeMap<String, FixtureEntry>,
}

impl ReplayFixture {
    pub fn load(path: &Path) -> Result<Self, ClientError> {
        let text = std::fs::read_to_string(path).map_err(|source| ClientError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_json(&text).map_err(|message| ClientError::Fixture {
            path: path.to_path_buf(),
            message,
        })
    }

    pub fn from_json(text: &str) -> Result<Self, String> {
        serde_json::from_str(text).map_err(|e| e.to_string())
    }

    pub fn to_json(&self) -> String {
        let mut text = serde_json::to_string_pretty(self).expect("fixtures always serialize");
        text.push('\n');
        text
    }

    pub fn insert(&mut self, hash: impl Into<String>, entry: FixtureEntry) {
        self.entries.insert(hash.into(), entry);
    }

    pub fn get(&self, hash: &str) -> Option<&FixtureEntry> {
        self.entries.get(hash)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Writes through a temp file in the same directory and renames it into
    /// place, so `path` is either the old or the new fixture, never partial.
    pub fn save(&self, path: &Path) -> Result<(), ClientError> {
        let io = |source| ClientError::Io {
            path: path.to_path_buf(),
            source,
        };
        let dir = match path.parent() {
            Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
            _ => PathBuf::from("."),
        };
        let mut tmp = tempfile::NamedTempFile::new_in(&dir).map_err(io)?;
        tmp.write_all(self.to_json().as_bytes()).map_err(io)?;
        tmp.as_file().sync_all().map_err(io)?;
        tmp.persist(path).map_err(|e| io(e.error))?;
        Ok(())
    }
}

/// Adds or replaces the entry for `prompt` in the fixture file at `path`,
/// creating the file if needed. Returns the updated fixture.
pub fn record_fixture(
    prompt: &PromptBundle,
    response: &ModelResponse,
    path: &Path,
) -> Result<ReplayFixture, ClientError> {
    let mut fixture = if path.exists() {
        ReplayFixture::load(path)?
    } else {
        ReplayFixture::default()
    };
    fixture.insert(
        prompt.context_hash.clone(),
        FixtureEntry {
            text: response.text.clone(),
            finish_reason: response.finish_reason,
        },
    );
    fixture.save(path)?;
    Ok(fixture)
}

/// Serves responses from a fixture. A prompt without an entry is an error;
/// there is no fallback to a live backend.
#[derive(Clone, Debug)]
pub struct ReplayClient {
    fixture: ReplayFixture,
}

impl ReplayClient {
    pub fn new(fixture: ReplayFixture) -> Self {
        Self { fixture }
    }

    pub fn from_path(path: &Path) -> Result<Self, ClientError> {
        ReplayFixture::load(path).map(Self::new)
    }

    pub fn fixture(&self) -> &ReplayFixture {
        &self.fixture
    }
}

impl TextGenerator for ReplayClient {
    fn generate(
        &self,
        prompt: &PromptBundle,
        _params: &GenerationParams,
    ) -> Result<ModelResponse, ClientError> {
        let entry = self
            .fixture
            .get(&prompt.context_hash)
            .ok_or_else(|| ClientError::FixtureMiss {
                hash: prompt.context_hash.clone(),
            })?;
        Ok(ModelResponse {
            text: entry.text.clone(),
            finish_reason: entry.finish_reason,
            latency: Duration::ZERO,
            backend: Backend::Replay,
        })
    }

    fn backend(&self) -> Backend {
        Backend::Replay
    }
}

/// Wraps another backend and records every successful response into a
/// fixture file.
pub struct RecordingClient<C> {
    inner: C,
    path: PathBuf,
    lock: std::sync::Mutex<()>,
}

impl<C: TextGenerator> RecordingClient<C> {
    pub fn new(inner: C, path: impl Into<PathBuf>) -> Self {
        Self {
            inner,
            path: path.into(),
            lock: std::sync::Mutex::new(()),
        }
    }
}

impl<C: TextGenerator> TextGenerator for RecordingClient<C> {
    fn generate(
        &self,
        prompt: &PromptBundle,
        params: &GenerationParams,
    ) -> Result<ModelResponse, ClientError> {
        let response = self.inner.generate(prompt, params)?;
        let _guard = self.lock.lock().unwrap_or_else(|e| e.into_inner());
        record_fixture(prompt, &response, &self.path)?;
        Ok(response)
    }

    fn backend(&self) -> Backend {
        self.inner.backend()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prompt::{render_user_guided, DishSpec, Template, Strategy};

    fn prompt(instructions: &str) -> PromptBundle {
        let dish = DishSpec::new("breakfast", "toast", &["bread"], &["toaster"]).unwrap();
        render_user_guided(&dish, instructions, &Template::default_for(Strategy::UserGuided)).unwrap()
    }

    fn response(text: &str) -> ModelResponse {
        ModelResponse {
            text: text.into(),
            finish_reason: FinishReason::Complete,
            latency: Duration::from_millis(5),
            backend: Backend::Live,
        }
    }

    #[test]
    fn replay_hit_and_miss() {
        let p = prompt("crispy");
        let mut fixture = ReplayFixture::default();
        fixture.insert(
            p.context_hash.clone(),
            FixtureEntry {
                text: "{}".into(),
                finish_reason: FinishReason::Complete,
            },
        );
        let client = ReplayClient::new(fixture);
        let hit = client.generate(&p, &GenerationParams::default()).unwrap();
        assert_eq!(hit.text, "{}");
        assert_eq!(hit.backend, Backend::Replay);

        let other = prompt("soft");
        match client.generate(&other, &GenerationParams::default()) {
            Err(ClientError::FixtureMiss { hash }) => assert_eq!(hash, other.context_hash),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn record_then_replay_and_overwrite() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("fixture.json");
        let p = prompt("crispy");
        record_fixture(&p, &response("first"), &path).unwrap();
        let fixture = record_fixture(&p, &response("second"), &path).unwrap();
        assert_eq!(fixture.len(), 1);
        let client = ReplayClient::from_path(&path).unwrap();
        let got = client.generate(&p, &GenerationParams::default()).unwrap();
        assert_eq!(got.text, "second");
    }

    #[test]
    fn unwritable_path_leaves_original_untouched() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("fixture.json");
        let p = prompt("crispy");
        record_fixture(&p, &response("kept"), &path).unwrap();
        let before = std::fs::read(&path).unwrap();

        let missing_dir = dir.path().join("nope").join("fixture.json");
        assert!(matches!(
            record_fixture(&p, &response("x"), &missing_dir),
            Err(ClientError::Io { .. })
        ));

        // A directory standing where the fixture should be cannot be replaced.
        let blocked = dir.path().join("blocked");
        std::fs::create_dir(&blocked).unwrap();
        assert!(record_fixture(&p, &response("x"), &blocked).is_err());
        assert!(blocked.is_dir());
        assert_eq!(std::fs::read(&path).unwrap(), before);
    }

    #[test]
    fn fixture_file_format() {
        let text = r#"{"ab12": {"text": "hello", "finish_reason": "truncated"}}"#;
        let fixture = ReplayFixture::from_json(text).unwrap();
        assert_eq!(fixture.get("ab12").unwrap().finish_reason, FinishReason::Truncated);
        assert!(ReplayFixture::from_json(r#"{"ab12": {"text": 1}}"#).is_err());
    }
}
