//! Text generation behind one interface, with a live HTTP backend and a
//! record/replay backend keyed by prompt hash.

mod live;
mod replay;

use std::path::PathBuf;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::prompt::PromptBundle;

pub use live::{
    HttpReply, LiveClient, RetryPolicy, Transport, TransportError, UreqTransport, API_KEY_ENV,
    API_URL_ENV,
};
pub use replay::{record_fixture, FixtureEntry, RecordingClient, ReplayClient, ReplayFixture};

pub const DEFAULT_MODEL: &str = "gemini-1.0-pro-latest";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GenerationParams {
    pub model_name: String,
    pub temperature: f64,
    pub max_output_tokens: u32,
    #[serde(with = "duration_secs")]
    pub timeout: Duration,
}

impl Default for GenerationParams {
    fn default() -> Self {
        Self {
            model_name: DEFAULT_MODEL.to_string(),
            temperature: 0.2,
            max_output_tokens: 2048,
            timeout: Duration::from_secs(60),
        }
    }
}

impl GenerationParams {
    pub fn validate(&self) -> Result<(), ClientError> {
        if self.model_name.trim().is_empty() {
            return Err(ClientError::InvalidParams("model name is empty".into()));
        }
        if !(0.0..=2.0).contains(&self.temperature) {
            return Err(ClientError::InvalidParams(format!(
                "temperature {} outside [0, 2]",
                self.temperature
            )));
        }
        if self.max_output_tokens == 0 {
            return Err(ClientError::InvalidParams(
                "max_output_tokens must be positive".into(),
            ));
        }
        if self.timeout.is_zero() {
            return Err(ClientError::InvalidParams("timeout must be positive".into()));
        }
        Ok(())
    }
}

mod duration_secs {
    use serde::{Deserialize, Deserializer, Serializer};
    use std::time::Duration;

    pub fn serialize<S: Serializer>(d: &Duration, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_f64(d.as_secs_f64())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Duration, D::Error> {
        let secs = f64::deserialize(d)?;
        Duration::try_from_secs_f64(secs).map_err(serde::de::Error::custom)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FinishReason {
    Complete,
    Truncated,
    Error,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Backend {
    Live,
    Replay,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ModelResponse {
    pub text: String,
    pub finish_reason: FinishReason,
    pub latency: Duration,
    pub backend: Backend,
}

#[derive(Debug, Error)]
pub enum ClientError {
    #[error("authentication failed: {0}")]
    Auth(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("invalid generation parameters: {0}")]
    InvalidParams(String),
    #[error("request timed out after {0:?}")]
    Timeout(Duration),
    #[error("rate limited after {attempts} attempts")]
    RateLimited { attempts: u32 },
    #[error("provider returned HTTP {status}: {body}")]
    Http { status: u16, body: String },
    #[error("transport error: {0}")]
    Transport(String),
    #[error("malformed provider payload: {0}")]
    MalformedPayload(String),
    #[error("fixture miss: no recorded response for prompt hash {hash}")]
    FixtureMiss { hash: String },
    #[error("fixture {path}: {message}")]
    Fixture { path: PathBuf, message: String },
    #[error("fixture io error at {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

/// A text-generation backend. Implementations keep only per-request state
/// and can be shared across threads.
pub trait TextGenerator: Send + Sync {
    fn generate(
        &self,
        prompt: &PromptBundle,
        params: &GenerationParams,
    ) -> Result<ModelResponse, ClientError>;

    fn backend(&self) -> Backend;
}
