//! Provider-agnostic HTTP backend.
//!
//! Request body: `{"model", "prompt", "temperature", "max_output_tokens"}`,
//! sent as a JSON POST with a bearer token. Expected reply:
//! `{"text": "...", "finish_reason": "complete" | "truncated" | "error"}`,
//! where `finish_reason` may be omitted. Provider-specific translation, if
//! any, belongs in a `Transport` implementation.

use std::time::{Duration, Instant};

use rand::Rng;
use serde::Deserialize;
use serde_json::json;

use super::{Backend, ClientError, FinishReason, GenerationParams, ModelResponse, TextGenerator};
use crate::prompt::PromptBundle;

pub const API_KEY_ENV: &str = "FOONFORGE_API_KEY";
pub const API_URL_ENV: &str = "FOONFORGE_API_URL";

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HttpReply {
    pub status: u16,
    pub body: String,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TransportError {
    Timeout,
    Other(String),
}

pub trait Transport: Send + Sync {
    fn post_json(
        &self,
        url: &str,
        api_key: &str,
        body: &str,
        timeout: Duration,
    ) -> Result<HttpReply, TransportError>;
}

/// Blocking HTTPS transport.
#[derive(Clone, Debug, Default)]
pub struct UreqTransport;

impl Transport for UreqTransport {
    fn post_json(
        &self,
        url: &str,
        api_key: &str,
        body: &str,
        timeout: Duration,
    ) -> Result<HttpReply, TransportError> {
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(timeout))
            .http_status_as_error(false)
            .build()
            .into();
        let mut response = agent
            .post(url)
            .header("Authorization", &format!("Bearer {api_key}"))
            .header("Content-Type", "application/json")
            .send(body)
            .map_err(|e| match e {
                ureq::Error::Timeout(_) => TransportError::Timeout,
                other => TransportError::Other(other.to_string()),
            })?;
        let status = response.status().as_u16();
        let body = response
            .body_mut()
            .read_to_string()
            .map_err(|e| TransportError::Other(e.to_string()))?;
        Ok(HttpReply { status, body })
    }
}

/// Exponential backoff with full jitter: before retry `n` (0-based) the
/// client sleeps a uniform random time in `[0, base * factor^n]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RetryPolicy {
    pub max_retries: u32,
    pub base: Duration,
    pub factor: f64,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        Self {
            max_retries: 3,
            base: Duration::from_secs(1),
            factor: 2.0,
        }
    }
}

impl RetryPolicy {
    pub fn ceiling(&self, retry: u32) -> Duration {
        self.base.mul_f64(self.factor.powi(retry as i32))
    }

    fn jittered(&self, retry: u32) -> Duration {
        let cap = self.ceiling(retry).as_secs_f64();
        Duration::from_secs_f64(rand::rng().random_range(0.0..=cap))
    }
}

#[derive(Deserialize)]
struct ProviderReply {
    text: String,
    #[serde(default)]
    finish_reason: Option<FinishReason>,
}

type Sleeper = Box<dyn Fn(Duration) + Send + Sync>;

pub struct LiveClient<T = UreqTransport> {
    api_key: String,
    endpoint: String,
    transport: T,
    retry: RetryPolicy,
    sleep: Sleeper,
}

impl LiveClient<UreqTransport> {
    /// Reads `FOONFORGE_API_KEY` and `FOONFORGE_API_URL`.
    pub fn from_env() -> Result<Self, ClientError> {
        Self::from_lookup(|name| std::env::var(name).ok(), UreqTransport)
    }
}

impl<T: Transport> LiveClient<T> {
    /// Builds a client from an environment-like lookup. Fails with an auth
    /// error before any request when the key is missing.
    pub fn from_lookup(
        lookup: impl Fn(&str) -> Option<String>,
        transport: T,
    ) -> Result<Self, ClientError> {
        let api_key = lookup(API_KEY_ENV)
            .filter(|k| !k.trim().is_empty())
            .ok_or_else(|| ClientError::Auth(format!("{API_KEY_ENV} is not set")))?;
        let endpoint = lookup(API_URL_ENV)
            .filter(|u| !u.trim().is_empty())
            .ok_or_else(|| ClientError::Config(format!("{API_URL_ENV} is not set")))?;
        Ok(Self {
            api_key,
            endpoint,
            transport,
            retry: RetryPolicy::default(),
            sleep: Box::new(std::thread::sleep),
        })
    }

    pub fn with_retry(mut self, retry: RetryPolicy) -> Self {
        self.retry = retry;
        self
    }

    pub fn with_sleeper(mut self, sleep: impl Fn(Duration) + Send + Sync + 'static) -> Self {
        self.sleep = Box::new(sleep);
        self
    }

    fn decode(body: &str) -> Result<(String, FinishReason), ClientError> {
        let reply: ProviderReply =
            serde_json::from_str(body).map_err(|e| ClientError::MalformedPayload(e.to_string()))?;
        let finish = reply.finish_reason.unwrap_or(FinishReason::Complete);
        if finish != FinishReason::Error && reply.text.is_empty() {
            return Err(ClientError::MalformedPayload(
                "empty text in a non-error reply".into(),
            ));
        }
        Ok((reply.text, finish))
    }
}

impl<T: Transport> TextGenerator for LiveClient<T> {
    fn generate(
        &self,
        prompt: &PromptBundle,
        params: &GenerationParams,
    ) -> Result<ModelResponse, ClientError> {
        params.validate()?;
        let body = json!({
            "model": params.model_name,
            "prompt": prompt.text,
            "temperature": params.temperature,
            "max_output_tokens": params.max_output_tokens,
        })
        .to_string();

        let started = Instant::now();
        let mut retry = 0;
        loop {
            let reply = self
                .transport
                .post_json(&self.endpoint, &self.api_key, &body, params.timeout)
                .map_err(|e| match e {
                    TransportError::Timeout => ClientError::Timeout(params.timeout),
                    TransportError::Other(msg) => ClientError::Transport(msg),
                })?;
            let transient = reply.status == 429 || (500..600).contains(&reply.status);
            match reply.status {
                200..=299 => {
                    let (text, finish_reason) = Self::decode(&reply.body)?;
                    return Ok(ModelResponse {
                        text,
                        finish_reason,
                        latency: started.elapsed(),
                        backend: Backend::Live,
                    });
                }
                401 | 403 => return Err(ClientError::Auth(format!("HTTP {}", reply.status))),
                _ if transient && retry < self.retry.max_retries => {
                    (self.sleep)(self.retry.jittered(retry));
                    retry += 1;
                }
                429 => {
                    return Err(ClientError::RateLimited {
                        attempts: retry + 1,
                    })
                }
                status => {
                    return Err(ClientError::Http {
                        status,
                        body: reply.body,
                    })
                }
            }
        }
    }

    fn backend(&self) -> Backend {
        Backend::Live
    }
}
