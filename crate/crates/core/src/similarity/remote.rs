//! Client for an out-of-process embedding service.
//!
//! Wire format: `POST <url>` with `{"texts": [...]}`, answered by
//! `{"embeddings": [[...], ...]}`.

use std::thread;
use std::time::Duration;

use log::warn;
use serde::{Deserialize, Serialize};

use super::{Embedding, EmbeddingProvider};
use crate::error::{Error, Result};

#[derive(Serialize)]
struct EmbedRequest<'a> {
    texts: &'a [&'a str],
}

#[derive(Deserialize)]
struct EmbedResponse {
    embeddings: Vec<Vec<f32>>,
}

#[derive(Debug, Clone, Copy)]
pub struct RetryPolicy {
    pub retries: u32,
    pub base_delay: Duration,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        RetryPolicy {
            retries: 3,
            base_delay: Duration::from_millis(250),
        }
    }
}

impl RetryPolicy {
    fn delay(&self, attempt: u32) -> Duration {
        self.base_delay * 2u32.saturating_pow(attempt)
    }
}

pub struct RemoteProvider {
    url: String,
    dim: usize,
    batch_limit: usize,
    retry: RetryPolicy,
    agent: ureq::Agent,
    id: String,
}

enum Attempt {
    Retryable(String),
    Fatal(Error),
}

impl RemoteProvider {
    pub const DEFAULT_BATCH: usize = 64;

    pub fn new(url: impl Into<String>, dim: usize, batch_limit: usize) -> Result<Self> {
        if dim == 0 || batch_limit == 0 {
            return Err(Error::Config(
                "remote provider needs positive dim and batch size".into(),
            ));
        }
        let url = url.into();
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs(60)))
            .http_status_as_error(false)
            .build()
            .into();
        Ok(RemoteProvider {
            id: format!("remote:{url}/d{dim}"),
            url,
            dim,
            batch_limit,
            retry: RetryPolicy::default(),
            agent,
        })
    }

    pub fn with_retry(mut self, retry: RetryPolicy) -> Self {
        self.retry = retry;
        self
    }

    fn attempt(&self, texts: &[&str]) -> std::result::Result<Vec<Embedding>, Attempt> {
        let mut resp = self
            .agent
            .post(&self.url)
            .send_json(EmbedRequest { texts })
            .map_err(|e| Attempt::Retryable(e.to_string()))?;
        let status = resp.status().as_u16();
        if status == 429 || status >= 500 {
            return Err(Attempt::Retryable(format!("HTTP {status}")));
        }
        if status >= 400 {
            return Err(Attempt::Fatal(Error::Provider(format!("HTTP {status}"))));
        }
        let body: EmbedResponse = resp
            .body_mut()
            .read_json()
            .map_err(|e| Attempt::Fatal(Error::Provider(format!("bad response body: {e}"))))?;
        body.embeddings
            .into_iter()
            .map(|v| {
                if v.len() != self.dim {
                    return Err(Attempt::Fatal(Error::DimensionMismatch {
                        expected: self.dim,
                        actual: v.len(),
                    }));
                }
                Embedding::new(v).map_err(Attempt::Fatal)
            })
            .collect()
    }
}

impl EmbeddingProvider for RemoteProvider {
    fn provider_id(&self) -> &str {
        &self.id
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn batch_limit(&self) -> usize {
        self.batch_limit
    }

    fn embed(&self, texts: &[&str]) -> Result<Vec<Embedding>> {
        let mut attempt = 0;
        loop {
            match self.attempt(texts) {
                Ok(v) => return Ok(v),
                Err(Attempt::Fatal(e)) => return Err(e),
                Err(Attempt::Retryable(msg)) => {
                    if attempt >= self.retry.retries {
                        return Err(Error::ProviderUnavailable {
                            attempts: attempt + 1,
                            message: msg,
                        });
                    }
                    let delay = self.retry.delay(attempt);
                    warn!("{}: {msg}; retrying in {delay:?}", self.url);
                    thread::sleep(delay);
                    attempt += 1;
                }
            }
        }
    }
}
