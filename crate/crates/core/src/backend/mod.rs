//! HTTP/JSON protocol for model inference.
//!
//! Every model role (completion, QA, VQA, similarity) is reached through a
//! [`BackendEndpoint`] that advertises capabilities via `GET /v1/health`.
//! Requests go through [`BackendClient`], which canonicalizes the body, looks
//! it up in a content-addressed on-disk cache, coalesces identical in-flight
//! requests and bounds the number of concurrent network calls.

mod cache;
mod canonical;
mod client;
pub mod mock;
mod pool;

use std::collections::BTreeSet;
use std::fmt;
use std::time::Duration;

use serde::{Deserialize, Serialize};

pub use cache::{CacheEntry, CacheKey, ResponseCache};
pub use canonical::canonical_json;
pub use client::{BackendClient, ClientOptions, RetryPolicy};
pub use pool::map_bounded;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum BackendError {
    #[error("backend {url} unavailable: {reason}")]
    Unavailable { url: String, reason: String },
    #[error("backend {url} lacks capability `{required}` (advertises {advertised})")]
    CapabilityMismatch {
        url: String,
        required: Capability,
        advertised: String,
    },
    #[error("protocol error from {url}: {reason}")]
    Protocol { url: String, reason: String },
    #[error("cache error: {0}")]
    Cache(String),
}

impl BackendError {
    pub fn url(&self) -> Option<&str> {
        match self {
            BackendError::Unavailable { url, .. }
            | BackendError::CapabilityMismatch { url, .. }
            | BackendError::Protocol { url, .. } => Some(url),
            BackendError::Cache(_) => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Capability {
    Complete,
    Qa,
    Vqa,
    VqaMc,
    Similarity,
}

impl Capability {
    pub fn as_str(self) -> &'static str {
        match self {
            Capability::Complete => "complete",
            Capability::Qa => "qa",
            Capability::Vqa => "vqa",
            Capability::VqaMc => "vqa_mc",
            Capability::Similarity => "similarity",
        }
    }

    pub fn path(self) -> &'static str {
        match self {
            Capability::Complete => "/v1/complete",
            Capability::Qa => "/v1/qa",
            Capability::Vqa | Capability::VqaMc => "/v1/vqa",
            Capability::Similarity => "/v1/similarity",
        }
    }

    /// Whether an endpoint advertising `self` can serve a `required` request.
    pub fn satisfies(self, required: Capability) -> bool {
        self == required || (self == Capability::VqaMc && required == Capability::Vqa)
    }
}

impl fmt::Display for Capability {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A health-checked model service.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BackendEndpoint {
    pub base_url: String,
    pub capabilities: BTreeSet<Capability>,
    pub model_id: String,
    pub timeout: Duration,
    pub max_retries: u32,
}

impl BackendEndpoint {
    pub fn has(&self, required: Capability) -> bool {
        self.capabilities.iter().any(|c| c.satisfies(required))
    }

    pub fn require(&self, required: Capability) -> Result<(), BackendError> {
        if self.has(required) {
            Ok(())
        } else {
            Err(BackendError::CapabilityMismatch {
                url: self.base_url.clone(),
                required,
                advertised: format_capabilities(&self.capabilities),
            })
        }
    }

    pub fn url(&self, path: &str) -> String {
        format!("{}{}", self.base_url.trim_end_matches('/'), path)
    }
}

fn format_capabilities(caps: &BTreeSet<Capability>) -> String {
    let names: Vec<_> = caps.iter().map(|c| c.as_str()).collect();
    format!("[{}]", names.join(", "))
}

// Wire schema.

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HealthResponse {
    pub status: String,
    pub model_id: String,
    pub capabilities: Vec<Capability>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompleteRequest {
    pub prompt: String,
    pub temperature: f64,
    pub max_tokens: u32,
    pub stop: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompleteResponse {
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QaRequest {
    pub context: String,
    pub question: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub choices: Option<Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QaResponse {
    pub answer: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VqaRequest {
    pub image_b64: String,
    pub question: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub choices: Option<Vec<String>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VqaMode {
    Freeform,
    Choice,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VqaResponse {
    pub answer: String,
    pub mode: VqaMode,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimilarityRequest {
    pub query: String,
    pub candidates: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimilarityResponse {
    pub scores: Vec<f64>,
}
