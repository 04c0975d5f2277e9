//! Repair generators behind one interface: remote chat and edit endpoints
//! plus deterministic local mocks.

use std::collections::BTreeMap;
use std::sync::Arc;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::corpus::RepairSample;
use crate::prompts::{Prompt, PromptMode};

pub mod mock;
pub mod remote;

pub use mock::{EchoBackend, OracleBackend, ScriptedBackend};
pub use remote::{ChatBackend, EditBackend, API_KEY_ENV};

#[derive(Debug, Clone, thiserror::Error, PartialEq, Eq)]
pub enum BackendError {
    #[error("backend {backend} ({kind:?}) cannot take {mode:?} prompts")]
    IncompatiblePromptMode { backend: String, kind: BackendKind, mode: PromptMode },
    #[error("backend {backend} gave up after {attempts} attempts: {last_error}")]
    BackendExhausted { backend: String, attempts: u32, last_error: String },
    #[error("no API key: set {0}")]
    AuthMissing(String),
    /// Worth retrying: timeouts, rate limits, server errors.
    #[error("transient: {0}")]
    Transient(String),
    #[error("{0}")]
    Fatal(String),
    #[error("unknown backend type `{0}`")]
    UnknownBackend(String),
    #[error("backend {backend} has no answer for sample {sample_id}")]
    UnknownSample { backend: String, sample_id: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BackendKind {
    /// Takes zero-shot and few-shot prompts.
    Chat,
    /// Takes instruct prompts.
    Edit,
    /// Takes anything (mocks).
    Any,
}

impl BackendKind {
    pub fn accepts(self, mode: PromptMode) -> bool {
        match self {
            BackendKind::Any => true,
            BackendKind::Chat => matches!(mode, PromptMode::ZeroShot | PromptMode::FewShot),
            BackendKind::Edit => mode == PromptMode::Instruct,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GenerationParams {
    pub temperature: f64,
    pub top_p: f64,
    pub frequency_penalty: f64,
    pub presence_penalty: f64,
    pub n_candidates: u32,
}

impl Default for GenerationParams {
    fn default() -> Self {
        Self { temperature: 0.0, top_p: 1.0, frequency_penalty: 0.0, presence_penalty: 0.0, n_candidates: 1 }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Prediction {
    pub sample_id: String,
    /// 1-based.
    pub rank: u32,
    pub raw_text: String,
    #[serde(default)]
    pub cleaned_text: Option<String>,
    pub backend_name: String,
    pub latency_ms: u64,
}

pub trait Backend: Send + Sync {
    fn name(&self) -> &str;
    fn kind(&self) -> BackendKind;
    /// One attempt. Returns up to `params.n_candidates` texts, best first.
    fn complete(&self, prompt: &Prompt, params: &GenerationParams) -> Result<Vec<String>, BackendError>;
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RetryPolicy {
    /// Retries after the first attempt.
    pub max_retries: u32,
    pub base_delay_ms: u64,
    pub max_delay_ms: u64,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        Self { max_retries: 5, base_delay_ms: 500, max_delay_ms: 30_000 }
    }
}

impl RetryPolicy {
    /// Delay before retry number `retry` (0-based): base * 2^retry, capped.
    pub fn delay(&self, retry: u32) -> Duration {
        let ms = self.base_delay_ms.saturating_mul(1u64 << retry.min(32));
        Duration::from_millis(ms.min(self.max_delay_ms))
    }
}

/// Run `prompt` through `backend` with retries, sleeping via `sleep`.
pub fn generate_with(
    prompt: &Prompt,
    params: &GenerationParams,
    backend: &dyn Backend,
    retry: &RetryPolicy,
    sleep: &dyn Fn(Duration),
) -> Result<Vec<Prediction>, BackendError> {
    if !backend.kind().accepts(prompt.mode) {
        return Err(BackendError::IncompatiblePromptMode {
            backend: backend.name().to_string(),
            kind: backend.kind(),
            mode: prompt.mode,
        });
    }
    let mut attempt = 0;
    loop {
        let started = Instant::now();
        match backend.complete(prompt, params) {
            Ok(texts) => {
                let latency_ms = started.elapsed().as_millis() as u64;
                return Ok(texts
                    .into_iter()
                    .take(params.n_candidates.max(1) as usize)
                    .enumerate()
                    .map(|(i, raw_text)| Prediction {
                        sample_id: prompt.sample_id.clone(),
                        rank: i as u32 + 1,
                        raw_text,
                        cleaned_text: None,
                        backend_name: backend.name().to_string(),
                        latency_ms,
                    })
                    .collect());
            }
            Err(BackendError::Transient(msg)) => {
                if attempt >= retry.max_retries {
                    return Err(BackendError::BackendExhausted {
                        backend: backend.name().to_string(),
                        attempts: attempt + 1,
                        last_error: msg,
                    });
                }
                sleep(retry.delay(attempt));
                attempt += 1;
            }
            Err(other) => return Err(other),
        }
    }
}

pub fn generate(
    prompt: &Prompt,
    params: &GenerationParams,
    backend: &dyn Backend,
    retry: &RetryPolicy,
) -> Result<Vec<Prediction>, BackendError> {
    generate_with(prompt, params, backend, retry, &std::thread::sleep)
}

/// Backend declaration as it appears in run configs.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BackendSpec {
    pub name: String,
    /// Registry key: `oracle`, `echo`, `chat`, `edit`, or anything registered.
    #[serde(rename = "type")]
    pub backend_type: String,
    #[serde(default)]
    pub model: Option<String>,
    #[serde(default)]
    pub base_url: Option<String>,
    #[serde(default)]
    pub timeout_secs: Option<u64>,
}

type Factory = Box<dyn Fn(&BackendSpec, &[RepairSample]) -> Result<Arc<dyn Backend>, BackendError> + Send + Sync>;

/// Backend constructors keyed by type name.
pub struct Registry {
    factories: BTreeMap<String, Factory>,
}

impl Default for Registry {
    fn default() -> Self {
        let mut r = Registry { factories: BTreeMap::new() };
        r.register("oracle", |spec, samples| Ok(Arc::new(OracleBackend::new(&spec.name, samples))));
        r.register("echo", |spec, samples| Ok(Arc::new(EchoBackend::new(&spec.name, samples))));
        r.register("chat", |spec, _| Ok(Arc::new(ChatBackend::from_spec(spec)?)));
        r.register("edit", |spec, _| Ok(Arc::new(EditBackend::from_spec(spec)?)));
        r
    }
}

impl Registry {
    pub fn register(
        &mut self,
        backend_type: &str,
        factory: impl Fn(&BackendSpec, &[RepairSample]) -> Result<Arc<dyn Backend>, BackendError> + Send + Sync + 'static,
    ) {
        self.factories.insert(backend_type.to_string(), Box::new(factory));
    }

    pub fn contains(&self, backend_type: &str) -> bool {
        self.factories.contains_key(backend_type)
    }

    pub fn types(&self) -> impl Iterator<Item = &str> {
        self.factories.keys().map(String::as_str)
    }

    /// Instantiate `spec`. Mocks look answers up in `samples`.
    pub fn build(&self, spec: &BackendSpec, samples: &[RepairSample]) -> Result<Arc<dyn Backend>, BackendError> {
        let factory = self
            .factories
            .get(&spec.backend_type)
            .ok_or_else(|| BackendError::UnknownBackend(spec.backend_type.clone()))?;
        factory(spec, samples)
    }
}

/// Kind a spec would produce, without building it.
pub fn kind_of(backend_type: &str) -> Option<BackendKind> {
    match backend_type {
        "oracle" | "echo" => Some(BackendKind::Any),
        "chat" => Some(BackendKind::Chat),
        "edit" => Some(BackendKind::Edit),
        _ => None,
    }
}
