//! Deterministic local backends.

use std::collections::{HashMap, VecDeque};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use super::{Backend, BackendError, BackendKind, GenerationParams};
use crate::corpus::RepairSample;
use crate::prompts::Prompt;

fn lookup(backend: &str, answers: &HashMap<String, String>, prompt: &Prompt) -> Result<Vec<String>, BackendError> {
    answers.get(&prompt.sample_id).map(|a| vec![a.clone()]).ok_or_else(|| BackendError::UnknownSample {
        backend: backend.to_string(),
        sample_id: prompt.sample_id.clone(),
    })
}

/// Answers every sample with its target.
pub struct OracleBackend {
    name: String,
    answers: HashMap<String, String>,
}

impl OracleBackend {
    pub fn new(name: &str, samples: &[RepairSample]) -> Self {
        Self { name: name.to_string(), answers: samples.iter().map(|s| (s.id.clone(), s.target.clone())).collect() }
    }
}

impl Backend for OracleBackend {
    fn name(&self) -> &str {
        &self.name
    }

    fn kind(&self) -> BackendKind {
        BackendKind::Any
    }

    fn complete(&self, prompt: &Prompt, _: &GenerationParams) -> Result<Vec<String>, BackendError> {
        lookup(&self.name, &self.answers, prompt)
    }
}

/// Answers every sample with its unchanged focus region.
pub struct EchoBackend {
    name: String,
    answers: HashMap<String, String>,
}

impl EchoBackend {
    pub fn new(name: &str, samples: &[RepairSample]) -> Self {
        let answers = samples
            .iter()
            .map(|s| {
                let body = s.focus().map(|f| f.body).unwrap_or_else(|_| s.code_without_markers());
                (s.id.clone(), body)
            })
            .collect();
        Self { name: name.to_string(), answers }
    }
}

impl Backend for EchoBackend {
    fn name(&self) -> &str {
        &self.name
    }

    fn kind(&self) -> BackendKind {
        BackendKind::Any
    }

    fn complete(&self, prompt: &Prompt, _: &GenerationParams) -> Result<Vec<String>, BackendError> {
        lookup(&self.name, &self.answers, prompt)
    }
}

/// Replays a fixed list of outcomes, one per call, then fails fatally.
pub struct ScriptedBackend {
    name: String,
    kind: BackendKind,
    script: Mutex<VecDeque<Result<Vec<String>, BackendError>>>,
    calls: AtomicUsize,
}

impl ScriptedBackend {
    pub fn new(name: &str, kind: BackendKind, script: Vec<Result<Vec<String>, BackendError>>) -> Self {
        Self { name: name.to_string(), kind, script: Mutex::new(script.into()), calls: AtomicUsize::new(0) }
    }

    pub fn calls(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }
}

impl Backend for ScriptedBackend {
    fn name(&self) -> &str {
        &self.name
    }

    fn kind(&self) -> BackendKind {
        self.kind
    }

    fn complete(&self, _: &Prompt, _: &GenerationParams) -> Result<Vec<String>, BackendError> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        let mut script = self.script.lock().unwrap_or_else(|e| e.into_inner());
        script.pop_front().unwrap_or_else(|| Err(BackendError::Fatal("script exhausted".into())))
    }
}
