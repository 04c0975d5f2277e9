//! End-to-end runs: configuration, ingestion, the staged pipeline and
//! reports.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::backends::{BackendError, BackendSpec, GenerationParams, RetryPolicy};
use crate::cleaner::CleanerConfig;
use crate::corpus::{CorpusError, Split};
use crate::metrics::MetricConfig;
use crate::prompts::{PromptError, PromptMode, DEFAULT_SHOTS, TEMPLATE_VERSION};
use crate::retrieval::RetrievalError;
use crate::store::StoreError;

pub mod ingest;
pub mod pipeline;
pub mod report;

pub use ingest::{ingest_pairs, ingest_records, resplit, IngestOptions, IngestReport, SplitPool, TokenCounter};
pub use pipeline::{
    annotation_sample, load_store, prepare, run, run_with, RunContext, RunManifest, RunOutcome, ScoreRecord,
};
pub use report::{render_report, report};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("invalid config: {0}")]
    Config(String),
    #[error("no scored runs under {0}")]
    NoRuns(PathBuf),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error(transparent)]
    Backend(#[from] BackendError),
    #[error(transparent)]
    Prompt(#[from] PromptError),
    #[error(transparent)]
    Retrieval(#[from] RetrievalError),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

pub(crate) fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> HarnessError + '_ {
    move |source| HarnessError::Io { path: path.to_path_buf(), source }
}

/// Which samples a run evaluates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum EvalSplit {
    #[default]
    #[serde(alias = "test")]
    Test,
    #[serde(alias = "validation")]
    Validation,
    /// Every sample in the store.
    #[serde(alias = "all")]
    All,
}

impl EvalSplit {
    pub fn includes(self, split: Split) -> bool {
        match self {
            EvalSplit::Test => split == Split::Test,
            EvalSplit::Validation => split == Split::Validation,
            EvalSplit::All => true,
        }
    }
}

fn default_shots() -> usize {
    DEFAULT_SHOTS
}

fn default_ks() -> Vec<usize> {
    vec![1]
}

fn default_concurrency() -> usize {
    4
}

fn default_template() -> String {
    TEMPLATE_VERSION.to_string()
}

fn default_mode() -> PromptMode {
    PromptMode::ZeroShot
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Canonical sample store.
    pub corpus: PathBuf,
    #[serde(default)]
    pub run_dir: Option<PathBuf>,
    pub backends: Vec<BackendSpec>,
    #[serde(default = "default_mode")]
    pub prompt_mode: PromptMode,
    #[serde(default = "default_shots")]
    pub shots: usize,
    #[serde(default = "default_ks")]
    pub ks: Vec<usize>,
    #[serde(default)]
    pub seed: u64,
    /// Concurrent requests per backend.
    #[serde(default = "default_concurrency")]
    pub concurrency: usize,
    #[serde(default = "default_template")]
    pub template_version: String,
    #[serde(default)]
    pub eval_split: EvalSplit,
    #[serde(default)]
    pub params: GenerationParams,
    #[serde(default)]
    pub retry: RetryPolicy,
    #[serde(default)]
    pub metrics: MetricConfig,
    #[serde(default)]
    pub cleaner: CleanerConfig,
}

impl RunConfig {
    pub fn new(corpus: impl Into<PathBuf>, backends: Vec<BackendSpec>) -> Self {
        Self {
            corpus: corpus.into(),
            run_dir: None,
            backends,
            prompt_mode: default_mode(),
            shots: DEFAULT_SHOTS,
            ks: default_ks(),
            seed: 0,
            concurrency: default_concurrency(),
            template_version: default_template(),
            eval_split: EvalSplit::default(),
            params: GenerationParams::default(),
            retry: RetryPolicy::default(),
            metrics: MetricConfig::default(),
            cleaner: CleanerConfig::default(),
        }
    }

    pub fn from_toml(text: &str) -> Result<Self, HarnessError> {
        toml::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path).map_err(io_err(path))?;
        let mut cfg = Self::from_toml(&text)?;
        // relative corpus paths are relative to the config file
        if cfg.corpus.is_relative() {
            if let Some(dir) = path.parent() {
                cfg.corpus = dir.join(&cfg.corpus);
            }
        }
        Ok(cfg)
    }

    /// Hash of everything that determines a run's outputs, plus the corpus
    /// bytes. Paths, concurrency and retry timing are left out.
    pub fn fingerprint(&self, corpus_bytes: &[u8]) -> String {
        #[derive(Serialize)]
        struct Canonical<'a> {
            corpus_sha256: String,
            backends: &'a [BackendSpec],
            prompt_mode: PromptMode,
            shots: usize,
            ks: &'a [usize],
            seed: u64,
            template_version: &'a str,
            eval_split: EvalSplit,
            params: &'a GenerationParams,
            metrics: &'a MetricConfig,
            cleaner: &'a CleanerConfig,
            tokenizer: &'a str,
        }
        let canonical = Canonical {
            corpus_sha256: hex::encode(Sha256::digest(corpus_bytes)),
            backends: &self.backends,
            prompt_mode: self.prompt_mode,
            shots: self.shots,
            ks: &self.ks,
            seed: self.seed,
            template_version: &self.template_version,
            eval_split: self.eval_split,
            params: &self.params,
            metrics: &self.metrics,
            cleaner: &self.cleaner,
            tokenizer: crate::javatok::TOKENIZER_VERSION,
        };
        let json = serde_json::to_vec(&canonical).expect("config serializes");
        hex::encode(Sha256::digest(json))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn toml_config() {
        let cfg = RunConfig::from_toml(
            r#"
            corpus = "samples.jsonl"
            prompt_mode = "FewShot"
            ks = [1, 5]
            eval_split = "all"

            [[backends]]
            name = "oracle"
            type = "oracle"

            [params]
            n_candidates = 5

            [metrics]
            keyword_weight = 3.0
            "#,
        )
        .unwrap();
        assert_eq!(cfg.prompt_mode, PromptMode::FewShot);
        assert_eq!(cfg.params.n_candidates, 5);
        assert_eq!(cfg.params.top_p, 1.0);
        assert_eq!(cfg.metrics.keyword_weight, 3.0);
        assert_eq!(cfg.metrics.weights.ngram, 0.25);
        assert_eq!(cfg.eval_split, EvalSplit::All);
        assert_eq!(cfg.shots, 3);
        assert!(RunConfig::from_toml("corpus = 1").is_err());
        assert!(RunConfig::from_toml("corpus = \"x\"\nbackends = []\nbogus = 1").is_err());
    }

    #[test]
    fn fingerprint_tracks_outputs_only() {
        let a = RunConfig::new("a.jsonl", vec![]);
        let mut b = a.clone();
        b.concurrency = 9;
        b.corpus = "elsewhere.jsonl".into();
        assert_eq!(a.fingerprint(b"x"), b.fingerprint(b"x"));
        assert_ne!(a.fingerprint(b"x"), a.fingerprint(b"y"));
        b.seed = 1;
        assert_ne!(a.fingerprint(b"x"), b.fingerprint(b"x"));
    }
}
