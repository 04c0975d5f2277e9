//! The staged run: prompts, predictions, cleaning, scoring.
//!
//! Every stage reads and writes files under the run directory, so any stage
//! can be rerun on its own. Appended prediction lines carry the run
//! fingerprint; a restarted run skips samples already answered under the
//! same fingerprint.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::time::Duration;

use chrono::{SecondsFormat, Utc};
use serde::{Deserialize, Serialize};

use super::{io_err, EvalSplit, HarnessError, RunConfig, TOOL_VERSION};
use crate::analysis::{draw_sample, sample_size, AnnotationItem};
use crate::backends::{generate_with, kind_of, Backend, BackendError, Prediction, Registry};
use crate::cleaner::{clean_with, CleaningTrace};
use crate::corpus::{classify_fix, FixCategory, RepairSample, Split};
use crate::javatok::TOKENIZER_VERSION;
use crate::metrics::{codebleu::CodeBleuWeights, per_category_report, score, EvalItem, ScoreCard};
use crate::prompts::{build_few_shot, build_instruct, build_zero_shot, Prompt, PromptMode, TEMPLATE_VERSION};
use crate::retrieval::{TfidfIndex, REVIEW_TOKENIZATION};
use crate::store::{read_jsonl, read_jsonl_or_empty, write_jsonl, Appender};

pub const MANIFEST_FILE: &str = "manifest.json";
pub const SCORES_FILE: &str = "scores/scores.jsonl";

/// One generated sample as appended to `raw/<backend>.jsonl`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawLine {
    pub fingerprint: String,
    pub sample_id: String,
    pub backend: String,
    pub predictions: Vec<Prediction>,
}

/// A sample whose generation gave up, appended to `raw/<backend>.failed.jsonl`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FailureLine {
    pub fingerprint: String,
    pub sample_id: String,
    pub backend: String,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CleanedLine {
    pub fingerprint: String,
    pub sample_id: String,
    pub backend: String,
    pub rank: u32,
    pub text: String,
    pub trace: CleaningTrace,
}

/// One row of `scores/scores.jsonl`: a backend on a slice of the eval set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreRecord {
    pub fingerprint: String,
    pub backend: String,
    pub split: EvalSplit,
    /// `"All"` or a fix category.
    pub category: String,
    pub prompt_mode: PromptMode,
    pub card: ScoreCard,
    pub weights: CodeBleuWeights,
    pub keyword_weight: f64,
    pub bleu: String,
    pub template_version: String,
    pub tokenizer_version: String,
    /// Review preprocessing for few-shot retrieval.
    pub review_tokenization: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BackendProgress {
    pub backend: String,
    pub generated: usize,
    /// Already present from an earlier attempt with the same fingerprint.
    pub skipped: usize,
    pub failed: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub fingerprint: String,
    pub tool_version: String,
    pub tokenizer_version: String,
    pub template_version: String,
    pub started_at: String,
    pub finished_at: String,
    pub config: RunConfig,
    pub counts: BTreeMap<String, usize>,
    pub backends: Vec<BackendProgress>,
    pub warnings: Vec<String>,
    pub exit_code: i32,
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub manifest: RunManifest,
    pub records: Vec<ScoreRecord>,
    pub report: String,
    /// 0 when every sample was generated, 2 when some failed.
    pub exit_code: i32,
}

/// Loaded corpus and config for one run directory.
pub struct RunContext {
    pub config: RunConfig,
    pub run_dir: PathBuf,
    pub fingerprint: String,
    pub samples: Vec<RepairSample>,
    /// Samples under evaluation, sorted by id.
    pub eval: Vec<RepairSample>,
}

/// Read a sample store, filling in categories that were never assigned.
pub fn load_store(path: &Path) -> Result<(Vec<RepairSample>, Vec<u8>), HarnessError> {
    let bytes = std::fs::read(path).map_err(io_err(path))?;
    let mut samples: Vec<RepairSample> = read_jsonl(path)?;
    for s in &mut samples {
        if s.category == FixCategory::Unclassified {
            s.category = classify_fix(s).category;
        }
    }
    Ok((samples, bytes))
}

fn valid_name(name: &str) -> bool {
    !name.is_empty()
        && !name.starts_with('.')
        && name.chars().all(|c| c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.'))
}

fn validate(config: &RunConfig) -> Result<(), HarnessError> {
    let bad = |m: String| Err(HarnessError::Config(m));
    if config.backends.is_empty() {
        return bad("no backends configured".into());
    }
    let mut seen = HashSet::new();
    for b in &config.backends {
        if !valid_name(&b.name) {
            return bad(format!("backend name `{}` must be [A-Za-z0-9._-]", b.name));
        }
        if !seen.insert(&b.name) {
            return bad(format!("duplicate backend name `{}`", b.name));
        }
        if let Some(kind) = kind_of(&b.backend_type) {
            if !kind.accepts(config.prompt_mode) {
                return Err(BackendError::IncompatiblePromptMode {
                    backend: b.name.clone(),
                    kind,
                    mode: config.prompt_mode,
                }
                .into());
            }
        }
    }
    if config.ks.is_empty() || config.ks.contains(&0) {
        return bad("ks must be a non-empty list of positive integers".into());
    }
    if config.concurrency == 0 {
        return bad("concurrency must be at least 1".into());
    }
    if config.params.n_candidates == 0 {
        return bad("n_candidates must be at least 1".into());
    }
    if config.template_version != TEMPLATE_VERSION {
        return bad(format!(
            "template version `{}` is not available (have `{TEMPLATE_VERSION}`)",
            config.template_version
        ));
    }
    Ok(())
}

impl RunContext {
    pub fn load(config: RunConfig, run_dir: &Path) -> Result<Self, HarnessError> {
        validate(&config)?;
        let (samples, bytes) = load_store(&config.corpus)?;
        let fingerprint = config.fingerprint(&bytes);
        let mut eval: Vec<RepairSample> =
            samples.iter().filter(|s| config.eval_split.includes(s.split)).cloned().collect();
        eval.sort_by(|a, b| a.id.cmp(&b.id));
        Ok(Self { config, run_dir: run_dir.to_path_buf(), fingerprint, samples, eval })
    }

    fn path(&self, rel: &str) -> PathBuf {
        self.run_dir.join(rel)
    }

    /// Instantiate every configured backend, failing early on missing
    /// credentials or a prompt mode the backend cannot take.
    pub fn build_backends(&self, registry: &Registry) -> Result<Vec<Arc<dyn Backend>>, HarnessError> {
        let mut out = Vec::new();
        for spec in &self.config.backends {
            let b = registry.build(spec, &self.samples)?;
            if !b.kind().accepts(self.config.prompt_mode) {
                return Err(BackendError::IncompatiblePromptMode {
                    backend: spec.name.clone(),
                    kind: b.kind(),
                    mode: self.config.prompt_mode,
                }
                .into());
            }
            out.push(b);
        }
        Ok(out)
    }

    /// Build prompts for the eval set and write them with the sample list.
    pub fn prompts(&self) -> Result<Vec<Prompt>, HarnessError> {
        let prompts = match self.config.prompt_mode {
            PromptMode::ZeroShot => self.eval.iter().map(build_zero_shot).collect(),
            PromptMode::Instruct => self.eval.iter().map(build_instruct).collect(),
            PromptMode::FewShot => self.few_shot_prompts()?,
        };
        write_jsonl(&self.path("samples/eval.jsonl"), &self.eval)?;
        write_jsonl(&self.path("prompts/prompts.jsonl"), &prompts)?;
        Ok(prompts)
    }

    fn few_shot_prompts(&self) -> Result<Vec<Prompt>, HarnessError> {
        let train: Vec<&RepairSample> = self.samples.iter().filter(|s| s.split == Split::Train).collect();
        let by_id: HashMap<&str, &RepairSample> = train.iter().map(|s| (s.id.as_str(), *s)).collect();
        let index = TfidfIndex::build(train.iter().map(|s| (s.id.as_str(), s.review.as_str())))?;
        let mut out = Vec::with_capacity(self.eval.len());
        for s in &self.eval {
            let hits = index.top_k_filtered(&s.review, self.config.shots, |id| id != s.id);
            let shots: Vec<&RepairSample> = hits.iter().map(|(id, _)| by_id[id.as_str()]).collect();
            out.push(build_few_shot(s, &shots, self.config.shots)?);
        }
        Ok(out)
    }

    fn raw_path(&self, backend: &str) -> PathBuf {
        self.path(&format!("raw/{backend}.jsonl"))
    }

    fn failed_path(&self, backend: &str) -> PathBuf {
        self.path(&format!("raw/{backend}.failed.jsonl"))
    }

    fn cleaned_path(&self, backend: &str) -> PathBuf {
        self.path(&format!("cleaned/{backend}.jsonl"))
    }

    /// Raw lines of this run for `backend`, first occurrence per sample.
    fn raw_lines(&self, backend: &str) -> Result<BTreeMap<String, RawLine>, HarnessError> {
        let mut out = BTreeMap::new();
        for line in read_jsonl_or_empty::<RawLine>(&self.raw_path(backend))? {
            if line.fingerprint == self.fingerprint {
                out.entry(line.sample_id.clone()).or_insert(line);
            }
        }
        Ok(out)
    }

    /// Generate predictions for every prompt not yet answered, using up to
    /// `concurrency` requests at a time.
    pub fn predict(
        &self,
        backend: &dyn Backend,
        prompts: &[Prompt],
        sleep: &(dyn Fn(Duration) + Sync),
    ) -> Result<BackendProgress, HarnessError> {
        let name = backend.name().to_string();
        let done = self.raw_lines(&name)?;
        let pending: Vec<&Prompt> = prompts.iter().filter(|p| !done.contains_key(&p.sample_id)).collect();
        let raw = Mutex::new(Appender::open(&self.raw_path(&name))?);
        let failed = Mutex::new(Appender::open(&self.failed_path(&name))?);
        let next = AtomicUsize::new(0);
        let generated = AtomicUsize::new(0);
        let n_failed = AtomicUsize::new(0);
        let write_error = Mutex::new(None);

        let worker = || loop {
            let i = next.fetch_add(1, Ordering::SeqCst);
            let Some(prompt) = pending.get(i) else { break };
            let written = match generate_with(prompt, &self.config.params, backend, &self.config.retry, sleep) {
                Ok(predictions) => {
                    generated.fetch_add(1, Ordering::SeqCst);
                    let line = RawLine {
                        fingerprint: self.fingerprint.clone(),
                        sample_id: prompt.sample_id.clone(),
                        backend: name.clone(),
                        predictions,
                    };
                    raw.lock().unwrap_or_else(|e| e.into_inner()).append(&line)
                }
                Err(e) => {
                    n_failed.fetch_add(1, Ordering::SeqCst);
                    let line = FailureLine {
                        fingerprint: self.fingerprint.clone(),
                        sample_id: prompt.sample_id.clone(),
                        backend: name.clone(),
                        error: e.to_string(),
                    };
                    failed.lock().unwrap_or_else(|e| e.into_inner()).append(&line)
                }
            };
            if let Err(e) = written {
                write_error.lock().unwrap_or_else(|e| e.into_inner()).get_or_insert(e);
                break;
            }
        };
        let workers = self.config.concurrency.min(pending.len());
        std::thread::scope(|scope| {
            for _ in 0..workers {
                scope.spawn(worker);
            }
        });
        if let Some(e) = write_error.into_inner().unwrap_or_else(|e| e.into_inner()) {
            return Err(e.into());
        }
        Ok(BackendProgress {
            backend: name,
            generated: generated.into_inner(),
            skipped: done.len(),
            failed: n_failed.into_inner(),
        })
    }

    /// Clean every raw prediction of `backend` into `cleaned/<backend>.jsonl`.
    pub fn clean(&self, backend: &str) -> Result<usize, HarnessError> {
        let mut out = Vec::new();
        for line in self.raw_lines(backend)?.into_values() {
            for p in line.predictions {
                let (text, trace) = clean_with(&p.raw_text, &self.config.cleaner);
                out.push(CleanedLine {
                    fingerprint: self.fingerprint.clone(),
                    sample_id: line.sample_id.clone(),
                    backend: backend.to_string(),
                    rank: p.rank,
                    text,
                    trace,
                });
            }
        }
        out.sort_by(|a, b| (&a.sample_id, a.rank).cmp(&(&b.sample_id, b.rank)));
        write_jsonl(&self.cleaned_path(backend), &out)?;
        Ok(out.len())
    }

    /// Eval items for `backend`; samples without cleaned output are failed.
    pub fn eval_items(&self, backend: &str) -> Result<Vec<EvalItem>, HarnessError> {
        let mut preds: HashMap<String, Vec<(u32, String)>> = HashMap::new();
        for line in read_jsonl_or_empty::<CleanedLine>(&self.cleaned_path(backend))? {
            if line.fingerprint == self.fingerprint {
                preds.entry(line.sample_id).or_default().push((line.rank, line.text));
            }
        }
        Ok(self
            .eval
            .iter()
            .map(|s| {
                let mut p = preds.remove(&s.id).unwrap_or_default();
                p.sort_by_key(|(rank, _)| *rank);
                EvalItem {
                    id: s.id.clone(),
                    target: s.target.clone(),
                    failed: p.is_empty(),
                    predictions: p.into_iter().map(|(_, t)| t).collect(),
                    category: s.category,
                }
            })
            .collect())
    }

    /// Score every configured backend and write `scores/`.
    pub fn score(&self) -> Result<Vec<ScoreRecord>, HarnessError> {
        let cfg = &self.config;
        let mut names: Vec<&str> = cfg.backends.iter().map(|b| b.name.as_str()).collect();
        names.sort_unstable();
        let mut records = Vec::new();
        for name in names {
            let items = self.eval_items(name)?;
            let record = |category: String, card: ScoreCard| ScoreRecord {
                fingerprint: self.fingerprint.clone(),
                backend: name.to_string(),
                split: cfg.eval_split,
                category,
                prompt_mode: cfg.prompt_mode,
                card,
                weights: cfg.metrics.weights,
                keyword_weight: cfg.metrics.keyword_weight,
                bleu: "corpus BLEU-4".into(),
                template_version: cfg.template_version.clone(),
                tokenizer_version: TOKENIZER_VERSION.into(),
                review_tokenization: REVIEW_TOKENIZATION.into(),
            };
            let mut rows = vec![record("All".into(), score(&items, &cfg.ks, &cfg.metrics))];
            for (cat, card) in per_category_report(&items, &cfg.ks, &cfg.metrics) {
                rows.push(record(cat.to_string(), card));
            }
            write_jsonl(&self.path(&format!("scores/{name}.jsonl")), &rows)?;
            records.extend(rows);
        }
        write_jsonl(&self.path(SCORES_FILE), &records)?;
        Ok(records)
    }

    pub fn write_manifest(&self, manifest: &RunManifest) -> Result<(), HarnessError> {
        let path = self.path(MANIFEST_FILE);
        let json = serde_json::to_string_pretty(manifest).map_err(crate::store::StoreError::from)?;
        std::fs::write(&path, json + "\n").map_err(io_err(&path))
    }
}

/// Draw the human-evaluation sample for `backend` from a finished run:
/// a seeded subset of the eval set sized for `confidence` and `margin`,
/// paired with each sample's top cleaned candidate (empty when generation
/// failed).
pub fn annotation_sample(
    run_dir: &Path,
    backend: &str,
    confidence: f64,
    margin: f64,
    seed: u64,
) -> Result<Vec<AnnotationItem>, HarnessError> {
    let eval: Vec<RepairSample> = read_jsonl(&run_dir.join("samples/eval.jsonl"))?;
    let cleaned_path = run_dir.join(format!("cleaned/{backend}.jsonl"));
    if !cleaned_path.exists() {
        return Err(HarnessError::NoRuns(cleaned_path));
    }
    let mut best: HashMap<String, (u32, String)> = HashMap::new();
    for line in read_jsonl::<CleanedLine>(&cleaned_path)? {
        let slot = best.entry(line.sample_id).or_insert((u32::MAX, String::new()));
        if line.rank < slot.0 {
            *slot = (line.rank, line.text);
        }
    }
    let n = sample_size(eval.len() as u64, confidence, margin).map_err(|e| HarnessError::Config(e.to_string()))?;
    let picked = draw_sample(&eval, n as usize, seed).map_err(|e| HarnessError::Config(e.to_string()))?;
    Ok(picked
        .into_iter()
        .map(|s| AnnotationItem {
            candidate: best.remove(&s.id).map(|(_, t)| t).unwrap_or_default(),
            sample_id: s.id,
            buggy_code: s.buggy_code,
            review: s.review,
        })
        .collect())
}

fn now() -> String {
    Utc::now().to_rfc3339_opts(SecondsFormat::Millis, true)
}

/// Load, validate and build backends in one step.
pub fn prepare(
    config: RunConfig,
    run_dir: &Path,
    registry: &Registry,
) -> Result<(RunContext, Vec<Arc<dyn Backend>>), HarnessError> {
    let ctx = RunContext::load(config, run_dir)?;
    let backends = ctx.build_backends(registry)?;
    Ok((ctx, backends))
}

/// Every stage in order, then the report.
pub fn run(config: RunConfig, run_dir: &Path, registry: &Registry) -> Result<RunOutcome, HarnessError> {
    run_with(config, run_dir, registry, &std::thread::sleep)
}

/// [`run`] with an injectable sleep for retry backoff.
pub fn run_with(
    config: RunConfig,
    run_dir: &Path,
    registry: &Registry,
    sleep: &(dyn Fn(Duration) + Sync),
) -> Result<RunOutcome, HarnessError> {
    let started_at = now();
    let (ctx, backends) = prepare(config, run_dir, registry)?;
    std::fs::create_dir_all(run_dir).map_err(io_err(run_dir))?;
    let prompts = ctx.prompts()?;
    let warnings: Vec<String> = prompts.iter().filter_map(|p| p.warning.clone()).collect();

    let mut progress = Vec::new();
    for b in &backends {
        progress.push(ctx.predict(b.as_ref(), &prompts, sleep)?);
        ctx.clean(b.name())?;
    }
    let records = ctx.score()?;
    let report = super::report::render_report(&records);
    let report_path = run_dir.join("report.txt");
    std::fs::write(&report_path, &report).map_err(io_err(&report_path))?;

    let any_failed = records.iter().any(|r| r.category == "All" && r.card.n_failed > 0);
    let exit_code = if any_failed { 2 } else { 0 };
    let mut counts = BTreeMap::new();
    counts.insert("samples".to_string(), ctx.samples.len());
    counts.insert("eval_samples".to_string(), ctx.eval.len());
    counts.insert("prompts".to_string(), prompts.len());
    counts.insert("prompt_warnings".to_string(), warnings.len());
    progress.sort_by(|a, b| a.backend.cmp(&b.backend));
    let manifest = RunManifest {
        fingerprint: ctx.fingerprint.clone(),
        tool_version: TOOL_VERSION.into(),
        tokenizer_version: TOKENIZER_VERSION.into(),
        template_version: ctx.config.template_version.clone(),
        started_at,
        finished_at: now(),
        config: ctx.config.clone(),
        counts,
        backends: progress,
        warnings,
        exit_code,
    };
    ctx.write_manifest(&manifest)?;
    Ok(RunOutcome { manifest, records, report, exit_code })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::backends::{BackendKind, BackendSpec, ScriptedBackend};
    use crate::corpus::{DatasetKind, SplitSpec};
    use crate::fixtures::synthetic_jsonl;
    use crate::harness::ingest::{ingest_records, resplit, IngestOptions, SplitPool};

    fn store(dir: &Path) -> PathBuf {
        let (samples, _) =
            ingest_records(&synthetic_jsonl(), &IngestOptions::new(DatasetKind::TufanoStyle, Split::Train));
        let samples = resplit(samples, &SplitSpec::parse("0.8,0.1,0.1", 1).unwrap(), SplitPool::All);
        let path = dir.join("store.jsonl");
        write_jsonl(&path, &samples).unwrap();
        path
    }

    fn spec(name: &str, ty: &str) -> BackendSpec {
        BackendSpec { name: name.into(), backend_type: ty.into(), model: None, base_url: None, timeout_secs: None }
    }

    #[test]
    fn oracle_and_echo_on_test_split() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = RunConfig::new(store(dir.path()), vec![spec("oracle", "oracle"), spec("echo", "echo")]);
        let out = run(cfg, &dir.path().join("run"), &Registry::default()).unwrap();
        assert_eq!(out.exit_code, 0);
        let all: Vec<_> = out.records.iter().filter(|r| r.category == "All").collect();
        assert_eq!(all[0].backend, "echo");
        assert_eq!(all[1].card.top_k_accuracy[&1], 100.0);
        assert_eq!(all[1].card.n_scored, 20);
        assert_eq!(all[0].card.top_k_accuracy[&1], 0.0);
        for d in ["samples", "prompts", "raw", "cleaned", "scores"] {
            assert!(dir.path().join("run").join(d).is_dir(), "{d}");
        }
        let items = annotation_sample(&dir.path().join("run"), "oracle", 0.95, 0.05, 3).unwrap();
        assert_eq!(items.len(), 19);
        assert!(items.iter().all(|i| !i.candidate.is_empty()));
        assert!(annotation_sample(&dir.path().join("run"), "nobody", 0.95, 0.05, 3).is_err());
    }

    #[test]
    fn partial_failure_and_resume() {
        let dir = tempfile::tempdir().unwrap();
        let corpus = store(dir.path());
        let run_dir = dir.path().join("run");
        let mut cfg = RunConfig::new(&corpus, vec![spec("flaky", "scripted")]);
        cfg.concurrency = 1;
        cfg.retry.max_retries = 0;

        let mut reg = Registry::default();
        reg.register("scripted", |s, _| {
            let mut script: Vec<Result<Vec<String>, BackendError>> = (0..15).map(|_| Ok(vec!["x".into()])).collect();
            script.extend((0..5).map(|_| Err(BackendError::Transient("503".into()))));
            Ok(Arc::new(ScriptedBackend::new(&s.name, BackendKind::Any, script)))
        });
        let first = run(cfg.clone(), &run_dir, &reg).unwrap();
        assert_eq!(first.exit_code, 2);
        let all = &first.records[0];
        assert_eq!((all.card.n_scored, all.card.n_failed), (15, 5));

        let calls = Arc::new(AtomicUsize::new(0));
        let mut reg = Registry::default();
        let c = calls.clone();
        reg.register("scripted", move |s, _| {
            let c = c.clone();
            Ok(Arc::new(CountingEcho { name: s.name.clone(), calls: c }))
        });
        let second = run(cfg, &run_dir, &reg).unwrap();
        assert_eq!(second.exit_code, 0);
        assert_eq!(calls.load(Ordering::SeqCst), 5);
        assert_eq!(second.manifest.backends[0].skipped, 15);
        assert_eq!(second.records[0].card.n_scored, 20);
    }

    struct CountingEcho {
        name: String,
        calls: Arc<AtomicUsize>,
    }

    impl Backend for CountingEcho {
        fn name(&self) -> &str {
            &self.name
        }
        fn kind(&self) -> BackendKind {
            BackendKind::Any
        }
        fn complete(&self, _: &Prompt, _: &crate::backends::GenerationParams) -> Result<Vec<String>, BackendError> {
            self.calls.fetch_add(1, Ordering::SeqCst);
            Ok(vec!["y".into()])
        }
    }

    #[test]
    fn few_shot_uses_train_only() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = RunConfig::new(store(dir.path()), vec![spec("oracle", "oracle")]);
        cfg.prompt_mode = PromptMode::FewShot;
        let ctx = RunContext::load(cfg, &dir.path().join("run")).unwrap();
        let prompts = ctx.prompts().unwrap();
        let split: HashMap<&str, Split> = ctx.samples.iter().map(|s| (s.id.as_str(), s.split)).collect();
        for p in &prompts {
            assert_eq!(p.shots.len(), 3);
            assert!(p.shots.iter().all(|s| split[s.id.as_str()] == Split::Train && s.id != p.sample_id));
        }
    }

    #[test]
    fn config_rejections() {
        let dir = tempfile::tempdir().unwrap();
        let corpus = store(dir.path());
        let mut cfg = RunConfig::new(&corpus, vec![spec("a", "edit")]);
        assert!(matches!(
            RunContext::load(cfg.clone(), dir.path()),
            Err(HarnessError::Backend(BackendError::IncompatiblePromptMode { .. }))
        ));
        cfg.backends = vec![spec("a", "oracle"), spec("a", "echo")];
        assert!(matches!(RunContext::load(cfg.clone(), dir.path()), Err(HarnessError::Config(_))));
        cfg.backends = vec![spec("../x", "oracle")];
        assert!(matches!(RunContext::load(cfg.clone(), dir.path()), Err(HarnessError::Config(_))));
        cfg.backends = vec![spec("a", "nope")];
        let ctx = RunContext::load(cfg, dir.path()).unwrap();
        assert!(matches!(
            ctx.build_backends(&Registry::default()),
            Err(HarnessError::Backend(BackendError::UnknownBackend(_)))
        ));
    }
}
