//! Turning raw dataset files into the canonical sample store.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::HarnessError;
use crate::corpus::{
    classify_fix, lexical_token_count, parse_source_target, parse_structured_line, split_assignment, DatasetKind,
    ExternalCounts, FixCategory, RepairSample, Split, SplitSpec,
};

/// How input length is measured for the length cap.
#[derive(Debug, Clone, Default)]
pub enum TokenCounter {
    /// Built-in Java lexer plus whitespace-split review words.
    #[default]
    Lexical,
    /// Precomputed counts keyed by sample id; samples missing from the
    /// table fall back to the lexical count.
    External(ExternalCounts),
}

impl TokenCounter {
    fn count(&self, sample: &RepairSample) -> (usize, bool) {
        match self {
            TokenCounter::Lexical => (lexical_token_count(sample), false),
            TokenCounter::External(t) => match t.get(&sample.id) {
                Some(n) => (n, false),
                None => (lexical_token_count(sample), true),
            },
        }
    }

    fn name(&self) -> &'static str {
        match self {
            TokenCounter::Lexical => crate::javatok::TOKENIZER_VERSION,
            TokenCounter::External(_) => "external",
        }
    }
}

#[derive(Debug, Clone)]
pub struct IngestOptions {
    pub kind: DatasetKind,
    /// Split label for every ingested sample.
    pub split: Split,
    /// Inputs longer than this are dropped. `None` keeps everything.
    pub max_tokens: Option<usize>,
    pub counter: TokenCounter,
    /// Used to build ids for layout (a), which has none.
    pub id_prefix: String,
}

impl IngestOptions {
    pub fn new(kind: DatasetKind, split: Split) -> Self {
        Self { kind, split, max_tokens: Some(512), counter: TokenCounter::Lexical, id_prefix: String::new() }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rejection {
    pub line: usize,
    pub error: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngestReport {
    pub records: usize,
    pub rejected: Vec<Rejection>,
    pub kept: usize,
    pub removed_ids: Vec<String>,
    pub counter: String,
    /// Samples counted with the lexer because the external table lacked them.
    pub fallback_counts: usize,
    /// Removal counts depend on which tokenizer measured length.
    pub tokenizer_dependent: bool,
    pub categories: BTreeMap<FixCategory, usize>,
    pub degenerate: usize,
}

impl IngestReport {
    pub fn removed(&self) -> usize {
        self.removed_ids.len()
    }
}

fn finish(
    parsed: Vec<RepairSample>,
    mut report: IngestReport,
    opts: &IngestOptions,
) -> (Vec<RepairSample>, IngestReport) {
    report.counter = opts.counter.name().to_string();
    report.tokenizer_dependent = opts.max_tokens.is_some();
    let mut kept = Vec::with_capacity(parsed.len());
    for mut s in parsed {
        s.split = opts.split;
        let (n, fallback) = opts.counter.count(&s);
        report.fallback_counts += usize::from(fallback);
        if opts.max_tokens.is_some_and(|max| n > max) {
            report.removed_ids.push(s.id);
            continue;
        }
        let c = classify_fix(&s);
        s.category = c.category;
        report.degenerate += usize::from(c.degenerate);
        *report.categories.entry(c.category).or_default() += 1;
        kept.push(s);
    }
    report.kept = kept.len();
    (kept, report)
}

/// Layout (a): parallel source and target files, one sample per line.
pub fn ingest_pairs(
    sources: &str,
    targets: &str,
    opts: &IngestOptions,
) -> Result<(Vec<RepairSample>, IngestReport), HarnessError> {
    let src: Vec<&str> = sources.lines().collect();
    let tgt: Vec<&str> = targets.lines().collect();
    if src.len() != tgt.len() {
        return Err(HarnessError::Config(format!("{} source lines but {} target lines", src.len(), tgt.len())));
    }
    let mut report = IngestReport { records: src.len(), ..Default::default() };
    let mut parsed = Vec::new();
    for (i, (s, t)) in src.iter().zip(&tgt).enumerate() {
        let id = format!("{}{:06}", opts.id_prefix, i);
        match parse_source_target(&id, s, t, opts.kind) {
            Ok(sample) => parsed.push(sample),
            Err(e) => report.rejected.push(Rejection { line: i + 1, error: e.to_string() }),
        }
    }
    Ok(finish(parsed, report, opts))
}

/// Layout (b): one JSON record per line.
pub fn ingest_records(text: &str, opts: &IngestOptions) -> (Vec<RepairSample>, IngestReport) {
    let mut report = IngestReport::default();
    let mut parsed = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        report.records += 1;
        match parse_structured_line(line, opts.kind) {
            Ok(sample) => parsed.push(sample),
            Err(e) => report.rejected.push(Rejection { line: i + 1, error: e.to_string() }),
        }
    }
    finish(parsed, report, opts)
}

/// Which samples a split redistributes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SplitPool {
    /// Carve validation and test out of Train (and Unassigned) samples;
    /// existing validation/test labels stay put.
    #[default]
    Train,
    /// Reassign every sample.
    All,
}

impl std::str::FromStr for SplitPool {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "train" => Ok(SplitPool::Train),
            "all" => Ok(SplitPool::All),
            other => Err(format!("unknown split pool `{other}`")),
        }
    }
}

/// Relabel samples in place, keeping their order.
pub fn resplit(mut samples: Vec<RepairSample>, spec: &SplitSpec, pool: SplitPool) -> Vec<RepairSample> {
    let positions: Vec<usize> = samples
        .iter()
        .enumerate()
        .filter(|(_, s)| match pool {
            SplitPool::All => true,
            SplitPool::Train => matches!(s.split, Split::Train | Split::Unassigned),
        })
        .map(|(i, _)| i)
        .collect();
    for (&i, split) in positions.iter().zip(split_assignment(positions.len(), spec)) {
        samples[i].split = split;
    }
    samples
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::synthetic_jsonl;

    #[test]
    fn records_and_length_cap() {
        let text = format!("{}\nnot json\n", synthetic_jsonl().trim_end());
        let mut opts = IngestOptions::new(DatasetKind::TufanoStyle, Split::Train);
        let (kept, report) = ingest_records(&text, &opts);
        assert_eq!(report.records, 201);
        assert_eq!(report.rejected.len(), 1);
        assert_eq!(report.rejected[0].line, 201);
        assert_eq!(kept.len(), 200);
        assert_eq!(report.categories.values().sum::<usize>(), 200);
        assert!(kept.iter().all(|s| s.split == Split::Train && s.category != FixCategory::Unclassified));

        opts.max_tokens = Some(20);
        let (kept, report) = ingest_records(&text, &opts);
        assert_eq!(kept.len() + report.removed(), 200);
        assert!(report.removed() > 0);
        assert!(report.tokenizer_dependent);

        let mut table = std::collections::HashMap::new();
        table.insert("syn-000".to_string(), 10_000);
        opts.counter = TokenCounter::External(ExternalCounts::new(table));
        opts.max_tokens = Some(512);
        let (_, report) = ingest_records(&text, &opts);
        assert_eq!(report.removed_ids, ["syn-000"]);
        assert_eq!(report.fallback_counts, 199);
    }

    #[test]
    fn pairs() {
        let opts =
            IngestOptions { id_prefix: "t-".into(), ..IngestOptions::new(DatasetKind::TufanoStyle, Split::Test) };
        let (kept, report) = ingest_pairs(
            "int f ( ) { START return 1 ; END } |startcomment| add one |endcomment|\nno markers here\n",
            "int f ( ) { return 1 + 1 ; }\nx\n",
            &opts,
        )
        .unwrap();
        assert_eq!(kept.len(), 1);
        assert_eq!(kept[0].id, "t-000000");
        assert_eq!(kept[0].category, FixCategory::Insert);
        assert_eq!(report.rejected.len(), 1);
        assert!(ingest_pairs("a\nb\n", "a\n", &opts).is_err());
    }

    #[test]
    fn resplit_pools() {
        let opts = IngestOptions::new(DatasetKind::TufanoStyle, Split::Train);
        let (mut samples, _) = ingest_records(&synthetic_jsonl(), &opts);
        samples[0].split = Split::Test;
        let spec = SplitSpec::parse("0.8,0.1,0.1", 7).unwrap();
        let out = resplit(samples.clone(), &spec, SplitPool::Train);
        assert_eq!(out[0].split, Split::Test);
        let ids: Vec<_> = out.iter().map(|s| &s.id).collect();
        assert_eq!(ids, samples.iter().map(|s| &s.id).collect::<Vec<_>>());
        // 199 pooled: floor(19.9) each for validation and test, plus the pinned one
        let count = |sp| out.iter().filter(|s| s.split == sp).count();
        assert_eq!((count(Split::Validation), count(Split::Test)), (19, 20));
        let all = resplit(samples, &spec, SplitPool::All);
        assert_eq!(all.iter().filter(|s| s.split == Split::Test).count(), 20);
    }
}
