//! Scoring: top-k exact match, corpus BLEU-4 and CodeBLEU, overall and per
//! fix category.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::corpus::{normalize_whitespace, FixCategory};
use crate::javatok;

pub mod bleu;
pub mod codebleu;

pub use bleu::{corpus_bleu, sentence_bleu, weighted_bleu, BleuStats};
pub use codebleu::{
    ast_match, codebleu_sample, dataflow_match, weighted_ngram, CodeBleuSample, CodeBleuWeights, MetricConfig,
};

/// Whitespace-insensitive equality.
pub fn exact_match(prediction: &str, target: &str) -> bool {
    normalize_whitespace(prediction) == normalize_whitespace(target)
}

/// Comment-free token texts, the unit every n-gram metric counts.
pub fn metric_tokens(text: &str) -> Vec<String> {
    javatok::lex_code(text).into_iter().map(|t| t.text).collect()
}

/// Percentage of samples whose first `k` predictions contain an exact match.
/// Samples with fewer than `k` predictions use all they have.
pub fn top_k_accuracy<S: AsRef<str>>(predictions: &[Vec<S>], targets: &[S], k: usize) -> f64 {
    assert_eq!(predictions.len(), targets.len(), "predictions and targets must align");
    if targets.is_empty() {
        return 0.0;
    }
    let hits = predictions
        .iter()
        .zip(targets)
        .filter(|(preds, t)| preds.iter().take(k).any(|p| exact_match(p.as_ref(), t.as_ref())))
        .count();
    100.0 * hits as f64 / targets.len() as f64
}

/// Corpus BLEU-4 over raw texts, as a percentage.
pub fn bleu4<S: AsRef<str>>(hypotheses: &[S], references: &[S]) -> f64 {
    let h: Vec<Vec<String>> = hypotheses.iter().map(|s| metric_tokens(s.as_ref())).collect();
    let r: Vec<Vec<String>> = references.iter().map(|s| metric_tokens(s.as_ref())).collect();
    corpus_bleu(&h, &r)
}

/// One sample ready for scoring: cleaned predictions in rank order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvalItem {
    pub id: String,
    pub target: String,
    pub predictions: Vec<String>,
    pub category: FixCategory,
    /// Generation failed; excluded from every denominator.
    pub failed: bool,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Components {
    pub ngram: f64,
    pub weighted_ngram: f64,
    pub ast_match: f64,
    pub dataflow_match: f64,
}

/// Aggregate scores for one slice of samples. Percentages are in `[0, 100]`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ScoreCard {
    pub top_k_accuracy: BTreeMap<usize, f64>,
    pub bleu4: f64,
    pub codebleu: f64,
    pub components: Components,
    pub n_scored: usize,
    pub n_failed: usize,
    /// Rank-1 predictions that did not parse.
    pub n_parse_failures: usize,
    /// Nothing to score: all metrics are placeholders.
    pub zero_denominator: bool,
}

fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    if n == 0 {
        0.0
    } else {
        sum / n as f64
    }
}

/// Score a slice. Items are processed in id order so sums are reproducible.
pub fn score(items: &[EvalItem], ks: &[usize], config: &MetricConfig) -> ScoreCard {
    let mut live: Vec<&EvalItem> = items.iter().filter(|i| !i.failed).collect();
    live.sort_by(|a, b| a.id.cmp(&b.id));
    let n_failed = items.len() - live.len();
    if live.is_empty() {
        return ScoreCard {
            top_k_accuracy: ks.iter().map(|&k| (k, 0.0)).collect(),
            n_failed,
            zero_denominator: true,
            ..ScoreCard::default()
        };
    }

    let preds: Vec<Vec<&str>> = live.iter().map(|i| i.predictions.iter().map(String::as_str).collect()).collect();
    let targets: Vec<&str> = live.iter().map(|i| i.target.as_str()).collect();
    let top_k_accuracy = ks.iter().map(|&k| (k, top_k_accuracy(&preds, &targets, k))).collect();

    let firsts: Vec<String> =
        live.iter().map(|i| normalize_whitespace(i.predictions.first().map_or("", String::as_str))).collect();
    let refs: Vec<String> = live.iter().map(|i| normalize_whitespace(&i.target)).collect();
    let bleu4 = bleu4(&firsts, &refs);

    let samples: Vec<CodeBleuSample> = firsts.iter().zip(&refs).map(|(h, r)| codebleu_sample(h, r, config)).collect();
    let components = Components {
        ngram: 100.0 * mean(samples.iter().map(|s| s.ngram)),
        weighted_ngram: 100.0 * mean(samples.iter().map(|s| s.weighted_ngram)),
        ast_match: 100.0 * mean(samples.iter().filter_map(|s| s.ast_match)),
        dataflow_match: 100.0 * mean(samples.iter().filter_map(|s| s.dataflow_match)),
    };
    ScoreCard {
        top_k_accuracy,
        bleu4,
        codebleu: 100.0 * mean(samples.iter().map(|s| s.codebleu)),
        components,
        n_scored: live.len(),
        n_failed,
        n_parse_failures: samples.iter().filter(|s| s.hyp_parse_failed).count(),
        zero_denominator: false,
    }
}

/// Score cards restricted to each fix category. Insert, Delete and Update
/// always appear; Unclassified only when present.
pub fn per_category_report(
    items: &[EvalItem],
    ks: &[usize],
    config: &MetricConfig,
) -> BTreeMap<FixCategory, ScoreCard> {
    let mut out = BTreeMap::new();
    let mut cats: Vec<FixCategory> = FixCategory::CLASSIFIED.to_vec();
    if items.iter().any(|i| i.category == FixCategory::Unclassified) {
        cats.push(FixCategory::Unclassified);
    }
    for cat in cats {
        let subset: Vec<EvalItem> = items.iter().filter(|i| i.category == cat).cloned().collect();
        out.insert(cat, score(&subset, ks, config));
    }
    out
}
