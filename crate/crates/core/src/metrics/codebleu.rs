//! CodeBLEU: n-gram, keyword-weighted n-gram, syntax-tree match and
//! data-flow match.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::bleu::{sentence_bleu, weighted_bleu};
use crate::javatok::{self, DataFlowEdge, Node, SyntaxTree, Token, TokenKind};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CodeBleuWeights {
    pub ngram: f64,
    pub weighted_ngram: f64,
    pub ast_match: f64,
    pub dataflow_match: f64,
}

impl Default for CodeBleuWeights {
    fn default() -> Self {
        Self { ngram: 0.25, weighted_ngram: 0.25, ast_match: 0.25, dataflow_match: 0.25 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MetricConfig {
    pub weights: CodeBleuWeights,
    pub keyword_weight: f64,
    pub other_weight: f64,
}

impl Default for MetricConfig {
    fn default() -> Self {
        Self { weights: CodeBleuWeights::default(), keyword_weight: 5.0, other_weight: 1.0 }
    }
}

/// One sample's CodeBLEU breakdown. Components are `None` when excluded
/// for this sample; all values are fractions in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CodeBleuSample {
    pub ngram: f64,
    pub weighted_ngram: f64,
    pub ast_match: Option<f64>,
    pub dataflow_match: Option<f64>,
    pub codebleu: f64,
    /// The hypothesis did not parse; syntax and data-flow scored 0.
    pub hyp_parse_failed: bool,
    /// The reference did not parse; syntax and data-flow were excluded.
    pub ref_parse_failed: bool,
}

pub fn weighted_ngram(hyp: &[Token], reference: &[Token], config: &MetricConfig) -> f64 {
    let weight = |t: &Token| {
        if t.kind == TokenKind::Keyword {
            config.keyword_weight
        } else {
            config.other_weight
        }
    };
    weighted_bleu(hyp, reference, weight)
}

/// Shapes of every internal subtree, with identifiers anonymised.
fn subtree_shapes(tree: &SyntaxTree) -> HashMap<String, usize> {
    fn shape(node: &Node, tree: &SyntaxTree, out: &mut HashMap<String, usize>) -> String {
        if node.is_leaf() {
            return match tree.token(node) {
                Some(t) if t.kind == TokenKind::Identifier => "<id>".to_string(),
                Some(t) => t.text.clone(),
                None => "<?>".to_string(),
            };
        }
        let inner: Vec<String> = node.children.iter().map(|c| shape(c, tree, out)).collect();
        let s = format!("({} {})", node.kind, inner.join(" "));
        *out.entry(s.clone()).or_insert(0) += 1;
        s
    }
    let mut out = HashMap::new();
    shape(&tree.root, tree, &mut out);
    out
}

fn multiset_recall<K: Eq + std::hash::Hash>(reference: &HashMap<K, usize>, hyp: &HashMap<K, usize>) -> Option<f64> {
    let total: usize = reference.values().sum();
    if total == 0 {
        return None;
    }
    let found: usize = reference.iter().map(|(k, &c)| c.min(hyp.get(k).copied().unwrap_or(0))).sum();
    Some(found as f64 / total as f64)
}

/// Fraction of reference subtrees found in the hypothesis.
pub fn ast_match_trees(hyp: &SyntaxTree, reference: &SyntaxTree) -> f64 {
    multiset_recall(&subtree_shapes(reference), &subtree_shapes(hyp)).unwrap_or(1.0)
}

type EdgeKey = (usize, usize, usize);

/// Edges keyed by variable slot and the ordinal of each endpoint among that
/// variable's occurrences, so keys survive renaming and position shifts.
fn edge_keys(edges: &[DataFlowEdge]) -> HashMap<EdgeKey, usize> {
    let mut positions: HashMap<usize, Vec<usize>> = HashMap::new();
    for e in edges {
        let p = positions.entry(e.var_slot).or_default();
        p.push(e.def_position);
        p.push(e.use_position);
    }
    for p in positions.values_mut() {
        p.sort_unstable();
        p.dedup();
    }
    let ordinal = |slot: usize, pos: usize| positions[&slot].binary_search(&pos).unwrap_or(0);
    let mut out = HashMap::new();
    for e in edges {
        let key = (e.var_slot, ordinal(e.var_slot, e.def_position), ordinal(e.var_slot, e.use_position));
        *out.entry(key).or_insert(0) += 1;
    }
    out
}

/// Fraction of reference def-use edges present in the hypothesis, or `None`
/// when the reference has no edges.
pub fn dataflow_match_edges(hyp: &[DataFlowEdge], reference: &[DataFlowEdge]) -> Option<f64> {
    multiset_recall(&edge_keys(reference), &edge_keys(hyp))
}

pub fn ast_match(hyp: &str, reference: &str) -> Result<f64, javatok::ParseFailure> {
    let r = javatok::parse_source(reference)?;
    Ok(match javatok::parse_source(hyp) {
        Ok(h) => ast_match_trees(&h, &r),
        Err(_) => 0.0,
    })
}

pub fn dataflow_match(hyp: &str, reference: &str) -> Option<f64> {
    let r = javatok::parse_source(reference).ok()?;
    let ref_edges = javatok::dataflow(&r);
    match javatok::parse_source(hyp) {
        Ok(h) => dataflow_match_edges(&javatok::dataflow(&h), &ref_edges),
        Err(_) => (!ref_edges.is_empty()).then_some(0.0),
    }
}

/// Per-sample CodeBLEU. Excluded components drop out and the remaining
/// weights are renormalised.
pub fn codebleu_sample(hyp: &str, reference: &str, config: &MetricConfig) -> CodeBleuSample {
    let hyp_tokens = javatok::lex_code(hyp);
    let ref_tokens = javatok::lex_code(reference);
    let texts = |ts: &[Token]| ts.iter().map(|t| t.text.clone()).collect::<Vec<_>>();
    let (hyp_texts, ref_texts) = (texts(&hyp_tokens), texts(&ref_tokens));
    // identical sequences score 1 even when too short or empty for BLEU
    let (ngram, weighted) = if hyp_texts == ref_texts {
        (1.0, 1.0)
    } else {
        (sentence_bleu(&hyp_texts, &ref_texts), weighted_ngram(&hyp_tokens, &ref_tokens, config))
    };

    let ref_tree = javatok::parse(&ref_tokens).ok();
    let hyp_tree = javatok::parse(&hyp_tokens).ok();
    let (ast, flow) = match (&ref_tree, &hyp_tree) {
        (None, _) => (None, None),
        (Some(r), Some(h)) => {
            (Some(ast_match_trees(h, r)), dataflow_match_edges(&javatok::dataflow(h), &javatok::dataflow(r)))
        }
        (Some(r), None) => (Some(0.0), (!javatok::dataflow(r).is_empty()).then_some(0.0)),
    };

    let w = &config.weights;
    let parts =
        [(Some(ngram), w.ngram), (Some(weighted), w.weighted_ngram), (ast, w.ast_match), (flow, w.dataflow_match)];
    let (num, den) =
        parts.iter().filter_map(|&(v, w)| v.map(|v| (v * w, w))).fold((0.0, 0.0), |(n, d), (vw, w)| (n + vw, d + w));
    let codebleu = if den > 0.0 { (num / den).clamp(0.0, 1.0) } else { 0.0 };
    CodeBleuSample {
        ngram,
        weighted_ngram: weighted,
        ast_match: ast,
        dataflow_match: flow,
        codebleu,
        hyp_parse_failed: ref_tree.is_some() && hyp_tree.is_none(),
        ref_parse_failed: ref_tree.is_none(),
    }
}
