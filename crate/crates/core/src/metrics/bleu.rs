//! Corpus BLEU-4 and its keyword-weighted variant.

use std::collections::HashMap;
use std::hash::Hash;

pub const MAX_ORDER: usize = 4;
/// Numerator used for an n-gram order with no matches.
pub const EPSILON: f64 = 1e-9;

fn ngram_counts<T: Eq + Hash>(tokens: &[T], n: usize) -> HashMap<&[T], usize> {
    let mut counts = HashMap::new();
    if n > 0 && tokens.len() >= n {
        for w in tokens.windows(n) {
            *counts.entry(w).or_insert(0) += 1;
        }
    }
    counts
}

/// Per-order statistics accumulated over a corpus.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct BleuStats {
    pub matches: [f64; MAX_ORDER],
    pub totals: [f64; MAX_ORDER],
    pub ref_totals: [f64; MAX_ORDER],
    pub hyp_len: usize,
    pub ref_len: usize,
}

impl BleuStats {
    /// Add one sentence pair. `weight` gives the credit of one token.
    pub fn add<T: Eq + Hash>(&mut self, hyp: &[T], reference: &[T], weight: impl Fn(&T) -> f64) {
        self.hyp_len += hyp.len();
        self.ref_len += reference.len();
        for n in 1..=MAX_ORDER {
            let h = ngram_counts(hyp, n);
            let r = ngram_counts(reference, n);
            for (gram, &count) in &h {
                let w: f64 = gram.iter().map(&weight).sum();
                let clipped = count.min(r.get(gram).copied().unwrap_or(0));
                self.matches[n - 1] += clipped as f64 * w;
                self.totals[n - 1] += count as f64 * w;
            }
            self.ref_totals[n - 1] += reference.len().saturating_sub(n - 1) as f64;
        }
    }

    /// BLEU in `[0, 1]`.
    ///
    /// An order the hypothesis side cannot fill is dropped when the reference
    /// side cannot fill it either (short snippets), and otherwise counts as a
    /// smoothed zero.
    pub fn score(&self) -> f64 {
        if self.hyp_len == 0 {
            return 0.0;
        }
        let mut log_sum = 0.0;
        let mut orders = 0;
        for n in 0..MAX_ORDER {
            let (m, t) = (self.matches[n], self.totals[n]);
            let p = if t == 0.0 {
                if self.ref_totals[n] == 0.0 {
                    continue;
                }
                EPSILON
            } else if m == 0.0 {
                EPSILON / t
            } else {
                m / t
            };
            log_sum += p.ln();
            orders += 1;
        }
        if orders == 0 {
            return 0.0;
        }
        let bp =
            if self.hyp_len >= self.ref_len { 1.0 } else { (1.0 - self.ref_len as f64 / self.hyp_len as f64).exp() };
        bp * (log_sum / orders as f64).exp()
    }
}

/// Corpus BLEU-4 over aligned token sequences, as a percentage.
pub fn corpus_bleu<T: Eq + Hash>(hyps: &[Vec<T>], refs: &[Vec<T>]) -> f64 {
    assert_eq!(hyps.len(), refs.len(), "hypotheses and references must align");
    let mut stats = BleuStats::default();
    for (h, r) in hyps.iter().zip(refs) {
        stats.add(h, r, |_| 1.0);
    }
    100.0 * stats.score()
}

/// Sentence BLEU-4 in `[0, 1]`.
pub fn sentence_bleu<T: Eq + Hash>(hyp: &[T], reference: &[T]) -> f64 {
    weighted_bleu(hyp, reference, |_| 1.0)
}

/// Sentence BLEU-4 in `[0, 1]` where each n-gram's credit is the sum of its
/// tokens' weights.
pub fn weighted_bleu<T: Eq + Hash>(hyp: &[T], reference: &[T], weight: impl Fn(&T) -> f64) -> f64 {
    let mut stats = BleuStats::default();
    stats.add(hyp, reference, weight);
    stats.score()
}
