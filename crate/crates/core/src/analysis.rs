//! Developer-analysis tooling: sample sizes, random draws, binary rating
//! capture and Cohen's kappa.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::io::{BufRead, Write};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum AnalysisError {
    #[error("cannot draw {requested} ids from a pool of {available}")]
    SampleTooLarge { requested: usize, available: usize },
    #[error("rating vectors differ in length ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("no ratings given")]
    EmptyInput,
    #[error("score must be 0 or 1, got {0}")]
    NonBinaryScore(u8),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

/// Two-sided normal quantile for `confidence`, e.g. 1.959964 at 0.95.
pub fn z_score(confidence: f64) -> f64 {
    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    normal.inverse_cdf(1.0 - (1.0 - confidence) / 2.0)
}

/// Sample size for estimating a proportion with maximum variance, with
/// finite-population correction, rounded to the nearest integer.
pub fn sample_size(population: u64, confidence: f64, margin: f64) -> Result<u64, AnalysisError> {
    if population == 0 {
        return Err(AnalysisError::InvalidParameter("population must be at least 1".into()));
    }
    if !(0.0 < confidence && confidence < 1.0) || !(0.0 < margin && margin < 1.0) {
        return Err(AnalysisError::InvalidParameter(format!(
            "confidence {confidence} and margin {margin} must lie in (0, 1)"
        )));
    }
    let z = z_score(confidence);
    let n0 = z * z * 0.25 / (margin * margin);
    let n = n0 / (1.0 + (n0 - 1.0) / population as f64);
    Ok(n.round() as u64)
}

/// Uniform draw without replacement, reproducible per seed. The result keeps
/// the order of `ids`.
pub fn draw_sample<T: Clone>(ids: &[T], n: usize, seed: u64) -> Result<Vec<T>, AnalysisError> {
    if n > ids.len() {
        return Err(AnalysisError::SampleTooLarge { requested: n, available: ids.len() });
    }
    let idx: Vec<usize> = (0..ids.len()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut chosen: Vec<usize> = idx.choose_multiple(&mut rng, n).copied().collect();
    chosen.sort_unstable();
    Ok(chosen.into_iter().map(|i| ids[i].clone()).collect())
}

/// Cohen's kappa for two aligned binary rating vectors.
pub fn cohen_kappa(a: &[u8], b: &[u8]) -> Result<f64, AnalysisError> {
    if a.len() != b.len() {
        return Err(AnalysisError::LengthMismatch(a.len(), b.len()));
    }
    if a.is_empty() {
        return Err(AnalysisError::EmptyInput);
    }
    if let Some(&bad) = a.iter().chain(b).find(|&&s| s > 1) {
        return Err(AnalysisError::NonBinaryScore(bad));
    }
    let n = a.len() as f64;
    let agree = a.iter().zip(b).filter(|(x, y)| x == y).count() as f64;
    let p_o = agree / n;
    let ones_a = a.iter().filter(|&&s| s == 1).count() as f64 / n;
    let ones_b = b.iter().filter(|&&s| s == 1).count() as f64 / n;
    let p_e = ones_a * ones_b + (1.0 - ones_a) * (1.0 - ones_b);
    if p_e == 1.0 {
        return Ok(if a == b { 1.0 } else { 0.0 });
    }
    Ok((p_o - p_e) / (1.0 - p_e))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotationRecord {
    pub sample_id: String,
    pub rater_id: String,
    pub backend_name: String,
    pub score: u8,
    pub timestamp: String,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct RaterSplit {
    pub fulfilling: f64,
    pub not_fulfilling: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgreementRow {
    pub backend: String,
    pub raters: Vec<String>,
    /// `None` when fewer than two raters or no jointly rated samples.
    pub kappa: Option<f64>,
    /// Percentages per rater, aligned with `raters`.
    pub splits: Vec<RaterSplit>,
    pub n_samples: usize,
    /// Some sample lacks a rating from one of the raters.
    pub incomplete: bool,
    pub missing: Vec<String>,
}

/// Per-backend agreement between the first two raters (by id). Later
/// records for the same (sample, rater, backend) replace earlier ones.
pub fn agreement_table(records: &[AnnotationRecord]) -> Vec<AgreementRow> {
    let mut by_backend: BTreeMap<&str, BTreeMap<&str, BTreeMap<&str, u8>>> = BTreeMap::new();
    for r in records {
        by_backend.entry(&r.backend_name).or_default().entry(&r.rater_id).or_default().insert(&r.sample_id, r.score);
    }
    by_backend
        .into_iter()
        .map(|(backend, raters)| {
            let all_ids: BTreeSet<&str> = raters.values().flat_map(|m| m.keys().copied()).collect();
            let names: Vec<&str> = raters.keys().copied().take(2).collect();
            let splits = names
                .iter()
                .map(|name| {
                    let scores = &raters[name];
                    let ones = scores.values().filter(|&&s| s == 1).count() as f64;
                    let n = scores.len() as f64;
                    RaterSplit { fulfilling: 100.0 * ones / n, not_fulfilling: 100.0 * (n - ones) / n }
                })
                .collect();
            let missing: Vec<String> = all_ids
                .iter()
                .filter(|id| names.len() < 2 || names.iter().any(|r| !raters[r].contains_key(*id)))
                .map(|id| id.to_string())
                .collect();
            let kappa = if names.len() == 2 {
                let (a, b): (Vec<u8>, Vec<u8>) = all_ids
                    .iter()
                    .filter_map(|id| Some((*raters[names[0]].get(id)?, *raters[names[1]].get(id)?)))
                    .unzip();
                cohen_kappa(&a, &b).ok()
            } else {
                None
            };
            AgreementRow {
                backend: backend.to_string(),
                raters: names.iter().map(|s| s.to_string()).collect(),
                kappa,
                splits,
                n_samples: all_ids.len(),
                incomplete: !missing.is_empty(),
                missing,
            }
        })
        .collect()
}

/// Plain-text agreement table with paired rater columns.
pub fn render_agreement(rows: &[AgreementRow]) -> String {
    let mut out = String::from("Backend | Cohen's Kappa | Not Fulfilling | Fulfilling | Samples\n");
    for row in rows {
        let pair = |f: fn(&RaterSplit) -> f64| {
            row.splits.iter().map(|s| format!("{:.2}%", f(s))).collect::<Vec<_>>().join(" | ")
        };
        let kappa = row.kappa.map_or("n/a".to_string(), |k| format!("{k:.3}"));
        out.push_str(&format!(
            "{} | {} | {} | {} | {}{}\n",
            row.backend,
            kappa,
            pair(|s| s.not_fulfilling),
            pair(|s| s.fulfilling),
            row.n_samples,
            if row.incomplete { " (incomplete)" } else { "" }
        ));
    }
    out
}

/// Something to rate.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotationItem {
    pub sample_id: String,
    pub buggy_code: String,
    pub review: String,
    pub candidate: String,
}

/// Interactive rating loop. Shows each unrated item on `out`, reads `0`,
/// `1`, `s` (skip) or `q` (quit) from `input`, and hands each rating to
/// `sink` as it is given. Items already in `done` are skipped.
pub fn annotate_loop<R: BufRead, W: Write>(
    items: &[AnnotationItem],
    rater: &str,
    backend: &str,
    done: &HashMap<String, u8>,
    mut input: R,
    mut out: W,
    mut sink: impl FnMut(AnnotationRecord) -> std::io::Result<()>,
) -> std::io::Result<usize> {
    let pending: Vec<&AnnotationItem> = items.iter().filter(|i| !done.contains_key(&i.sample_id)).collect();
    let mut rated = 0;
    for (pos, item) in pending.iter().enumerate() {
        writeln!(out, "[{}/{}] {}", pos + 1, pending.len(), item.sample_id)?;
        writeln!(out, "Buggy code:\n{}\nReview: {}\nCandidate fix:\n{}", item.buggy_code, item.review, item.candidate)?;
        loop {
            write!(out, "fulfils review? [0/1/s/q] ")?;
            out.flush()?;
            let mut line = String::new();
            if input.read_line(&mut line)? == 0 {
                return Ok(rated);
            }
            let score = match line.trim() {
                "0" => 0,
                "1" => 1,
                "s" => break,
                "q" => return Ok(rated),
                _ => continue,
            };
            sink(AnnotationRecord {
                sample_id: item.sample_id.clone(),
                rater_id: rater.to_string(),
                backend_name: backend.to_string(),
                score,
                timestamp: chrono::Utc::now().to_rfc3339(),
            })?;
            rated += 1;
            break;
        }
    }
    Ok(rated)
}
