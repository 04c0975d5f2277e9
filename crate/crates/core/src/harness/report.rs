//! Plain-text summary tables over `scores/scores.jsonl`.

use std::fmt::Write as _;
use std::path::Path;

use super::pipeline::{ScoreRecord, SCORES_FILE};
use super::HarnessError;
use crate::prompts::PromptMode;
use crate::store::read_jsonl_or_empty;

/// Read the scores of `run_dir` and render them.
pub fn report(run_dir: &Path) -> Result<String, HarnessError> {
    let records: Vec<ScoreRecord> = read_jsonl_or_empty(&run_dir.join(SCORES_FILE))?;
    if records.is_empty() {
        return Err(HarnessError::NoRuns(run_dir.to_path_buf()));
    }
    Ok(render_report(&records))
}

fn pct(v: f64) -> String {
    format!("{v:.2}")
}

fn table(out: &mut String, header: &[String], rows: &[Vec<String>]) {
    let mut widths: Vec<usize> = header.iter().map(String::len).collect();
    for row in rows {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.len());
        }
    }
    let line = |cells: &[String]| {
        let padded: Vec<String> = cells
            .iter()
            .zip(&widths)
            .enumerate()
            .map(|(i, (c, w))| if i == 0 { format!("{c:<w$}") } else { format!("{c:>w$}") })
            .collect();
        padded.join("  ").trim_end().to_string()
    };
    let _ = writeln!(out, "{}", line(header));
    let rule: Vec<String> = widths.iter().map(|w| "-".repeat(*w)).collect();
    let _ = writeln!(out, "{}", line(&rule));
    for row in rows {
        let _ = writeln!(out, "{}", line(row));
    }
}

/// Render records as one overall table plus one table per category.
/// Backends are listed by name; output depends only on the records.
pub fn render_report(records: &[ScoreRecord]) -> String {
    let mut records: Vec<&ScoreRecord> = records.iter().collect();
    records.sort_by(|a, b| a.backend.cmp(&b.backend));
    let mut out = String::new();
    let Some(first) = records.first() else {
        return out;
    };
    let w = first.weights;
    let _ = writeln!(out, "run {}", first.fingerprint);
    let _ = writeln!(
        out,
        "split {:?}, prompt {:?}, template {}, tokenizer {}",
        first.split, first.prompt_mode, first.template_version, first.tokenizer_version
    );
    let _ = writeln!(
        out,
        "BLEU: {}; CodeBLEU weights ngram {} weighted {} ast {} dataflow {}, keyword weight {}",
        first.bleu, w.ngram, w.weighted_ngram, w.ast_match, w.dataflow_match, first.keyword_weight
    );

    let used = if first.prompt_mode == PromptMode::FewShot { "" } else { " (unused in this mode)" };
    let _ = writeln!(out, "few-shot retrieval: TF-IDF over Train reviews, {}{used}", first.review_tokenization);

    let ks: Vec<usize> = first.card.top_k_accuracy.keys().copied().collect();
    let header = |lead: &str| {
        let mut h = vec![lead.to_string()];
        h.extend(ks.iter().map(|k| format!("top-{k} %")));
        h.extend(["BLEU-4 %", "CodeBLEU %", "scored", "failed", "unparsed"].map(String::from));
        h
    };
    let row = |r: &ScoreRecord| {
        let mut cells = vec![r.backend.clone()];
        cells.extend(ks.iter().map(|k| pct(r.card.top_k_accuracy.get(k).copied().unwrap_or(0.0))));
        if r.card.zero_denominator {
            cells.extend(["n/a", "n/a"].map(String::from));
        } else {
            cells.push(pct(r.card.bleu4));
            cells.push(pct(r.card.codebleu));
        }
        cells.push(r.card.n_scored.to_string());
        cells.push(r.card.n_failed.to_string());
        cells.push(r.card.n_parse_failures.to_string());
        cells
    };

    let mut categories: Vec<&str> = Vec::new();
    for r in &records {
        if !categories.contains(&r.category.as_str()) {
            categories.push(&r.category);
        }
    }
    // "All" first, then categories in the order they were scored
    categories.sort_by_key(|c| *c != "All");
    for cat in categories {
        let rows: Vec<Vec<String>> = records.iter().filter(|r| r.category == cat).map(|r| row(r)).collect();
        let _ = writeln!(out);
        let _ = writeln!(out, "[{cat}]");
        table(&mut out, &header("backend"), &rows);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_dir_is_no_runs() {
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(report(dir.path()), Err(HarnessError::NoRuns(_))));
    }
}
