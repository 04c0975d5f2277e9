//! TF-IDF retrieval over training reviews for few-shot exemplar selection.

use std::collections::{BTreeMap, HashMap};
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum RetrievalError {
    #[error("cannot build an index over an empty corpus")]
    EmptyCorpus,
    #[error("index store: {0}")]
    Store(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// How reviews are turned into terms, as recorded in reports.
pub const REVIEW_TOKENIZATION: &str = "lowercased, split on non-alphanumeric characters";

/// Lowercase, split on anything that is not alphanumeric, drop empties.
pub fn tokenize_review(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric()).filter(|t| !t.is_empty()).map(str::to_lowercase).collect()
}

/// Sparse vector as `(column, weight)` pairs sorted by column.
pub type SparseVec = Vec<(usize, f64)>;

#[derive(Debug, Clone, PartialEq)]
pub struct TfidfIndex {
    vocabulary: HashMap<String, usize>,
    idf: Vec<f64>,
    doc_vectors: Vec<SparseVec>,
    doc_ids: Vec<String>,
}

fn l2_normalize(v: &mut SparseVec) {
    let norm = v.iter().map(|(_, w)| w * w).sum::<f64>().sqrt();
    if norm > 0.0 {
        v.iter_mut().for_each(|(_, w)| *w /= norm);
    }
}

fn dot(a: &SparseVec, b: &SparseVec) -> f64 {
    let (mut i, mut j, mut acc) = (0, 0, 0.0);
    while i < a.len() && j < b.len() {
        match a[i].0.cmp(&b[j].0) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                acc += a[i].1 * b[j].1;
                i += 1;
                j += 1;
            }
        }
    }
    acc
}

impl TfidfIndex {
    /// Build over `(id, review)` pairs.
    pub fn build<I, S1, S2>(docs: I) -> Result<Self, RetrievalError>
    where
        I: IntoIterator<Item = (S1, S2)>,
        S1: Into<String>,
        S2: AsRef<str>,
    {
        let mut doc_ids = Vec::new();
        let mut term_lists = Vec::new();
        for (id, review) in docs {
            doc_ids.push(id.into());
            term_lists.push(tokenize_review(review.as_ref()));
        }
        if doc_ids.is_empty() {
            return Err(RetrievalError::EmptyCorpus);
        }

        // columns in first-seen order keep the index deterministic
        let mut vocabulary = HashMap::new();
        let mut df: Vec<usize> = Vec::new();
        for terms in &term_lists {
            let mut seen = std::collections::HashSet::new();
            for t in terms {
                let next = vocabulary.len();
                let col = *vocabulary.entry(t.clone()).or_insert(next);
                if col == df.len() {
                    df.push(0);
                }
                if seen.insert(col) {
                    df[col] += 1;
                }
            }
        }
        let n = doc_ids.len() as f64;
        let idf: Vec<f64> = df.iter().map(|&d| ((1.0 + n) / (1.0 + d as f64)).ln() + 1.0).collect();

        let mut index = TfidfIndex { vocabulary, idf, doc_vectors: Vec::with_capacity(term_lists.len()), doc_ids };
        for terms in &term_lists {
            let v = index.vectorize_terms(terms);
            index.doc_vectors.push(v);
        }
        Ok(index)
    }

    fn vectorize_terms(&self, terms: &[String]) -> SparseVec {
        let mut tf: BTreeMap<usize, f64> = BTreeMap::new();
        for t in terms {
            if let Some(&col) = self.vocabulary.get(t) {
                *tf.entry(col).or_default() += 1.0;
            }
        }
        let mut v: SparseVec = tf.into_iter().map(|(c, f)| (c, f * self.idf[c])).collect();
        l2_normalize(&mut v);
        v
    }

    /// L2-normalised tf-idf vector for arbitrary text. Unknown terms are ignored.
    pub fn vectorize(&self, text: &str) -> SparseVec {
        self.vectorize_terms(&tokenize_review(text))
    }

    pub fn len(&self) -> usize {
        self.doc_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.doc_ids.is_empty()
    }

    pub fn doc_ids(&self) -> &[String] {
        &self.doc_ids
    }

    pub fn idf(&self, term: &str) -> Option<f64> {
        self.vocabulary.get(term).map(|&c| self.idf[c])
    }

    pub fn doc_vector(&self, i: usize) -> &SparseVec {
        &self.doc_vectors[i]
    }

    /// The `k` most similar documents by cosine, best first, ties by id.
    pub fn top_k_similar(&self, query: &str, k: usize) -> Vec<(String, f64)> {
        self.rank(&self.vectorize(query), k, |_| true)
    }

    /// Like [`Self::top_k_similar`] but skips documents rejected by `keep`,
    /// e.g. the query sample itself.
    pub fn top_k_filtered(&self, query: &str, k: usize, keep: impl Fn(&str) -> bool) -> Vec<(String, f64)> {
        self.rank(&self.vectorize(query), k, keep)
    }

    fn rank(&self, q: &SparseVec, k: usize, keep: impl Fn(&str) -> bool) -> Vec<(String, f64)> {
        assert!(k >= 1, "k must be at least 1");
        let mut scored: Vec<(&str, f64)> = self
            .doc_ids
            .iter()
            .zip(&self.doc_vectors)
            .filter(|(id, _)| keep(id))
            .map(|(id, v)| (id.as_str(), dot(q, v)))
            .collect();
        scored.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(b.0)));
        scored.truncate(k);
        scored.into_iter().map(|(id, s)| (id.to_string(), s)).collect()
    }

    /// Persist as JSON lines: a header with vocabulary and idf, then one
    /// line per document.
    pub fn write_to(&self, mut out: impl Write) -> Result<(), RetrievalError> {
        let mut terms: Vec<(&str, usize)> = self.vocabulary.iter().map(|(t, &c)| (t.as_str(), c)).collect();
        terms.sort_by_key(|&(_, c)| c);
        let header =
            StoredHeader { terms: terms.into_iter().map(|(t, _)| t.to_string()).collect(), idf: self.idf.clone() };
        let enc = |e: serde_json::Error| RetrievalError::Store(e.to_string());
        writeln!(out, "{}", serde_json::to_string(&header).map_err(enc)?)?;
        for (id, v) in self.doc_ids.iter().zip(&self.doc_vectors) {
            let doc = StoredDoc { id: id.clone(), entries: v.clone() };
            writeln!(out, "{}", serde_json::to_string(&doc).map_err(enc)?)?;
        }
        Ok(())
    }

    pub fn read_from(input: impl BufRead) -> Result<Self, RetrievalError> {
        let mut lines = input.lines();
        let dec = |e: serde_json::Error| RetrievalError::Store(e.to_string());
        let header: StoredHeader = match lines.next() {
            Some(l) => serde_json::from_str(&l?).map_err(dec)?,
            None => return Err(RetrievalError::EmptyCorpus),
        };
        if header.terms.len() != header.idf.len() {
            return Err(RetrievalError::Store("vocabulary and idf lengths differ".into()));
        }
        let vocabulary = header.terms.into_iter().enumerate().map(|(c, t)| (t, c)).collect();
        let (mut doc_ids, mut doc_vectors) = (Vec::new(), Vec::new());
        for line in lines {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let doc: StoredDoc = serde_json::from_str(&line).map_err(dec)?;
            if doc.entries.iter().any(|&(c, _)| c >= header.idf.len()) {
                return Err(RetrievalError::Store(format!("{}: column out of range", doc.id)));
            }
            doc_ids.push(doc.id);
            doc_vectors.push(doc.entries);
        }
        if doc_ids.is_empty() {
            return Err(RetrievalError::EmptyCorpus);
        }
        Ok(Self { vocabulary, idf: header.idf, doc_vectors, doc_ids })
    }
}

#[derive(Serialize, Deserialize)]
struct StoredHeader {
    terms: Vec<String>,
    idf: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct StoredDoc {
    id: String,
    entries: SparseVec,
}
