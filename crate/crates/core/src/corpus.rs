//! Repair corpora: record parsing, normalisation, length filtering, fix
//! classification and train/validation/test splitting.
//!
//! Two corpus shapes are supported. Tufano-style samples mark the buggy span
//! with `START`/`END` and carry the whole fixed method as target.
//! Review4Repair-style samples use `|startfocus|`/`|endfocus|` and carry only
//! the replacement for the focus region, with `|del|` standing for an empty
//! replacement.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use num_rational::Ratio;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::diff;
use crate::javatok::{self, TokenKind};

pub const COMMENT_OPEN: &str = "|startcomment|";
pub const COMMENT_CLOSE: &str = "|endcomment|";
pub const DELETE_TOKEN: &str = "|del|";

#[derive(Debug, thiserror::Error)]
pub enum CorpusError {
    #[error("{id}: missing focus marker {marker}")]
    MissingMarker { id: String, marker: &'static str },
    #[error("{id}: missing or empty review")]
    MissingReview { id: String },
    #[error("{id}: malformed record: {reason}")]
    MalformedRecord { id: String, reason: String },
    #[error("invalid split: {0}")]
    InvalidSplit(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum DatasetKind {
    #[serde(alias = "tufano")]
    TufanoStyle,
    #[serde(alias = "r4r", alias = "review4repair")]
    R4RStyle,
}

impl DatasetKind {
    pub fn markers(self) -> (&'static str, &'static str) {
        match self {
            DatasetKind::TufanoStyle => ("START", "END"),
            DatasetKind::R4RStyle => ("|startfocus|", "|endfocus|"),
        }
    }
}

impl FromStr for DatasetKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "tufano" | "tufanostyle" => Ok(Self::TufanoStyle),
            "r4r" | "r4rstyle" | "review4repair" => Ok(Self::R4RStyle),
            other => Err(format!("unknown dataset kind `{other}` (expected tufano or r4r)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize, Default)]
pub enum FixCategory {
    Insert,
    Delete,
    Update,
    #[default]
    Unclassified,
}

impl FixCategory {
    pub const CLASSIFIED: [FixCategory; 3] = [Self::Insert, Self::Delete, Self::Update];
}

impl fmt::Display for FixCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize, Default)]
pub enum Split {
    Train,
    Validation,
    Test,
    #[default]
    Unassigned,
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

impl FromStr for Split {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "train" => Ok(Self::Train),
            "validation" | "valid" | "val" => Ok(Self::Validation),
            "test" => Ok(Self::Test),
            "unassigned" => Ok(Self::Unassigned),
            other => Err(format!("unknown split `{other}`")),
        }
    }
}

/// One (buggy code, review, fix) triple. This is also the line format of the
/// canonical sample store.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RepairSample {
    pub id: String,
    pub dataset: DatasetKind,
    pub buggy_code: String,
    pub review: String,
    pub target: String,
    #[serde(default)]
    pub category: FixCategory,
    #[serde(default)]
    pub split: Split,
}

/// The marked span of a sample's buggy code. Offsets are byte offsets into
/// `buggy_code`, trimmed of the whitespace that separates body and markers.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FocusRegion {
    pub start_offset: usize,
    pub end_offset: usize,
    pub body: String,
}

impl RepairSample {
    pub fn focus(&self) -> Result<FocusRegion, CorpusError> {
        find_focus(&self.id, &self.buggy_code, self.dataset)
    }

    /// Buggy code with the focus markers removed and whitespace normalised.
    pub fn code_without_markers(&self) -> String {
        let (open, close) = self.dataset.markers();
        let stripped: Vec<&str> = self.buggy_code.split_whitespace().filter(|w| *w != open && *w != close).collect();
        // markers glued to code (`START;`) are rare; fall back to token removal
        let joined = stripped.join(" ");
        if marker_positions(&joined, open).is_empty() && marker_positions(&joined, close).is_empty() {
            return joined;
        }
        let mut out = joined;
        for m in [open, close] {
            for pos in marker_positions(&out, m).into_iter().rev() {
                out.replace_range(pos..pos + m.len(), " ");
            }
        }
        normalize_whitespace(&out)
    }
}

/// Collapse every whitespace run to one space and trim the ends.
pub fn normalize_whitespace(text: &str) -> String {
    text.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn is_ident_char(c: char) -> bool {
    c.is_alphanumeric() || c == '_' || c == '$'
}

/// Byte positions of `marker` in `code`. Word markers must stand alone as
/// identifiers, so `STARTUP` or `END_OF_LIST` do not count.
fn marker_positions(code: &str, marker: &str) -> Vec<usize> {
    let word = marker.chars().all(is_ident_char);
    code.match_indices(marker)
        .map(|(i, _)| i)
        .filter(|&i| {
            if !word {
                return true;
            }
            let before = code[..i].chars().next_back();
            let after = code[i + marker.len()..].chars().next();
            !before.is_some_and(is_ident_char) && !after.is_some_and(is_ident_char)
        })
        .collect()
}

pub fn find_focus(id: &str, code: &str, kind: DatasetKind) -> Result<FocusRegion, CorpusError> {
    let (open, close) = kind.markers();
    let opens = marker_positions(code, open);
    let closes = marker_positions(code, close);
    let (&o, &c) = match (opens.first(), closes.first()) {
        (None, _) => return Err(CorpusError::MissingMarker { id: id.into(), marker: open }),
        (_, None) => return Err(CorpusError::MissingMarker { id: id.into(), marker: close }),
        (Some(o), Some(c)) => (o, c),
    };
    if opens.len() > 1 || closes.len() > 1 {
        return Err(CorpusError::MalformedRecord {
            id: id.into(),
            reason: format!("expected exactly one {open}/{close} pair"),
        });
    }
    if c < o + open.len() {
        return Err(CorpusError::MalformedRecord { id: id.into(), reason: format!("{close} precedes {open}") });
    }
    let interior = &code[o + open.len()..c];
    let lead = interior.len() - interior.trim_start().len();
    let start = o + open.len() + lead;
    let end = (c - (interior.len() - interior.trim_end().len())).max(start);
    Ok(FocusRegion { start_offset: start, end_offset: end, body: code[start..end].to_string() })
}

/// A record as read from disk, before validation.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawRecord {
    pub id: Option<String>,
    pub code: Option<String>,
    /// Absent when the review is inline in `code` between comment tags.
    pub review: Option<String>,
    pub target: Option<String>,
    pub dataset_kind: Option<DatasetKind>,
}

/// Validate and normalise a raw record into a sample.
pub fn parse_record(raw: &RawRecord, kind: DatasetKind) -> Result<RepairSample, CorpusError> {
    let id = raw.id.clone().unwrap_or_default();
    let malformed = |reason: &str| CorpusError::MalformedRecord { id: id.clone(), reason: reason.to_string() };
    if id.trim().is_empty() {
        return Err(malformed("missing id"));
    }
    let code = raw.code.as_deref().ok_or_else(|| malformed("missing code"))?;
    let target = raw.target.as_deref().ok_or_else(|| malformed("missing target"))?;
    let kind = raw.dataset_kind.unwrap_or(kind);

    let (code, review) = match raw.review.as_deref() {
        Some(review) => (code.to_string(), review.to_string()),
        None => split_inline_review(&id, code)?,
    };
    let review = normalize_whitespace(&review);
    if review.is_empty() {
        return Err(CorpusError::MissingReview { id });
    }
    let buggy_code = normalize_whitespace(&code);
    find_focus(&id, &buggy_code, kind)?;

    let mut target = normalize_whitespace(target);
    if kind == DatasetKind::R4RStyle && target.is_empty() {
        target = DELETE_TOKEN.to_string();
    }
    Ok(RepairSample {
        id,
        dataset: kind,
        buggy_code,
        review,
        target,
        category: FixCategory::Unclassified,
        split: Split::Unassigned,
    })
}

fn split_inline_review(id: &str, source: &str) -> Result<(String, String), CorpusError> {
    let missing = || CorpusError::MissingReview { id: id.to_string() };
    let open = source.find(COMMENT_OPEN).ok_or_else(missing)?;
    let after_open = open + COMMENT_OPEN.len();
    let close = source[after_open..].find(COMMENT_CLOSE).ok_or_else(missing)? + after_open;
    let review = source[after_open..close].to_string();
    let code = format!("{} {}", &source[..open], &source[close + COMMENT_CLOSE.len()..]);
    Ok((code, review))
}

/// Layout (a): a source line with the review inline plus a paired target line.
pub fn parse_source_target(
    id: &str,
    source: &str,
    target: &str,
    kind: DatasetKind,
) -> Result<RepairSample, CorpusError> {
    let raw = RawRecord {
        id: Some(id.to_string()),
        code: Some(source.to_string()),
        review: None,
        target: Some(target.to_string()),
        dataset_kind: Some(kind),
    };
    parse_record(&raw, kind)
}

/// Layout (b): one structured record per line.
pub fn parse_structured_line(line: &str, kind: DatasetKind) -> Result<RepairSample, CorpusError> {
    let raw: RawRecord = serde_json::from_str(line)
        .map_err(|e| CorpusError::MalformedRecord { id: String::from("<unparsed>"), reason: e.to_string() })?;
    parse_record(&raw, kind)
}

/// Inverse of [`parse_record`] for the structured layout.
pub fn serialize_record(sample: &RepairSample) -> String {
    let raw = RawRecord {
        id: Some(sample.id.clone()),
        code: Some(sample.buggy_code.clone()),
        review: Some(sample.review.clone()),
        target: Some(sample.target.clone()),
        dataset_kind: Some(sample.dataset),
    };
    serde_json::to_string(&raw).unwrap_or_else(|e| unreachable!("plain strings serialize: {e}"))
}

/// Inverse of [`parse_source_target`]: `(source line, target line)`.
pub fn serialize_source_target(sample: &RepairSample) -> (String, String) {
    (format!("{} {COMMENT_OPEN} {} {COMMENT_CLOSE}", sample.buggy_code, sample.review), sample.target.clone())
}

/// Token count used for the input-length cap: lexical tokens of the buggy
/// code plus whitespace-separated review terms.
pub fn lexical_token_count(sample: &RepairSample) -> usize {
    javatok::lex(&sample.buggy_code).len() + sample.review.split_whitespace().count()
}

/// Token counts supplied from outside, e.g. by a model's subword tokenizer.
#[derive(Debug, Clone, Default)]
pub struct ExternalCounts {
    counts: HashMap<String, usize>,
}

#[derive(Debug, Deserialize)]
struct CountLine {
    id: String,
    tokens: usize,
}

impl ExternalCounts {
    pub fn new(counts: HashMap<String, usize>) -> Self {
        Self { counts }
    }

    /// Parse `{"id": ..., "tokens": n}` lines.
    pub fn from_jsonl(text: &str) -> Result<Self, serde_json::Error> {
        let mut counts = HashMap::new();
        for line in text.lines().filter(|l| !l.trim().is_empty()) {
            let c: CountLine = serde_json::from_str(line)?;
            counts.insert(c.id, c.tokens);
        }
        Ok(Self { counts })
    }

    pub fn get(&self, id: &str) -> Option<usize> {
        self.counts.get(id).copied()
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }
}

/// Partition `samples` into those within `max_tokens` and those above it.
/// Order is preserved in both halves.
pub fn filter_by_token_length<F>(
    samples: Vec<RepairSample>,
    max_tokens: usize,
    count: F,
) -> (Vec<RepairSample>, Vec<RepairSample>)
where
    F: Fn(&RepairSample) -> usize,
{
    assert!(max_tokens > 0, "max_tokens must be positive");
    samples.into_iter().partition(|s| count(s) <= max_tokens)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Classification {
    pub category: FixCategory,
    /// Empty diff: buggy and fixed code are token-identical.
    pub degenerate: bool,
}

/// Classify token sequences by their LCS diff.
pub fn classify_tokens<T: PartialEq>(before: &[T], after: &[T]) -> Classification {
    let summary = diff::summarize(&diff::diff(before, after));
    let category = match (summary.inserted > 0, summary.deleted > 0) {
        (true, false) => FixCategory::Insert,
        (false, true) => FixCategory::Delete,
        _ => FixCategory::Update,
    };
    Classification { category, degenerate: summary.inserted == 0 && summary.deleted == 0 }
}

fn code_tokens(text: &str) -> Vec<String> {
    javatok::lex(text)
        .into_iter()
        .filter(|t| !matches!(t.kind, TokenKind::Comment | TokenKind::FocusMarker))
        .map(|t| t.text)
        .collect()
}

pub fn classify_fix(sample: &RepairSample) -> Classification {
    match sample.dataset {
        DatasetKind::R4RStyle => {
            let body = sample.focus().map(|f| f.body).unwrap_or_else(|_| sample.code_without_markers());
            if sample.target.trim() == DELETE_TOKEN {
                let degenerate = code_tokens(&body).is_empty();
                return Classification {
                    category: if degenerate { FixCategory::Update } else { FixCategory::Delete },
                    degenerate,
                };
            }
            classify_tokens(&code_tokens(&body), &code_tokens(&sample.target))
        }
        DatasetKind::TufanoStyle => {
            classify_tokens(&code_tokens(&sample.code_without_markers()), &code_tokens(&sample.target))
        }
    }
}

/// Fractions for a three-way split, exact rationals summing to one.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SplitSpec {
    pub train: Ratio<u64>,
    pub validation: Ratio<u64>,
    pub test: Ratio<u64>,
    pub seed: u64,
}

impl SplitSpec {
    pub fn new(train: Ratio<u64>, validation: Ratio<u64>, test: Ratio<u64>, seed: u64) -> Result<Self, CorpusError> {
        if train + validation + test != Ratio::from_integer(1) {
            return Err(CorpusError::InvalidSplit(format!(
                "fractions {train} + {validation} + {test} do not sum to 1"
            )));
        }
        Ok(Self { train, validation, test, seed })
    }

    /// Parse `"0.9,0.05,0.05"` or `"9/10,1/20,1/20"`.
    pub fn parse(fractions: &str, seed: u64) -> Result<Self, CorpusError> {
        let parts: Vec<&str> = fractions.split(',').map(str::trim).collect();
        let [a, b, c] = parts[..] else {
            return Err(CorpusError::InvalidSplit(format!(
                "expected three comma-separated fractions, got `{fractions}`"
            )));
        };
        Self::new(parse_fraction(a)?, parse_fraction(b)?, parse_fraction(c)?, seed)
    }
}

fn parse_fraction(s: &str) -> Result<Ratio<u64>, CorpusError> {
    let bad = || CorpusError::InvalidSplit(format!("cannot parse fraction `{s}`"));
    if let Some((n, d)) = s.split_once('/') {
        let n: u64 = n.trim().parse().map_err(|_| bad())?;
        let d: u64 = d.trim().parse().map_err(|_| bad())?;
        if d == 0 {
            return Err(bad());
        }
        return Ok(Ratio::new(n, d));
    }
    let (int, frac) = s.split_once('.').unwrap_or((s, ""));
    if frac.len() > 18 || !frac.chars().all(|c| c.is_ascii_digit()) {
        return Err(bad());
    }
    let int: u64 = if int.is_empty() { 0 } else { int.parse().map_err(|_| bad())? };
    let scale = 10u64.pow(frac.len() as u32);
    let frac: u64 = if frac.is_empty() { 0 } else { frac.parse().map_err(|_| bad())? };
    Ok(Ratio::new(int * scale + frac, scale))
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SplitOutcome {
    pub train: Vec<RepairSample>,
    pub validation: Vec<RepairSample>,
    pub test: Vec<RepairSample>,
}

/// Subset sizes for `n` samples: validation and test get `floor(frac * n)`,
/// train gets the rest.
pub fn split_sizes(n: usize, spec: &SplitSpec) -> (usize, usize, usize) {
    let n64 = n as u64;
    let valid = (spec.validation * n64).to_integer() as usize;
    let test = (spec.test * n64).to_integer() as usize;
    (n - valid - test, valid, test)
}

/// Seeded split label for each of `n` positions.
pub fn split_assignment(n: usize, spec: &SplitSpec) -> Vec<Split> {
    let (_, n_valid, n_test) = split_sizes(n, spec);
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(spec.seed));
    let mut assignment = vec![Split::Train; n];
    for &i in &order[..n_test] {
        assignment[i] = Split::Test;
    }
    for &i in &order[n_test..n_test + n_valid] {
        assignment[i] = Split::Validation;
    }
    assignment
}

/// Seeded shuffle into train/validation/test. Each subset keeps input order.
pub fn split_dataset(samples: Vec<RepairSample>, spec: &SplitSpec) -> SplitOutcome {
    let assignment = split_assignment(samples.len(), spec);
    let mut out = SplitOutcome::default();
    for (mut sample, split) in samples.into_iter().zip(assignment) {
        sample.split = split;
        match split {
            Split::Train => out.train.push(sample),
            Split::Validation => out.validation.push(sample),
            _ => out.test.push(sample),
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn tufano(id: &str, code: &str, target: &str) -> RepairSample {
        RepairSample {
            id: id.into(),
            dataset: DatasetKind::TufanoStyle,
            buggy_code: code.into(),
            review: "fix it".into(),
            target: target.into(),
            category: FixCategory::Unclassified,
            split: Split::Unassigned,
        }
    }

    fn r4r(body: &str, target: &str) -> RepairSample {
        RepairSample {
            dataset: DatasetKind::R4RStyle,
            ..tufano("r", &format!("a ( ) ; |startfocus| {body} |endfocus| c ( ) ;"), target)
        }
    }

    #[test]
    fn whitespace() {
        assert_eq!(normalize_whitespace("int  x ;\n  y ;"), "int x ; y ;");
        assert_eq!(normalize_whitespace("abc"), "abc");
        assert_eq!(normalize_whitespace("  "), "");
        assert_eq!(normalize_whitespace("\ta\r\n b\t"), "a b");
    }

    #[test]
    fn parse_inline_record() {
        let s = parse_source_target(
            "t1",
            "a(); START b(); END c(); |startcomment| fix b |endcomment|",
            "a(); c();",
            DatasetKind::TufanoStyle,
        )
        .unwrap();
        assert_eq!(s.review, "fix b");
        assert_eq!(s.buggy_code, "a(); START b(); END c();");
        assert_eq!(s.focus().unwrap().body, "b();");
    }

    #[test]
    fn parse_review_tags() {
        let s = parse_source_target(
            "t2",
            "|startcomment| use a constant |endcomment| x = |startfocus| 5 |endfocus| ;",
            "MAX",
            DatasetKind::R4RStyle,
        )
        .unwrap();
        assert_eq!(s.review, "use a constant");
        assert_eq!(s.focus().unwrap().body, "5");
    }

    #[test]
    fn parse_errors() {
        let err =
            parse_source_target("e1", "a(); START b(); |startcomment| r |endcomment|", "x", DatasetKind::TufanoStyle)
                .unwrap_err();
        assert!(matches!(err, CorpusError::MissingMarker { marker: "END", .. }));

        let err = parse_source_target("e2", "START a END", "x", DatasetKind::TufanoStyle).unwrap_err();
        assert!(matches!(err, CorpusError::MissingReview { .. }));

        let err = parse_source_target("e3", "START a END |startcomment|   |endcomment|", "x", DatasetKind::TufanoStyle)
            .unwrap_err();
        assert!(matches!(err, CorpusError::MissingReview { .. }));

        let err =
            parse_structured_line(r#"{"id":"x","review":"r","target":"t"}"#, DatasetKind::TufanoStyle).unwrap_err();
        assert!(matches!(err, CorpusError::MalformedRecord { .. }));

        let err = parse_structured_line("not json", DatasetKind::TufanoStyle).unwrap_err();
        assert!(matches!(err, CorpusError::MalformedRecord { .. }));

        let err = parse_source_target("e4", "END a START |startcomment| r |endcomment|", "x", DatasetKind::TufanoStyle)
            .unwrap_err();
        assert!(matches!(err, CorpusError::MalformedRecord { .. }));
    }

    #[test]
    fn word_markers_need_boundaries() {
        assert!(matches!(
            find_focus("x", "STARTUP a END_X", DatasetKind::TufanoStyle),
            Err(CorpusError::MissingMarker { .. })
        ));
        let f = find_focus("x", "a START b END", DatasetKind::TufanoStyle).unwrap();
        assert_eq!(f.body, "b");
        let f = find_focus("x", "START END", DatasetKind::TufanoStyle).unwrap();
        assert_eq!(f.body, "");
        assert!(f.start_offset <= f.end_offset);
    }

    #[test]
    fn empty_r4r_target_becomes_delete_token() {
        let s = parse_structured_line(
            r#"{"id":"d","code":"x |startfocus| y(); |endfocus|","review":"drop","target":"  "}"#,
            DatasetKind::R4RStyle,
        )
        .unwrap();
        assert_eq!(s.target, DELETE_TOKEN);
    }

    #[test]
    fn structured_kind_overrides_default() {
        let s = parse_structured_line(
            r#"{"id":"k","code":"|startfocus| y |endfocus|","review":"r","target":"z","dataset_kind":"r4r"}"#,
            DatasetKind::TufanoStyle,
        )
        .unwrap();
        assert_eq!(s.dataset, DatasetKind::R4RStyle);
    }

    #[test]
    fn token_length_boundary() {
        let s = |id: &str| tufano(id, "START a END", "a");
        let counts = HashMap::from([("a".to_string(), 512), ("b".to_string(), 513), ("c".to_string(), 3)]);
        let (kept, removed) = filter_by_token_length(vec![s("a"), s("b"), s("c")], 512, |x| counts[&x.id]);
        assert_eq!(kept.iter().map(|x| x.id.as_str()).collect::<Vec<_>>(), ["a", "c"]);
        assert_eq!(removed.iter().map(|x| x.id.as_str()).collect::<Vec<_>>(), ["b"]);
    }

    #[test]
    fn lexical_count() {
        let s = tufano("a", "START return x ; END", "return y ;");
        // START return x ; END  +  fix it
        assert_eq!(lexical_token_count(&s), 7);
    }

    #[test]
    fn classification_examples() {
        assert_eq!(classify_fix(&r4r("x = 1 ;", "x = 1 ; y = 2 ;")).category, FixCategory::Insert);
        assert_eq!(classify_fix(&r4r("x = 1 ;", DELETE_TOKEN)).category, FixCategory::Delete);
        assert_eq!(classify_fix(&r4r("return a ;", "return b ;")).category, FixCategory::Update);
        assert_eq!(classify_fix(&r4r("return a ;", "return ;")).category, FixCategory::Delete);

        let degenerate = classify_fix(&r4r("return a ;", "return a ;"));
        assert_eq!(degenerate.category, FixCategory::Update);
        assert!(degenerate.degenerate);

        let t = tufano("t", "int f ( ) { START return a ; END }", "int f ( ) { return a + 1 ; }");
        assert_eq!(classify_fix(&t).category, FixCategory::Insert);
        let t = tufano("t", "void f ( ) { START a ( ) ; END b ( ) ; }", "void f ( ) { b ( ) ; }");
        assert_eq!(classify_fix(&t).category, FixCategory::Delete);
    }

    #[test]
    fn split_fraction_parsing() {
        let s = SplitSpec::parse("0.9,0.05,0.05", 1).unwrap();
        assert_eq!(s.train, Ratio::new(9, 10));
        assert!(SplitSpec::parse("9/10,1/20,1/20", 1).is_ok());
        assert!(SplitSpec::parse("0.9,0.05,0.06", 1).is_err());
        assert!(SplitSpec::parse("0.9,0.1", 1).is_err());
        assert!(SplitSpec::parse("a,b,c", 1).is_err());
    }

    #[test]
    fn split_sizes_floor_rule() {
        let spec = SplitSpec::parse("0.9,0.05,0.05", 0).unwrap();
        assert_eq!(split_sizes(100, &spec), (90, 5, 5));
        assert_eq!(split_sizes(59_109, &spec), (53_199, 2_955, 2_955));
        assert_eq!(split_sizes(3, &spec), (3, 0, 0));
    }

    fn many(n: usize) -> Vec<RepairSample> {
        (0..n).map(|i| tufano(&format!("s{i:03}"), "START a END", "a")).collect()
    }

    #[test]
    fn split_is_deterministic() {
        let spec = SplitSpec::parse("0.9,0.05,0.05", 42).unwrap();
        let a = split_dataset(many(100), &spec);
        let b = split_dataset(many(100), &spec);
        assert_eq!(a, b);
        assert_eq!((a.train.len(), a.validation.len(), a.test.len()), (90, 5, 5));
        assert!(a.test.iter().all(|s| s.split == Split::Test));
        let other = split_dataset(many(100), &SplitSpec { seed: 43, ..spec });
        assert_ne!(a.test, other.test);
    }

    proptest! {
        #[test]
        fn split_partitions_input(n in 1usize..300, seed in any::<u64>(), v in 0u64..=20, t in 0u64..=20) {
            let spec = SplitSpec::new(
                Ratio::new(100 - v - t, 100), Ratio::new(v, 100), Ratio::new(t, 100), seed,
            ).unwrap();
            let out = split_dataset(many(n), &spec);
            let mut ids: Vec<String> = out.train.iter().chain(&out.validation).chain(&out.test)
                .map(|s| s.id.clone()).collect();
            prop_assert_eq!(ids.len(), n);
            ids.sort();
            ids.dedup();
            prop_assert_eq!(ids.len(), n);
        }

        #[test]
        fn filter_keeps_content(lens in proptest::collection::vec(0usize..20, 0..40), cap in 1usize..20) {
            let samples: Vec<_> = lens.iter().enumerate()
                .map(|(i, _)| tufano(&i.to_string(), "START a END", "a")).collect();
            let (kept, removed) = filter_by_token_length(samples.clone(), cap, |s| lens[s.id.parse::<usize>().unwrap()]);
            prop_assert_eq!(kept.len() + removed.len(), samples.len());
            prop_assert!(kept.iter().all(|s| lens[s.id.parse::<usize>().unwrap()] <= cap));
            for s in kept.iter().chain(&removed) {
                prop_assert!(samples.contains(s));
            }
        }

        #[test]
        fn structured_round_trip(
            id in "[a-z0-9]{1,8}",
            pre in "[a-z(); ]{0,20}",
            body in "[a-z(); =]{0,20}",
            review in "[A-Za-z ,.]{0,30}[a-z]",
            target in "[a-z(); =]{1,20}",
            r4r in any::<bool>(),
        ) {
            let kind = if r4r { DatasetKind::R4RStyle } else { DatasetKind::TufanoStyle };
            let (open, close) = kind.markers();
            let raw = RawRecord {
                id: Some(id),
                code: Some(format!("{pre} {open} {body} {close} ;")),
                review: Some(review),
                target: Some(target),
                dataset_kind: Some(kind),
            };
            let Ok(sample) = parse_record(&raw, kind) else { return Ok(()); };
            let again = parse_structured_line(&serialize_record(&sample), kind).unwrap();
            prop_assert_eq!(&again, &sample);
            let (src, tgt) = serialize_source_target(&sample);
            let again = parse_source_target(&sample.id, &src, &tgt, kind).unwrap();
            prop_assert_eq!(&again, &sample);
        }
    }
}
