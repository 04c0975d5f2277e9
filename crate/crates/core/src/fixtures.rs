//! Deterministic synthetic corpus used by the end-to-end tests and shipped
//! under `fixtures/synthetic.jsonl`.

use crate::corpus::{DatasetKind, RawRecord, DELETE_TOKEN};

pub const SYNTHETIC_SIZE: usize = 200;

const NAMES: &[&str] = &["count", "total", "index", "size", "limit", "offset", "width", "depth", "score", "level"];
const REVIEWS: &[&str] = &[
    "Add the missing offset here.",
    "This log call is noise, please drop it.",
    "Just return the value directly.",
    "Initialise the second field as well.",
    "Remove the debug print.",
    "Use the other variable, this one is stale.",
    "Please add the bound to the result.",
    "Why keep this statement? Delete it.",
    "Inline the temporary.",
];

/// Structured record `i` of the synthetic corpus.
pub fn synthetic_record(i: usize) -> RawRecord {
    let name = NAMES[i % NAMES.len()];
    let k = 1 + (i * 7) % 97;
    let variant = (i / 2) % 3;
    let review = format!("{} ({})", REVIEWS[(i / 2 + variant) % REVIEWS.len()], i % 11);
    let (kind, code, target) = if i.is_multiple_of(2) {
        let m = format!("{name}{i}");
        let (c, t) = match variant {
            0 => (
                format!("public int get{m} ( int x ) {{ START return x ; END }}"),
                format!("public int get{m} ( int x ) {{ return x + {k} ; }}"),
            ),
            1 => (
                format!("public void run{m} ( int x ) {{ START log ( x ) ; END use ( x , {k} ) ; }}"),
                format!("public void run{m} ( int x ) {{ use ( x , {k} ) ; }}"),
            ),
            _ => (
                format!("public int calc{m} ( int a ) {{ START int b = a * {k} ; return b ; END }}"),
                format!("public int calc{m} ( int a ) {{ return a * {k} ; }}"),
            ),
        };
        (DatasetKind::TufanoStyle, c, t)
    } else {
        let (c, t) = match variant {
            0 => (
                format!("void set{i} ( int {name} ) {{ |startfocus| this . {name} = {name} ; |endfocus| }}"),
                format!("this . {name} = {name} ; this . mark = {k} ;"),
            ),
            1 => (
                format!("void show{i} ( ) {{ |startfocus| System . out . println ( {k} ) ; |endfocus| done ( ) ; }}"),
                DELETE_TOKEN.to_string(),
            ),
            _ => (
                format!("int pick{i} ( int {name} , int fresh ) {{ |startfocus| return {name} + {k} ; |endfocus| }}"),
                format!("return fresh + {k} ;"),
            ),
        };
        (DatasetKind::R4RStyle, c, t)
    };
    RawRecord {
        id: Some(format!("syn-{i:03}")),
        code: Some(code),
        review: Some(review),
        target: Some(target),
        dataset_kind: Some(kind),
    }
}

pub fn synthetic_records() -> Vec<RawRecord> {
    (0..SYNTHETIC_SIZE).map(synthetic_record).collect()
}

/// The corpus as structured JSON lines, exactly as committed.
pub fn synthetic_jsonl() -> String {
    synthetic_records().iter().map(|r| serde_json::to_string(r).expect("plain strings serialize") + "\n").collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{classify_fix, parse_record, FixCategory};
    use crate::javatok::parse_source;
    use std::collections::{BTreeMap, HashSet};

    #[test]
    fn committed_file_matches_generator() {
        let path = concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/synthetic.jsonl");
        if std::env::var_os("REPAIRBENCH_BLESS").is_some() {
            std::fs::write(path, synthetic_jsonl()).unwrap();
        }
        assert_eq!(std::fs::read_to_string(path).unwrap(), synthetic_jsonl());
    }

    #[test]
    fn corpus_properties() {
        let samples: Vec<_> =
            synthetic_records().iter().map(|r| parse_record(r, DatasetKind::TufanoStyle).unwrap()).collect();
        let mut cats: BTreeMap<(DatasetKind, FixCategory), usize> = BTreeMap::new();
        for s in &samples {
            let c = classify_fix(s);
            assert!(!c.degenerate, "{}", s.id);
            *cats.entry((s.dataset, c.category)).or_default() += 1;
            if s.target != DELETE_TOKEN {
                parse_source(&s.target).unwrap_or_else(|e| panic!("{}: {e}", s.target));
            }
        }
        assert_eq!(cats.len(), 6, "{cats:?}");
        let distinct: HashSet<&str> = samples.iter().map(|s| s.target.as_str()).collect();
        assert!(distinct.len() >= 50);
    }
}
