//! Post-processing of raw model responses into scoreable code.
//!
//! Five heuristics run in the fixed order H5, H3, H4, H2, H1:
//! fence removal, language-tag removal, title and marker removal,
//! explanation truncation, whitespace normalisation. Each heuristic is
//! applied until it stops changing the text, and the whole pipeline is
//! repeated until a pass is a no-op, which makes [`clean`] idempotent.

use serde::{Deserialize, Serialize};

use crate::corpus::normalize_whitespace;

pub mod noise;

const MAX_PASSES: usize = 16;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct CleanerConfig {
    pub titles: Vec<String>,
    pub explanations: Vec<String>,
    pub markers: Vec<String>,
}

impl Default for CleanerConfig {
    fn default() -> Self {
        let owned = |xs: &[&str]| xs.iter().map(|s| s.to_string()).collect();
        Self {
            titles: owned(&["Refactored Code", "Corrected Code", "Updated Code", "Fixed Code"]),
            explanations: owned(&["Explanation", "Reasoning", "Changes Made"]),
            markers: owned(&["START", "END", "|startfocus|", "|endfocus|"]),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Heuristic {
    H5,
    H3,
    H4,
    H2,
    H1,
}

pub const PIPELINE: [Heuristic; 5] = [Heuristic::H5, Heuristic::H3, Heuristic::H4, Heuristic::H2, Heuristic::H1];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceStep {
    pub heuristic: Heuristic,
    pub before_len: usize,
    pub after_len: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CleaningTrace {
    /// One entry per heuristic per pass, in pipeline order.
    pub applied: Vec<TraceStep>,
    pub passes: usize,
}

fn fixpoint(text: &str, f: impl Fn(&str) -> Option<String>) -> String {
    let mut cur = text.to_string();
    while let Some(next) = f(&cur) {
        if next == cur {
            break;
        }
        cur = next;
    }
    cur
}

/// Byte range of the first non-blank line, without its line terminator.
fn first_content_line(text: &str) -> Option<(usize, usize)> {
    let mut start = 0;
    for line in text.split_inclusive('\n') {
        let body = line.trim_end_matches(['\n', '\r']);
        if !body.trim().is_empty() {
            return Some((start, start + body.len()));
        }
        start += line.len();
    }
    None
}

/// Drop the line `start..end` together with everything before it and its
/// terminating newline.
fn drop_through(text: &str, end: usize) -> String {
    let rest = &text[end..];
    rest.strip_prefix("\r\n").or_else(|| rest.strip_prefix('\n')).unwrap_or(rest).to_string()
}

fn is_opening_fence(line: &str) -> bool {
    let Some(rest) = line.trim().strip_prefix("```") else {
        return false;
    };
    let tag = rest.trim();
    !tag.contains('`') && !tag.contains(char::is_whitespace)
}

/// H5: strip a leading fence line (with any tag attached to it) and the
/// last line consisting only of a closing fence.
pub fn h5_strip_backticks(text: &str) -> String {
    fixpoint(text, |t| {
        if let Some((s, e)) = first_content_line(t) {
            if is_opening_fence(&t[s..e]) {
                return Some(drop_through(t, e));
            }
        }
        let mut offset = t.len();
        for line in t.split_inclusive('\n').collect::<Vec<_>>().into_iter().rev() {
            offset -= line.len();
            if line.trim() == "```" {
                let head = &t[..offset];
                let rest = &t[offset + line.len()..];
                let head = if line.ends_with('\n') {
                    head
                } else {
                    head.strip_suffix('\n').map_or(head, |h| h.strip_suffix('\r').unwrap_or(h))
                };
                let mut out = head.to_string();
                out.push_str(rest);
                return Some(out);
            }
        }
        None
    })
}

/// H3: drop a first line that is just the word `java`.
pub fn h3_strip_lang_prefix(text: &str) -> String {
    fixpoint(text, |t| {
        let (s, e) = first_content_line(t)?;
        t[s..e].trim().eq_ignore_ascii_case("java").then(|| drop_through(t, e))
    })
}

fn strip_title<'a>(line: &'a str, titles: &[String]) -> Option<&'a str> {
    let trimmed = line.trim();
    for title in titles {
        let Some(head) = trimmed.get(..title.len()) else { continue };
        if !head.eq_ignore_ascii_case(title) {
            continue;
        }
        let rest = &trimmed[title.len()..];
        if rest.trim().is_empty() {
            return Some("");
        }
        if let Some(after) = rest.trim_start().strip_prefix(':') {
            return Some(after.trim());
        }
    }
    None
}

fn is_word_char(c: char) -> bool {
    c.is_alphanumeric() || c == '_' || c == '$'
}

fn remove_marker(text: &str, marker: &str) -> Option<String> {
    let word = marker.chars().all(is_word_char);
    let pos = text.match_indices(marker).map(|(i, _)| i).find(|&i| {
        !word
            || (!text[..i].chars().next_back().is_some_and(is_word_char)
                && !text[i + marker.len()..].chars().next().is_some_and(is_word_char))
    })?;
    let end = pos + marker.len();
    let after = &text[end..];
    let trailing = after.len() - after.trim_start_matches([' ', '\t']).len();
    let at_line_end = after[trailing..].is_empty() || after[trailing..].starts_with(['\n', '\r']);
    let start = if at_line_end { text[..pos].trim_end_matches([' ', '\t']).len() } else { pos };
    Some(format!("{}{}", &text[..start], &text[end + trailing..]))
}

/// H4: drop a leading title line and any echoed focus markers.
pub fn h4_strip_redundant(text: &str, config: &CleanerConfig) -> String {
    fixpoint(text, |t| {
        let title = first_content_line(t).and_then(|(s, e)| {
            let rest = strip_title(&t[s..e], &config.titles)?;
            Some(if rest.is_empty() { drop_through(t, e) } else { format!("{rest}{}", &t[e..]) })
        });
        title.or_else(|| config.markers.iter().find_map(|m| remove_marker(t, m)))
    })
}

fn starts_explanation(line: &str, keywords: &[String]) -> bool {
    let line = line.trim_start().trim_start_matches(['#', '*', '_', ' ']);
    keywords.iter().any(|k| {
        line.get(..k.len()).is_some_and(|h| h.eq_ignore_ascii_case(k))
            && !line[k.len()..].chars().next().is_some_and(is_word_char)
    })
}

/// H2: cut everything from the first explanation line onward.
pub fn h2_strip_explanation(text: &str, config: &CleanerConfig) -> String {
    let mut offset = 0;
    for line in text.split_inclusive('\n') {
        if starts_explanation(line, &config.explanations) {
            return text[..offset].trim_end().to_string();
        }
        offset += line.len();
    }
    text.to_string()
}

/// H1: collapse whitespace.
pub fn h1_adjust_space(text: &str) -> String {
    normalize_whitespace(text)
}

pub fn apply(h: Heuristic, text: &str, config: &CleanerConfig) -> String {
    match h {
        Heuristic::H5 => h5_strip_backticks(text),
        Heuristic::H3 => h3_strip_lang_prefix(text),
        Heuristic::H4 => h4_strip_redundant(text, config),
        Heuristic::H2 => h2_strip_explanation(text, config),
        Heuristic::H1 => h1_adjust_space(text),
    }
}

pub fn clean(raw: &str) -> (String, CleaningTrace) {
    clean_with(raw, &CleanerConfig::default())
}

pub fn clean_with(raw: &str, config: &CleanerConfig) -> (String, CleaningTrace) {
    let mut trace = CleaningTrace::default();
    let mut cur = raw.to_string();
    while trace.passes < MAX_PASSES {
        trace.passes += 1;
        let start = cur.clone();
        for h in PIPELINE {
            let next = apply(h, &cur, config);
            trace.applied.push(TraceStep { heuristic: h, before_len: cur.len(), after_len: next.len() });
            cur = next;
        }
        if cur == start {
            break;
        }
    }
    (cur, trace)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn cfg() -> CleanerConfig {
        CleanerConfig::default()
    }

    #[test]
    fn h5_examples() {
        assert_eq!(h5_strip_backticks("```java\nreturn x;\n```"), "return x;");
        assert_eq!(h5_strip_backticks("```\njava\nreturn x;\n```"), "java\nreturn x;");
        assert_eq!(h5_strip_backticks("return x;"), "return x;");
        assert_eq!(h5_strip_backticks("``` \ncode\n```"), "code");
        assert_eq!(h5_strip_backticks("a = `b`;"), "a = `b`;");
    }

    #[test]
    fn h3_examples() {
        assert_eq!(h3_strip_lang_prefix("java\nint x;"), "int x;");
        assert_eq!(h3_strip_lang_prefix("javax.swing f;"), "javax.swing f;");
        assert_eq!(h3_strip_lang_prefix("Java\ncode"), "code");
        assert_eq!(h3_strip_lang_prefix("\n  java \ncode"), "code");
    }

    #[test]
    fn h4_examples() {
        assert_eq!(h4_strip_redundant("Fixed Code:\nreturn x;", &cfg()), "return x;");
        assert_eq!(h4_strip_redundant("START return x; END", &cfg()), "return x;");
        assert_eq!(h4_strip_redundant("return x;", &cfg()), "return x;");
        assert_eq!(h4_strip_redundant("refactored code\nf();", &cfg()), "f();");
        assert_eq!(h4_strip_redundant("Fixed Code: f();", &cfg()), "f();");
        assert_eq!(h4_strip_redundant("a |startfocus| b |endfocus| c", &cfg()), "a b c");
        assert_eq!(h4_strip_redundant("int STARTED = END_X;", &cfg()), "int STARTED = END_X;");
        assert_eq!(h4_strip_redundant("Fixed Codes\nx", &cfg()), "Fixed Codes\nx");
    }

    #[test]
    fn h2_examples() {
        assert_eq!(h2_strip_explanation("return x;\nExplanation: simpler", &cfg()), "return x;");
        assert_eq!(h2_strip_explanation("return x;\nChanges Made:\n- y", &cfg()), "return x;");
        assert_eq!(h2_strip_explanation("return x;", &cfg()), "return x;");
        assert_eq!(h2_strip_explanation("f();\n**Reasoning**: z", &cfg()), "f();");
        assert_eq!(h2_strip_explanation("ExplanationBuilder b;", &cfg()), "ExplanationBuilder b;");
    }

    #[test]
    fn h1_examples() {
        assert_eq!(h1_adjust_space("a\n  b"), "a b");
        assert_eq!(h1_adjust_space("a b"), "a b");
        assert_eq!(h1_adjust_space("\t\t"), "");
    }

    #[test]
    fn composition() {
        let (out, trace) = clean("```java\nFixed Code:\nreturn x ;\nExplanation: ok\n```");
        assert_eq!(out, "return x ;");
        assert_eq!(&trace.applied[..5].iter().map(|s| s.heuristic).collect::<Vec<_>>(), &PIPELINE);
    }

    #[test]
    fn clean_input_is_untouched() {
        let (out, trace) = clean("return x ;");
        assert_eq!(out, "return x ;");
        assert_eq!(trace.passes, 1);
        assert_eq!(trace.applied.len(), 5);
        assert!(trace.applied.iter().all(|s| s.before_len == s.after_len));
    }

    #[test]
    fn explanation_after_fence() {
        let (out, _) = clean("```java\nint a = 1 ;\n```\n\nExplanation: it works\n");
        assert_eq!(out, "int a = 1 ;");
    }

    #[test]
    fn concatenated_buggy_and_fixed_passes_through() {
        let (out, _) = clean("return a ;\nreturn b ;");
        assert_eq!(out, "return a ; return b ;");
    }

    proptest! {
        #[test]
        fn idempotent_and_shrinking(s in "(```|java|Fixed Code:|START|END|Explanation:|\n| |[a-z;(){}=]){0,40}") {
            let (once, _) = clean(&s);
            let (twice, _) = clean(&once);
            prop_assert_eq!(&once, &twice);
            prop_assert!(once.len() <= s.len());
        }

        #[test]
        fn each_heuristic_idempotent(s in "(```|java|Java|Fixed Code|:|START|END|Reasoning|\n| |[a-z;]){0,30}") {
            for h in PIPELINE {
                let once = apply(h, &s, &cfg());
                prop_assert_eq!(apply(h, &once, &cfg()), once.clone(), "{:?}", h);
                prop_assert!(once.len() <= s.len());
            }
        }

        #[test]
        fn arbitrary_text_is_total(s in any::<String>()) {
            let (out, _) = clean(&s);
            prop_assert!(out.len() <= s.len());
        }
    }
}
