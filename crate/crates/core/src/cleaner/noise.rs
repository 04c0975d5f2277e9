//! Generator of noisy response wrappers around clean code, used to check
//! that the cleaner recovers the code exactly.
//!
//! A wrapper is leading whitespace, an optional fence (bare or tagged), an
//! optional `java` line, an optional title, the code (optionally echoed with
//! markers and with its spaces randomly replaced), an optional explanation
//! inside or after the fence, the closing fence and trailing whitespace.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const LEADING: &[&str] = &["", "\n", "  \n\n", "\t", " "];
const TRAILING: &[&str] = &["", "\n", "\n\n  ", " \t"];
const FENCES: &[&str] = &["```", "```java", "``` ", "```Java", "  ```java"];
const JAVA_LINES: &[&str] = &["java", "Java", " JAVA "];
const TITLES: &[&str] =
    &["Refactored Code:", "Corrected Code:", "Updated Code", "Fixed Code:", "fixed code:", "Refactored Code"];
const EXPLANATIONS: &[&str] = &[
    "Explanation: the review asked for this change.",
    "Explanation:\nThe variable was redundant.\n\nIt is now inlined.",
    "Reasoning: simpler control flow",
    "Changes Made:\n- removed the temporary\n- returned directly",
    "**Explanation:** uses a constant",
    "## Changes Made\n1. renamed `x`",
];
const SEPARATORS: &[&str] = &[" ", "  ", "\n", "\t", " \n  ", "\n\n"];

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ExplanationPlace {
    InsideFence,
    AfterFence,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NoiseSpec {
    pub leading: &'static str,
    pub fence: Option<&'static str>,
    pub java_line: Option<&'static str>,
    pub title: Option<&'static str>,
    pub markers: bool,
    pub explanation: Option<(&'static str, ExplanationPlace)>,
    pub trailing: &'static str,
    /// Seed for replacing the spaces inside the code.
    pub spacing_seed: u64,
}

impl NoiseSpec {
    pub fn random(rng: &mut impl Rng) -> Self {
        let pick = |rng: &mut _, xs: &'static [&'static str]| *xs.choose(rng).unwrap_or(&"");
        let fence = rng.gen_bool(0.7).then(|| pick(rng, FENCES));
        // a standalone tag line only makes sense without a tag on the fence
        let bare = fence.is_none_or(|f| f.trim() == "```");
        let java_line = (bare && rng.gen_bool(0.4)).then(|| pick(rng, JAVA_LINES));
        let title = rng.gen_bool(0.5).then(|| pick(rng, TITLES));
        let markers = rng.gen_bool(0.3);
        let explanation = rng.gen_bool(0.5).then(|| {
            let place = if fence.is_some() && rng.gen_bool(0.5) {
                ExplanationPlace::AfterFence
            } else {
                ExplanationPlace::InsideFence
            };
            (pick(rng, EXPLANATIONS), place)
        });
        Self {
            leading: pick(rng, LEADING),
            fence,
            java_line,
            title,
            markers,
            explanation,
            trailing: pick(rng, TRAILING),
            spacing_seed: rng.gen(),
        }
    }

    /// `n` wrappers from a fixed seed.
    pub fn generate(n: usize, seed: u64) -> Vec<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| Self::random(&mut rng)).collect()
    }

    pub fn wrap(&self, code: &str) -> String {
        let mut rng = ChaCha8Rng::seed_from_u64(self.spacing_seed);
        let mut body = String::new();
        for (i, word) in code.split_whitespace().enumerate() {
            if i > 0 {
                body.push_str(SEPARATORS.choose(&mut rng).unwrap_or(&" "));
            }
            body.push_str(word);
        }
        if self.markers {
            body = format!("START {body} END");
        }

        let mut lines: Vec<String> = Vec::new();
        if let Some(f) = self.fence {
            lines.push(f.to_string());
        }
        if let Some(j) = self.java_line {
            lines.push(j.to_string());
        }
        if let Some(t) = self.title {
            lines.push(t.to_string());
        }
        lines.push(body);
        if let Some((text, ExplanationPlace::InsideFence)) = &self.explanation {
            lines.push(String::new());
            lines.push(text.to_string());
        }
        if self.fence.is_some() {
            lines.push("```".to_string());
        }
        if let Some((text, ExplanationPlace::AfterFence)) = &self.explanation {
            lines.push(String::new());
            lines.push(text.to_string());
        }
        format!("{}{}{}", self.leading, lines.join("\n"), self.trailing)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cleaner::clean;

    #[test]
    fn generation_is_seeded() {
        assert_eq!(NoiseSpec::generate(20, 3), NoiseSpec::generate(20, 3));
        assert_ne!(NoiseSpec::generate(20, 3), NoiseSpec::generate(20, 4));
    }

    #[test]
    fn wrappers_clean_back() {
        let targets = ["return x ;", "int a = b + 1 ; return a ;", "if ( a ) { f ( ) ; }"];
        for spec in NoiseSpec::generate(300, 11) {
            for t in targets {
                let wrapped = spec.wrap(t);
                assert_eq!(clean(&wrapped).0, t, "{spec:?}\n{wrapped}");
            }
        }
    }
}
