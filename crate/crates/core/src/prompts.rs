//! Prompt rendering for zero-shot, few-shot and instruct-style requests.

use serde::{Deserialize, Serialize};

use crate::corpus::{RepairSample, Split};

pub const TEMPLATE_VERSION: &str = "v1";
pub const SYSTEM_TEXT: &str = "You are a coding assistant. You generate only the source code.";
pub const COMMAND: &str = "Refactor the Buggy Code using the Review without comments.";
pub const INSTRUCT_PREFIX: &str = "Refactor the code using the Review: ";
pub const DEFAULT_SHOTS: usize = 3;

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum PromptError {
    #[error("shot {shot_id} comes from the {split} split; only Train samples may be used as shots")]
    ShotFromNonTrainSplit { shot_id: String, split: Split },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PromptMode {
    #[serde(alias = "zero-shot")]
    ZeroShot,
    #[serde(alias = "few-shot")]
    FewShot,
    #[serde(alias = "instruct")]
    Instruct,
}

impl std::str::FromStr for PromptMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().replace(['-', '_'], "").as_str() {
            "zeroshot" => Ok(Self::ZeroShot),
            "fewshot" => Ok(Self::FewShot),
            "instruct" => Ok(Self::Instruct),
            other => Err(format!("unknown prompt mode `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Shot {
    pub id: String,
    pub buggy_code: String,
    pub review: String,
    pub fixed_code: String,
}

impl From<&RepairSample> for Shot {
    fn from(s: &RepairSample) -> Self {
        Shot {
            id: s.id.clone(),
            buggy_code: s.buggy_code.clone(),
            review: s.review.clone(),
            fixed_code: s.target.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Prompt {
    pub sample_id: String,
    pub mode: PromptMode,
    pub template_version: String,
    pub shots: Vec<Shot>,
    pub body: String,
    pub system_text: String,
    /// Instruct only: the code to edit.
    pub code: String,
    /// Instruct only.
    pub instruction: String,
    /// Set when fewer shots than requested were available.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub warning: Option<String>,
}

fn tail(sample: &RepairSample) -> String {
    format!("Buggy Code:\n{}\nReview: {}\n{COMMAND}", sample.buggy_code, sample.review)
}

fn shot_block(shot: &Shot) -> String {
    format!("Buggy Code: {}\nReview: {}\nFixed Code: {}\n\n", shot.buggy_code, shot.review, shot.fixed_code)
}

pub fn build_zero_shot(sample: &RepairSample) -> Prompt {
    Prompt {
        sample_id: sample.id.clone(),
        mode: PromptMode::ZeroShot,
        template_version: TEMPLATE_VERSION.into(),
        shots: Vec::new(),
        body: tail(sample),
        system_text: SYSTEM_TEXT.into(),
        code: String::new(),
        instruction: String::new(),
        warning: None,
    }
}

/// Few-shot prompt with `shots` in the given order (best match first).
/// `expected` is the configured shot count; a shortfall is recorded as a
/// warning rather than an error.
pub fn build_few_shot(sample: &RepairSample, shots: &[&RepairSample], expected: usize) -> Result<Prompt, PromptError> {
    if let Some(bad) = shots.iter().find(|s| s.split != Split::Train) {
        return Err(PromptError::ShotFromNonTrainSplit { shot_id: bad.id.clone(), split: bad.split });
    }
    let shots: Vec<Shot> = shots.iter().map(|s| Shot::from(*s)).collect();
    let mut body: String = shots.iter().map(shot_block).collect();
    body.push_str(&tail(sample));
    let warning =
        (shots.len() < expected).then(|| format!("{}: only {} of {expected} shots available", sample.id, shots.len()));
    Ok(Prompt {
        sample_id: sample.id.clone(),
        mode: PromptMode::FewShot,
        template_version: TEMPLATE_VERSION.into(),
        shots,
        body,
        system_text: SYSTEM_TEXT.into(),
        code: String::new(),
        instruction: String::new(),
        warning,
    })
}

pub fn build_instruct(sample: &RepairSample) -> Prompt {
    Prompt {
        sample_id: sample.id.clone(),
        mode: PromptMode::Instruct,
        template_version: TEMPLATE_VERSION.into(),
        shots: Vec::new(),
        body: String::new(),
        system_text: String::new(),
        code: sample.buggy_code.clone(),
        instruction: format!("{INSTRUCT_PREFIX}{}", sample.review),
        warning: None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{DatasetKind, FixCategory};

    fn sample(id: &str, split: Split) -> RepairSample {
        RepairSample {
            id: id.into(),
            dataset: DatasetKind::TufanoStyle,
            buggy_code: format!("public Rule findById ( int id ) {{ START Rule rule = {id} ; return rule ; END }}"),
            review: "Just return rule.".into(),
            target: "public Rule findById ( int id ) { return rule ; }".into(),
            category: FixCategory::Update,
            split,
        }
    }

    #[test]
    fn zero_shot_layout() {
        let s = sample("q", Split::Test);
        let p = build_zero_shot(&s);
        assert_eq!(p.body, format!("Buggy Code:\n{}\nReview: Just return rule.\n{COMMAND}", s.buggy_code));
        assert_eq!(p.body.lines().last(), Some(COMMAND));
        assert_eq!(p.system_text, SYSTEM_TEXT);
    }

    #[test]
    fn few_shot_layout() {
        let q = sample("q", Split::Test);
        let (a, b, c) = (sample("a", Split::Train), sample("b", Split::Train), sample("c", Split::Train));
        let p = build_few_shot(&q, &[&a, &b, &c], 3).unwrap();
        assert_eq!(p.shots.len(), 3);
        assert_eq!(p.body.matches("Fixed Code: ").count(), 3);
        assert!(p.body.starts_with(&format!("Buggy Code: {}\n", a.buggy_code)));
        assert!(p.body.ends_with(&build_zero_shot(&q).body));
        assert!(p.warning.is_none());
        let ia = p.body.find("rule = a").unwrap();
        let ib = p.body.find("rule = b").unwrap();
        assert!(ia < ib);
    }

    #[test]
    fn few_shot_shortfall_warns() {
        let q = sample("q", Split::Test);
        let (a, b) = (sample("a", Split::Train), sample("b", Split::Train));
        let p = build_few_shot(&q, &[&a, &b], 3).unwrap();
        assert_eq!(p.shots.len(), 2);
        assert!(p.warning.is_some());
    }

    #[test]
    fn zero_shots_degenerates_to_zero_shot() {
        let q = sample("q", Split::Test);
        assert_eq!(build_few_shot(&q, &[], 0).unwrap().body, build_zero_shot(&q).body);
    }

    #[test]
    fn leakage_guard() {
        let q = sample("q", Split::Test);
        let t = sample("t", Split::Test);
        assert_eq!(
            build_few_shot(&q, &[&t], 3),
            Err(PromptError::ShotFromNonTrainSplit { shot_id: "t".into(), split: Split::Test })
        );
    }

    #[test]
    fn instruct() {
        let s = sample("q", Split::Test);
        let p = build_instruct(&s);
        assert_eq!(p.instruction, "Refactor the code using the Review: Just return rule.");
        assert_eq!(p.code, s.buggy_code);
        assert!(p.body.is_empty() && p.system_text.is_empty());
    }

    #[test]
    fn rendering_is_pure() {
        let s = sample("q", Split::Test);
        assert_eq!(build_zero_shot(&s), build_zero_shot(&s));
    }
}
