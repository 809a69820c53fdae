//! Task taxonomy, prompts and the metric registry.

use alloc::string::String;
use core::fmt;
use core::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Editing task categories, easiest first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum TaskCategory {
    /// Single object, single attribute.
    #[serde(rename = "SOSA")]
    Sosa,
    /// Style editing.
    #[serde(rename = "SE")]
    Se,
    /// Single object, multiple attributes.
    #[serde(rename = "SOMA")]
    Soma,
    /// Multiple objects and attributes.
    #[serde(rename = "MOA")]
    Moa,
}

impl TaskCategory {
    pub const ALL: [TaskCategory; 4] = [Self::Sosa, Self::Se, Self::Soma, Self::Moa];

    pub fn code(self) -> &'static str {
        match self {
            Self::Sosa => "SOSA",
            Self::Se => "SE",
            Self::Soma => "SOMA",
            Self::Moa => "MOA",
        }
    }
}

impl fmt::Display for TaskCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown {kind} '{value}'")]
pub struct ParseNameError {
    pub kind: &'static str,
    pub value: String,
}

impl FromStr for TaskCategory {
    type Err = ParseNameError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|t| t.code().eq_ignore_ascii_case(s))
            .ok_or_else(|| ParseNameError {
                kind: "task category",
                value: s.into(),
            })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PromptError {
    #[error("source prompt is empty")]
    EmptySource,
    #[error("target prompt is empty")]
    EmptyTarget,
    #[error("source and target prompts are identical")]
    Identical,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptPair {
    pub source: String,
    pub target: String,
}

impl PromptPair {
    pub fn new(source: impl Into<String>, target: impl Into<String>) -> Result<Self, PromptError> {
        let pair = Self {
            source: source.into(),
            target: target.into(),
        };
        pair.validate()?;
        Ok(pair)
    }

    pub fn validate(&self) -> Result<(), PromptError> {
        if self.source.trim().is_empty() {
            return Err(PromptError::EmptySource);
        }
        if self.target.trim().is_empty() {
            return Err(PromptError::EmptyTarget);
        }
        if self.source == self.target {
            return Err(PromptError::Identical);
        }
        Ok(())
    }
}

/// Which way a metric improves.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    LowerBetter,
    HigherBetter,
}

/// The nine transcript metrics. Declaration order is the column order of
/// the transcript table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    FfAlpha,
    FfBeta,
    SemanticScore,
    SuccessRate,
    ClipSimilarity,
    SubjectConsistency,
    BackgroundConsistency,
    AestheticQuality,
    ImagingQuality,
}

impl Metric {
    pub const ALL: [Metric; 9] = [
        Self::FfAlpha,
        Self::FfBeta,
        Self::SemanticScore,
        Self::SuccessRate,
        Self::ClipSimilarity,
        Self::SubjectConsistency,
        Self::BackgroundConsistency,
        Self::AestheticQuality,
        Self::ImagingQuality,
    ];

    /// Column header used in exported tables.
    pub fn label(self) -> &'static str {
        match self {
            Self::FfAlpha => "FF-α",
            Self::FfBeta => "FF-β",
            Self::SemanticScore => "Semantic Score",
            Self::SuccessRate => "Success Rate",
            Self::ClipSimilarity => "CLIP Similarity",
            Self::SubjectConsistency => "Subject Consistency",
            Self::BackgroundConsistency => "Background Consistency",
            Self::AestheticQuality => "Aesthetic Quality",
            Self::ImagingQuality => "Imaging Quality",
        }
    }

    /// Machine key, identical to the serde name.
    pub fn key(self) -> &'static str {
        match self {
            Self::FfAlpha => "ff_alpha",
            Self::FfBeta => "ff_beta",
            Self::SemanticScore => "semantic_score",
            Self::SuccessRate => "success_rate",
            Self::ClipSimilarity => "clip_similarity",
            Self::SubjectConsistency => "subject_consistency",
            Self::BackgroundConsistency => "background_consistency",
            Self::AestheticQuality => "aesthetic_quality",
            Self::ImagingQuality => "imaging_quality",
        }
    }

    pub fn direction(self) -> Direction {
        match self {
            Self::FfAlpha | Self::FfBeta | Self::SemanticScore => Direction::LowerBetter,
            _ => Direction::HigherBetter,
        }
    }

    /// What annotators are asked to judge for this dimension.
    pub fn instruction(self) -> &'static str {
        match self {
            Self::FfAlpha | Self::FfBeta => {
                "Which edited video better keeps the motion and structure of the original video, \
                 with less flicker? Consider only this aspect."
            }
            Self::SemanticScore => {
                "Which edited video leaves the parts that should not change (everything except \
                 the edited object) closer to the original? Consider only this aspect."
            }
            Self::SuccessRate | Self::ClipSimilarity => {
                "Which edited video matches the target prompt better? Consider only this aspect."
            }
            Self::SubjectConsistency => {
                "Which edited video keeps the main subject's appearance more consistent across \
                 frames? Consider only this aspect."
            }
            Self::BackgroundConsistency => {
                "Which edited video keeps the background more consistent across frames? \
                 Consider only this aspect."
            }
            Self::AestheticQuality => {
                "Which edited video is more aesthetically pleasing? Consider only this aspect."
            }
            Self::ImagingQuality => {
                "Which edited video has better image quality (less noise, blur and artifacts)? \
                 Consider only this aspect."
            }
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.key())
    }
}

impl FromStr for Metric {
    type Err = ParseNameError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|m| m.key() == s || m.label() == s)
            .ok_or_else(|| ParseNameError {
                kind: "metric",
                value: s.into(),
            })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_column_order() {
        let labels: alloc::vec::Vec<_> = Metric::ALL.iter().map(|m| m.label()).collect();
        assert_eq!(
            labels,
            [
                "FF-α",
                "FF-β",
                "Semantic Score",
                "Success Rate",
                "CLIP Similarity",
                "Subject Consistency",
                "Background Consistency",
                "Aesthetic Quality",
                "Imaging Quality"
            ]
        );
    }

    #[test]
    fn directions() {
        let lower: alloc::vec::Vec<_> = Metric::ALL
            .into_iter()
            .filter(|m| m.direction() == Direction::LowerBetter)
            .collect();
        assert_eq!(lower, [Metric::FfAlpha, Metric::FfBeta, Metric::SemanticScore]);
    }

    #[test]
    fn prompt_rules() {
        assert_eq!(PromptPair::new("", "a"), Err(PromptError::EmptySource));
        assert_eq!(PromptPair::new("a", " "), Err(PromptError::EmptyTarget));
        assert_eq!(PromptPair::new("a", "a"), Err(PromptError::Identical));
        assert!(PromptPair::new("a bear", "a panda").is_ok());
    }

    #[test]
    fn parse_names() {
        assert_eq!("sosa".parse::<TaskCategory>().unwrap(), TaskCategory::Sosa);
        assert!("XYZ".parse::<TaskCategory>().is_err());
        assert_eq!("ff_beta".parse::<Metric>().unwrap(), Metric::FfBeta);
        assert_eq!("CLIP Similarity".parse::<Metric>().unwrap(), Metric::ClipSimilarity);
    }
}
