use std::fmt;

use serde::{Deserialize, Serialize};

use super::rules::ComplexityRubric;
use crate::argcore::PatientCase;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ComplexityLevel {
    Low,
    Moderate,
    High,
    VeryHigh,
}

impl fmt::Display for ComplexityLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ComplexityLevel::Low => "low",
            ComplexityLevel::Moderate => "moderate",
            ComplexityLevel::High => "high",
            ComplexityLevel::VeryHigh => "very_high",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComplexityAssessment {
    pub level: ComplexityLevel,
    pub raw_score: u32,
}

impl ComplexityRubric {
    pub fn level_for(&self, raw_score: u32) -> ComplexityLevel {
        let l = &self.levels;
        if raw_score >= l.very_high {
            ComplexityLevel::VeryHigh
        } else if raw_score >= l.high {
            ComplexityLevel::High
        } else if raw_score >= l.moderate {
            ComplexityLevel::Moderate
        } else {
            ComplexityLevel::Low
        }
    }
}

/// Scores the case against the rubric and maps the raw score to a level.
pub fn assess_complexity(case: &PatientCase, rubric: &ComplexityRubric) -> ComplexityAssessment {
    let raw_score = rubric
        .terms
        .iter()
        .map(|t| t.points(case))
        .fold(0u32, u32::saturating_add);
    ComplexityAssessment {
        level: rubric.level_for(raw_score),
        raw_score,
    }
}
