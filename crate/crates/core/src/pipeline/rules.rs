//! Rule tables for complexity, recruitment and option generation.
//!
//! The defaults ship as TOML files under `data/` and are compiled in; a
//! directory holding any of `complexity.toml`, `recruitment.toml` or
//! `options.toml` overrides the corresponding table.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::PipelineError;
use crate::argcore::{CareOption, CaseFlag, PatientCase, Role};

const COMPLEXITY_TOML: &str = include_str!("../../data/complexity.toml");
const RECRUITMENT_TOML: &str = include_str!("../../data/recruitment.toml");
const OPTIONS_TOML: &str = include_str!("../../data/options.toml");

/// A numeric reading of a case.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum CaseFeature {
    Conditions,
    Medications,
    AdlImpairments,
    IadlImpairments,
    Falls90d,
    Hospitalizations90d,
    /// 1 when the flag is set, else 0.
    Flag(CaseFlag),
}

impl CaseFeature {
    pub fn value(self, case: &PatientCase) -> u32 {
        match self {
            CaseFeature::Conditions => case.conditions.len() as u32,
            CaseFeature::Medications => case.medications.len() as u32,
            CaseFeature::AdlImpairments => case.adl_impairments,
            CaseFeature::IadlImpairments => case.iadl_impairments,
            CaseFeature::Falls90d => case.falls_90d,
            CaseFeature::Hospitalizations90d => case.hospitalizations_90d,
            CaseFeature::Flag(flag) => case.has_flag(flag) as u32,
        }
    }
}

impl fmt::Display for CaseFeature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CaseFeature::Conditions => f.write_str("conditions"),
            CaseFeature::Medications => f.write_str("medications"),
            CaseFeature::AdlImpairments => f.write_str("adl_impairments"),
            CaseFeature::IadlImpairments => f.write_str("iadl_impairments"),
            CaseFeature::Falls90d => f.write_str("falls_90d"),
            CaseFeature::Hospitalizations90d => f.write_str("hospitalizations_90d"),
            CaseFeature::Flag(flag) => write!(f, "flag:{flag}"),
        }
    }
}

impl FromStr for CaseFeature {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "conditions" => CaseFeature::Conditions,
            "medications" => CaseFeature::Medications,
            "adl_impairments" => CaseFeature::AdlImpairments,
            "iadl_impairments" => CaseFeature::IadlImpairments,
            "falls_90d" => CaseFeature::Falls90d,
            "hospitalizations_90d" => CaseFeature::Hospitalizations90d,
            other => {
                let flag = other
                    .strip_prefix("flag:")
                    .and_then(|name| CaseFlag::ALL.into_iter().find(|f| f.as_str() == name))
                    .ok_or_else(|| format!("unknown case feature `{other}`"))?;
                CaseFeature::Flag(flag)
            }
        })
    }
}

impl TryFrom<String> for CaseFeature {
    type Error = String;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl From<CaseFeature> for String {
    fn from(f: CaseFeature) -> Self {
        f.to_string()
    }
}

/// Feature test shared by triggers and option rules.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Threshold {
    pub feature: CaseFeature,
    pub at_least: u32,
}

impl Threshold {
    pub fn holds(&self, case: &PatientCase) -> bool {
        self.feature.value(case) >= self.at_least
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RubricTerm {
    pub feature: CaseFeature,
    pub weight: u32,
    #[serde(default)]
    pub at_least: Option<u32>,
}

impl RubricTerm {
    pub fn points(&self, case: &PatientCase) -> u32 {
        let v = self.feature.value(case);
        match self.at_least {
            Some(t) => {
                if v >= t {
                    self.weight
                } else {
                    0
                }
            }
            None => self.weight.saturating_mul(v),
        }
    }
}

/// Lowest raw score of each level above low.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LevelThresholds {
    pub moderate: u32,
    pub high: u32,
    pub very_high: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComplexityRubric {
    pub levels: LevelThresholds,
    pub terms: Vec<RubricTerm>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BaseRoster {
    pub low: Vec<Role>,
    pub moderate: Vec<Role>,
    pub high: Vec<Role>,
    pub very_high: Vec<Role>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TriggerRule {
    pub name: String,
    pub feature: CaseFeature,
    pub at_least: u32,
    pub roles: Vec<Role>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RecruitmentTable {
    pub base: BaseRoster,
    #[serde(default)]
    pub triggers: Vec<TriggerRule>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptionRule {
    pub name: String,
    pub feature: CaseFeature,
    pub at_least: u32,
    pub options: Vec<CareOption>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptionTemplates {
    pub always: Vec<CareOption>,
    #[serde(default)]
    pub rules: Vec<OptionRule>,
}

/// All three rule tables.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RuleBook {
    pub complexity: ComplexityRubric,
    pub recruitment: RecruitmentTable,
    pub options: OptionTemplates,
}

impl Default for RuleBook {
    fn default() -> Self {
        Self::builtin()
    }
}

impl RuleBook {
    /// The tables shipped in `data/`.
    pub fn builtin() -> Self {
        RuleBook {
            complexity: parse("complexity.toml", COMPLEXITY_TOML).expect("builtin complexity rubric"),
            recruitment: parse("recruitment.toml", RECRUITMENT_TOML).expect("builtin recruitment table"),
            options: parse("options.toml", OPTIONS_TOML).expect("builtin option templates"),
        }
    }

    /// Loads overrides from `dir`; tables without a file keep their defaults.
    pub fn load(dir: &Path) -> Result<Self, PipelineError> {
        let mut book = Self::builtin();
        let read = |name: &str| -> Result<Option<String>, PipelineError> {
            let path = dir.join(name);
            if path.exists() {
                std::fs::read_to_string(&path)
                    .map(Some)
                    .map_err(|e| PipelineError::Rules(format!("{}: {e}", path.display())))
            } else {
                Ok(None)
            }
        };
        if let Some(text) = read("complexity.toml")? {
            book.complexity = parse("complexity.toml", &text)?;
        }
        if let Some(text) = read("recruitment.toml")? {
            book.recruitment = parse("recruitment.toml", &text)?;
        }
        if let Some(text) = read("options.toml")? {
            book.options = parse("options.toml", &text)?;
        }
        book.validate()?;
        Ok(book)
    }

    fn validate(&self) -> Result<(), PipelineError> {
        let l = &self.complexity.levels;
        if !(l.moderate <= l.high && l.high <= l.very_high) {
            return Err(PipelineError::Rules("level thresholds must be nondecreasing".into()));
        }
        let base = &self.recruitment.base;
        let all_base = base.low.iter().chain(&base.moderate).chain(&base.high).chain(&base.very_high);
        let roles = all_base.chain(self.recruitment.triggers.iter().flat_map(|t| &t.roles));
        if let Some(r) = roles.clone().find(|r| r.is_human()) {
            return Err(PipelineError::Rules(format!("{r} cannot be recruited as an agent")));
        }
        if self.options.always.is_empty() {
            return Err(PipelineError::Rules("at least one `always` option is required".into()));
        }
        Ok(())
    }
}

fn parse<T: serde::de::DeserializeOwned>(name: &str, text: &str) -> Result<T, PipelineError> {
    toml::from_str(text).map_err(|e| PipelineError::Rules(format!("{name}: {e}")))
}
