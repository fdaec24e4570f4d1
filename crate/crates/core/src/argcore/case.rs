use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::CoreError;
use crate::canonical;

/// Version written into and required from case files.
pub const CASE_FORMAT_VERSION: u64 = 1;

/// Risk flags recorded by the home-care assessment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CaseFlag {
    CognitiveImpairment,
    Depression,
    LivesAlone,
    NutritionRisk,
}

impl CaseFlag {
    pub const ALL: [CaseFlag; 4] = [
        CaseFlag::CognitiveImpairment,
        CaseFlag::Depression,
        CaseFlag::LivesAlone,
        CaseFlag::NutritionRisk,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            CaseFlag::CognitiveImpairment => "cognitive_impairment",
            CaseFlag::Depression => "depression",
            CaseFlag::LivesAlone => "lives_alone",
            CaseFlag::NutritionRisk => "nutrition_risk",
        }
    }
}

impl fmt::Display for CaseFlag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Structured patient description: demographics, conditions, functional
/// status and risk flags. Every deserialization path validates the ranges.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawCase")]
pub struct PatientCase {
    pub case_id: String,
    pub age: u32,
    pub conditions: Vec<String>,
    pub medications: Vec<String>,
    pub adl_impairments: u32,
    pub iadl_impairments: u32,
    pub falls_90d: u32,
    pub hospitalizations_90d: u32,
    pub flags: BTreeSet<CaseFlag>,
    pub narrative: String,
    pub assessment_source: String,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCase {
    case_id: String,
    age: u32,
    #[serde(default)]
    conditions: Vec<String>,
    #[serde(default)]
    medications: Vec<String>,
    #[serde(default)]
    adl_impairments: u32,
    #[serde(default)]
    iadl_impairments: u32,
    #[serde(default)]
    falls_90d: u32,
    #[serde(default)]
    hospitalizations_90d: u32,
    #[serde(default)]
    flags: BTreeSet<CaseFlag>,
    #[serde(default)]
    narrative: String,
    #[serde(default)]
    assessment_source: String,
}

impl TryFrom<RawCase> for PatientCase {
    type Error = CoreError;

    fn try_from(r: RawCase) -> Result<Self, Self::Error> {
        let case = PatientCase {
            case_id: r.case_id,
            age: r.age,
            conditions: r.conditions,
            medications: r.medications,
            adl_impairments: r.adl_impairments,
            iadl_impairments: r.iadl_impairments,
            falls_90d: r.falls_90d,
            hospitalizations_90d: r.hospitalizations_90d,
            flags: r.flags,
            narrative: r.narrative,
            assessment_source: r.assessment_source,
        };
        case.validate()?;
        Ok(case)
    }
}

impl PatientCase {
    /// A case with every count zero and no flags.
    pub fn empty(case_id: impl Into<String>) -> Self {
        PatientCase {
            case_id: case_id.into(),
            age: 0,
            conditions: Vec::new(),
            medications: Vec::new(),
            adl_impairments: 0,
            iadl_impairments: 0,
            falls_90d: 0,
            hospitalizations_90d: 0,
            flags: BTreeSet::new(),
            narrative: String::new(),
            assessment_source: String::new(),
        }
    }

    pub fn validate(&self) -> Result<(), CoreError> {
        if self.case_id.trim().is_empty() {
            return Err(CoreError::InvalidCase("case_id must be nonempty".into()));
        }
        if self.adl_impairments > 6 {
            return Err(CoreError::InvalidCase(format!(
                "adl_impairments must be in 0..=6, got {}",
                self.adl_impairments
            )));
        }
        if self.iadl_impairments > 8 {
            return Err(CoreError::InvalidCase(format!(
                "iadl_impairments must be in 0..=8, got {}",
                self.iadl_impairments
            )));
        }
        Ok(())
    }

    pub fn has_flag(&self, flag: CaseFlag) -> bool {
        self.flags.contains(&flag)
    }

    /// Free text describing the case, used as the case-level retrieval
    /// query and as the vocabulary for argument relevance.
    pub fn profile_text(&self) -> String {
        let mut parts: Vec<String> = self.conditions.clone();
        parts.extend(self.flags.iter().map(|f| f.as_str().to_string()));
        parts.push(self.narrative.clone());
        parts.join(" ")
    }

    /// Parses a versioned case file.
    pub fn from_json(text: &str) -> Result<Self, CoreError> {
        let mut value: Value =
            serde_json::from_str(text).map_err(|e| CoreError::InvalidCase(e.to_string()))?;
        let obj = value
            .as_object_mut()
            .ok_or_else(|| CoreError::InvalidCase("case file must be a JSON object".into()))?;
        match obj.remove("format_version").and_then(|v| v.as_u64()) {
            Some(CASE_FORMAT_VERSION) => {}
            Some(v) => return Err(CoreError::UnsupportedVersion(v)),
            None => return Err(CoreError::InvalidCase("missing format_version".into())),
        }
        serde_json::from_value(value).map_err(|e| CoreError::InvalidCase(e.to_string()))
    }

    /// Canonical case file text.
    pub fn to_json(&self) -> String {
        let mut value = serde_json::to_value(self).expect("case serializes");
        value
            .as_object_mut()
            .expect("case is an object")
            .insert("format_version".into(), CASE_FORMAT_VERSION.into());
        canonical::to_canonical_file(&value).expect("case serializes")
    }
}
