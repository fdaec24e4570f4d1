//! Care-plan synthesis: tiering option scores, citing the arguments behind
//! each option, and turning recommended options into scheduling tasks.

mod schedule;

pub use schedule::{
    schedule_tasks, BookingAgent, BookingArguments, BookingStatus, Calendar, ClockTime,
    InMemoryCalendar, ScheduledTask, Slot, ToolCall, ToolResult, Window, BOOK_APPOINTMENT,
    CALENDAR_FORMAT_VERSION,
};

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::argcore::{
    ArgId, Argument, ArgumentGraph, CareOption, DegreeAssignment, DocId, Role, Stance,
};
use crate::canonical;

/// Version written into and required from plan files.
pub const PLAN_FORMAT_VERSION: u64 = 1;

/// Mitigation note for a conditional option nobody challenged.
pub const NO_CHALLENGES_NOTE: &str = "no challenges recorded";

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PlanError {
    #[error("score {0} is outside [0, 1]")]
    OutOfRange(f64),
    #[error("invalid plan configuration: {0}")]
    InvalidConfig(String),
    #[error("no degree for argument `{0}`")]
    MissingDegree(ArgId),
    #[error("calendar: {0}")]
    Calendar(String),
    #[error("tool call: {0}")]
    ToolCall(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Tier {
    RecommendedHigh,
    Recommended,
    Conditional,
    NotRecommended,
}

impl Tier {
    pub fn as_str(self) -> &'static str {
        match self {
            Tier::RecommendedHigh => "recommended_high",
            Tier::Recommended => "recommended",
            Tier::Conditional => "conditional",
            Tier::NotRecommended => "not_recommended",
        }
    }

    /// Whether options in this tier get a scheduling task.
    pub fn is_scheduled(self) -> bool {
        matches!(self, Tier::RecommendedHigh | Tier::Recommended)
    }
}

impl fmt::Display for Tier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Inclusive lower bounds of the three upper tiers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TierThresholds {
    pub recommended_high: f64,
    pub recommended: f64,
    pub conditional: f64,
}

impl Default for TierThresholds {
    fn default() -> Self {
        TierThresholds {
            recommended_high: 0.75,
            recommended: 0.60,
            conditional: 0.45,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlanConfig {
    pub thresholds: TierThresholds,
    pub task_duration_minutes: u32,
}

impl Default for PlanConfig {
    fn default() -> Self {
        PlanConfig {
            thresholds: TierThresholds::default(),
            task_duration_minutes: 60,
        }
    }
}

impl PlanConfig {
    pub fn validate(&self) -> Result<(), PlanError> {
        let t = &self.thresholds;
        let ordered = 0.0 <= t.conditional
            && t.conditional <= t.recommended
            && t.recommended <= t.recommended_high
            && t.recommended_high <= 1.0;
        if !ordered {
            return Err(PlanError::InvalidConfig(
                "thresholds must satisfy 0 <= conditional <= recommended <= recommended_high <= 1".into(),
            ));
        }
        if self.task_duration_minutes == 0 {
            return Err(PlanError::InvalidConfig("task_duration_minutes must be > 0".into()));
        }
        Ok(())
    }
}

/// Maps an option score to its tier.
pub fn tier_option(score: f64, thresholds: &TierThresholds) -> Result<Tier, PlanError> {
    if !(0.0..=1.0).contains(&score) {
        return Err(PlanError::OutOfRange(score));
    }
    Ok(if score >= thresholds.recommended_high {
        Tier::RecommendedHigh
    } else if score >= thresholds.recommended {
        Tier::Recommended
    } else if score >= thresholds.conditional {
        Tier::Conditional
    } else {
        Tier::NotRecommended
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlanEntry {
    pub option: CareOption,
    pub score: f64,
    pub tier: Tier,
    /// Supporting arguments, strongest first.
    pub supporting_citations: Vec<ArgId>,
    /// Challenging arguments, strongest first.
    pub challenging_citations: Vec<ArgId>,
    /// Documents cited by any of the arguments above, first mention first.
    pub evidence_citations: Vec<DocId>,
    /// Only filled for conditional entries.
    pub mitigation_notes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CarePlan {
    pub plan_id: String,
    pub case_id: String,
    pub source_session: String,
    /// RFC 3339, UTC.
    pub generated_at: String,
    pub entries: Vec<PlanEntry>,
    pub tasks: Vec<ScheduledTask>,
}

#[derive(Serialize)]
struct PlanFileOut<'a> {
    format_version: u64,
    #[serde(flatten)]
    plan: &'a CarePlan,
}

impl CarePlan {
    /// Canonical plan file text.
    pub fn to_canonical(&self) -> String {
        canonical::to_canonical_file(&PlanFileOut {
            format_version: PLAN_FORMAT_VERSION,
            plan: self,
        })
        .expect("plan serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, PlanError> {
        let mut value: serde_json::Value =
            serde_json::from_str(text).map_err(|e| PlanError::InvalidConfig(e.to_string()))?;
        let version = value
            .as_object_mut()
            .and_then(|o| o.remove("format_version"))
            .and_then(|v| v.as_u64());
        if version != Some(PLAN_FORMAT_VERSION) {
            return Err(PlanError::InvalidConfig(format!(
                "plan format_version must be {PLAN_FORMAT_VERSION}"
            )));
        }
        serde_json::from_value(value).map_err(|e| PlanError::InvalidConfig(e.to_string()))
    }
}

/// Builds the plan entries for every option in `graph`, in tier order,
/// then score (descending), then option id.
pub fn plan_entries(
    graph: &ArgumentGraph,
    degrees: &DegreeAssignment,
    cfg: &PlanConfig,
) -> Result<Vec<PlanEntry>, PlanError> {
    cfg.validate()?;
    let mut entries = Vec::new();
    for option in graph.options() {
        let score = degrees.score(&option.option_id).unwrap_or(crate::semantics::NEUTRAL_SCORE);
        let tier = tier_option(score, &cfg.thresholds)?;
        let supporters = ranked(graph, degrees, option, Stance::Support)?;
        let challengers = ranked(graph, degrees, option, Stance::Challenge)?;
        let mut seen = BTreeSet::new();
        let evidence_citations = supporters
            .iter()
            .chain(&challengers)
            .flat_map(|a| a.cited_evidence.iter())
            .filter(|d| seen.insert((*d).clone()))
            .cloned()
            .collect();
        let mitigation_notes = if tier == Tier::Conditional {
            if challengers.is_empty() {
                vec![NO_CHALLENGES_NOTE.to_string()]
            } else {
                challengers.iter().take(2).map(|a| a.content.clone()).collect()
            }
        } else {
            Vec::new()
        };
        entries.push(PlanEntry {
            option: option.clone(),
            score,
            tier,
            supporting_citations: supporters.iter().map(|a| a.arg_id.clone()).collect(),
            challenging_citations: challengers.iter().map(|a| a.arg_id.clone()).collect(),
            evidence_citations,
            mitigation_notes,
        });
    }
    entries.sort_by(|a, b| {
        a.tier
            .cmp(&b.tier)
            .then(b.score.total_cmp(&a.score))
            .then_with(|| a.option.option_id.cmp(&b.option.option_id))
    });
    Ok(entries)
}

/// Arguments on `option` with `stance`, by degree descending, then id.
fn ranked<'a>(
    graph: &'a ArgumentGraph,
    degrees: &DegreeAssignment,
    option: &'a CareOption,
    stance: Stance,
) -> Result<Vec<&'a Argument>, PlanError> {
    let mut args = graph
        .arguments_on(&option.option_id, stance)
        .map(|a| {
            degrees
                .degree(&a.arg_id)
                .map(|d| (d, a))
                .ok_or_else(|| PlanError::MissingDegree(a.arg_id.clone()))
        })
        .collect::<Result<Vec<_>, _>>()?;
    args.sort_by(|(da, a), (db, b)| db.total_cmp(da).then_with(|| a.arg_id.cmp(&b.arg_id)));
    Ok(args.into_iter().map(|(_, a)| a).collect())
}

/// The role that owns the task for `entry`: the author of its strongest
/// supporting argument, or the care coordinator when there is none.
pub fn task_owner(entry: &PlanEntry, graph: &ArgumentGraph) -> Role {
    entry
        .supporting_citations
        .first()
        .and_then(|id| graph.argument(id))
        .map(|a| a.role)
        .unwrap_or(Role::CareCoordinator)
}
