//! Deterministic template backend.
//!
//! Each role has a focus it argues from and a concern it raises. The text
//! is filled in from the case (conditions, counts, flags) and the option.

use super::backend::{
    ArgumentBackend, ArgumentDraft, BackendError, BackendRequest, BackendResponse, RelationDraft,
    SUPPORT_REF,
};
use crate::argcore::{
    ArgId, Argument, CaseFlag, OptionCategory, PatientCase, Polarity, Role, Stance,
};

const SCRIPTED_WEIGHT: f64 = 0.5;

/// Pure, template-driven backend. Identical requests give identical
/// responses.
#[derive(Debug, Clone, Copy, Default)]
pub struct ScriptedBackend;

impl ArgumentBackend for ScriptedBackend {
    fn respond(&self, request: &BackendRequest) -> Result<BackendResponse, BackendError> {
        Ok(scripted_response(request))
    }
}

fn focus(role: Role) -> &'static str {
    match role {
        Role::RegisteredNurse => "daily symptom monitoring and safe routines at home",
        Role::Pharmacist => "medication safety and drug interactions",
        Role::GeneralPractitioner => "overall medical management of the chronic conditions",
        Role::Nutritionist => "adequate intake and stable weight",
        Role::PhysicalTherapist => "strength, balance and safe mobility",
        Role::OccupationalTherapist => "independence in daily activities and a safer home layout",
        Role::Psychiatrist => "mood, cognition and engagement",
        Role::SocialWorker => "social support and access to community services",
        Role::HomeHealthAide => "practical help with personal care",
        Role::CareCoordinator => "continuity between providers and follow-up",
        Role::HumanReviewer | Role::HumanCarePlanner => "the overall plan",
    }
}

fn concern(role: Role) -> &'static str {
    match role {
        Role::RegisteredNurse => "nursing visits are limited and monitoring may lapse",
        Role::Pharmacist => "it may add medication burden or interactions",
        Role::GeneralPractitioner => "the expected benefit is uncertain given the comorbidities",
        Role::Nutritionist => "it does not address poor intake",
        Role::PhysicalTherapist => "exertion may raise fall risk before balance improves",
        Role::OccupationalTherapist => "home changes need consent and may not fit the space",
        Role::Psychiatrist => "low mood or cognitive decline may limit adherence",
        Role::SocialWorker => "cost and transport may be barriers",
        Role::HomeHealthAide => "visit time is short and tasks compete",
        Role::CareCoordinator => "it adds appointments the client must manage",
        Role::HumanReviewer | Role::HumanCarePlanner => "it needs review",
    }
}

fn plural(n: u32, one: &str, many: &str) -> String {
    if n == 1 {
        format!("{n} {one}")
    } else {
        format!("{n} {many}")
    }
}

/// Case facts that bear on an option category, as a sentence.
fn category_clause(category: OptionCategory, case: &PatientCase) -> String {
    match category {
        OptionCategory::Safety => format!(
            "The client had {} in the last 90 days and {}.",
            plural(case.falls_90d, "fall", "falls"),
            plural(case.adl_impairments, "ADL impairment", "ADL impairments"),
        ),
        OptionCategory::Mobility => format!(
            "The client had {} in the last 90 days with {}.",
            plural(case.falls_90d, "fall", "falls"),
            conditions_phrase(case),
        ),
        OptionCategory::Medication => format!(
            "The client takes {}.",
            plural(case.medications.len() as u32, "medication", "medications"),
        ),
        OptionCategory::Nutrition => {
            if case.has_flag(CaseFlag::NutritionRisk) {
                "The assessment records nutrition risk.".to_string()
            } else {
                "No nutrition risk is recorded.".to_string()
            }
        }
        OptionCategory::Psychosocial => {
            let mut flags = Vec::new();
            if case.has_flag(CaseFlag::Depression) {
                flags.push("depression");
            }
            if case.has_flag(CaseFlag::CognitiveImpairment) {
                flags.push("cognitive impairment");
            }
            if case.has_flag(CaseFlag::LivesAlone) {
                flags.push("living alone");
            }
            if flags.is_empty() {
                "No psychosocial risk is recorded.".to_string()
            } else {
                format!("The assessment records {}.", flags.join(" and "))
            }
        }
        OptionCategory::Coordination => format!(
            "The client has {} and {} in the last 90 days.",
            conditions_phrase(case),
            plural(case.hospitalizations_90d, "hospitalization", "hospitalizations"),
        ),
    }
}

fn conditions_phrase(case: &PatientCase) -> String {
    if case.conditions.is_empty() {
        "no recorded chronic conditions".to_string()
    } else {
        case.conditions.join(", ")
    }
}

fn scripted_response(req: &BackendRequest) -> BackendResponse {
    let title = &req.option.title;
    let facts = category_clause(req.option.category, &req.case);
    let support = ArgumentDraft {
        content: format!(
            "{} supports {title} for {}. {facts}",
            req.role.title(),
            focus(req.role),
        ),
        cited_evidence: req.evidence.first().map(|d| d.doc_id.clone()).into_iter().collect(),
    };
    let challenge = ArgumentDraft {
        content: format!(
            "{} questions {title} because {}. {facts}",
            req.role.title(),
            concern(req.role),
        ),
        cited_evidence: req.evidence.get(1).map(|d| d.doc_id.clone()).into_iter().collect(),
    };
    let mut relations = Vec::new();
    if req.round >= 2 {
        let on_option = |stance| {
            strongest(
                req.prior_arguments
                    .iter()
                    .filter(|a| a.target_option == req.option.option_id && a.stance == stance),
            )
        };
        if let Some(id) = on_option(Stance::Support) {
            relations.push(RelationDraft {
                source_ref: SUPPORT_REF.to_string(),
                target_ref: id.to_string(),
                polarity: Polarity::Support,
                weight: Some(SCRIPTED_WEIGHT),
            });
        }
        if let Some(id) = on_option(Stance::Challenge) {
            relations.push(RelationDraft {
                source_ref: SUPPORT_REF.to_string(),
                target_ref: id.to_string(),
                polarity: Polarity::Attack,
                weight: Some(SCRIPTED_WEIGHT),
            });
        }
    }
    BackendResponse {
        support_argument: support,
        challenge_argument: challenge,
        relations,
    }
}

/// Highest τ, ties to the smallest id.
fn strongest<'a>(args: impl Iterator<Item = &'a Argument>) -> Option<&'a ArgId> {
    args.fold(None::<&Argument>, |best, a| match best {
        Some(b) if b.tau > a.tau || (b.tau == a.tau && b.arg_id <= a.arg_id) => Some(b),
        _ => Some(a),
    })
    .map(|a| &a.arg_id)
}
