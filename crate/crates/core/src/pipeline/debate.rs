use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::backend::{
    ArgumentBackend, ArgumentDraft, BackendError, BackendRequest, BackendResponse, CHALLENGE_REF,
    SUPPORT_REF,
};
use super::retrieval::retrieve_evidence;
use super::roster::TeamRoster;
use super::{DebateConfig, PipelineError};
use crate::argcore::{
    ArgId, Argument, ArgumentGraph, ArgumentStatus, CareOption, EvidenceDoc, OptionId,
    PatientCase, Polarity, Relation, Role, Stance,
};
use crate::semantics::{score_intrinsic, ScorerWeights};

const DEFAULT_WEIGHT: f64 = 0.5;
const LINKER_WEIGHT: f64 = 0.25;

/// A backend relation that could not be added to the graph.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DebateWarning {
    pub round: u32,
    pub role: Role,
    pub option: OptionId,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DebateOutcome {
    pub graph: ArgumentGraph,
    pub warnings: Vec<DebateWarning>,
}

/// Runs `cfg.rounds` rounds in which every roster role argues for and
/// against every option.
///
/// Calls within a round run in parallel; their results are inserted in
/// roster order, then option order. Each request carries the arguments of
/// earlier rounds and the evidence from `evidence` most similar to the
/// option. τ is scored against `evidence` as a whole. Any backend error
/// aborts the debate.
pub fn run_debate(
    case: &PatientCase,
    roster: &TeamRoster,
    options: &[CareOption],
    evidence: &[EvidenceDoc],
    cfg: &DebateConfig,
    weights: &ScorerWeights,
    backend: &dyn ArgumentBackend,
) -> Result<DebateOutcome, PipelineError> {
    cfg.validate()?;
    weights
        .validate()
        .map_err(|e| PipelineError::InvalidConfig(e.to_string()))?;
    if roster.roles.is_empty() {
        return Err(PipelineError::InvalidConfig("roster is empty".into()));
    }
    if options.is_empty() {
        return Err(PipelineError::InvalidConfig("no options to debate".into()));
    }
    let mut graph = ArgumentGraph::new();
    for option in options {
        graph.add_option(option.clone())?;
    }
    let option_evidence = options
        .iter()
        .map(|o| option_evidence(case, o, evidence, cfg.retrieval_top_k))
        .collect::<Result<Vec<_>, _>>()?;
    let mut warnings = Vec::new();

    for round in 1..=cfg.rounds {
        let prior: Vec<Argument> = graph.arguments().cloned().collect();
        let requests: Vec<BackendRequest> = roster
            .roles
            .iter()
            .flat_map(|role| {
                options.iter().zip(&option_evidence).map(|(option, ev)| BackendRequest {
                    case: case.clone(),
                    option: option.clone(),
                    role: *role,
                    round,
                    prior_arguments: prior.clone(),
                    evidence: ev.clone(),
                })
            })
            .collect();
        let responses: Vec<_> = requests.par_iter().map(|r| backend.respond(r)).collect();
        for (req, resp) in requests.iter().zip(responses) {
            let resp = resp.map_err(|e| match e {
                BackendError::Failure(message) => PipelineError::BackendFailure {
                    role: req.role,
                    option: req.option.option_id.clone(),
                    round,
                    message,
                },
                BackendError::Malformed(message) => malformed(req, message),
            })?;
            insert_response(&mut graph, req, resp, case, evidence, weights, &mut warnings)?;
        }
    }
    if cfg.heuristic_linker {
        link_co_citations(&mut graph);
    }
    Ok(DebateOutcome { graph, warnings })
}

fn option_evidence(
    case: &PatientCase,
    option: &CareOption,
    evidence: &[EvidenceDoc],
    top_k: usize,
) -> Result<Vec<EvidenceDoc>, PipelineError> {
    if evidence.is_empty() {
        return Ok(Vec::new());
    }
    let query = format!("{} {} {}", option.title, option.description, case.conditions.join(" "));
    retrieve_evidence(&query, evidence, top_k)
}

fn malformed(req: &BackendRequest, message: String) -> PipelineError {
    PipelineError::MalformedResponse {
        role: req.role,
        option: req.option.option_id.clone(),
        round: req.round,
        message,
    }
}

/// Id of the argument `role` makes on `option` with `stance` in `round`.
pub(crate) fn debate_arg_id(role: Role, option: &OptionId, stance: Stance, round: u32) -> ArgId {
    ArgId::new(format!("{role}-{option}-{stance}-{round}"))
}

fn insert_response(
    graph: &mut ArgumentGraph,
    req: &BackendRequest,
    resp: BackendResponse,
    case: &PatientCase,
    evidence: &[EvidenceDoc],
    weights: &ScorerWeights,
    warnings: &mut Vec<DebateWarning>,
) -> Result<(), PipelineError> {
    for draft in [&resp.support_argument, &resp.challenge_argument] {
        if draft.content.trim().is_empty() {
            return Err(malformed(req, "argument content is empty".into()));
        }
    }
    for rel in &resp.relations {
        if let Some(w) = rel.weight {
            if !w.is_finite() || w < 0.0 {
                return Err(malformed(req, format!("relation weight {w} must be finite and >= 0")));
            }
        }
    }
    let support_id = debate_arg_id(req.role, &req.option.option_id, Stance::Support, req.round);
    let challenge_id = debate_arg_id(req.role, &req.option.option_id, Stance::Challenge, req.round);
    for (id, stance, draft) in [
        (&support_id, Stance::Support, resp.support_argument),
        (&challenge_id, Stance::Challenge, resp.challenge_argument),
    ] {
        let arg = scored_argument(id.clone(), stance, req, draft, case, evidence, weights);
        graph.add_argument(arg)?;
    }

    let mut warn = |message: String| {
        warnings.push(DebateWarning {
            round: req.round,
            role: req.role,
            option: req.option.option_id.clone(),
            message,
        })
    };
    let resolve = |r: &str| -> Option<ArgId> {
        match r {
            SUPPORT_REF => Some(support_id.clone()),
            CHALLENGE_REF => Some(challenge_id.clone()),
            other if graph.contains_argument(&ArgId::from(other)) => Some(ArgId::from(other)),
            _ => None,
        }
    };
    let mut resolved = Vec::new();
    for rel in &resp.relations {
        match (resolve(&rel.source_ref), resolve(&rel.target_ref)) {
            (Some(s), Some(t)) => resolved.push(Relation::new(
                s,
                t,
                rel.polarity,
                rel.weight.unwrap_or(DEFAULT_WEIGHT),
            )),
            _ => warn(format!(
                "dropped relation {} -> {}: unresolved reference",
                rel.source_ref, rel.target_ref
            )),
        }
    }
    for rel in resolved {
        let label = format!("{} -> {}", rel.source, rel.target);
        if let Err(e) = graph.add_relation(rel) {
            warn(format!("dropped relation {label}: {e}"));
        }
    }
    Ok(())
}

fn scored_argument(
    arg_id: ArgId,
    stance: Stance,
    req: &BackendRequest,
    draft: ArgumentDraft,
    case: &PatientCase,
    evidence: &[EvidenceDoc],
    weights: &ScorerWeights,
) -> Argument {
    let mut arg = Argument {
        arg_id,
        content: draft.content,
        stance,
        role: req.role,
        target_option: req.option.option_id.clone(),
        cited_evidence: draft.cited_evidence,
        tau: 0.0,
        tau_pinned: false,
        status: ArgumentStatus::Pending,
    };
    arg.tau = score_intrinsic(&arg, case, evidence, weights);
    arg
}

/// Adds a weak support edge between same-option, same-stance arguments
/// that cite a common document, from the smaller id to the larger.
fn link_co_citations(graph: &mut ArgumentGraph) {
    let args: Vec<Argument> = graph.arguments().cloned().collect();
    let mut links = Vec::new();
    for (i, a) in args.iter().enumerate() {
        for b in &args[i + 1..] {
            let shared = a.cited_evidence.iter().any(|d| b.cited_evidence.contains(d));
            if a.target_option == b.target_option && a.stance == b.stance && shared {
                links.push(Relation::new(a.arg_id.clone(), b.arg_id.clone(), Polarity::Support, LINKER_WEIGHT));
            }
        }
    }
    for rel in links {
        // an identical backend edge already exists; keep it
        let _ = graph.add_relation(rel);
    }
}
