use serde::{Deserialize, Serialize};

use crate::argcore::{Argument, CareOption, DocId, EvidenceDoc, PatientCase, Polarity, Role};

/// Relation reference to the support argument of the same response.
pub const SUPPORT_REF: &str = "$support";
/// Relation reference to the challenge argument of the same response.
pub const CHALLENGE_REF: &str = "$challenge";

/// One call: `role` argues about `option` in `round` (1-based).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BackendRequest {
    pub case: PatientCase,
    pub option: CareOption,
    pub role: Role,
    pub round: u32,
    /// Arguments from earlier rounds, in `arg_id` order.
    pub prior_arguments: Vec<Argument>,
    /// Evidence retrieved for this (role, option) pair, best first.
    pub evidence: Vec<EvidenceDoc>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArgumentDraft {
    pub content: String,
    #[serde(default)]
    pub cited_evidence: Vec<DocId>,
}

/// `source_ref` and `target_ref` are either [`SUPPORT_REF`],
/// [`CHALLENGE_REF`] or the id of an argument already in the graph.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RelationDraft {
    pub source_ref: String,
    pub target_ref: String,
    pub polarity: Polarity,
    /// Defaults to 0.5.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weight: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BackendResponse {
    pub support_argument: ArgumentDraft,
    pub challenge_argument: ArgumentDraft,
    #[serde(default)]
    pub relations: Vec<RelationDraft>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum BackendError {
    /// The backend could not produce an answer.
    #[error("{0}")]
    Failure(String),
    /// The backend answered with something that is not a response.
    #[error("{0}")]
    Malformed(String),
}

/// Produces the support and challenge arguments of one role on one option.
pub trait ArgumentBackend: Sync {
    fn respond(&self, request: &BackendRequest) -> Result<BackendResponse, BackendError>;
}

impl<B: ArgumentBackend + ?Sized> ArgumentBackend for &B {
    fn respond(&self, request: &BackendRequest) -> Result<BackendResponse, BackendError> {
        (**self).respond(request)
    }
}

impl<B: ArgumentBackend + ?Sized> ArgumentBackend for Box<B> {
    fn respond(&self, request: &BackendRequest) -> Result<BackendResponse, BackendError> {
        (**self).respond(request)
    }
}
