//! Human review of the debated graph: edits, revalidation, approval and
//! planning, every step recorded in a hash-chained audit log that can be
//! replayed to rebuild the session.

mod audit;
mod command;
mod session;
mod store;

use std::fmt;

use serde::{Deserialize, Serialize};

pub use audit::{
    audit_to_csv, audit_to_jsonl, parse_audit, participation_to_csv, AuditEntry, Tombstone,
    GENESIS_HASH,
};
pub use command::{Command, Edit, EditAction, NewArgument, NewRelation, WireCommand};
pub use session::{timestamp, Session, SessionBase, SessionConfigs, TeamInfo};
pub use store::{
    commit_session, load_session, read_session_files, run_session, save_session, session_id_for,
    verify_session_dir, AUDIT_FILE, DEGREES_FILE, GRAPH_FILE, INITIAL_GRAPH_FILE, PLAN_FILE,
    SESSION_FILE, SESSION_FORMAT_VERSION,
};

use crate::argcore::{ArgId, CoreError, Role};
use crate::pipeline::PipelineError;
use crate::plangen::PlanError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Debated,
    Contesting,
    Approved,
    Planned,
}

impl Phase {
    pub fn as_str(self) -> &'static str {
        match self {
            Phase::Debated => "debated",
            Phase::Contesting => "contesting",
            Phase::Approved => "approved",
            Phase::Planned => "planned",
        }
    }
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Coarse error classes shared by the CLI exit codes and the HTTP API.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    NotFound,
    WrongPhase,
    Validation,
    NonConvergence,
    BackendFailure,
    BrokenChain,
    Internal,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ContestationError {
    #[error("session is {actual}, expected {expected}")]
    WrongPhase { expected: Phase, actual: Phase },
    #[error("unknown target `{0}`")]
    UnknownTarget(String),
    #[error("invalid payload: {0}")]
    InvalidPayload(String),
    #[error("{actor} may not {action}")]
    ActorNotPermitted { actor: Role, action: String },
    #[error("graph has no degrees for every argument and option")]
    UnsolvedGraph,
    #[error("{} argument(s) still pending", .0.len())]
    PendingArguments(Vec<ArgId>),
    #[error("no convergence after {iterations} iterations (residual {residual:e})")]
    NonConvergence { iterations: u64, residual: f64 },
    #[error("semantics: {0}")]
    Semantics(String),
    #[error("audit chain broken at entry {seq}: {reason}")]
    BrokenChain { seq: u64, reason: String },
    #[error("replayed session differs from the stored one: {0}")]
    ReplayMismatch(String),
    #[error("session not found: {0}")]
    NotFound(String),
    #[error(transparent)]
    Plan(#[from] PlanError),
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
    #[error(transparent)]
    Core(#[from] CoreError),
    #[error("{0}")]
    Io(String),
    #[error("malformed session file: {0}")]
    Format(String),
}

impl ContestationError {
    pub fn class(&self) -> ErrorClass {
        use ContestationError::*;
        match self {
            WrongPhase { .. } => ErrorClass::WrongPhase,
            UnknownTarget(_) | InvalidPayload(_) | ActorNotPermitted { .. } | UnsolvedGraph
            | PendingArguments(_) | Semantics(_) | Core(_) | Format(_) => ErrorClass::Validation,
            Plan(_) => ErrorClass::Validation,
            NonConvergence { .. } => ErrorClass::NonConvergence,
            BrokenChain { .. } | ReplayMismatch(_) => ErrorClass::BrokenChain,
            NotFound(_) => ErrorClass::NotFound,
            Pipeline(e) => match e {
                PipelineError::BackendFailure { .. } | PipelineError::MalformedResponse { .. } => {
                    ErrorClass::BackendFailure
                }
                _ => ErrorClass::Validation,
            },
            Io(_) => ErrorClass::Internal,
        }
    }
}
