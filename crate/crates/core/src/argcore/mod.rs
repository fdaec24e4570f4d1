//! Domain types and the argument-graph store.

mod case;
mod evidence;
pub(crate) mod graph;
mod role;

use std::fmt;

use serde::{Deserialize, Serialize};

pub use case::{CaseFlag, PatientCase, CASE_FORMAT_VERSION};
pub use evidence::{EvidenceDoc, SourceType};
pub use graph::{
    Argument, ArgumentGraph, ArgumentStatus, CareOption, DegreeAssignment, OptionCategory,
    Participation, Polarity, Relation, Stance, GRAPH_FORMAT_VERSION,
};
pub use role::{Role, UnknownRole};

macro_rules! string_id {
    ($(#[$meta:meta])* $name:ident) => {
        $(#[$meta])*
        #[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
        #[serde(transparent)]
        pub struct $name(String);

        impl $name {
            pub fn new(id: impl Into<String>) -> Self {
                $name(id.into())
            }

            pub fn as_str(&self) -> &str {
                &self.0
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(&self.0)
            }
        }

        impl From<&str> for $name {
            fn from(s: &str) -> Self {
                $name(s.to_string())
            }
        }

        impl From<String> for $name {
            fn from(s: String) -> Self {
                $name(s)
            }
        }

        impl std::borrow::Borrow<str> for $name {
            fn borrow(&self) -> &str {
                &self.0
            }
        }
    };
}

string_id!(
    /// Argument identifier. Ordering is lexicographic and drives every
    /// iteration over arguments.
    ArgId
);
string_id!(OptionId);
string_id!(DocId);

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CoreError {
    #[error("duplicate id `{0}`")]
    DuplicateId(String),
    #[error("unknown option `{0}`")]
    UnknownOption(OptionId),
    #[error("unknown argument `{0}`")]
    UnknownArgument(ArgId),
    #[error("relation from `{0}` to itself")]
    SelfLoop(ArgId),
    #[error("duplicate {polarity} relation `{source_id}` -> `{target}`")]
    DuplicateRelation {
        source_id: ArgId,
        target: ArgId,
        polarity: Polarity,
    },
    #[error("relation weight must be a finite value >= 0, got {0}")]
    NegativeWeight(f64),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("invalid case: {0}")]
    InvalidCase(String),
    #[error("invalid evidence: {0}")]
    InvalidEvidence(String),
    #[error("unsupported format_version {0}")]
    UnsupportedVersion(u64),
    #[error("malformed file: {0}")]
    Format(String),
}
