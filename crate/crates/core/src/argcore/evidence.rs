use serde::{Deserialize, Serialize};

use super::{CoreError, DocId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SourceType {
    Guideline,
    CaseRecord,
    AssessmentNote,
}

/// A retrievable document. `similarity` is written at retrieval time and is
/// zero for documents that have not been retrieved.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvidenceDoc {
    pub doc_id: DocId,
    pub text: String,
    pub source_type: SourceType,
    pub reliability: f64,
    #[serde(default)]
    pub similarity: f64,
}

impl EvidenceDoc {
    pub fn validate(&self) -> Result<(), CoreError> {
        if self.doc_id.as_str().is_empty() {
            return Err(CoreError::InvalidEvidence("doc_id must be nonempty".into()));
        }
        for (name, v) in [("reliability", self.reliability), ("similarity", self.similarity)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(CoreError::InvalidEvidence(format!(
                    "{name} of {} must be in [0,1], got {v}",
                    self.doc_id
                )));
            }
        }
        Ok(())
    }
}
