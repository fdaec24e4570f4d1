use serde::Serialize;

use super::ScorerWeights;
use crate::argcore::{Argument, EvidenceDoc, PatientCase};
use crate::text;

/// Token count at which the length half of transparency saturates.
const TRANSPARENCY_TOKENS: f64 = 30.0;

/// The three criteria behind an intrinsic strength score, each in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IntrinsicBreakdown {
    /// Fraction of the argument's distinct tokens that also occur in the
    /// case's conditions, flags or narrative.
    pub relevance: f64,
    /// Best `similarity · reliability` among the cited documents.
    pub consistency: f64,
    /// Half for citing anything, half for length up to 30 tokens.
    pub transparency: f64,
}

impl IntrinsicBreakdown {
    pub fn evaluate(arg: &Argument, case: &PatientCase, evidence: &[EvidenceDoc]) -> Self {
        let arg_tokens = text::token_set(&arg.content);
        let case_tokens = text::token_set(&case.profile_text());
        let relevance = text::overlap_ratio(&arg_tokens, &case_tokens);

        let consistency = arg
            .cited_evidence
            .iter()
            .filter_map(|id| evidence.iter().find(|d| &d.doc_id == id))
            .map(|d| d.similarity * d.reliability)
            .fold(0.0, f64::max);

        let cites = if arg.cited_evidence.is_empty() { 0.0 } else { 0.5 };
        let length = (text::tokens(&arg.content).len() as f64 / TRANSPARENCY_TOKENS).min(1.0);
        let transparency = cites + 0.5 * length;

        IntrinsicBreakdown {
            relevance,
            consistency,
            transparency,
        }
    }

    pub fn combine(&self, w: &ScorerWeights) -> f64 {
        let tau = w.w_relevance * self.relevance
            + w.w_consistency * self.consistency
            + w.w_transparency * self.transparency;
        tau.clamp(0.0, 1.0)
    }
}

/// Intrinsic strength τ of `arg` against the case and the retrieved
/// evidence. Citations that do not resolve in `evidence` contribute nothing.
pub fn score_intrinsic(
    arg: &Argument,
    case: &PatientCase,
    evidence: &[EvidenceDoc],
    weights: &ScorerWeights,
) -> f64 {
    IntrinsicBreakdown::evaluate(arg, case, evidence).combine(weights)
}
