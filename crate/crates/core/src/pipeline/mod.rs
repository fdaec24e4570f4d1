//! Case intake and debate: complexity assessment, team recruitment,
//! evidence retrieval, option generation and the multi-agent debate that
//! builds the argument graph.

mod backend;
mod complexity;
mod debate;
mod external;
mod options;
mod retrieval;
mod roster;
mod rules;
mod scripted;

pub use backend::{
    ArgumentBackend, ArgumentDraft, BackendError, BackendRequest, BackendResponse, RelationDraft,
    CHALLENGE_REF, SUPPORT_REF,
};
pub use complexity::{assess_complexity, ComplexityAssessment, ComplexityLevel};
pub use debate::{run_debate, DebateOutcome, DebateWarning};
pub use external::{ExternalBackend, BACKEND_TOKEN_ENV, BACKEND_URL_ENV};
pub use options::generate_options;
pub use retrieval::{load_corpus, retrieve_evidence, CORPUS_FORMAT_VERSION};
pub use roster::{recruit_team, TeamRoster};
pub use rules::{
    BaseRoster, CaseFeature, ComplexityRubric, LevelThresholds, OptionRule, OptionTemplates,
    RecruitmentTable, RubricTerm, RuleBook, Threshold, TriggerRule,
};
pub use scripted::ScriptedBackend;

use serde::{Deserialize, Serialize};

use crate::argcore::{ArgumentGraph, CareOption, CoreError, EvidenceDoc, OptionId, PatientCase, Role};
use crate::semantics::ScorerWeights;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PipelineError {
    #[error("evidence corpus is empty")]
    EmptyCorpus,
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("backend failed for {role} on `{option}` in round {round}: {message}")]
    BackendFailure {
        role: Role,
        option: OptionId,
        round: u32,
        message: String,
    },
    #[error("malformed backend response for {role} on `{option}` in round {round}: {message}")]
    MalformedResponse {
        role: Role,
        option: OptionId,
        round: u32,
        message: String,
    },
    #[error("rule table: {0}")]
    Rules(String),
    #[error("corpus: {0}")]
    Corpus(String),
    #[error(transparent)]
    Core(#[from] CoreError),
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BackendKind {
    #[default]
    Scripted,
    External,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DebateConfig {
    pub rounds: u32,
    pub backend: BackendKind,
    pub retrieval_top_k: usize,
    pub heuristic_linker: bool,
}

impl Default for DebateConfig {
    fn default() -> Self {
        DebateConfig {
            rounds: 1,
            backend: BackendKind::Scripted,
            retrieval_top_k: 8,
            heuristic_linker: false,
        }
    }
}

impl DebateConfig {
    pub fn validate(&self) -> Result<(), PipelineError> {
        if self.rounds == 0 {
            return Err(PipelineError::InvalidConfig("rounds must be >= 1".into()));
        }
        if self.retrieval_top_k == 0 {
            return Err(PipelineError::InvalidConfig("retrieval_top_k must be >= 1".into()));
        }
        Ok(())
    }

    /// The backend selected by `backend`. The external one reads its
    /// endpoint from the environment.
    pub fn make_backend(&self) -> Result<Box<dyn ArgumentBackend>, PipelineError> {
        Ok(match self.backend {
            BackendKind::Scripted => Box::new(ScriptedBackend),
            BackendKind::External => Box::new(ExternalBackend::from_env()?),
        })
    }
}

/// Everything phases 1 and 2 produce for one case.
#[derive(Debug, Clone, PartialEq)]
pub struct PipelineRun {
    pub complexity: ComplexityAssessment,
    pub roster: TeamRoster,
    pub options: Vec<CareOption>,
    /// Case-level evidence, with similarities to the case profile.
    pub evidence: Vec<EvidenceDoc>,
    pub graph: ArgumentGraph,
    pub warnings: Vec<DebateWarning>,
}

/// Runs intake and debate for `case` against `corpus`.
pub fn run_pipeline(
    case: &PatientCase,
    corpus: &[EvidenceDoc],
    rules: &RuleBook,
    cfg: &DebateConfig,
    weights: &ScorerWeights,
    backend: &dyn ArgumentBackend,
) -> Result<PipelineRun, PipelineError> {
    cfg.validate()?;
    case.validate()?;
    let complexity = assess_complexity(case, &rules.complexity);
    let roster = recruit_team(case, complexity.level, &rules.recruitment);
    let options = generate_options(case, &rules.options);
    let evidence = retrieve_evidence(&case.profile_text(), corpus, cfg.retrieval_top_k)?;
    let outcome = run_debate(case, &roster, &options, &evidence, cfg, weights, backend)?;
    Ok(PipelineRun {
        complexity,
        roster,
        options,
        evidence,
        graph: outcome.graph,
        warnings: outcome.warnings,
    })
}
