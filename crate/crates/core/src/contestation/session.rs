use chrono::{DateTime, NaiveDate, SecondsFormat, Utc};
use serde::{Deserialize, Serialize};

use super::audit::{AuditEntry, Tombstone, GENESIS_HASH};
use super::command::{Command, Edit, EditAction};
use super::{ContestationError, Phase};
use crate::argcore::{
    ArgId, Argument, ArgumentGraph, ArgumentStatus, DegreeAssignment, EvidenceDoc, PatientCase,
    Relation, Role,
};
use crate::pipeline::{ComplexityAssessment, DebateConfig, TeamRoster};
use crate::plangen::{
    plan_entries, schedule_tasks, Calendar, CarePlan, InMemoryCalendar, PlanConfig,
    CALENDAR_FORMAT_VERSION,
};
use crate::semantics::{
    score_all_options, score_intrinsic, AggregationConfig, ScorerWeights, SemanticsError,
    SolverConfig,
};

/// Every tunable the session was created with.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SessionConfigs {
    pub solver: SolverConfig,
    pub aggregation: AggregationConfig,
    pub debate: DebateConfig,
    pub scorer: ScorerWeights,
    pub plan: PlanConfig,
}

impl SessionConfigs {
    /// Reads a TOML config file. Missing tables keep their defaults.
    pub fn from_toml(text: &str) -> Result<Self, ContestationError> {
        let cfg: SessionConfigs =
            toml::from_str(text).map_err(|e| ContestationError::InvalidPayload(format!("config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ContestationError> {
        self.solver.validate()?;
        self.aggregation.validate()?;
        self.scorer.validate()?;
        self.debate.validate()?;
        self.plan.validate()?;
        Ok(())
    }
}

/// Phase 1 results kept with the session.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TeamInfo {
    pub complexity: ComplexityAssessment,
    pub roster: TeamRoster,
}

/// The parts of a session fixed at creation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SessionBase {
    pub session_id: String,
    pub case: PatientCase,
    /// Case-level evidence that argument strengths are scored against.
    pub evidence: Vec<EvidenceDoc>,
    pub configs: SessionConfigs,
    pub team: TeamInfo,
}

/// Formats an instant the way audit entries record it.
pub fn timestamp(at: DateTime<Utc>) -> String {
    at.to_rfc3339_opts(SecondsFormat::Secs, true)
}

/// Accepts only the form [`timestamp`] produces.
fn parse_timestamp(ts: &str) -> Result<DateTime<Utc>, ContestationError> {
    let at = DateTime::parse_from_rfc3339(ts)
        .map(|t| t.with_timezone(&Utc))
        .map_err(|e| ContestationError::InvalidPayload(format!("timestamp `{ts}`: {e}")))?;
    if timestamp(at) != ts {
        return Err(ContestationError::InvalidPayload(format!(
            "timestamp `{ts}` must be UTC with whole seconds, e.g. {}",
            timestamp(at)
        )));
    }
    Ok(at)
}

/// A contestation session: the debated graph under human review.
///
/// All changes go through [`Session::execute`] (or the wrappers around it),
/// which appends one audit entry per successful command. A failed command
/// leaves the session untouched.
#[derive(Debug, Clone, PartialEq)]
pub struct Session {
    base: SessionBase,
    phase: Phase,
    initial_graph: ArgumentGraph,
    graph: ArgumentGraph,
    degrees: Option<DegreeAssignment>,
    audit: Vec<AuditEntry>,
    plan: Option<CarePlan>,
}

fn solve(graph: &ArgumentGraph, cfg: &SessionConfigs) -> Result<DegreeAssignment, ContestationError> {
    Ok(score_all_options(graph, &cfg.solver, &cfg.aggregation)?.canonicalized())
}

impl Session {
    /// Opens review of a debated graph. `degrees` must be the solved
    /// degrees of `graph`.
    pub fn open(
        base: SessionBase,
        graph: ArgumentGraph,
        degrees: Option<DegreeAssignment>,
    ) -> Result<Self, ContestationError> {
        base.configs.validate()?;
        let degrees = degrees.ok_or(ContestationError::UnsolvedGraph)?.canonicalized();
        let covered = graph.argument_ids().all(|id| degrees.degrees.contains_key(id))
            && graph.options().all(|o| degrees.option_scores.contains_key(&o.option_id))
            && degrees.degrees.len() == graph.len();
        if !covered {
            return Err(ContestationError::UnsolvedGraph);
        }
        Ok(Session {
            base,
            phase: Phase::Contesting,
            initial_graph: graph.clone(),
            graph,
            degrees: Some(degrees),
            audit: Vec::new(),
            plan: None,
        })
    }

    /// Solves `graph` with the session's configs and opens review.
    pub fn open_solved(base: SessionBase, graph: ArgumentGraph) -> Result<Self, ContestationError> {
        let degrees = solve(&graph, &base.configs)?;
        Self::open(base, graph, Some(degrees))
    }

    pub fn base(&self) -> &SessionBase {
        &self.base
    }

    pub fn session_id(&self) -> &str {
        &self.base.session_id
    }

    pub fn case(&self) -> &PatientCase {
        &self.base.case
    }

    pub fn configs(&self) -> &SessionConfigs {
        &self.base.configs
    }

    pub fn phase(&self) -> Phase {
        self.phase
    }

    pub fn initial_graph(&self) -> &ArgumentGraph {
        &self.initial_graph
    }

    pub fn graph(&self) -> &ArgumentGraph {
        &self.graph
    }

    /// Degrees of the current graph; `None` after an edit until the next
    /// revalidation.
    pub fn degrees(&self) -> Option<&DegreeAssignment> {
        self.degrees.as_ref()
    }

    pub fn audit(&self) -> &[AuditEntry] {
        &self.audit
    }

    pub fn plan(&self) -> Option<&CarePlan> {
        self.plan.as_ref()
    }

    /// Arguments still awaiting a decision.
    pub fn pending(&self) -> Vec<ArgId> {
        self.graph
            .arguments()
            .filter(|a| a.status == ArgumentStatus::Pending)
            .map(|a| a.arg_id.clone())
            .collect()
    }

    pub fn apply_edit(&mut self, action: EditAction, at: DateTime<Utc>) -> Result<&AuditEntry, ContestationError> {
        self.execute(Command::Edit(action), &timestamp(at))
    }

    pub fn revalidate(&mut self, actor: Role, at: DateTime<Utc>) -> Result<&DegreeAssignment, ContestationError> {
        self.execute(Command::Revalidate { actor }, &timestamp(at))?;
        Ok(self.degrees.as_ref().expect("revalidated"))
    }

    pub fn approve(&mut self, actor: Role, force: bool, at: DateTime<Utc>) -> Result<&AuditEntry, ContestationError> {
        let cmd = Command::Approve {
            actor,
            force,
            bulk_accepted: Vec::new(),
        };
        self.execute(cmd, &timestamp(at))
    }

    pub fn make_plan(
        &mut self,
        actor: Role,
        calendar: Option<Calendar>,
        at: DateTime<Utc>,
    ) -> Result<&CarePlan, ContestationError> {
        self.execute(Command::Plan { actor, calendar }, &timestamp(at))?;
        Ok(self.plan.as_ref().expect("planned"))
    }

    /// Runs `cmd` and records it with `timestamp`. On error nothing changes.
    ///
    /// For `approve`, the recorded command lists the arguments a forced
    /// approval accepted, whatever `bulk_accepted` the caller passed.
    pub fn execute(&mut self, cmd: Command, timestamp: &str) -> Result<&AuditEntry, ContestationError> {
        let at = parse_timestamp(timestamp)?;
        let mut next = self.clone();
        let pre_hash = next.graph.content_hash();
        let (cmd, tombstone) = next.run(cmd, at)?;
        let post_hash = next.graph.content_hash();
        let prev = next.audit.last().map_or(GENESIS_HASH, |e| e.entry_hash.as_str());
        let entry = AuditEntry::seal(
            prev,
            next.audit.len() as u64 + 1,
            timestamp.to_string(),
            cmd,
            pre_hash,
            post_hash,
            tombstone,
        );
        next.audit.push(entry);
        *self = next;
        Ok(self.audit.last().expect("just appended"))
    }

    fn require_phase(&self, expected: Phase) -> Result<(), ContestationError> {
        if self.phase == expected {
            Ok(())
        } else {
            Err(ContestationError::WrongPhase {
                expected,
                actual: self.phase,
            })
        }
    }

    fn require_human(actor: Role, what: &str) -> Result<(), ContestationError> {
        if actor.is_human() {
            Ok(())
        } else {
            Err(ContestationError::ActorNotPermitted {
                actor,
                action: what.to_string(),
            })
        }
    }

    fn run(&mut self, cmd: Command, at: DateTime<Utc>) -> Result<(Command, Option<Tombstone>), ContestationError> {
        match cmd {
            Command::Edit(action) => {
                self.require_phase(Phase::Contesting)?;
                Self::require_human(action.actor, action.edit.kind())?;
                let tombstone = self.edit(&action)?;
                self.degrees = None;
                Ok((Command::Edit(action), tombstone))
            }
            Command::Revalidate { actor } => {
                self.require_phase(Phase::Contesting)?;
                Self::require_human(actor, "revalidate")?;
                self.degrees = Some(solve(&self.graph, &self.base.configs)?);
                Ok((Command::Revalidate { actor }, None))
            }
            Command::Approve { actor, force, .. } => {
                self.require_phase(Phase::Contesting)?;
                if actor != Role::HumanCarePlanner {
                    return Err(ContestationError::ActorNotPermitted {
                        actor,
                        action: "approve".into(),
                    });
                }
                let pending = self.pending();
                if !pending.is_empty() && !force {
                    return Err(ContestationError::PendingArguments(pending));
                }
                for id in &pending {
                    self.graph.set_status(id, ArgumentStatus::Accepted)?;
                }
                if self.degrees.is_none() {
                    self.degrees = Some(solve(&self.graph, &self.base.configs)?);
                }
                self.phase = Phase::Approved;
                Ok((
                    Command::Approve {
                        actor,
                        force,
                        bulk_accepted: pending,
                    },
                    None,
                ))
            }
            Command::Plan { actor, calendar } => {
                self.require_phase(Phase::Approved)?;
                Self::require_human(actor, "plan")?;
                let plan = self.build_plan(calendar.clone(), at)?;
                self.plan = Some(plan);
                self.phase = Phase::Planned;
                Ok((Command::Plan { actor, calendar }, None))
            }
        }
    }

    fn edit(&mut self, action: &EditAction) -> Result<Option<Tombstone>, ContestationError> {
        let unknown = |id: &ArgId| ContestationError::UnknownTarget(id.to_string());
        let blank = match &action.edit {
            Edit::Modify { content, .. } => content.trim().is_empty(),
            Edit::Add { argument } => argument.content.trim().is_empty(),
            _ => false,
        };
        if blank {
            return Err(ContestationError::InvalidPayload("content must not be empty".into()));
        }
        match &action.edit {
            Edit::Accept { target } => {
                self.graph.set_status(target, ArgumentStatus::Accepted).map_err(|_| unknown(target))?;
            }
            Edit::Reject { target } => {
                let (argument, relations) = self.graph.remove_argument(target).map_err(|_| unknown(target))?;
                return Ok(Some(Tombstone { argument, relations }));
            }
            Edit::Modify { target, content } => {
                let arg = self.graph.argument(target).ok_or_else(|| unknown(target))?;
                let mut changed = arg.clone();
                changed.content = content.clone();
                self.graph.set_content(target, content.clone())?;
                if !changed.tau_pinned {
                    let tau = self.score(&changed);
                    self.graph.set_tau(target, tau, false)?;
                }
                self.graph.set_status(target, ArgumentStatus::Modified)?;
            }
            Edit::Add { argument } => {
                if self.graph.option(&argument.target_option).is_none() {
                    return Err(ContestationError::UnknownTarget(argument.target_option.to_string()));
                }
                let mut arg = Argument {
                    arg_id: self.next_human_id(),
                    content: argument.content.clone(),
                    stance: argument.stance,
                    role: argument.role.unwrap_or(action.actor),
                    target_option: argument.target_option.clone(),
                    cited_evidence: argument.cited_evidence.clone(),
                    tau: 0.0,
                    tau_pinned: false,
                    status: ArgumentStatus::Added,
                };
                arg.tau = self.score(&arg);
                self.graph.add_argument(arg)?;
            }
            Edit::PinTau { target, tau } => {
                self.graph.set_tau(target, *tau, true).map_err(|_| unknown(target))?;
            }
            Edit::AddRelation { relation } => {
                for id in [&relation.source, &relation.target] {
                    if !self.graph.contains_argument(id) {
                        return Err(unknown(id));
                    }
                }
                let rel = Relation::new(
                    relation.source.clone(),
                    relation.target.clone(),
                    relation.polarity,
                    relation.weight,
                );
                self.graph
                    .add_relation(rel)
                    .map_err(|e| ContestationError::InvalidPayload(e.to_string()))?;
            }
        }
        Ok(None)
    }

    fn score(&self, arg: &Argument) -> f64 {
        score_intrinsic(arg, &self.base.case, &self.base.evidence, &self.base.configs.scorer)
    }

    /// Human-added arguments are numbered `h-001`, `h-002`, ... in the order
    /// they were added; numbers are never reused.
    fn next_human_id(&self) -> ArgId {
        let added = self
            .audit
            .iter()
            .filter(|e| matches!(&e.action, Command::Edit(EditAction { edit: Edit::Add { .. }, .. })))
            .count();
        ArgId::new(format!("h-{:03}", added + 1))
    }

    /// The plan entries for the approved graph, without scheduling.
    pub fn synthesize_plan(&self, generated_at: DateTime<Utc>) -> Result<CarePlan, ContestationError> {
        self.require_phase(Phase::Approved)?;
        let degrees = self.degrees.as_ref().ok_or(ContestationError::UnsolvedGraph)?;
        Ok(CarePlan {
            plan_id: format!("plan-{}", self.base.session_id),
            case_id: self.base.case.case_id.clone(),
            source_session: self.base.session_id.clone(),
            generated_at: timestamp(generated_at),
            entries: plan_entries(&self.graph, degrees, &self.base.configs.plan)?,
            tasks: Vec::new(),
        })
    }

    fn build_plan(&self, calendar: Option<Calendar>, at: DateTime<Utc>) -> Result<CarePlan, ContestationError> {
        let mut plan = self.synthesize_plan(at)?;
        let earliest: NaiveDate = calendar.as_ref().map_or(at.date_naive(), |c| c.start_date);
        let calendar = calendar.unwrap_or_else(|| Calendar {
            format_version: CALENDAR_FORMAT_VERSION,
            start_date: earliest,
            availability: Default::default(),
            booked: Default::default(),
        });
        let mut agent = InMemoryCalendar::new(calendar);
        plan.tasks = schedule_tasks(&plan, &self.graph, &self.base.configs.plan, earliest, &mut agent)?;
        Ok(plan)
    }

    /// Rebuilds a session from its creation state and audit log, checking
    /// that every re-executed entry reproduces the recorded one exactly.
    pub fn replay(
        base: SessionBase,
        initial_graph: ArgumentGraph,
        audit: &[AuditEntry],
    ) -> Result<Self, ContestationError> {
        let mut session = Self::open_solved(base, initial_graph)?;
        for recorded in audit {
            let broken = |reason: String| ContestationError::BrokenChain {
                seq: recorded.seq,
                reason,
            };
            let replayed = session
                .execute(recorded.action.clone(), &recorded.timestamp)
                .map_err(|e| broken(format!("entry does not re-execute: {e}")))?;
            if replayed != recorded {
                return Err(broken("re-executed entry differs from the recorded one".into()));
            }
        }
        Ok(session)
    }
}

impl From<SemanticsError> for ContestationError {
    fn from(e: SemanticsError) -> Self {
        match e {
            SemanticsError::NonConvergence {
                iterations, residual, ..
            } => ContestationError::NonConvergence { iterations, residual },
            other => ContestationError::Semantics(other.to_string()),
        }
    }
}
