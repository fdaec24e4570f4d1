//! Edit actions and session commands, and their wire form
//! `{"actor", "kind", "target", "payload"}`.

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::ContestationError;
use crate::argcore::{ArgId, DocId, OptionId, Polarity, Role, Stance};
use crate::canonical::quantize;
use crate::plangen::Calendar;

const DEFAULT_RELATION_WEIGHT: f64 = 0.5;

/// A human-authored argument, as sent with an `add` edit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NewArgument {
    pub content: String,
    pub stance: Stance,
    /// Defaults to the acting role.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub role: Option<Role>,
    pub target_option: OptionId,
    #[serde(default)]
    pub cited_evidence: Vec<DocId>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NewRelation {
    pub source: ArgId,
    pub target: ArgId,
    pub polarity: Polarity,
    /// Defaults to 0.5.
    #[serde(default = "default_weight")]
    pub weight: f64,
}

fn default_weight() -> f64 {
    DEFAULT_RELATION_WEIGHT
}

#[derive(Debug, Clone, PartialEq)]
pub enum Edit {
    Accept { target: ArgId },
    Reject { target: ArgId },
    Modify { target: ArgId, content: String },
    Add { argument: NewArgument },
    PinTau { target: ArgId, tau: f64 },
    AddRelation { relation: NewRelation },
}

impl Edit {
    pub fn kind(&self) -> &'static str {
        match self {
            Edit::Accept { .. } => "accept",
            Edit::Reject { .. } => "reject",
            Edit::Modify { .. } => "modify",
            Edit::Add { .. } => "add",
            Edit::PinTau { .. } => "pin_tau",
            Edit::AddRelation { .. } => "add_relation",
        }
    }

    pub fn target(&self) -> Option<&ArgId> {
        match self {
            Edit::Accept { target }
            | Edit::Reject { target }
            | Edit::Modify { target, .. }
            | Edit::PinTau { target, .. } => Some(target),
            Edit::Add { .. } | Edit::AddRelation { .. } => None,
        }
    }
}

/// One reviewer edit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "WireCommand", into = "WireCommand")]
pub struct EditAction {
    pub actor: Role,
    pub edit: Edit,
}

/// Anything recorded in the audit log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "WireCommand", into = "WireCommand")]
pub enum Command {
    Edit(EditAction),
    Revalidate {
        actor: Role,
    },
    Approve {
        actor: Role,
        force: bool,
        /// Pending arguments accepted by a forced approval.
        bulk_accepted: Vec<ArgId>,
    },
    Plan {
        actor: Role,
        calendar: Option<Calendar>,
    },
}

impl Command {
    pub fn actor(&self) -> Role {
        match self {
            Command::Edit(e) => e.actor,
            Command::Revalidate { actor }
            | Command::Approve { actor, .. }
            | Command::Plan { actor, .. } => *actor,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Command::Edit(e) => e.edit.kind(),
            Command::Revalidate { .. } => "revalidate",
            Command::Approve { .. } => "approve",
            Command::Plan { .. } => "plan",
        }
    }
}

/// The shared wire record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WireCommand {
    pub actor: Role,
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<ArgId>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub payload: Option<Value>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ModifyPayload {
    content: String,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct AddPayload {
    argument: NewArgument,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PinPayload {
    tau: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RelationPayload {
    relation: NewRelation,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ApprovePayload {
    force: bool,
    bulk_accepted: Vec<ArgId>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PlanPayload {
    calendar: Calendar,
}

fn invalid(msg: impl Into<String>) -> ContestationError {
    ContestationError::InvalidPayload(msg.into())
}

fn payload<T: serde::de::DeserializeOwned>(kind: &str, p: Option<Value>) -> Result<T, ContestationError> {
    let p = p.ok_or_else(|| invalid(format!("`{kind}` needs a payload")))?;
    serde_json::from_value(p).map_err(|e| invalid(format!("`{kind}` payload: {e}")))
}

fn no_payload(kind: &str, p: &Option<Value>) -> Result<(), ContestationError> {
    match p {
        None => Ok(()),
        Some(Value::Object(m)) if m.is_empty() => Ok(()),
        Some(_) => Err(invalid(format!("`{kind}` takes no payload"))),
    }
}

fn nonblank(content: String) -> Result<String, ContestationError> {
    if content.trim().is_empty() {
        Err(invalid("content must not be empty"))
    } else {
        Ok(content)
    }
}

impl TryFrom<WireCommand> for Command {
    type Error = ContestationError;

    fn try_from(w: WireCommand) -> Result<Self, Self::Error> {
        let kind = w.kind.as_str();
        let target = |t: Option<ArgId>| t.ok_or_else(|| invalid(format!("`{kind}` needs a target")));
        let untargeted = |t: &Option<ArgId>| match t {
            Some(_) => Err(invalid(format!("`{kind}` takes no target"))),
            None => Ok(()),
        };
        let edit = match kind {
            "accept" => {
                no_payload(kind, &w.payload)?;
                Edit::Accept { target: target(w.target)? }
            }
            "reject" => {
                no_payload(kind, &w.payload)?;
                Edit::Reject { target: target(w.target)? }
            }
            "modify" => {
                let p: ModifyPayload = payload(kind, w.payload)?;
                Edit::Modify {
                    target: target(w.target)?,
                    content: nonblank(p.content)?,
                }
            }
            "add" => {
                untargeted(&w.target)?;
                let mut p: AddPayload = payload(kind, w.payload)?;
                p.argument.content = nonblank(p.argument.content)?;
                Edit::Add { argument: p.argument }
            }
            "pin_tau" => {
                let p: PinPayload = payload(kind, w.payload)?;
                if !(0.0..=1.0).contains(&p.tau) {
                    return Err(invalid(format!("tau must be in [0,1], got {}", p.tau)));
                }
                Edit::PinTau {
                    target: target(w.target)?,
                    tau: quantize(p.tau),
                }
            }
            "add_relation" => {
                untargeted(&w.target)?;
                let mut p: RelationPayload = payload(kind, w.payload)?;
                let weight = p.relation.weight;
                if !weight.is_finite() || weight < 0.0 {
                    return Err(invalid(format!("weight must be finite and >= 0, got {weight}")));
                }
                p.relation.weight = quantize(weight);
                Edit::AddRelation { relation: p.relation }
            }
            "revalidate" => {
                untargeted(&w.target)?;
                no_payload(kind, &w.payload)?;
                return Ok(Command::Revalidate { actor: w.actor });
            }
            "approve" => {
                untargeted(&w.target)?;
                let p: ApprovePayload = payload(kind, w.payload)?;
                return Ok(Command::Approve {
                    actor: w.actor,
                    force: p.force,
                    bulk_accepted: p.bulk_accepted,
                });
            }
            "plan" => {
                untargeted(&w.target)?;
                let calendar = match w.payload {
                    None => None,
                    p => {
                        let p: PlanPayload = payload(kind, p)?;
                        p.calendar.validate()?;
                        Some(p.calendar)
                    }
                };
                return Ok(Command::Plan { actor: w.actor, calendar });
            }
            other => return Err(invalid(format!("unknown kind `{other}`"))),
        };
        Ok(Command::Edit(EditAction { actor: w.actor, edit }))
    }
}

impl From<Command> for WireCommand {
    fn from(c: Command) -> Self {
        let kind = c.kind().to_string();
        match c {
            Command::Edit(e) => e.into(),
            Command::Revalidate { actor } => WireCommand { actor, kind, target: None, payload: None },
            Command::Approve { actor, force, bulk_accepted } => WireCommand {
                actor,
                kind,
                target: None,
                payload: Some(json!({ "force": force, "bulk_accepted": bulk_accepted })),
            },
            Command::Plan { actor, calendar } => WireCommand {
                actor,
                kind,
                target: None,
                payload: calendar.map(|c| json!({ "calendar": c })),
            },
        }
    }
}

impl TryFrom<WireCommand> for EditAction {
    type Error = ContestationError;

    fn try_from(w: WireCommand) -> Result<Self, Self::Error> {
        match Command::try_from(w)? {
            Command::Edit(e) => Ok(e),
            other => Err(invalid(format!("`{}` is not an edit", other.kind()))),
        }
    }
}

impl From<EditAction> for WireCommand {
    fn from(e: EditAction) -> Self {
        let kind = e.edit.kind().to_string();
        let target = e.edit.target().cloned();
        let payload = match e.edit {
            Edit::Accept { .. } | Edit::Reject { .. } => None,
            Edit::Modify { content, .. } => Some(json!({ "content": content })),
            Edit::Add { argument } => Some(json!({ "argument": argument })),
            Edit::PinTau { tau, .. } => Some(json!({ "tau": tau })),
            Edit::AddRelation { relation } => Some(json!({ "relation": relation })),
        };
        WireCommand { actor: e.actor, kind, target, payload }
    }
}

impl EditAction {
    /// Parses an edit from its JSON wire form.
    pub fn from_json(text: &str) -> Result<Self, ContestationError> {
        let wire: WireCommand =
            serde_json::from_str(text).map_err(|e| invalid(e.to_string()))?;
        wire.try_into()
    }
}
