use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::{ArgId, CoreError, DocId, OptionId, Role};
use crate::canonical::{self, quantize};

/// Version written into and required from graph files.
pub const GRAPH_FORMAT_VERSION: u64 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OptionCategory {
    Safety,
    Mobility,
    Medication,
    Nutrition,
    Psychosocial,
    Coordination,
}

/// A candidate intervention under debate.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CareOption {
    pub option_id: OptionId,
    pub title: String,
    pub description: String,
    pub category: OptionCategory,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stance {
    Support,
    Challenge,
}

impl Stance {
    pub fn as_str(self) -> &'static str {
        match self {
            Stance::Support => "support",
            Stance::Challenge => "challenge",
        }
    }

    pub fn opposite(self) -> Stance {
        match self {
            Stance::Support => Stance::Challenge,
            Stance::Challenge => Stance::Support,
        }
    }
}

impl fmt::Display for Stance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ArgumentStatus {
    Pending,
    Accepted,
    Rejected,
    Modified,
    Added,
}

/// One argument for or against a care option.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Argument {
    pub arg_id: ArgId,
    pub content: String,
    pub stance: Stance,
    pub role: Role,
    pub target_option: OptionId,
    pub cited_evidence: Vec<DocId>,
    /// Intrinsic strength in `[0, 1]`.
    pub tau: f64,
    pub tau_pinned: bool,
    pub status: ArgumentStatus,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Polarity {
    Support,
    Attack,
}

impl fmt::Display for Polarity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Polarity::Support => "support",
            Polarity::Attack => "attack",
        })
    }
}

/// A weighted support or attack edge `source -> target`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Relation {
    pub source: ArgId,
    pub target: ArgId,
    pub polarity: Polarity,
    pub weight: f64,
}

impl Relation {
    pub fn new(
        source: impl Into<ArgId>,
        target: impl Into<ArgId>,
        polarity: Polarity,
        weight: f64,
    ) -> Self {
        Relation {
            source: source.into(),
            target: target.into(),
            polarity,
            weight,
        }
    }

    fn key(&self) -> (&ArgId, &ArgId, Polarity) {
        (&self.source, &self.target, self.polarity)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Participation {
    pub support_count: usize,
    pub challenge_count: usize,
}

/// The argument graph: options, live arguments and the weighted relations
/// between them.
///
/// Arguments and options are kept in id order. Relations are kept sorted by
/// `(source, target, polarity)`, so two graphs built from the same content
/// in different insertion orders are equal and serialize identically.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(into = "GraphFile", try_from = "GraphFile")]
pub struct ArgumentGraph {
    arguments: BTreeMap<ArgId, Argument>,
    relations: Vec<Relation>,
    options: BTreeMap<OptionId, CareOption>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GraphFile {
    format_version: u64,
    arguments: Vec<Argument>,
    relations: Vec<Relation>,
    options: Vec<CareOption>,
}

impl From<ArgumentGraph> for GraphFile {
    fn from(g: ArgumentGraph) -> Self {
        GraphFile {
            format_version: GRAPH_FORMAT_VERSION,
            arguments: g.arguments.into_values().collect(),
            relations: g.relations,
            options: g.options.into_values().collect(),
        }
    }
}

impl TryFrom<GraphFile> for ArgumentGraph {
    type Error = CoreError;

    fn try_from(file: GraphFile) -> Result<Self, Self::Error> {
        if file.format_version != GRAPH_FORMAT_VERSION {
            return Err(CoreError::UnsupportedVersion(file.format_version));
        }
        let mut g = ArgumentGraph::new();
        for o in file.options {
            g.add_option(o)?;
        }
        for a in file.arguments {
            g.add_argument(a)?;
        }
        for r in file.relations {
            g.add_relation(r)?;
        }
        Ok(g)
    }
}

impl ArgumentGraph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_option(&mut self, option: CareOption) -> Result<(), CoreError> {
        if option.option_id.as_str().is_empty() {
            return Err(CoreError::InvalidArgument("option_id must be nonempty".into()));
        }
        if self.options.contains_key(&option.option_id) {
            return Err(CoreError::DuplicateId(option.option_id.to_string()));
        }
        self.options.insert(option.option_id.clone(), option);
        Ok(())
    }

    /// Inserts `arg`. Its `tau` is stored at canonical precision.
    pub fn add_argument(&mut self, mut arg: Argument) -> Result<(), CoreError> {
        if arg.arg_id.as_str().is_empty() {
            return Err(CoreError::InvalidArgument("arg_id must be nonempty".into()));
        }
        if self.arguments.contains_key(&arg.arg_id) {
            return Err(CoreError::DuplicateId(arg.arg_id.to_string()));
        }
        if !self.options.contains_key(&arg.target_option) {
            return Err(CoreError::UnknownOption(arg.target_option.clone()));
        }
        if arg.content.trim().is_empty() {
            return Err(CoreError::InvalidArgument(format!(
                "content of `{}` must be nonempty",
                arg.arg_id
            )));
        }
        check_unit(arg.tau, "tau")?;
        arg.tau = quantize(arg.tau);
        self.arguments.insert(arg.arg_id.clone(), arg);
        Ok(())
    }

    /// Removes an argument together with every relation touching it, and
    /// returns both so callers can keep a tombstone.
    pub fn remove_argument(&mut self, id: &ArgId) -> Result<(Argument, Vec<Relation>), CoreError> {
        let arg = self
            .arguments
            .remove(id)
            .ok_or_else(|| CoreError::UnknownArgument(id.clone()))?;
        let (dropped, kept): (Vec<_>, Vec<_>) = std::mem::take(&mut self.relations)
            .into_iter()
            .partition(|r| &r.source == id || &r.target == id);
        self.relations = kept;
        Ok((arg, dropped))
    }

    /// Inserts `rel` at its sorted position. The weight is stored at
    /// canonical precision.
    pub fn add_relation(&mut self, mut rel: Relation) -> Result<(), CoreError> {
        for end in [&rel.source, &rel.target] {
            if !self.arguments.contains_key(end) {
                return Err(CoreError::UnknownArgument(end.clone()));
            }
        }
        if rel.source == rel.target {
            return Err(CoreError::SelfLoop(rel.source));
        }
        if !rel.weight.is_finite() || rel.weight < 0.0 {
            return Err(CoreError::NegativeWeight(rel.weight));
        }
        rel.weight = quantize(rel.weight);
        match self.relations.binary_search_by(|r| r.key().cmp(&rel.key())) {
            Ok(_) => Err(CoreError::DuplicateRelation {
                source_id: rel.source,
                target: rel.target,
                polarity: rel.polarity,
            }),
            Err(pos) => {
                self.relations.insert(pos, rel);
                Ok(())
            }
        }
    }

    pub fn argument(&self, id: &ArgId) -> Option<&Argument> {
        self.arguments.get(id)
    }

    pub fn contains_argument(&self, id: &ArgId) -> bool {
        self.arguments.contains_key(id)
    }

    /// Arguments in id order.
    pub fn arguments(&self) -> impl Iterator<Item = &Argument> {
        self.arguments.values()
    }

    pub fn argument_ids(&self) -> impl Iterator<Item = &ArgId> {
        self.arguments.keys()
    }

    pub fn len(&self) -> usize {
        self.arguments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.arguments.is_empty()
    }

    /// Relations sorted by `(source, target, polarity)`.
    pub fn relations(&self) -> &[Relation] {
        &self.relations
    }

    pub fn option(&self, id: &OptionId) -> Option<&CareOption> {
        self.options.get(id)
    }

    /// Options in id order.
    pub fn options(&self) -> impl Iterator<Item = &CareOption> {
        self.options.values()
    }

    /// Relations whose target is `id`, in source order.
    pub fn incoming<'a>(&'a self, id: &'a ArgId) -> impl Iterator<Item = &'a Relation> + 'a {
        self.relations.iter().filter(move |r| &r.target == id)
    }

    /// Live arguments on `option` with the given stance, in id order.
    pub fn arguments_on<'a>(
        &'a self,
        option: &'a OptionId,
        stance: Stance,
    ) -> impl Iterator<Item = &'a Argument> + 'a {
        self.arguments
            .values()
            .filter(move |a| &a.target_option == option && a.stance == stance)
    }

    pub fn set_status(&mut self, id: &ArgId, status: ArgumentStatus) -> Result<(), CoreError> {
        self.get_mut(id)?.status = status;
        Ok(())
    }

    /// Replaces content; stance, role and target stay fixed.
    pub fn set_content(&mut self, id: &ArgId, content: String) -> Result<(), CoreError> {
        if content.trim().is_empty() {
            return Err(CoreError::InvalidArgument(format!("content of `{id}` must be nonempty")));
        }
        self.get_mut(id)?.content = content;
        Ok(())
    }

    pub fn set_tau(&mut self, id: &ArgId, tau: f64, pinned: bool) -> Result<(), CoreError> {
        check_unit(tau, "tau")?;
        let arg = self.get_mut(id)?;
        arg.tau = quantize(tau);
        arg.tau_pinned = pinned;
        Ok(())
    }

    fn get_mut(&mut self, id: &ArgId) -> Result<&mut Argument, CoreError> {
        self.arguments
            .get_mut(id)
            .ok_or_else(|| CoreError::UnknownArgument(id.clone()))
    }

    /// Support and challenge counts per role. Every role is present, so the
    /// map always has twelve entries.
    pub fn participation_summary(&self) -> BTreeMap<Role, Participation> {
        let mut out: BTreeMap<Role, Participation> =
            Role::ALL.into_iter().map(|r| (r, Participation::default())).collect();
        for arg in self.arguments.values() {
            let entry = out.entry(arg.role).or_default();
            match arg.stance {
                Stance::Support => entry.support_count += 1,
                Stance::Challenge => entry.challenge_count += 1,
            }
        }
        out
    }

    /// Canonical graph file text.
    pub fn to_canonical(&self) -> String {
        canonical::to_canonical_file(self).expect("graph serializes")
    }

    /// SHA-256 of the canonical file text.
    pub fn content_hash(&self) -> String {
        canonical::sha256_hex(self.to_canonical().as_bytes())
    }

    pub fn from_json(text: &str) -> Result<Self, CoreError> {
        serde_json::from_str(text).map_err(|e| CoreError::Format(e.to_string()))
    }
}

fn check_unit(v: f64, name: &str) -> Result<(), CoreError> {
    if v.is_finite() && (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(CoreError::InvalidArgument(format!("{name} must be in [0,1], got {v}")))
    }
}

/// Acceptability degrees per argument plus option-level scores.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DegreeAssignment {
    pub degrees: BTreeMap<ArgId, f64>,
    pub option_scores: BTreeMap<OptionId, f64>,
    pub iterations_used: u64,
    pub residual: f64,
}

#[derive(Serialize)]
struct DegreesFileOut<'a> {
    format_version: u64,
    #[serde(flatten)]
    inner: &'a DegreeAssignment,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct DegreesFileIn {
    format_version: u64,
    degrees: BTreeMap<ArgId, f64>,
    option_scores: BTreeMap<OptionId, f64>,
    iterations_used: u64,
    residual: f64,
}

impl DegreeAssignment {
    /// Rounds every value to canonical precision, so the in-memory values
    /// equal what a reload of the degrees file yields.
    pub fn canonicalized(mut self) -> Self {
        self.degrees.values_mut().for_each(|v| *v = quantize(*v));
        self.option_scores.values_mut().for_each(|v| *v = quantize(*v));
        self.residual = quantize(self.residual);
        self
    }

    /// Canonical degrees file text.
    pub fn to_canonical(&self) -> String {
        canonical::to_canonical_file(&DegreesFileOut {
            format_version: GRAPH_FORMAT_VERSION,
            inner: self,
        })
        .expect("degrees serialize")
    }

    pub fn from_json(text: &str) -> Result<Self, CoreError> {
        let f: DegreesFileIn =
            serde_json::from_str(text).map_err(|e| CoreError::Format(e.to_string()))?;
        if f.format_version != GRAPH_FORMAT_VERSION {
            return Err(CoreError::UnsupportedVersion(f.format_version));
        }
        Ok(DegreeAssignment {
            degrees: f.degrees,
            option_scores: f.option_scores,
            iterations_used: f.iterations_used,
            residual: f.residual,
        })
    }

    pub fn degree(&self, id: &ArgId) -> Option<f64> {
        self.degrees.get(id).copied()
    }

    pub fn score(&self, id: &OptionId) -> Option<f64> {
        self.option_scores.get(id).copied()
    }
}
