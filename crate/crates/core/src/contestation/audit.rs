//! Hash-chained audit log.
//!
//! Every entry records the graph hash before and after its command and an
//! `entry_hash` over the previous entry's hash and its own canonical text,
//! timestamp included. The log file holds one canonical entry per line.

use serde::{Deserialize, Serialize};

use super::command::{Command, WireCommand};
use super::ContestationError;
use crate::argcore::{Argument, ArgumentGraph, Relation, Role};
use crate::canonical::{sha256_hex, to_canonical_string};

/// The `entry_hash` the first entry chains from.
pub const GENESIS_HASH: &str = "0000000000000000000000000000000000000000000000000000000000000000";

/// What a rejection removed from the graph.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tombstone {
    pub argument: Argument,
    pub relations: Vec<Relation>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AuditEntry {
    /// 1-based position in the log.
    pub seq: u64,
    /// RFC 3339, UTC, whole seconds.
    pub timestamp: String,
    pub action: Command,
    pub pre_hash: String,
    pub post_hash: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tombstone: Option<Tombstone>,
    pub entry_hash: String,
}

#[derive(Serialize)]
struct Unsealed<'a> {
    seq: u64,
    timestamp: &'a str,
    action: &'a Command,
    pre_hash: &'a str,
    post_hash: &'a str,
    #[serde(skip_serializing_if = "Option::is_none")]
    tombstone: Option<&'a Tombstone>,
}

impl AuditEntry {
    /// Builds an entry and seals it onto `prev_hash`.
    pub fn seal(
        prev_hash: &str,
        seq: u64,
        timestamp: String,
        action: Command,
        pre_hash: String,
        post_hash: String,
        tombstone: Option<Tombstone>,
    ) -> Self {
        let mut e = AuditEntry {
            seq,
            timestamp,
            action,
            pre_hash,
            post_hash,
            tombstone,
            entry_hash: String::new(),
        };
        e.entry_hash = e.expected_hash(prev_hash);
        e
    }

    /// The `entry_hash` this entry should carry when chained onto `prev_hash`.
    pub fn expected_hash(&self, prev_hash: &str) -> String {
        let body = to_canonical_string(&Unsealed {
            seq: self.seq,
            timestamp: &self.timestamp,
            action: &self.action,
            pre_hash: &self.pre_hash,
            post_hash: &self.post_hash,
            tombstone: self.tombstone.as_ref(),
        })
        .expect("audit entry serializes");
        sha256_hex(format!("{prev_hash}{body}").as_bytes())
    }

    /// The log line for this entry, without the newline.
    pub fn to_line(&self) -> String {
        to_canonical_string(self).expect("audit entry serializes")
    }
}

/// Serializes a whole log.
pub fn audit_to_jsonl(entries: &[AuditEntry]) -> String {
    entries.iter().map(|e| e.to_line() + "\n").collect()
}

fn broken(seq: u64, reason: impl Into<String>) -> ContestationError {
    ContestationError::BrokenChain {
        seq,
        reason: reason.into(),
    }
}

/// Parses a log and checks its chain: every line must be the canonical
/// form of its entry, sequence numbers must count up from 1, hashes must
/// link, and `pre_hash` of the first entry must equal `initial_hash`.
pub fn parse_audit(text: &str, initial_hash: &str) -> Result<Vec<AuditEntry>, ContestationError> {
    let mut entries: Vec<AuditEntry> = Vec::new();
    if text.is_empty() {
        return Ok(entries);
    }
    let body = match text.strip_suffix('\n') {
        Some(b) => b,
        None => {
            let seq = text.split('\n').count() as u64;
            return Err(broken(seq, "log does not end with a newline"));
        }
    };
    for (i, line) in body.split('\n').enumerate() {
        let seq = i as u64 + 1;
        let entry: AuditEntry =
            serde_json::from_str(line).map_err(|e| broken(seq, format!("unreadable entry: {e}")))?;
        if entry.to_line() != line {
            return Err(broken(seq, "entry is not in canonical form"));
        }
        if entry.seq != seq {
            return Err(broken(seq, format!("sequence number {} out of place", entry.seq)));
        }
        let (prev_hash, prev_post) = match entries.last() {
            Some(p) => (p.entry_hash.as_str(), p.post_hash.as_str()),
            None => (GENESIS_HASH, initial_hash),
        };
        if entry.pre_hash != prev_post {
            return Err(broken(seq, "pre_hash does not match the preceding graph"));
        }
        if entry.entry_hash != entry.expected_hash(prev_hash) {
            return Err(broken(seq, "entry_hash mismatch"));
        }
        entries.push(entry);
    }
    Ok(entries)
}

fn csv_text(mut w: csv::Writer<Vec<u8>>) -> String {
    w.flush().expect("in-memory csv");
    String::from_utf8(w.into_inner().expect("in-memory csv")).expect("csv is utf-8")
}

/// The log as CSV, one row per entry. `payload` holds the canonical JSON of
/// the command payload, empty when there is none.
pub fn audit_to_csv(entries: &[AuditEntry]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "seq", "timestamp", "actor", "kind", "target", "payload", "pre_hash", "post_hash", "entry_hash",
    ])
    .expect("in-memory csv");
    for e in entries {
        let wire = WireCommand::from(e.action.clone());
        let payload = wire
            .payload
            .as_ref()
            .map(|p| to_canonical_string(p).expect("payload serializes"))
            .unwrap_or_default();
        w.write_record([
            e.seq.to_string().as_str(),
            &e.timestamp,
            wire.actor.as_str(),
            &wire.kind,
            wire.target.as_ref().map(|t| t.as_str()).unwrap_or(""),
            &payload,
            &e.pre_hash,
            &e.post_hash,
            &e.entry_hash,
        ])
        .expect("in-memory csv");
    }
    csv_text(w)
}

/// Support and challenge counts per role as CSV.
pub fn participation_to_csv(graph: &ArgumentGraph) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["role", "support_count", "challenge_count"]).expect("in-memory csv");
    for (role, p) in graph.participation_summary() {
        let role: Role = role;
        w.write_record([
            role.as_str(),
            &p.support_count.to_string(),
            &p.challenge_count.to_string(),
        ])
        .expect("in-memory csv");
    }
    csv_text(w)
}
