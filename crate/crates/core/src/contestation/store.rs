//! Session directories.
//!
//! ```text
//! session.json        case, evidence, configs, team, phase
//! initial_graph.json  the debated graph
//! graph.json          the current graph
//! degrees.json        degrees of graph.json (absent while stale)
//! audit.jsonl         one entry per line
//! plan.json           the plan (once planned)
//! ```
//!
//! The audit log is the source of truth: loading replays it over the
//! initial graph and rewrites any derived file that disagrees, which is how
//! a session recovers from a crash between the audit append and the other
//! writes.

use std::fs::{self, OpenOptions};
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::audit::parse_audit;
use super::session::{Session, SessionBase, SessionConfigs, TeamInfo};
use super::{ContestationError, Phase};
use crate::argcore::{ArgumentGraph, EvidenceDoc, PatientCase};
use crate::canonical::to_canonical_file;
use crate::pipeline::{run_pipeline, ArgumentBackend, RuleBook};

pub const SESSION_FORMAT_VERSION: u64 = 1;
pub const SESSION_FILE: &str = "session.json";
pub const INITIAL_GRAPH_FILE: &str = "initial_graph.json";
pub const GRAPH_FILE: &str = "graph.json";
pub const DEGREES_FILE: &str = "degrees.json";
pub const AUDIT_FILE: &str = "audit.jsonl";
pub const PLAN_FILE: &str = "plan.json";

const ALL_FILES: [&str; 6] = [SESSION_FILE, INITIAL_GRAPH_FILE, GRAPH_FILE, DEGREES_FILE, AUDIT_FILE, PLAN_FILE];

#[derive(Serialize)]
struct SessionFileOut<'a> {
    format_version: u64,
    phase: Phase,
    #[serde(flatten)]
    base: &'a SessionBase,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SessionFileIn {
    format_version: u64,
    #[allow(dead_code)]
    phase: Phase,
    session_id: String,
    case: PatientCase,
    evidence: Vec<EvidenceDoc>,
    configs: SessionConfigs,
    team: TeamInfo,
}

fn io_err(path: &Path, e: std::io::Error) -> ContestationError {
    ContestationError::Io(format!("{}: {e}", path.display()))
}

impl Session {
    /// Every file of the session directory with its exact contents, in
    /// directory listing order. Absent files are `None`.
    pub fn files(&self) -> Vec<(&'static str, Option<String>)> {
        let session = to_canonical_file(&SessionFileOut {
            format_version: SESSION_FORMAT_VERSION,
            phase: self.phase(),
            base: self.base(),
        })
        .expect("session serializes");
        vec![
            (AUDIT_FILE, Some(super::audit_to_jsonl(self.audit()))),
            (DEGREES_FILE, self.degrees().map(|d| d.to_canonical())),
            (GRAPH_FILE, Some(self.graph().to_canonical())),
            (INITIAL_GRAPH_FILE, Some(self.initial_graph().to_canonical())),
            (PLAN_FILE, self.plan().map(|p| p.to_canonical())),
            (SESSION_FILE, Some(session)),
        ]
    }
}

/// `s-<case_id>`. Case ids must be usable as directory names.
pub fn session_id_for(case_id: &str) -> Result<String, ContestationError> {
    let ok = !case_id.is_empty()
        && !case_id.starts_with('.')
        && case_id.chars().all(|c| c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.'));
    if ok {
        Ok(format!("s-{case_id}"))
    } else {
        Err(ContestationError::InvalidPayload(format!(
            "case_id `{case_id}` may only use letters, digits, `-`, `_` and `.`"
        )))
    }
}

/// Phases 1 and 2 followed by the initial solve: the session is ready for
/// review.
pub fn run_session(
    case: &PatientCase,
    corpus: &[EvidenceDoc],
    rules: &RuleBook,
    configs: SessionConfigs,
    backend: &dyn ArgumentBackend,
) -> Result<Session, ContestationError> {
    configs.validate()?;
    let session_id = session_id_for(&case.case_id)?;
    let run = run_pipeline(case, corpus, rules, &configs.debate, &configs.scorer, backend)?;
    let base = SessionBase {
        session_id,
        case: case.clone(),
        evidence: run.evidence,
        configs,
        team: TeamInfo {
            complexity: run.complexity,
            roster: run.roster,
        },
    };
    Session::open_solved(base, run.graph)
}

fn write_atomic(dir: &Path, name: &str, contents: &str) -> Result<(), ContestationError> {
    let path = dir.join(name);
    let tmp = dir.join(format!(".{name}.tmp"));
    let mut f = fs::File::create(&tmp).map_err(|e| io_err(&tmp, e))?;
    f.write_all(contents.as_bytes()).map_err(|e| io_err(&tmp, e))?;
    f.sync_all().map_err(|e| io_err(&tmp, e))?;
    fs::rename(&tmp, &path).map_err(|e| io_err(&path, e))
}

fn remove_if_present(path: &Path) -> Result<(), ContestationError> {
    match fs::remove_file(path) {
        Ok(()) => Ok(()),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(()),
        Err(e) => Err(io_err(path, e)),
    }
}

fn write_derived(dir: &Path, session: &Session) -> Result<(), ContestationError> {
    for (name, contents) in session.files() {
        if name == AUDIT_FILE {
            continue;
        }
        match contents {
            Some(text) => write_atomic(dir, name, &text)?,
            None => remove_if_present(&dir.join(name))?,
        }
    }
    Ok(())
}

/// Writes a whole session directory, creating it if needed.
pub fn save_session(dir: &Path, session: &Session) -> Result<(), ContestationError> {
    fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    write_atomic(dir, AUDIT_FILE, &super::audit_to_jsonl(session.audit()))?;
    write_derived(dir, session)
}

/// Persists the newest audit entry of `session`: the entry is appended to
/// the log and synced first, then the other files are replaced.
pub fn commit_session(dir: &Path, session: &Session) -> Result<(), ContestationError> {
    if let Some(entry) = session.audit().last() {
        let path = dir.join(AUDIT_FILE);
        let mut f = OpenOptions::new()
            .append(true)
            .open(&path)
            .map_err(|e| io_err(&path, e))?;
        f.write_all(format!("{}\n", entry.to_line()).as_bytes())
            .map_err(|e| io_err(&path, e))?;
        f.sync_all().map_err(|e| io_err(&path, e))?;
    }
    write_derived(dir, session)
}

fn read(dir: &Path, name: &str) -> Result<String, ContestationError> {
    let path = dir.join(name);
    fs::read_to_string(&path).map_err(|e| {
        if e.kind() == std::io::ErrorKind::NotFound && name == SESSION_FILE {
            ContestationError::NotFound(dir.display().to_string())
        } else {
            io_err(&path, e)
        }
    })
}

fn rebuild(dir: &Path) -> Result<Session, ContestationError> {
    let file: SessionFileIn = serde_json::from_str(&read(dir, SESSION_FILE)?)
        .map_err(|e| ContestationError::Format(format!("{SESSION_FILE}: {e}")))?;
    if file.format_version != SESSION_FORMAT_VERSION {
        return Err(ContestationError::Format(format!(
            "{SESSION_FILE}: unsupported format_version {}",
            file.format_version
        )));
    }
    let initial = ArgumentGraph::from_json(&read(dir, INITIAL_GRAPH_FILE)?)?;
    let audit = parse_audit(&read(dir, AUDIT_FILE)?, &initial.content_hash())?;
    let base = SessionBase {
        session_id: file.session_id,
        case: file.case,
        evidence: file.evidence,
        configs: file.configs,
        team: file.team,
    };
    Session::replay(base, initial, &audit)
}

/// Reads every session file as stored, `None` for missing ones.
pub fn read_session_files(dir: &Path) -> Result<Vec<(&'static str, Option<String>)>, ContestationError> {
    let mut out = Vec::new();
    for name in ALL_FILES {
        let path = dir.join(name);
        let text = match fs::read_to_string(&path) {
            Ok(t) => Some(t),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => None,
            Err(e) => return Err(io_err(&path, e)),
        };
        out.push((name, text));
    }
    out.sort_by_key(|(n, _)| *n);
    Ok(out)
}

fn differing(dir: &Path, session: &Session) -> Result<Vec<&'static str>, ContestationError> {
    let stored = read_session_files(dir)?;
    Ok(session
        .files()
        .into_iter()
        .zip(stored)
        .filter(|((_, want), (_, have))| want != have)
        .map(|((name, _), _)| name)
        .collect())
}

/// Loads a session by replaying its audit log, repairing derived files
/// that disagree with the replay.
pub fn load_session(dir: &Path) -> Result<Session, ContestationError> {
    let session = rebuild(dir)?;
    if !differing(dir, &session)?.is_empty() {
        write_derived(dir, &session)?;
    }
    Ok(session)
}

/// Replays the audit log and requires every stored file to match the
/// replayed session byte for byte.
pub fn verify_session_dir(dir: &Path) -> Result<Session, ContestationError> {
    let session = rebuild(dir)?;
    let diff = differing(dir, &session)?;
    if diff.is_empty() {
        Ok(session)
    } else {
        Err(ContestationError::ReplayMismatch(diff.join(", ")))
    }
}
