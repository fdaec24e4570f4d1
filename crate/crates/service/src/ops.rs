//! File-level operations shared by the HTTP handlers and the CLI. Both
//! paths go through these functions, so the same inputs leave the same
//! bytes on disk.

use std::fs;
use std::path::Path;

use canoe::argcore::PatientCase;
use canoe::contestation::{
    commit_session, load_session, run_session, save_session, timestamp, Command, ContestationError,
    Session, SessionConfigs, SESSION_FILE,
};
use canoe::pipeline::{load_corpus, RuleBook};
use chrono::{DateTime, Utc};

use crate::error::ServiceError;

/// Reads and validates a case file.
pub fn read_case(path: &Path) -> Result<PatientCase, ServiceError> {
    let text = fs::read_to_string(path).map_err(|e| io(path, e))?;
    Ok(PatientCase::from_json(&text).map_err(ContestationError::from)?)
}

/// Reads a TOML session config file.
pub fn read_configs(path: &Path) -> Result<SessionConfigs, ServiceError> {
    let text = fs::read_to_string(path).map_err(|e| io(path, e))?;
    Ok(SessionConfigs::from_toml(&text)?)
}

/// Runs intake and debate for `case` and writes the new session to `dir`.
/// Refuses to overwrite an existing session.
pub fn run_to_dir(
    case: &PatientCase,
    corpus_dir: &Path,
    rules: &RuleBook,
    configs: SessionConfigs,
    dir: &Path,
) -> Result<Session, ServiceError> {
    if dir.join(SESSION_FILE).exists() {
        return Err(ServiceError::Conflict(format!(
            "{} already holds a session",
            dir.display()
        )));
    }
    let corpus = load_corpus(corpus_dir).map_err(ContestationError::from)?;
    let backend = configs
        .debate
        .make_backend()
        .map_err(ContestationError::from)?;
    let session = run_session(case, &corpus, rules, configs, backend.as_ref())?;
    save_session(dir, &session)?;
    Ok(session)
}

/// Loads the session in `dir`, runs one command stamped with `at` and
/// persists it.
pub fn execute_in(dir: &Path, cmd: Command, at: DateTime<Utc>) -> Result<Session, ServiceError> {
    let mut session = load_session(dir)?;
    session.execute(cmd, &timestamp(at))?;
    commit_session(dir, &session)?;
    Ok(session)
}

fn io(path: &Path, e: std::io::Error) -> ServiceError {
    if e.kind() == std::io::ErrorKind::NotFound {
        ServiceError::NotFound(path.display().to_string())
    } else {
        ServiceError::Session(ContestationError::Io(format!("{}: {e}", path.display())))
    }
}
