//! HTTP API over a plain-file data directory:
//!
//! ```text
//! <data>/cases/<case_id>.json   case files
//! <data>/corpus/                evidence corpus (manifest.json + documents)
//! <data>/rules/                 optional rule table overrides
//! <data>/sessions/<session_id>/ one session directory per run
//! ```
//!
//! Every route lives under `/v1`. Mutations on one session are serialized
//! by a per-session lock; different sessions proceed concurrently.

mod error;
pub mod ops;

use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};

use axum::body::Bytes;
use axum::extract::{Path as UrlPath, State};
use axum::http::{header, HeaderMap, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::Router;
use canoe::argcore::{PatientCase, Role};
use canoe::contestation::{
    audit_to_csv, audit_to_jsonl, load_session, participation_to_csv, session_id_for, Command,
    ContestationError, EditAction, Session, SessionConfigs, GENESIS_HASH,
};
use canoe::pipeline::RuleBook;
use canoe::plangen::Calendar;
use chrono::{DateTime, Utc};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;

pub use error::{ApiError, ErrorCode, ServiceError};

/// Data directory, default `data`.
pub const DATA_DIR_ENV: &str = "CANOE_DATA_DIR";
/// Listen port, default 8080.
pub const PORT_ENV: &str = "CANOE_PORT";
pub const DEFAULT_PORT: u16 = 8080;

pub type Clock = Arc<dyn Fn() -> DateTime<Utc> + Send + Sync>;

pub struct AppState {
    data: PathBuf,
    rules: RuleBook,
    clock: Clock,
    locks: Mutex<HashMap<String, Arc<tokio::sync::Mutex<()>>>>,
}

impl AppState {
    /// State over `data`, with rule overrides from `<data>/rules` if that
    /// directory exists and the clock from [`canoe::clock::now`].
    pub fn new(data: impl Into<PathBuf>) -> Result<Self, ServiceError> {
        let data = data.into();
        let rules_dir = data.join("rules");
        let rules = if rules_dir.is_dir() {
            RuleBook::load(&rules_dir).map_err(ContestationError::from)?
        } else {
            RuleBook::builtin()
        };
        Ok(AppState {
            data,
            rules,
            clock: Arc::new(canoe::clock::now),
            locks: Mutex::new(HashMap::new()),
        })
    }

    pub fn with_clock(mut self, clock: Clock) -> Self {
        self.clock = clock;
        self
    }

    pub fn data_dir(&self) -> &Path {
        &self.data
    }

    pub fn session_dir(&self, session_id: &str) -> PathBuf {
        self.data.join("sessions").join(session_id)
    }

    fn case_file(&self, case_id: &str) -> PathBuf {
        self.data.join("cases").join(format!("{case_id}.json"))
    }

    fn lock(&self, key: &str) -> Arc<tokio::sync::Mutex<()>> {
        let mut locks = self.locks.lock().expect("lock table");
        locks.entry(key.to_string()).or_default().clone()
    }
}

type Shared = Arc<AppState>;

/// The `/v1` router.
pub fn router(state: Shared) -> Router {
    Router::new()
        .route("/v1/cases", post(create_case))
        .route("/v1/cases/{id}", get(get_case))
        .route("/v1/cases/{id}/run", post(run_case))
        .route("/v1/sessions/{id}", get(get_session))
        .route("/v1/sessions/{id}/graph", get(get_graph))
        .route("/v1/sessions/{id}/participation", get(get_participation))
        .route("/v1/sessions/{id}/edits", post(post_edit))
        .route("/v1/sessions/{id}/revalidate", post(post_revalidate))
        .route("/v1/sessions/{id}/approve", post(post_approve))
        .route("/v1/sessions/{id}/audit", get(get_audit))
        .route("/v1/sessions/{id}/plan", post(post_plan).get(get_plan))
        .with_state(state)
}

/// Serves the API on `listener` until the process ends.
pub async fn serve(listener: tokio::net::TcpListener, state: AppState) -> std::io::Result<()> {
    axum::serve(listener, router(Arc::new(state))).await
}

/// Data directory and port from the environment.
pub fn config_from_env() -> Result<(PathBuf, u16), String> {
    let data = std::env::var(DATA_DIR_ENV).unwrap_or_else(|_| "data".into());
    let port = match std::env::var(PORT_ENV) {
        Ok(p) => p.parse().map_err(|e| format!("{PORT_ENV}=`{p}`: {e}"))?,
        Err(_) => DEFAULT_PORT,
    };
    Ok((PathBuf::from(data), port))
}

fn invalid(msg: impl Into<String>) -> ServiceError {
    ContestationError::InvalidPayload(msg.into()).into()
}

fn parse_body<T: DeserializeOwned>(body: &Bytes) -> Result<T, ServiceError> {
    serde_json::from_slice(body).map_err(|e| invalid(format!("request body: {e}")))
}

fn require_human(actor: Role) -> Result<(), ServiceError> {
    if actor.is_human() {
        Ok(())
    } else {
        Err(invalid(format!("actor must be a human role, got {actor}")))
    }
}

/// Session ids as produced by [`session_id_for`]; anything else cannot
/// exist.
fn checked_session_id(id: &str) -> Result<&str, ServiceError> {
    match id.strip_prefix("s-").map(session_id_for) {
        Some(Ok(s)) if s == id => Ok(id),
        _ => Err(ServiceError::NotFound(format!("session {id}"))),
    }
}

fn json_text(status: StatusCode, text: String) -> Response {
    (status, [(header::CONTENT_TYPE, "application/json")], text).into_response()
}

fn wants_csv(headers: &HeaderMap) -> bool {
    headers
        .get(header::ACCEPT)
        .and_then(|v| v.to_str().ok())
        .is_some_and(|v| v.contains("text/csv"))
}

/// Runs `f` on the blocking pool while holding the lock for `key`.
async fn locked<T, F>(state: &Shared, key: &str, f: F) -> Result<T, ServiceError>
where
    T: Send + 'static,
    F: FnOnce(&AppState) -> Result<T, ServiceError> + Send + 'static,
{
    let lock = state.lock(key);
    let _guard = lock.lock().await;
    let state = state.clone();
    tokio::task::spawn_blocking(move || f(&state))
        .await
        .map_err(|e| ServiceError::Session(ContestationError::Io(format!("worker: {e}"))))?
}

async fn with_session<T, F>(state: &Shared, id: &str, f: F) -> Result<T, ServiceError>
where
    T: Send + 'static,
    F: FnOnce(&AppState, &Path) -> Result<T, ServiceError> + Send + 'static,
{
    let id = checked_session_id(id)?.to_string();
    locked(state, &id.clone(), move |st| {
        let dir = st.session_dir(&id);
        if !dir.is_dir() {
            return Err(ServiceError::NotFound(format!("session {id}")));
        }
        f(st, &dir)
    })
    .await
}

async fn mutate(state: &Shared, id: &str, cmd: Command) -> Result<Session, ServiceError> {
    let at = (state.clock)();
    with_session(state, id, move |_, dir| ops::execute_in(dir, cmd, at)).await
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct CreateCase {
    actor: Role,
    case: Value,
}

async fn create_case(State(state): State<Shared>, body: Bytes) -> Result<Response, ServiceError> {
    let req: CreateCase = parse_body(&body)?;
    require_human(req.actor)?;
    let case = PatientCase::from_json(&req.case.to_string()).map_err(ContestationError::from)?;
    session_id_for(&case.case_id)?;
    let text = case.to_json();
    let key = format!("case:{}", case.case_id);
    locked(&state, &key, move |st| {
        let path = st.case_file(&case.case_id);
        match fs::read_to_string(&path) {
            Ok(existing) if existing == text => Ok(json_text(StatusCode::OK, text)),
            Ok(_) => Err(ServiceError::Conflict(format!(
                "case {} exists with other content",
                case.case_id
            ))),
            Err(_) => {
                let dir = path.parent().expect("cases dir");
                fs::create_dir_all(dir).map_err(|e| io_error(dir, e))?;
                fs::write(&path, &text).map_err(|e| io_error(&path, e))?;
                Ok(json_text(StatusCode::CREATED, text))
            }
        }
    })
    .await
}

fn io_error(path: &Path, e: std::io::Error) -> ServiceError {
    ContestationError::Io(format!("{}: {e}", path.display())).into()
}

fn read_case(st: &AppState, id: &str) -> Result<PatientCase, ServiceError> {
    session_id_for(id).map_err(|_| ServiceError::NotFound(format!("case {id}")))?;
    let path = st.case_file(id);
    if !path.is_file() {
        return Err(ServiceError::NotFound(format!("case {id}")));
    }
    ops::read_case(&path)
}

async fn get_case(
    State(state): State<Shared>,
    UrlPath(id): UrlPath<String>,
) -> Result<Response, ServiceError> {
    let key = format!("case:{id}");
    locked(&state, &key, move |st| {
        Ok(json_text(StatusCode::OK, read_case(st, &id)?.to_json()))
    })
    .await
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RunRequest {
    actor: Role,
    #[serde(default)]
    configs: Option<SessionConfigs>,
}

async fn run_case(
    State(state): State<Shared>,
    UrlPath(id): UrlPath<String>,
    body: Bytes,
) -> Result<Response, ServiceError> {
    let req: RunRequest = parse_body(&body)?;
    require_human(req.actor)?;
    let sid = session_id_for(&id).map_err(|_| ServiceError::NotFound(format!("case {id}")))?;
    locked(&state, &sid.clone(), move |st| {
        let case = read_case(st, &id)?;
        let dir = st.session_dir(&sid);
        if dir.exists() {
            return Err(ServiceError::Conflict(format!(
                "session {sid} already exists"
            )));
        }
        // Built beside its final place and renamed in, so a crash leaves
        // either no session or a complete one.
        let tmp = st.data.join("sessions").join(format!(".{sid}.tmp"));
        if tmp.exists() {
            fs::remove_dir_all(&tmp).map_err(|e| io_error(&tmp, e))?;
        }
        let session = ops::run_to_dir(
            &case,
            &st.data.join("corpus"),
            &st.rules,
            req.configs.unwrap_or_default(),
            &tmp,
        )?;
        fs::rename(&tmp, &dir).map_err(|e| io_error(&dir, e))?;
        Ok(json_text(StatusCode::CREATED, session_view(&session)))
    })
    .await
}

#[derive(Serialize)]
struct SessionView<'a> {
    session_id: &'a str,
    case_id: &'a str,
    phase: canoe::contestation::Phase,
    team: &'a canoe::contestation::TeamInfo,
    option_scores: Option<&'a std::collections::BTreeMap<canoe::argcore::OptionId, f64>>,
    pending: Vec<canoe::argcore::ArgId>,
    audit_length: usize,
    audit_head: &'a str,
    has_plan: bool,
}

fn session_view(s: &Session) -> String {
    let view = SessionView {
        session_id: s.session_id(),
        case_id: &s.case().case_id,
        phase: s.phase(),
        team: &s.base().team,
        option_scores: s.degrees().map(|d| &d.option_scores),
        pending: s.pending(),
        audit_length: s.audit().len(),
        audit_head: s
            .audit()
            .last()
            .map_or(GENESIS_HASH, |e| e.entry_hash.as_str()),
        has_plan: s.plan().is_some(),
    };
    canoe::canonical::to_canonical_string(&view).expect("view serializes")
}

async fn get_session(
    State(state): State<Shared>,
    UrlPath(id): UrlPath<String>,
) -> Result<Response, ServiceError> {
    with_session(&state, &id, |_, dir| {
        Ok(json_text(StatusCode::OK, session_view(&load_session(dir)?)))
    })
    .await
}

async fn get_graph(
    State(state): State<Shared>,
    UrlPath(id): UrlPath<String>,
) -> Result<Response, ServiceError> {
    with_session(&state, &id, |_, dir| {
        let s = load_session(dir)?;
        let degrees = s.degrees().map_or("null".to_string(), |d| {
            d.to_canonical().trim_end().to_string()
        });
        let graph = s.graph().to_canonical();
        Ok(json_text(
            StatusCode::OK,
            format!("{{\"degrees\":{degrees},\"graph\":{}}}", graph.trim_end()),
        ))
    })
    .await
}

async fn get_participation(
    State(state): State<Shared>,
    UrlPath(id): UrlPath<String>,
    headers: HeaderMap,
) -> Result<Response, ServiceError> {
    let csv = wants_csv(&headers);
    with_session(&state, &id, move |_, dir| {
        let s = load_session(dir)?;
        if csv {
            Ok((
                [(header::CONTENT_TYPE, "text/csv")],
                participation_to_csv(s.graph()),
            )
                .into_response())
        } else {
            let summary = s.graph().participation_summary();
            Ok(json_text(
                StatusCode::OK,
                canoe::canonical::to_canonical_string(&summary).expect("summary serializes"),
            ))
        }
    })
    .await
}

fn last_entry(s: &Session) -> String {
    s.audit().last().expect("command recorded").to_line()
}

async fn post_edit(
    State(state): State<Shared>,
    UrlPath(id): UrlPath<String>,
    body: Bytes,
) -> Result<Response, ServiceError> {
    let text = std::str::from_utf8(&body).map_err(|e| invalid(format!("request body: {e}")))?;
    let action = EditAction::from_json(text)?;
    let s = mutate(&state, &id, Command::Edit(action)).await?;
    Ok(json_text(StatusCode::OK, last_entry(&s)))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ActorRequest {
    actor: Role,
}

async fn post_revalidate(
    State(state): State<Shared>,
    UrlPath(id): UrlPath<String>,
    body: Bytes,
) -> Result<Response, ServiceError> {
    let req: ActorRequest = parse_body(&body)?;
    let s = mutate(&state, &id, Command::Revalidate { actor: req.actor }).await?;
    let degrees = s.degrees().expect("revalidated").to_canonical();
    Ok(json_text(StatusCode::OK, degrees))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ApproveRequest {
    actor: Role,
    #[serde(default)]
    force: bool,
}

async fn post_approve(
    State(state): State<Shared>,
    UrlPath(id): UrlPath<String>,
    body: Bytes,
) -> Result<Response, ServiceError> {
    let req: ApproveRequest = parse_body(&body)?;
    let cmd = Command::Approve {
        actor: req.actor,
        force: req.force,
        bulk_accepted: Vec::new(),
    };
    let s = mutate(&state, &id, cmd).await?;
    Ok(json_text(StatusCode::OK, last_entry(&s)))
}

async fn get_audit(
    State(state): State<Shared>,
    UrlPath(id): UrlPath<String>,
    headers: HeaderMap,
) -> Result<Response, ServiceError> {
    let csv = wants_csv(&headers);
    with_session(&state, &id, move |_, dir| {
        let s = load_session(dir)?;
        Ok(if csv {
            (
                [(header::CONTENT_TYPE, "text/csv")],
                audit_to_csv(s.audit()),
            )
                .into_response()
        } else {
            (
                [(header::CONTENT_TYPE, "application/x-ndjson")],
                audit_to_jsonl(s.audit()),
            )
                .into_response()
        })
    })
    .await
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PlanRequest {
    actor: Role,
    #[serde(default)]
    calendar: Option<Value>,
}

async fn post_plan(
    State(state): State<Shared>,
    UrlPath(id): UrlPath<String>,
    body: Bytes,
) -> Result<Response, ServiceError> {
    let req: PlanRequest = parse_body(&body)?;
    let calendar = match req.calendar {
        Some(v) => Some(Calendar::from_json(&v.to_string()).map_err(ContestationError::from)?),
        None => None,
    };
    let cmd = Command::Plan {
        actor: req.actor,
        calendar,
    };
    let s = mutate(&state, &id, cmd).await?;
    Ok(json_text(
        StatusCode::OK,
        s.plan().expect("planned").to_canonical(),
    ))
}

async fn get_plan(
    State(state): State<Shared>,
    UrlPath(id): UrlPath<String>,
) -> Result<Response, ServiceError> {
    let sid = id.clone();
    with_session(&state, &id, move |_, dir| {
        let s = load_session(dir)?;
        let plan = s
            .plan()
            .ok_or_else(|| ServiceError::NotFound(format!("plan for session {sid}")))?;
        Ok(json_text(StatusCode::OK, plan.to_canonical()))
    })
    .await
}
