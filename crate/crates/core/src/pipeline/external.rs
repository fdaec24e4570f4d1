use std::time::Duration;

use super::backend::{ArgumentBackend, BackendError, BackendRequest, BackendResponse};
use super::PipelineError;

/// Environment variable holding the endpoint URL.
pub const BACKEND_URL_ENV: &str = "CANOE_BACKEND_URL";
/// Environment variable holding an optional bearer token.
pub const BACKEND_TOKEN_ENV: &str = "CANOE_BACKEND_TOKEN";

const TIMEOUT: Duration = Duration::from_secs(30);

/// Posts each [`BackendRequest`] as JSON to a fixed URL and expects a
/// [`BackendResponse`] body. One attempt per call, 30 second timeout.
#[derive(Debug, Clone)]
pub struct ExternalBackend {
    url: String,
    token: Option<String>,
    client: reqwest::blocking::Client,
}

impl ExternalBackend {
    pub fn new(url: impl Into<String>, token: Option<String>) -> Result<Self, PipelineError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(TIMEOUT)
            .build()
            .map_err(|e| PipelineError::InvalidConfig(format!("external backend client: {e}")))?;
        Ok(ExternalBackend {
            url: url.into(),
            token,
            client,
        })
    }

    pub fn from_env() -> Result<Self, PipelineError> {
        let url = std::env::var(BACKEND_URL_ENV).map_err(|_| {
            PipelineError::InvalidConfig(format!("{BACKEND_URL_ENV} is not set"))
        })?;
        let token = std::env::var(BACKEND_TOKEN_ENV).ok().filter(|t| !t.is_empty());
        Self::new(url, token)
    }
}

impl ArgumentBackend for ExternalBackend {
    fn respond(&self, request: &BackendRequest) -> Result<BackendResponse, BackendError> {
        let mut call = self.client.post(&self.url).json(request);
        if let Some(token) = &self.token {
            call = call.bearer_auth(token);
        }
        let resp = call.send().map_err(|e| BackendError::Failure(e.to_string()))?;
        let status = resp.status();
        if !status.is_success() {
            return Err(BackendError::Failure(format!("HTTP {status}")));
        }
        let body = resp.text().map_err(|e| BackendError::Failure(e.to_string()))?;
        serde_json::from_str(&body).map_err(|e| BackendError::Malformed(e.to_string()))
    }
}
