//! Minimal blocking client for a running daemon.

use ureq::Agent;

#[derive(Debug)]
pub enum ClientError {
    /// The server could not be reached.
    Connect(String),
    /// The server answered with a non-success status.
    Status { status: u16, body: String },
}

impl std::fmt::Display for ClientError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ClientError::Connect(m) => write!(f, "cannot reach server: {m}"),
            ClientError::Status { status, body } => write!(f, "server answered {status}: {body}"),
        }
    }
}

fn agent() -> Agent {
    Agent::config_builder().http_status_as_error(false).build().into()
}

fn url(base: &str, path: &str) -> String {
    format!("{}{}", base.trim_end_matches('/'), path)
}

fn finish(resp: Result<ureq::http::Response<ureq::Body>, ureq::Error>) -> Result<String, ClientError> {
    let mut resp = resp.map_err(|e| ClientError::Connect(e.to_string()))?;
    let status = resp.status().as_u16();
    let body = resp
        .body_mut()
        .read_to_string()
        .map_err(|e| ClientError::Connect(e.to_string()))?;
    if (200..300).contains(&status) {
        Ok(body)
    } else {
        Err(ClientError::Status { status, body })
    }
}

pub fn post_json(base: &str, path: &str, body: &str) -> Result<String, ClientError> {
    finish(
        agent()
            .post(url(base, path))
            .header("Content-Type", "application/json")
            .send(body),
    )
}

pub fn get(base: &str, path: &str) -> Result<String, ClientError> {
    finish(agent().get(url(base, path)).call())
}
