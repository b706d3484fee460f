//! Thin blocking JSON-over-HTTP helper shared by the chat and embedding clients.

use std::time::Duration;

use serde::Serialize;

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) enum HttpFailure {
    Timeout,
    Unreachable(String),
}

pub(crate) fn agent(timeout: Duration) -> ureq::Agent {
    ureq::Agent::config_builder().timeout_global(Some(timeout)).http_status_as_error(false).build().into()
}

/// Returns `(status, body)` for any response the server produced.
pub(crate) fn post_json<B: Serialize>(
    agent: &ureq::Agent,
    url: &str,
    bearer: Option<&str>,
    body: &B,
) -> Result<(u16, String), HttpFailure> {
    let mut req = agent.post(url).header("Content-Type", "application/json");
    if let Some(token) = bearer {
        req = req.header("Authorization", &format!("Bearer {token}"));
    }
    let payload = serde_json::to_vec(body).map_err(|e| HttpFailure::Unreachable(e.to_string()))?;
    finish(req.send(&payload[..]))
}

pub(crate) fn get(agent: &ureq::Agent, url: &str) -> Result<(u16, String), HttpFailure> {
    finish(agent.get(url).call())
}

fn finish(result: Result<ureq::http::Response<ureq::Body>, ureq::Error>) -> Result<(u16, String), HttpFailure> {
    let mut resp = result.map_err(classify)?;
    let status = resp.status().as_u16();
    let body = resp.body_mut().read_to_string().map_err(classify)?;
    Ok((status, body))
}

fn classify(e: ureq::Error) -> HttpFailure {
    match e {
        ureq::Error::Timeout(_) => HttpFailure::Timeout,
        other => HttpFailure::Unreachable(other.to_string()),
    }
}
