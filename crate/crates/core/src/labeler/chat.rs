use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::LabelerError;
use crate::http::{self, HttpFailure};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: String,
    pub content: String,
}

impl ChatMessage {
    pub fn system(content: impl Into<String>) -> Self {
        ChatMessage { role: "system".into(), content: content.into() }
    }

    pub fn user(content: impl Into<String>) -> Self {
        ChatMessage { role: "user".into(), content: content.into() }
    }

    pub fn assistant(content: impl Into<String>) -> Self {
        ChatMessage { role: "assistant".into(), content: content.into() }
    }
}

/// Body of a chat-completion POST.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChatRequest {
    pub model: String,
    pub messages: Vec<ChatMessage>,
    pub temperature: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Usage {
    #[serde(default)]
    pub prompt_tokens: Option<u64>,
    #[serde(default)]
    pub completion_tokens: Option<u64>,
    #[serde(default)]
    pub total_tokens: Option<u64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ChatReply {
    pub content: String,
    pub usage: Option<Usage>,
}

/// Sends one chat-completion request.
pub trait ChatTransport: Send + Sync {
    fn complete(&self, request: &ChatRequest) -> Result<ChatReply, LabelerError>;
}

#[derive(Deserialize)]
struct CompletionBody {
    choices: Vec<Choice>,
    #[serde(default)]
    usage: Option<Usage>,
}

#[derive(Deserialize)]
struct Choice {
    message: ReplyMessage,
}

#[derive(Deserialize)]
struct ReplyMessage {
    #[serde(default)]
    content: Option<String>,
}

/// Bearer-authenticated chat-completion client.
pub struct HttpChatTransport {
    endpoint: String,
    api_key: String,
    agent: ureq::Agent,
}

impl HttpChatTransport {
    pub fn new(endpoint: &str, api_key: String, timeout: Duration) -> Self {
        HttpChatTransport { endpoint: endpoint.to_owned(), api_key, agent: http::agent(timeout) }
    }

    /// Reads the key from the environment variable `var`.
    pub fn from_env(endpoint: &str, var: &str, timeout: Duration) -> Result<Self, LabelerError> {
        let key = resolve_api_key(var)?;
        Ok(Self::new(endpoint, key, timeout))
    }
}

/// Fails with [`LabelerError::MissingApiKey`] if `var` is unset or blank.
pub fn resolve_api_key(var: &str) -> Result<String, LabelerError> {
    match std::env::var(var) {
        Ok(v) if !v.trim().is_empty() => Ok(v),
        _ => Err(LabelerError::MissingApiKey { var: var.to_owned() }),
    }
}

impl ChatTransport for HttpChatTransport {
    fn complete(&self, request: &ChatRequest) -> Result<ChatReply, LabelerError> {
        match http::post_json(&self.agent, &self.endpoint, Some(&self.api_key), request) {
            Err(HttpFailure::Timeout) => Err(LabelerError::Timeout),
            Err(HttpFailure::Unreachable(msg)) => Err(LabelerError::Unreachable(msg)),
            Ok((status @ (401 | 403), _)) => Err(LabelerError::Auth { status }),
            Ok((200, body)) => {
                let parsed: CompletionBody =
                    serde_json::from_str(&body).map_err(|e| LabelerError::BadResponse(e.to_string()))?;
                let choice = parsed
                    .choices
                    .into_iter()
                    .next()
                    .ok_or_else(|| LabelerError::BadResponse("response has no choices".into()))?;
                Ok(ChatReply { content: choice.message.content.unwrap_or_default(), usage: parsed.usage })
            }
            Ok((status, body)) => Err(LabelerError::Status { status, body }),
        }
    }
}
