//! Chat-completions HTTP backend.
//!
//! Speaks the widely deployed wire protocol: a JSON POST of `model`,
//! `messages`, `temperature`, `top_p`, and `max_tokens`; the assistant text
//! is read from the first choice's message content. The API key comes from
//! an environment variable named in the backend spec and is sent as a
//! bearer token.

use std::time::Duration;

use serde::Deserialize;
use serde_json::json;

use super::{ChatBackend, ChatMessage, GatewayError, GenerationParams};

pub struct HttpChatBackend {
    endpoint: String,
    model: String,
    api_key: Option<String>,
    client: reqwest::blocking::Client,
}

impl HttpChatBackend {
    pub fn new(
        endpoint: String,
        model: String,
        credential_env: Option<&str>,
        timeout: Duration,
    ) -> Result<HttpChatBackend, GatewayError> {
        let api_key = match credential_env {
            Some(var) => Some(std::env::var(var).map_err(|_| {
                GatewayError::Configuration(format!(
                    "credential environment variable {var} is not set"
                ))
            })?),
            None => None,
        };
        let client = reqwest::blocking::Client::builder()
            .timeout(timeout)
            .build()
            .map_err(|e| GatewayError::Configuration(e.to_string()))?;
        Ok(HttpChatBackend { endpoint, model, api_key, client })
    }
}

#[derive(Deserialize)]
struct Completion {
    choices: Vec<Choice>,
}

#[derive(Deserialize)]
struct Choice {
    message: ChoiceMessage,
}

#[derive(Deserialize)]
struct ChoiceMessage {
    content: String,
}

impl ChatBackend for HttpChatBackend {
    fn complete_once(
        &self,
        messages: &[ChatMessage],
        params: &GenerationParams,
    ) -> Result<String, GatewayError> {
        let body = json!({
            "model": self.model,
            "messages": messages,
            "temperature": params.temperature,
            "top_p": params.top_p,
            "max_tokens": params.max_new_tokens,
        });
        let mut request = self.client.post(&self.endpoint).json(&body);
        if let Some(key) = &self.api_key {
            request = request.bearer_auth(key);
        }
        let response = request.send().map_err(|e| GatewayError::Transport(e.to_string()))?;
        let status = response.status();
        let text = response.text().map_err(|e| GatewayError::Transport(e.to_string()))?;
        if !status.is_success() {
            return Err(GatewayError::Status { status: status.as_u16(), body: text });
        }
        let completion: Completion =
            serde_json::from_str(&text).map_err(|e| GatewayError::Protocol(e.to_string()))?;
        completion
            .choices
            .into_iter()
            .next()
            .map(|c| c.message.content)
            .ok_or_else(|| GatewayError::Protocol("response has no choices".into()))
    }

    fn describe(&self) -> String {
        format!("http:{}@{}", self.model, self.endpoint)
    }
}
