//! HTTP clients for chat-completion and code-edit endpoints.

use std::time::Duration;

use reqwest::blocking::Client;
use reqwest::StatusCode;
use serde::{Deserialize, Serialize};

use super::{Backend, BackendError, BackendKind, BackendSpec, GenerationParams};
use crate::prompts::Prompt;

pub const API_KEY_ENV: &str = "REPAIRBENCH_API_KEY";
pub const DEFAULT_BASE_URL: &str = "https://api.openai.com/v1";

fn api_key() -> Result<String, BackendError> {
    match std::env::var(API_KEY_ENV) {
        Ok(k) if !k.trim().is_empty() => Ok(k),
        _ => Err(BackendError::AuthMissing(API_KEY_ENV.to_string())),
    }
}

struct Http {
    client: Client,
    url: String,
    key: String,
}

impl Http {
    fn new(spec: &BackendSpec, path: &str) -> Result<Self, BackendError> {
        let key = api_key()?;
        let client = Client::builder()
            .timeout(Duration::from_secs(spec.timeout_secs.unwrap_or(120)))
            .build()
            .map_err(|e| BackendError::Fatal(e.to_string()))?;
        let base = spec.base_url.as_deref().unwrap_or(DEFAULT_BASE_URL).trim_end_matches('/');
        Ok(Self { client, url: format!("{base}/{path}"), key })
    }

    fn post<B: Serialize, R: for<'de> Deserialize<'de>>(&self, body: &B) -> Result<R, BackendError> {
        let resp = self
            .client
            .post(&self.url)
            .bearer_auth(&self.key)
            .json(body)
            .send()
            .map_err(|e| BackendError::Transient(e.to_string()))?;
        let status = resp.status();
        if status == StatusCode::TOO_MANY_REQUESTS || status.is_server_error() {
            return Err(BackendError::Transient(format!("HTTP {status}")));
        }
        if !status.is_success() {
            let text = resp.text().unwrap_or_default();
            return Err(BackendError::Fatal(format!("HTTP {status}: {text}")));
        }
        resp.json().map_err(|e| BackendError::Fatal(format!("bad response body: {e}")))
    }
}

#[derive(Debug, Serialize, PartialEq)]
pub struct ChatMessage<'a> {
    pub role: &'a str,
    pub content: &'a str,
}

#[derive(Debug, Serialize, PartialEq)]
pub struct ChatRequest<'a> {
    pub model: &'a str,
    pub messages: Vec<ChatMessage<'a>>,
    pub temperature: f64,
    pub top_p: f64,
    pub frequency_penalty: f64,
    pub presence_penalty: f64,
    pub n: u32,
}

impl<'a> ChatRequest<'a> {
    pub fn new(model: &'a str, prompt: &'a Prompt, params: &GenerationParams) -> Self {
        let mut messages = Vec::new();
        if !prompt.system_text.is_empty() {
            messages.push(ChatMessage { role: "system", content: &prompt.system_text });
        }
        messages.push(ChatMessage { role: "user", content: &prompt.body });
        Self {
            model,
            messages,
            temperature: params.temperature,
            top_p: params.top_p,
            frequency_penalty: params.frequency_penalty,
            presence_penalty: params.presence_penalty,
            n: params.n_candidates,
        }
    }
}

#[derive(Debug, Deserialize)]
struct ChatResponse {
    choices: Vec<ChatChoice>,
}

#[derive(Debug, Deserialize)]
struct ChatChoice {
    message: ChatChoiceMessage,
}

#[derive(Debug, Deserialize)]
struct ChatChoiceMessage {
    #[serde(default)]
    content: Option<String>,
}

#[derive(Debug, Serialize, PartialEq)]
pub struct EditRequest<'a> {
    pub model: &'a str,
    pub input: &'a str,
    pub instruction: &'a str,
    pub temperature: f64,
    pub top_p: f64,
}

#[derive(Debug, Deserialize)]
struct EditResponse {
    choices: Vec<EditChoice>,
}

#[derive(Debug, Deserialize)]
struct EditChoice {
    text: String,
}

pub struct ChatBackend {
    name: String,
    model: String,
    http: Http,
}

impl ChatBackend {
    pub fn from_spec(spec: &BackendSpec) -> Result<Self, BackendError> {
        Ok(Self {
            name: spec.name.clone(),
            model: spec.model.clone().unwrap_or_else(|| "gpt-3.5-turbo".into()),
            http: Http::new(spec, "chat/completions")?,
        })
    }
}

impl Backend for ChatBackend {
    fn name(&self) -> &str {
        &self.name
    }

    fn kind(&self) -> BackendKind {
        BackendKind::Chat
    }

    fn complete(&self, prompt: &Prompt, params: &GenerationParams) -> Result<Vec<String>, BackendError> {
        let resp: ChatResponse = self.http.post(&ChatRequest::new(&self.model, prompt, params))?;
        Ok(resp.choices.into_iter().map(|c| c.message.content.unwrap_or_default()).collect())
    }
}

pub struct EditBackend {
    name: String,
    model: String,
    http: Http,
}

impl EditBackend {
    pub fn from_spec(spec: &BackendSpec) -> Result<Self, BackendError> {
        Ok(Self {
            name: spec.name.clone(),
            model: spec.model.clone().unwrap_or_else(|| "code-davinci-edit-001".into()),
            http: Http::new(spec, "edits")?,
        })
    }
}

impl Backend for EditBackend {
    fn name(&self) -> &str {
        &self.name
    }

    fn kind(&self) -> BackendKind {
        BackendKind::Edit
    }

    fn complete(&self, prompt: &Prompt, params: &GenerationParams) -> Result<Vec<String>, BackendError> {
        let req = EditRequest {
            model: &self.model,
            input: &prompt.code,
            instruction: &prompt.instruction,
            temperature: params.temperature,
            top_p: params.top_p,
        };
        let resp: EditResponse = self.http.post(&req)?;
        Ok(resp.choices.into_iter().map(|c| c.text).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{DatasetKind, FixCategory, RepairSample, Split};
    use crate::prompts::build_zero_shot;

    #[test]
    fn chat_wire_format() {
        let s = RepairSample {
            id: "x".into(),
            dataset: DatasetKind::TufanoStyle,
            buggy_code: "START a END".into(),
            review: "r".into(),
            target: "b".into(),
            category: FixCategory::Update,
            split: Split::Test,
        };
        let p = build_zero_shot(&s);
        let body = serde_json::to_value(ChatRequest::new("m", &p, &GenerationParams::default())).unwrap();
        assert_eq!(body["messages"][0]["role"], "system");
        assert_eq!(body["messages"][1]["content"], p.body.as_str());
        assert_eq!(body["temperature"], 0.0);
        assert_eq!(body["top_p"], 1.0);
        assert_eq!(body["n"], 1);
    }

    #[test]
    fn response_parsing() {
        let r: ChatResponse =
            serde_json::from_str(r#"{"choices":[{"message":{"role":"assistant","content":"x"}}]}"#).unwrap();
        assert_eq!(r.choices[0].message.content.as_deref(), Some("x"));
        let e: EditResponse = serde_json::from_str(r#"{"choices":[{"text":"y","index":0}]}"#).unwrap();
        assert_eq!(e.choices[0].text, "y");
    }
}
