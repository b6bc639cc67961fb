use std::fmt;
use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    System,
    User,
    Assistant,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Message {
    pub role: Role,
    pub content: String,
}

impl Message {
    pub fn system(content: impl Into<String>) -> Self {
        Self {
            role: Role::System,
            content: content.into(),
        }
    }

    pub fn user(content: impl Into<String>) -> Self {
        Self {
            role: Role::User,
            content: content.into(),
        }
    }
}

/// What a completion is for. Network providers ignore it; the fixture
/// provider uses it to pick the scripted response.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Task {
    /// Generating a check program; `attempt` is 1-based.
    Generate {
        rule_id: u8,
        attempt: usize,
    },
    Narrate,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ProviderError {
    #[error("request timed out after {0} s")]
    Timeout(f64),
    #[error("authentication failed (HTTP {0}); check the API key")]
    Auth(u16),
    #[error("provider returned HTTP {status}: {body}")]
    Status { status: u16, body: String },
    #[error("malformed response: {0}")]
    Malformed(String),
    #[error("transport error: {0}")]
    Transport(String),
    #[error("environment variable `{0}` holding the API key is not set")]
    MissingKey(String),
    #[error("no scripted response left: {0}")]
    Exhausted(String),
    /// Scripted failure read from a fixture `.error` file.
    #[error("{0}")]
    Simulated(String),
}

/// A chat-completion backend. Implementations are shared between
/// concurrently running sessions.
pub trait Provider: Send + Sync {
    fn name(&self) -> &str;
    fn complete(&self, messages: &[Message], task: Task) -> Result<String, ProviderError>;
}

/// Replays responses from `<root>/<provider>/rule<N>/attempt<K>.txt`. An
/// `attempt<K>.error` file instead fails that attempt with its contents.
/// Narration reads `<root>/<provider>/report/narrative.txt` (or `.error`).
#[derive(Debug, Clone)]
pub struct FixtureProvider {
    name: String,
    dir: PathBuf,
}

impl FixtureProvider {
    pub fn new(root: impl AsRef<Path>, name: impl Into<String>) -> Self {
        let name = name.into();
        Self {
            dir: root.as_ref().join(&name),
            name,
        }
    }

    fn stem(&self, task: Task) -> PathBuf {
        match task {
            Task::Generate { rule_id, attempt } => self
                .dir
                .join(format!("rule{rule_id}"))
                .join(format!("attempt{attempt}")),
            Task::Narrate => self.dir.join("report").join("narrative"),
        }
    }
}

impl Provider for FixtureProvider {
    fn name(&self) -> &str {
        &self.name
    }

    fn complete(&self, _messages: &[Message], task: Task) -> Result<String, ProviderError> {
        let stem = self.stem(task);
        let text = stem.with_extension("txt");
        let error = stem.with_extension("error");
        if let Ok(msg) = std::fs::read_to_string(&error) {
            return Err(ProviderError::Simulated(msg.trim().to_string()));
        }
        std::fs::read_to_string(&text)
            .map_err(|_| ProviderError::Exhausted(format!("{} does not exist", text.display())))
    }
}

/// Wire format spoken by a network provider.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ApiKind {
    /// `POST {model, messages}` answered by `choices[0].message.content`.
    OpenaiChat,
    /// `POST {model, system, messages, max_tokens}` answered by `content[].text`.
    AnthropicMessages,
}

fn default_timeout() -> f64 {
    60.0
}

fn default_max_tokens() -> u32 {
    4096
}

/// One entry of the provider config file. The key itself is never stored
/// here, only the name of the variable that holds it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProviderConfig {
    pub name: String,
    pub api: ApiKind,
    pub endpoint: String,
    pub model: String,
    pub api_key_env: String,
    #[serde(default = "default_timeout")]
    pub timeout_secs: f64,
    #[serde(default = "default_max_tokens")]
    pub max_tokens: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub price_per_1m_input: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub price_per_1m_output: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ProviderFile {
    providers: Vec<ProviderConfig>,
}

/// Parse a provider config file: `{"providers": [...]}`.
pub fn load_provider_configs(text: &str) -> Result<Vec<ProviderConfig>, String> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let file: ProviderFile = serde_path_to_error::deserialize(de)
        .map_err(|e| format!("provider config at {}: {}", e.path(), e.inner()))?;
    for p in &file.providers {
        if !(p.timeout_secs.is_finite() && p.timeout_secs > 0.0) {
            return Err(format!(
                "provider `{}`: timeout_secs must be positive",
                p.name
            ));
        }
        reqwest::Url::parse(&p.endpoint)
            .map_err(|e| format!("provider `{}`: bad endpoint: {e}", p.name))?;
    }
    Ok(file.providers)
}

/// Secret that prints as `[redacted]` and cannot be serialized.
#[derive(Clone)]
pub struct ApiKey(String);

impl ApiKey {
    pub fn new(key: impl Into<String>) -> Self {
        Self(key.into())
    }

    pub fn from_env(var: &str) -> Result<Self, ProviderError> {
        match std::env::var(var) {
            Ok(k) if !k.is_empty() => Ok(Self(k)),
            _ => Err(ProviderError::MissingKey(var.to_string())),
        }
    }

    fn expose(&self) -> &str {
        &self.0
    }

    fn scrub(&self, text: &str) -> String {
        if self.0.is_empty() {
            text.to_string()
        } else {
            text.replace(&self.0, "[redacted]")
        }
    }
}

impl fmt::Debug for ApiKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("ApiKey([redacted])")
    }
}

#[derive(Debug)]
pub struct HttpProvider {
    config: ProviderConfig,
    key: ApiKey,
    client: reqwest::blocking::Client,
}

impl HttpProvider {
    /// Build a client, reading the key from the configured variable.
    pub fn from_env(config: ProviderConfig) -> Result<Self, ProviderError> {
        let key = ApiKey::from_env(&config.api_key_env)?;
        Self::new(config, key)
    }

    pub fn new(config: ProviderConfig, key: ApiKey) -> Result<Self, ProviderError> {
        let mut builder = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs_f64(config.timeout_secs));
        // A proxy can never reach a loopback endpoint.
        let loopback = reqwest::Url::parse(&config.endpoint)
            .ok()
            .and_then(|u| {
                u.host_str().map(|h| {
                    h == "localhost"
                        || h.parse::<std::net::IpAddr>()
                            .is_ok_and(|ip| ip.is_loopback())
                })
            })
            .unwrap_or(false);
        if loopback {
            builder = builder.no_proxy();
        }
        let client = builder
            .build()
            .map_err(|e| ProviderError::Transport(e.to_string()))?;
        Ok(Self {
            config,
            key,
            client,
        })
    }

    pub fn config(&self) -> &ProviderConfig {
        &self.config
    }

    fn body(&self, messages: &[Message]) -> Value {
        match self.config.api {
            ApiKind::OpenaiChat => json!({
                "model": self.config.model,
                "messages": messages,
                "temperature": 0,
            }),
            ApiKind::AnthropicMessages => {
                let system: Vec<&str> = messages
                    .iter()
                    .filter(|m| m.role == Role::System)
                    .map(|m| m.content.as_str())
                    .collect();
                let rest: Vec<&Message> =
                    messages.iter().filter(|m| m.role != Role::System).collect();
                json!({
                    "model": self.config.model,
                    "max_tokens": self.config.max_tokens,
                    "system": system.join("\n\n"),
                    "messages": rest,
                    "temperature": 0,
                })
            }
        }
    }

    fn transport(&self, e: reqwest::Error) -> ProviderError {
        if e.is_timeout() {
            ProviderError::Timeout(self.config.timeout_secs)
        } else {
            ProviderError::Transport(self.key.scrub(&e.without_url().to_string()))
        }
    }
}

fn extract_text(api: ApiKind, v: &Value) -> Result<String, ProviderError> {
    let text = match api {
        ApiKind::OpenaiChat => v
            .pointer("/choices/0/message/content")
            .and_then(Value::as_str)
            .map(str::to_string),
        ApiKind::AnthropicMessages => v.get("content").and_then(Value::as_array).map(|parts| {
            parts
                .iter()
                .filter(|p| p.get("type").and_then(Value::as_str) == Some("text"))
                .filter_map(|p| p.get("text").and_then(Value::as_str))
                .collect::<Vec<_>>()
                .join("")
        }),
    };
    text.ok_or_else(|| ProviderError::Malformed("no completion text in the response body".into()))
}

impl Provider for HttpProvider {
    fn name(&self) -> &str {
        &self.config.name
    }

    fn complete(&self, messages: &[Message], _task: Task) -> Result<String, ProviderError> {
        let req = self
            .client
            .post(&self.config.endpoint)
            .json(&self.body(messages));
        let req = match self.config.api {
            ApiKind::OpenaiChat => req.bearer_auth(self.key.expose()),
            ApiKind::AnthropicMessages => req
                .header("x-api-key", self.key.expose())
                .header("anthropic-version", "2023-06-01"),
        };
        let resp = req.send().map_err(|e| self.transport(e))?;
        let status = resp.status();
        let text = resp.text().map_err(|e| self.transport(e))?;
        if status == reqwest::StatusCode::UNAUTHORIZED || status == reqwest::StatusCode::FORBIDDEN {
            return Err(ProviderError::Auth(status.as_u16()));
        }
        if !status.is_success() {
            let body: String = self.key.scrub(&text).chars().take(300).collect();
            return Err(ProviderError::Status {
                status: status.as_u16(),
                body,
            });
        }
        let v: Value =
            serde_json::from_str(&text).map_err(|e| ProviderError::Malformed(e.to_string()))?;
        extract_text(self.config.api, &v)
    }
}
