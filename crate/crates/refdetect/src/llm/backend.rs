//! Chat-model backends: the `ChatBackend` trait and an HTTP implementation
//! speaking the OpenAI-style chat completions shape.
//!
//! Credentials are never part of the configuration data. `BackendConfig`
//! stores only the *name* of an environment variable; the key itself is read
//! from the process environment at query time and never serialized, logged,
//! or echoed into errors.

use std::time::{Duration, Instant};

use rand::Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

/// A raw model reply: the text to parse plus the wall-clock time the query
/// took, retries included.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BackendReply {
    pub text: String,
    pub latency_ms: u64,
}

/// Anything that can answer a single prompt. Implementations must be shareable
/// across the runner's worker threads.
pub trait ChatBackend: Send + Sync {
    fn query(&self, prompt: &str) -> Result<BackendReply, BackendError>;

    /// Stable identifier recorded alongside results (a model name or mock tag).
    fn id(&self) -> String;
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum BackendError {
    #[error("invalid backend configuration: {reason}")]
    InvalidConfig { reason: String },
    #[error("authentication failed: {reason}")]
    Auth { reason: String },
    #[error("rate limited by the backend")]
    RateLimited,
    #[error("request timed out after {seconds}s")]
    Timeout { seconds: u64 },
    #[error("transport failure: {reason}")]
    Transport { reason: String },
    #[error("malformed response: {reason} (body: {body})")]
    MalformedResponse { reason: String, body: String },
}

impl BackendError {
    /// Transient failures worth another attempt. Auth and shape problems are
    /// deterministic, so retrying them only burns budget.
    pub fn is_retryable(&self) -> bool {
        matches!(
            self,
            BackendError::RateLimited
                | BackendError::Timeout { .. }
                | BackendError::Transport { .. }
        )
    }
}

fn default_temperature() -> f64 {
    0.6
}

fn default_max_output_tokens() -> u32 {
    1024
}

fn default_request_timeout_secs() -> u64 {
    60
}

fn default_max_retries() -> u32 {
    3
}

fn default_parallelism() -> usize {
    2
}

fn default_response_path() -> String {
    "choices.0.message.content".to_string()
}

/// Connection settings for an HTTP chat backend.
///
/// `api_key_env` names an environment variable; the variable's value is the
/// secret and lives only in the environment. Serializing this struct is
/// therefore always safe.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BackendConfig {
    pub endpoint_url: String,
    pub model_name: String,
    #[serde(default = "default_temperature")]
    pub temperature: f64,
    #[serde(default = "default_max_output_tokens")]
    pub max_output_tokens: u32,
    #[serde(default)]
    pub api_key_env: Option<String>,
    #[serde(default = "default_request_timeout_secs")]
    pub request_timeout_secs: u64,
    #[serde(default = "default_max_retries")]
    pub max_retries: u32,
    #[serde(default = "default_parallelism")]
    pub parallelism: usize,
    #[serde(default = "default_response_path")]
    pub response_path: String,
}

impl BackendConfig {
    pub fn new(endpoint_url: impl Into<String>, model_name: impl Into<String>) -> BackendConfig {
        BackendConfig {
            endpoint_url: endpoint_url.into(),
            model_name: model_name.into(),
            temperature: default_temperature(),
            max_output_tokens: default_max_output_tokens(),
            api_key_env: None,
            request_timeout_secs: default_request_timeout_secs(),
            max_retries: default_max_retries(),
            parallelism: default_parallelism(),
            response_path: default_response_path(),
        }
    }

    pub fn validate(&self) -> Result<(), BackendError> {
        let fail = |reason: String| Err(BackendError::InvalidConfig { reason });
        if self.endpoint_url.trim().is_empty() {
            return fail("endpoint_url is empty".to_string());
        }
        if !self.endpoint_url.starts_with("http://") && !self.endpoint_url.starts_with("https://") {
            return fail(format!("endpoint_url {:?} is not an http(s) URL", self.endpoint_url));
        }
        if self.model_name.trim().is_empty() {
            return fail("model_name is empty".to_string());
        }
        if !(0.0..=2.0).contains(&self.temperature) || self.temperature.is_nan() {
            return fail(format!("temperature {} is outside [0, 2]", self.temperature));
        }
        if self.max_output_tokens == 0 {
            return fail("max_output_tokens must be at least 1".to_string());
        }
        if self.request_timeout_secs == 0 {
            return fail("request_timeout_secs must be at least 1".to_string());
        }
        if self.parallelism == 0 {
            return fail("parallelism must be at least 1".to_string());
        }
        if self.response_path.trim().is_empty() {
            return fail("response_path is empty".to_string());
        }
        Ok(())
    }
}

/// Walks a dot-separated path through a JSON value. Numeric segments index
/// arrays; all other segments are object keys.
fn extract_text(body: &Value, path: &str) -> Result<String, String> {
    let mut current = body;
    for segment in path.split('.') {
        current = match current {
            Value::Array(items) => {
                let index: usize = segment
                    .parse()
                    .map_err(|_| format!("path segment {segment:?} is not an array index"))?;
                items
                    .get(index)
                    .ok_or_else(|| format!("array has no element {index} for segment {segment:?}"))?
            }
            Value::Object(map) => map
                .get(segment)
                .ok_or_else(|| format!("missing field {segment:?}"))?,
            other => {
                return Err(format!(
                    "cannot descend into {} with segment {segment:?}",
                    json_type_name(other)
                ))
            }
        };
    }
    match current {
        Value::String(text) => Ok(text.clone()),
        other => Err(format!(
            "value at path is {}, expected a string",
            json_type_name(other)
        )),
    }
}

fn json_type_name(value: &Value) -> &'static str {
    match value {
        Value::Null => "null",
        Value::Bool(_) => "a boolean",
        Value::Number(_) => "a number",
        Value::String(_) => "a string",
        Value::Array(_) => "an array",
        Value::Object(_) => "an object",
    }
}

const BODY_SNIPPET_CHARS: usize = 2000;

fn truncate_body(body: &str) -> String {
    if body.chars().count() <= BODY_SNIPPET_CHARS {
        return body.to_string();
    }
    let mut snippet: String = body.chars().take(BODY_SNIPPET_CHARS).collect();
    snippet.push_str("...");
    snippet
}

/// Blocking HTTP backend for OpenAI-style chat completion endpoints.
///
/// Retryable failures (rate limits, timeouts, transport errors, 5xx) back off
/// exponentially with jitter; auth and response-shape failures return
/// immediately.
pub struct HttpBackend {
    config: BackendConfig,
    client: reqwest::blocking::Client,
    retry_base: Duration,
}

impl HttpBackend {
    pub fn new(config: BackendConfig) -> Result<HttpBackend, BackendError> {
        config.validate()?;
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(config.request_timeout_secs))
            .connect_timeout(Duration::from_secs(config.request_timeout_secs))
            .build()
            .map_err(|err| BackendError::Transport {
                reason: format!("failed to build HTTP client: {err}"),
            })?;
        Ok(HttpBackend { config, client, retry_base: Duration::from_secs(1) })
    }

    /// Overrides the base backoff delay (production default one second).
    /// Exists so tests exercising the retry loop need not sleep for real.
    pub fn with_retry_base(mut self, base: Duration) -> HttpBackend {
        self.retry_base = base;
        self
    }

    pub fn config(&self) -> &BackendConfig {
        &self.config
    }

    /// Reads the API key from the configured environment variable, or returns
    /// `None` when no variable is configured (keyless local endpoints).
    fn resolve_key(&self) -> Result<Option<String>, BackendError> {
        let Some(name) = &self.config.api_key_env else {
            return Ok(None);
        };
        match std::env::var(name) {
            Ok(value) if !value.trim().is_empty() => Ok(Some(value)),
            Ok(_) => Err(BackendError::Auth {
                reason: format!("environment variable {name} is set but empty"),
            }),
            Err(_) => Err(BackendError::Auth {
                reason: format!("environment variable {name} is not set"),
            }),
        }
    }

    fn backoff_delay(&self, completed_attempts: u32) -> Duration {
        let factor = 2u32.saturating_pow(completed_attempts);
        let base = self.retry_base.saturating_mul(factor);
        let jitter_limit = (self.retry_base.as_millis() as u64 / 2).max(1);
        let jitter = rand::thread_rng().gen_range(0..jitter_limit);
        base + Duration::from_millis(jitter)
    }

    fn send_once(&self, prompt: &str, key: Option<&str>) -> Result<String, BackendError> {
        let payload = json!({
            "model": self.config.model_name,
            "temperature": self.config.temperature,
            "max_tokens": self.config.max_output_tokens,
            "messages": [{"role": "user", "content": prompt}],
        });
        let mut request = self.client.post(&self.config.endpoint_url).json(&payload);
        if let Some(key) = key {
            request = request.bearer_auth(key);
        }
        let response = request.send().map_err(|err| {
            if err.is_timeout() {
                BackendError::Timeout { seconds: self.config.request_timeout_secs }
            } else {
                BackendError::Transport { reason: err.to_string() }
            }
        })?;

        let status = response.status();
        let body = response.text().map_err(|err| {
            if err.is_timeout() {
                BackendError::Timeout { seconds: self.config.request_timeout_secs }
            } else {
                BackendError::Transport { reason: format!("failed to read response body: {err}") }
            }
        })?;

        match status.as_u16() {
            200..=299 => {}
            401 | 403 => {
                return Err(BackendError::Auth {
                    reason: format!("endpoint rejected the request with HTTP {}", status.as_u16()),
                })
            }
            429 => return Err(BackendError::RateLimited),
            408 => return Err(BackendError::Timeout { seconds: self.config.request_timeout_secs }),
            500..=599 => {
                return Err(BackendError::Transport {
                    reason: format!("server error HTTP {}", status.as_u16()),
                })
            }
            other => {
                return Err(BackendError::MalformedResponse {
                    reason: format!("unexpected HTTP status {other}"),
                    body: truncate_body(&body),
                })
            }
        }

        let parsed: Value = serde_json::from_str(&body).map_err(|err| {
            BackendError::MalformedResponse {
                reason: format!("response body is not valid JSON: {err}"),
                body: truncate_body(&body),
            }
        })?;
        extract_text(&parsed, &self.config.response_path).map_err(|reason| {
            BackendError::MalformedResponse { reason, body: truncate_body(&body) }
        })
    }
}

impl ChatBackend for HttpBackend {
    fn query(&self, prompt: &str) -> Result<BackendReply, BackendError> {
        let start = Instant::now();
        let key = self.resolve_key()?;
        let mut completed_attempts = 0;
        loop {
            match self.send_once(prompt, key.as_deref()) {
                Ok(text) => {
                    return Ok(BackendReply {
                        text,
                        latency_ms: start.elapsed().as_millis() as u64,
                    })
                }
                Err(err) if err.is_retryable() && completed_attempts < self.config.max_retries => {
                    std::thread::sleep(self.backoff_delay(completed_attempts));
                    completed_attempts += 1;
                }
                Err(err) => return Err(err),
            }
        }
    }

    fn id(&self) -> String {
        self.config.model_name.clone()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    use std::io::{Read, Write};
    use std::net::TcpListener;
    use std::sync::{Arc, Mutex};
    use std::thread::JoinHandle;

    #[test]
    fn config_defaults_fill_omitted_fields() {
        let config: BackendConfig = serde_json::from_str(
            r#"{"endpoint_url": "http://localhost:9/v1/chat/completions", "model_name": "m"}"#,
        )
        .unwrap();
        assert_eq!(config.temperature, 0.6);
        assert_eq!(config.max_output_tokens, 1024);
        assert_eq!(config.api_key_env, None);
        assert_eq!(config.request_timeout_secs, 60);
        assert_eq!(config.max_retries, 3);
        assert_eq!(config.parallelism, 2);
        assert_eq!(config.response_path, "choices.0.message.content");
        config.validate().unwrap();
    }

    #[test]
    fn config_rejects_out_of_range_temperature() {
        let mut config = BackendConfig::new("http://localhost:9/v1", "m");
        config.temperature = 2.5;
        let err = config.validate().unwrap_err();
        assert!(matches!(err, BackendError::InvalidConfig { ref reason } if reason.contains("temperature")));

        config.temperature = -0.1;
        assert!(config.validate().is_err());
        config.temperature = 2.0;
        config.validate().unwrap();
        config.temperature = 0.0;
        config.validate().unwrap();
    }

    #[test]
    fn config_rejects_non_http_endpoint_and_zero_limits() {
        let mut config = BackendConfig::new("ftp://example.test", "m");
        assert!(config.validate().is_err());
        config.endpoint_url = "http://example.test".to_string();
        config.parallelism = 0;
        assert!(config.validate().is_err());
        config.parallelism = 1;
        config.max_output_tokens = 0;
        assert!(config.validate().is_err());
    }

    #[test]
    fn config_serialization_carries_no_secret_material() {
        std::env::set_var("REFDETECT_SNAPSHOT_KEY", "sk-super-secret");
        let mut config = BackendConfig::new("http://localhost:9/v1", "m");
        config.api_key_env = Some("REFDETECT_SNAPSHOT_KEY".to_string());
        let snapshot = serde_json::to_string(&config).unwrap();
        assert!(snapshot.contains("REFDETECT_SNAPSHOT_KEY"));
        assert!(!snapshot.contains("sk-super-secret"));
        std::env::remove_var("REFDETECT_SNAPSHOT_KEY");
    }

    #[test]
    fn extract_text_walks_objects_and_arrays() {
        let body = serde_json::json!({
            "choices": [{"message": {"content": "- Rename Class"}}]
        });
        assert_eq!(
            extract_text(&body, "choices.0.message.content").unwrap(),
            "- Rename Class"
        );
        assert!(extract_text(&body, "choices.1.message.content")
            .unwrap_err()
            .contains("no element 1"));
        assert!(extract_text(&body, "choices.0.message.missing")
            .unwrap_err()
            .contains("missing field"));
        assert!(extract_text(&body, "choices.x.message.content")
            .unwrap_err()
            .contains("not an array index"));
        assert!(extract_text(&body, "choices.0.message")
            .unwrap_err()
            .contains("expected a string"));
    }

    /// One recorded HTTP exchange: the request head+body the stub received.
    struct StubServer {
        url: String,
        requests: Arc<Mutex<Vec<String>>>,
        handle: JoinHandle<()>,
    }

    impl StubServer {
        /// Serves the canned responses to sequential connections, recording
        /// each raw request. Closes every connection so retries reconnect.
        fn start(responses: Vec<(u16, String)>) -> StubServer {
            let listener = TcpListener::bind("127.0.0.1:0").unwrap();
            let url = format!("http://{}/v1/chat/completions", listener.local_addr().unwrap());
            let requests = Arc::new(Mutex::new(Vec::new()));
            let seen = Arc::clone(&requests);
            let handle = std::thread::spawn(move || {
                for (status, body) in responses {
                    let (mut stream, _) = listener.accept().unwrap();
                    let raw = read_http_request(&mut stream);
                    seen.lock().unwrap().push(raw);
                    let reply = format!(
                        "HTTP/1.1 {status} X\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{body}",
                        body.len()
                    );
                    stream.write_all(reply.as_bytes()).unwrap();
                }
            });
            StubServer { url, requests, handle }
        }

        fn finish(self) -> Vec<String> {
            self.handle.join().unwrap();
            Arc::try_unwrap(self.requests).unwrap().into_inner().unwrap()
        }
    }

    fn read_http_request(stream: &mut std::net::TcpStream) -> String {
        let mut buffer = Vec::new();
        let mut chunk = [0u8; 1024];
        let header_end = loop {
            let n = stream.read(&mut chunk).unwrap();
            assert!(n > 0, "connection closed before request completed");
            buffer.extend_from_slice(&chunk[..n]);
            if let Some(pos) = find_header_end(&buffer) {
                break pos;
            }
        };
        let head = String::from_utf8_lossy(&buffer[..header_end]).to_string();
        let content_length: usize = head
            .lines()
            .find_map(|line| {
                let (name, value) = line.split_once(':')?;
                name.eq_ignore_ascii_case("content-length")
                    .then(|| value.trim().parse().unwrap())
            })
            .unwrap_or(0);
        let body_start = header_end + 4;
        while buffer.len() < body_start + content_length {
            let n = stream.read(&mut chunk).unwrap();
            assert!(n > 0, "connection closed mid-body");
            buffer.extend_from_slice(&chunk[..n]);
        }
        String::from_utf8_lossy(&buffer).to_string()
    }

    fn find_header_end(buffer: &[u8]) -> Option<usize> {
        buffer.windows(4).position(|w| w == b"\r\n\r\n")
    }

    fn request_json(raw_request: &str) -> Value {
        let body = raw_request
            .split_once("\r\n\r\n")
            .expect("request has a header/body separator")
            .1;
        serde_json::from_str(body).expect("request body is JSON")
    }

    fn ok_body(content: &str) -> String {
        serde_json::json!({"choices": [{"message": {"content": content}}]}).to_string()
    }

    fn backend_for(url: &str) -> HttpBackend {
        let mut config = BackendConfig::new(url, "test-model");
        config.request_timeout_secs = 5;
        HttpBackend::new(config)
            .unwrap()
            .with_retry_base(Duration::from_millis(2))
    }

    #[test]
    fn rate_limits_are_retried_until_success() {
        let server = StubServer::start(vec![
            (429, "{}".to_string()),
            (429, "{}".to_string()),
            (200, ok_body("- Rename Method\nThe method was renamed.")),
        ]);
        let backend = backend_for(&server.url);

        let reply = backend.query("identify the refactoring").unwrap();
        assert_eq!(reply.text, "- Rename Method\nThe method was renamed.");

        let requests = server.finish();
        assert_eq!(requests.len(), 3, "two rate-limited attempts plus the success");

        let payload = request_json(&requests[0]);
        assert_eq!(payload["model"], "test-model");
        assert_eq!(payload["temperature"], 0.6);
        assert_eq!(payload["max_tokens"], 1024);
        assert_eq!(payload["messages"][0]["role"], "user");
        assert_eq!(payload["messages"][0]["content"], "identify the refactoring");
        assert!(
            !requests[0].to_ascii_lowercase().contains("authorization"),
            "no key configured, so no auth header should be sent"
        );
    }

    #[test]
    fn server_errors_are_retried_until_success() {
        let server = StubServer::start(vec![
            (503, "overloaded".to_string()),
            (200, ok_body("- Move Method")),
        ]);
        let backend = backend_for(&server.url);
        let reply = backend.query("p").unwrap();
        assert_eq!(reply.text, "- Move Method");
        assert_eq!(server.finish().len(), 2);
    }

    #[test]
    fn auth_rejection_is_not_retried_and_key_comes_from_env() {
        let server = StubServer::start(vec![(401, "{\"error\": \"bad key\"}".to_string())]);
        std::env::set_var("REFDETECT_TEST_KEY_401", "sk-test-value");
        let mut config = BackendConfig::new(&server.url, "test-model");
        config.api_key_env = Some("REFDETECT_TEST_KEY_401".to_string());
        let backend = HttpBackend::new(config)
            .unwrap()
            .with_retry_base(Duration::from_millis(2));

        let err = backend.query("p").unwrap_err();
        assert!(matches!(err, BackendError::Auth { ref reason } if reason.contains("401")));

        let requests = server.finish();
        assert_eq!(requests.len(), 1, "auth failures must not be retried");
        assert!(requests[0].contains("Bearer sk-test-value"));
        std::env::remove_var("REFDETECT_TEST_KEY_401");
    }

    #[test]
    fn missing_key_variable_fails_before_any_request() {
        std::env::remove_var("REFDETECT_TEST_KEY_UNSET");
        // Port 9 (discard) on localhost: any attempted connection would fail
        // as Transport, so an Auth error proves the network was never touched.
        let mut config = BackendConfig::new("http://127.0.0.1:9/v1/chat/completions", "m");
        config.api_key_env = Some("REFDETECT_TEST_KEY_UNSET".to_string());
        let backend = HttpBackend::new(config).unwrap();

        let err = backend.query("p").unwrap_err();
        assert!(
            matches!(err, BackendError::Auth { ref reason } if reason.contains("REFDETECT_TEST_KEY_UNSET")),
            "expected Auth for the unset variable, got: {err}"
        );
    }

    #[test]
    fn non_json_body_is_malformed_and_not_retried() {
        let server = StubServer::start(vec![(200, "definitely not json".to_string())]);
        let backend = backend_for(&server.url);
        let err = backend.query("p").unwrap_err();
        match err {
            BackendError::MalformedResponse { reason, body } => {
                assert!(reason.contains("not valid JSON"));
                assert_eq!(body, "definitely not json");
            }
            other => panic!("expected MalformedResponse, got: {other}"),
        }
        assert_eq!(server.finish().len(), 1);
    }

    #[test]
    fn missing_response_path_is_malformed() {
        let server = StubServer::start(vec![(200, "{\"choices\": []}".to_string())]);
        let backend = backend_for(&server.url);
        let err = backend.query("p").unwrap_err();
        assert!(
            matches!(err, BackendError::MalformedResponse { ref reason, .. } if reason.contains("no element 0")),
            "got: {err}"
        );
    }

    #[test]
    fn unexpected_status_is_malformed_with_body() {
        let server = StubServer::start(vec![(404, "no such route".to_string())]);
        let backend = backend_for(&server.url);
        let err = backend.query("p").unwrap_err();
        match err {
            BackendError::MalformedResponse { reason, body } => {
                assert!(reason.contains("404"));
                assert_eq!(body, "no such route");
            }
            other => panic!("expected MalformedResponse, got: {other}"),
        }
    }

    #[test]
    fn retries_give_up_after_budget() {
        let server = StubServer::start(vec![
            (429, "{}".to_string()),
            (429, "{}".to_string()),
            (429, "{}".to_string()),
        ]);
        let mut config = BackendConfig::new(&server.url, "m");
        config.max_retries = 2;
        let backend = HttpBackend::new(config)
            .unwrap()
            .with_retry_base(Duration::from_millis(2));
        let err = backend.query("p").unwrap_err();
        assert_eq!(err, BackendError::RateLimited);
        assert_eq!(server.finish().len(), 3, "initial attempt plus two retries");
    }

    #[test]
    fn truncate_body_caps_long_payloads() {
        let long = "x".repeat(BODY_SNIPPET_CHARS + 50);
        let truncated = truncate_body(&long);
        assert_eq!(truncated.chars().count(), BODY_SNIPPET_CHARS + 3);
        assert!(truncated.ends_with("..."));
        assert_eq!(truncate_body("short"), "short");
    }
}
