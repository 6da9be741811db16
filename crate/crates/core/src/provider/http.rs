use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::{check_texts, ChatProvider, ChatRequest, EmbeddingProvider, EmbeddingVector, ProviderError};

pub const API_KEY_ENV: &str = "QUALNET_API_KEY";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HttpConfig {
    /// Base URL of an OpenAI-compatible API, e.g. `https://api.openai.com/v1`.
    pub base_url: String,
    pub model: String,
    pub embedding_model: String,
    /// Retries after the first attempt for transient failures.
    pub retries: u32,
    pub backoff_ms: u64,
    pub timeout_secs: u64,
    #[serde(skip)]
    pub api_key: Option<String>,
}

impl Default for HttpConfig {
    fn default() -> Self {
        Self {
            base_url: "https://api.openai.com/v1".into(),
            model: "gpt-4.1".into(),
            embedding_model: "text-embedding-3-small".into(),
            retries: 3,
            backoff_ms: 500,
            timeout_secs: 120,
            api_key: None,
        }
    }
}

impl HttpConfig {
    pub fn with_env_key(mut self) -> Self {
        if let Ok(key) = std::env::var(API_KEY_ENV) {
            if !key.is_empty() {
                self.api_key = Some(key);
            }
        }
        self
    }
}

/// Blocking client for chat-completion and embedding endpoints.
#[derive(Debug)]
pub struct HttpProvider {
    config: HttpConfig,
    client: reqwest::blocking::Client,
}

enum Failure {
    Transient(String),
    Fatal(String),
}

impl HttpProvider {
    pub fn new(config: HttpConfig) -> Result<Self, ProviderError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(config.timeout_secs))
            .build()
            .map_err(|e| ProviderError::InvalidRequest(format!("http client: {e}")))?;
        Ok(Self { config, client })
    }

    fn url(&self, path: &str) -> String {
        format!("{}/{}", self.config.base_url.trim_end_matches('/'), path)
    }

    fn post_once(&self, path: &str, body: &Value) -> Result<Value, Failure> {
        let mut req = self.client.post(self.url(path)).json(body);
        if let Some(key) = &self.config.api_key {
            req = req.bearer_auth(key);
        }
        let resp = req.send().map_err(|e| Failure::Transient(e.to_string()))?;
        let status = resp.status();
        let text = resp.text().map_err(|e| Failure::Transient(e.to_string()))?;
        if status.is_success() {
            return serde_json::from_str(&text)
                .map_err(|e| Failure::Fatal(format!("response is not JSON: {e}")));
        }
        let msg = format!("HTTP {}: {}", status.as_u16(), text.chars().take(300).collect::<String>());
        if status.as_u16() == 408 || status.as_u16() == 429 || status.is_server_error() {
            Err(Failure::Transient(msg))
        } else {
            Err(Failure::Fatal(msg))
        }
    }

    fn post(&self, path: &str, body: &Value) -> Result<Value, ProviderError> {
        let attempts = self.config.retries + 1;
        let mut last = String::new();
        for attempt in 0..attempts {
            if attempt > 0 {
                let delay = self.config.backoff_ms.saturating_mul(1u64 << (attempt - 1).min(16));
                std::thread::sleep(Duration::from_millis(delay));
            }
            match self.post_once(path, body) {
                Ok(v) => return Ok(v),
                Err(Failure::Fatal(msg)) => return Err(ProviderError::Rejected(msg)),
                Err(Failure::Transient(msg)) => {
                    log::warn!("provider call failed (attempt {}/{attempts}): {msg}", attempt + 1);
                    last = msg;
                }
            }
        }
        Err(ProviderError::Unavailable { attempts, last })
    }
}

impl ChatProvider for HttpProvider {
    fn complete(&self, request: &ChatRequest) -> Result<String, ProviderError> {
        request.check()?;
        let body = json!({
            "model": self.config.model,
            "messages": [{"role": "user", "content": request.prompt}],
            "temperature": request.temperature,
            "max_tokens": request.max_output_chars,
        });
        let v = self.post("chat/completions", &body)?;
        v.pointer("/choices/0/message/content")
            .and_then(Value::as_str)
            .map(str::to_string)
            .ok_or_else(|| ProviderError::Rejected("response has no choices[0].message.content".into()))
    }
}

impl EmbeddingProvider for HttpProvider {
    fn embed(&self, texts: &[String]) -> Result<Vec<EmbeddingVector<f64>>, ProviderError> {
        check_texts(texts)?;
        let body = json!({"model": self.config.embedding_model, "input": texts});
        let v = self.post("embeddings", &body)?;
        let data = v
            .get("data")
            .and_then(Value::as_array)
            .ok_or_else(|| ProviderError::Rejected("response has no data array".into()))?;
        let mut out: Vec<(usize, EmbeddingVector<f64>)> = Vec::with_capacity(data.len());
        for (pos, item) in data.iter().enumerate() {
            let index = item.get("index").and_then(Value::as_u64).map(|i| i as usize).unwrap_or(pos);
            let values = item
                .get("embedding")
                .and_then(Value::as_array)
                .ok_or_else(|| ProviderError::Rejected("embedding item without vector".into()))?
                .iter()
                .map(|x| x.as_f64().ok_or_else(|| ProviderError::Rejected("non-numeric embedding".into())))
                .collect::<Result<Vec<f64>, _>>()?;
            out.push((index, EmbeddingVector::new(values)));
        }
        out.sort_by_key(|(i, _)| *i);
        if out.len() != texts.len() {
            return Err(ProviderError::Rejected(format!(
                "expected {} embeddings, got {}",
                texts.len(),
                out.len()
            )));
        }
        let dim = out[0].1.dim();
        if out.iter().any(|(_, v)| v.dim() != dim) {
            return Err(ProviderError::Rejected("embeddings differ in dimension".into()));
        }
        Ok(out.into_iter().map(|(_, v)| v).collect())
    }
}

#[cfg(test)]
mod tests {
    use std::io::{Read, Write};
    use std::net::TcpListener;
    use std::thread;

    use super::*;

    /// Serves the given raw HTTP responses, one per connection.
    fn serve(responses: Vec<(u16, String)>) -> String {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let addr = listener.local_addr().unwrap();
        thread::spawn(move || {
            for (status, body) in responses {
                let (mut stream, _) = listener.accept().unwrap();
                let mut buf = [0u8; 8192];
                let mut seen = Vec::new();
                // read until the end of headers plus the declared body
                loop {
                    let n = stream.read(&mut buf).unwrap();
                    seen.extend_from_slice(&buf[..n]);
                    let text = String::from_utf8_lossy(&seen);
                    if let Some(h) = text.find("\r\n\r\n") {
                        let len = text[..h]
                            .lines()
                            .find_map(|l| l.to_ascii_lowercase().strip_prefix("content-length:").map(|v| v.trim().parse::<usize>().unwrap()))
                            .unwrap_or(0);
                        if seen.len() >= h + 4 + len {
                            break;
                        }
                    }
                    if n == 0 {
                        break;
                    }
                }
                let resp = format!(
                    "HTTP/1.1 {status} X\r\ncontent-type: application/json\r\ncontent-length: {}\r\nconnection: close\r\n\r\n{body}",
                    body.len()
                );
                stream.write_all(resp.as_bytes()).unwrap();
            }
        });
        format!("http://{addr}")
    }

    fn config(base_url: String, retries: u32) -> HttpConfig {
        HttpConfig {
            base_url,
            retries,
            backoff_ms: 1,
            timeout_secs: 5,
            ..Default::default()
        }
    }

    #[test]
    fn unreachable_endpoint_is_unavailable() {
        // bind then drop to get a port nobody listens on
        let port = TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap().port();
        let p = HttpProvider::new(config(format!("http://127.0.0.1:{port}"), 3)).unwrap();
        match p.complete(&ChatRequest::new("hi")) {
            Err(ProviderError::Unavailable { attempts, .. }) => assert_eq!(attempts, 4),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn retries_transient_then_succeeds() {
        let ok = r#"{"choices":[{"message":{"role":"assistant","content":"label: a"}}]}"#;
        let base = serve(vec![(503, "{}".into()), (200, ok.into())]);
        let p = HttpProvider::new(config(base, 2)).unwrap();
        assert_eq!(p.complete(&ChatRequest::new("hi")).unwrap(), "label: a");
    }

    #[test]
    fn client_error_is_rejected_without_retry() {
        let base = serve(vec![(400, r#"{"error":"bad"}"#.into())]);
        let p = HttpProvider::new(config(base, 3)).unwrap();
        assert!(matches!(p.complete(&ChatRequest::new("hi")), Err(ProviderError::Rejected(_))));
    }

    #[test]
    fn embeddings_are_reordered_by_index() {
        let body = r#"{"data":[{"index":1,"embedding":[0.0,1.0]},{"index":0,"embedding":[1.0,0.0]}]}"#;
        let base = serve(vec![(200, body.into())]);
        let p = HttpProvider::new(config(base, 0)).unwrap();
        let v = p.embed(&["a".into(), "b".into()]).unwrap();
        assert_eq!(v[0].values, vec![1.0, 0.0]);
        assert_eq!(v[1].values, vec![0.0, 1.0]);
    }

    #[test]
    fn empty_prompt_never_hits_network() {
        let p = HttpProvider::new(config("http://127.0.0.1:9".into(), 0)).unwrap();
        assert!(matches!(p.complete(&ChatRequest::new("")), Err(ProviderError::InvalidRequest(_))));
        assert!(matches!(p.embed(&[]), Err(ProviderError::InvalidRequest(_))));
    }
}
