use std::io::Write;
use std::path::Path;
use std::sync::{Arc, Mutex};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use super::{ChatProvider, ChatRequest, EmbeddingProvider, EmbeddingVector, ProviderError};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TranscriptRequest {
    Chat(ChatRequest),
    Embed { texts: Vec<String> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TranscriptResponse {
    Text(String),
    Vectors(Vec<EmbeddingVector<f64>>),
}

/// One line of the JSON-lines transcript log.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TranscriptEntry {
    pub request: TranscriptRequest,
    pub response: TranscriptResponse,
    pub timestamp: u64,
}

/// How entries are stamped and ordered on output.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Clock {
    /// Unix milliseconds, call order preserved.
    Wall,
    /// Entries sorted by content and stamped with their position, so a
    /// deterministic provider yields a byte-identical log regardless of how
    /// concurrent calls interleaved.
    Logical,
}

#[derive(Debug)]
pub struct Transcript {
    clock: Clock,
    entries: Mutex<Vec<TranscriptEntry>>,
}

impl Transcript {
    pub fn new(clock: Clock) -> Self {
        Self {
            clock,
            entries: Mutex::new(Vec::new()),
        }
    }

    pub fn push(&self, request: TranscriptRequest, response: TranscriptResponse) {
        let timestamp = match self.clock {
            Clock::Wall => SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_millis() as u64)
                .unwrap_or(0),
            Clock::Logical => 0,
        };
        self.entries.lock().expect("transcript lock").push(TranscriptEntry {
            request,
            response,
            timestamp,
        });
    }

    pub fn len(&self) -> usize {
        self.entries.lock().expect("transcript lock").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn entries(&self) -> Vec<TranscriptEntry> {
        let mut entries = self.entries.lock().expect("transcript lock").clone();
        if self.clock == Clock::Logical {
            let mut keyed: Vec<(String, TranscriptEntry)> = entries
                .into_iter()
                .map(|e| (serde_json::to_string(&(&e.request, &e.response)).unwrap_or_default(), e))
                .collect();
            keyed.sort_by(|a, b| a.0.cmp(&b.0));
            entries = keyed
                .into_iter()
                .enumerate()
                .map(|(i, (_, mut e))| {
                    e.timestamp = i as u64;
                    e
                })
                .collect();
        }
        entries
    }

    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for e in self.entries() {
            out.push_str(&serde_json::to_string(&e).expect("entries serialize"));
            out.push('\n');
        }
        out
    }

    pub fn write_jsonl(&self, path: &Path) -> std::io::Result<()> {
        let mut f = std::fs::File::create(path)?;
        f.write_all(self.to_jsonl().as_bytes())?;
        f.sync_all()
    }

    pub fn parse_jsonl(text: &str) -> Result<Vec<TranscriptEntry>, serde_json::Error> {
        text.lines()
            .filter(|l| !l.trim().is_empty())
            .map(serde_json::from_str)
            .collect()
    }
}

/// Logs every successful exchange of the wrapped provider.
#[derive(Clone, Debug)]
pub struct Recording<P> {
    inner: P,
    transcript: Arc<Transcript>,
}

impl<P> Recording<P> {
    pub fn new(inner: P, transcript: Arc<Transcript>) -> Self {
        Self { inner, transcript }
    }

    pub fn transcript(&self) -> &Arc<Transcript> {
        &self.transcript
    }
}

impl<P: ChatProvider> ChatProvider for Recording<P> {
    fn complete(&self, request: &ChatRequest) -> Result<String, ProviderError> {
        let response = self.inner.complete(request)?;
        self.transcript.push(
            TranscriptRequest::Chat(request.clone()),
            TranscriptResponse::Text(response.clone()),
        );
        Ok(response)
    }
}

impl<P: EmbeddingProvider> EmbeddingProvider for Recording<P> {
    fn embed(&self, texts: &[String]) -> Result<Vec<EmbeddingVector<f64>>, ProviderError> {
        let vectors = self.inner.embed(texts)?;
        self.transcript.push(
            TranscriptRequest::Embed {
                texts: texts.to_vec(),
            },
            TranscriptResponse::Vectors(vectors.clone()),
        );
        Ok(vectors)
    }
}
