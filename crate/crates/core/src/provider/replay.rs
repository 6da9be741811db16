use std::collections::HashMap;
use std::sync::Mutex;

use super::transcript::{Transcript, TranscriptEntry, TranscriptRequest, TranscriptResponse};
use super::{check_texts, ChatProvider, ChatRequest, EmbeddingProvider, EmbeddingVector, ProviderError};

/// Serves responses from a recorded transcript.
///
/// Chat responses are keyed by prompt; repeated prompts are answered in
/// recorded order and the last answer repeats once they run out. Embeddings
/// are keyed per text, so batches need not match the recorded batching.
#[derive(Debug, Default)]
pub struct ReplayProvider {
    chats: Mutex<HashMap<String, (Vec<String>, usize)>>,
    vectors: HashMap<String, EmbeddingVector<f64>>,
}

impl ReplayProvider {
    pub fn new(entries: Vec<TranscriptEntry>) -> Result<Self, ProviderError> {
        let mut chats: HashMap<String, (Vec<String>, usize)> = HashMap::new();
        let mut vectors = HashMap::new();
        for e in entries {
            match (e.request, e.response) {
                (TranscriptRequest::Chat(req), TranscriptResponse::Text(text)) => {
                    chats.entry(req.prompt).or_default().0.push(text);
                }
                (TranscriptRequest::Embed { texts }, TranscriptResponse::Vectors(vs)) => {
                    if texts.len() != vs.len() {
                        return Err(ProviderError::InvalidRequest(
                            "transcript embed entry has mismatched lengths".into(),
                        ));
                    }
                    vectors.extend(texts.into_iter().zip(vs));
                }
                _ => {
                    return Err(ProviderError::InvalidRequest(
                        "transcript entry pairs a request with the wrong response kind".into(),
                    ))
                }
            }
        }
        Ok(Self {
            chats: Mutex::new(chats),
            vectors,
        })
    }

    pub fn from_jsonl(text: &str) -> Result<Self, ProviderError> {
        let entries = Transcript::parse_jsonl(text)
            .map_err(|e| ProviderError::InvalidRequest(format!("bad transcript: {e}")))?;
        Self::new(entries)
    }
}

impl ChatProvider for ReplayProvider {
    fn complete(&self, request: &ChatRequest) -> Result<String, ProviderError> {
        request.check()?;
        let mut chats = self.chats.lock().expect("replay lock");
        let (responses, cursor) = chats.get_mut(&request.prompt).ok_or_else(|| {
            ProviderError::Rejected(format!(
                "prompt not in transcript: {:?}",
                request.prompt.chars().take(80).collect::<String>()
            ))
        })?;
        let idx = (*cursor).min(responses.len() - 1);
        *cursor += 1;
        Ok(responses[idx].clone())
    }
}

impl EmbeddingProvider for ReplayProvider {
    fn embed(&self, texts: &[String]) -> Result<Vec<EmbeddingVector<f64>>, ProviderError> {
        check_texts(texts)?;
        texts
            .iter()
            .map(|t| {
                self.vectors
                    .get(t)
                    .cloned()
                    .ok_or_else(|| ProviderError::Rejected(format!("text not in transcript: {t:?}")))
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::provider::{Clock, MockProvider, MockScript, Recording};

    #[test]
    fn replays_recorded_session() {
        let t = Arc::new(Transcript::new(Clock::Wall));
        let mock = MockProvider::new(MockScript::default().rule(["x"], "X").rule(["y"], "Y"));
        let rec = Recording::new(mock, t.clone());
        rec.complete(&ChatRequest::new("x")).unwrap();
        rec.complete(&ChatRequest::new("y")).unwrap();
        rec.embed(&["abc".into(), "abd".into()]).unwrap();

        let replay = ReplayProvider::from_jsonl(&t.to_jsonl()).unwrap();
        assert_eq!(replay.complete(&ChatRequest::new("y")).unwrap(), "Y");
        assert_eq!(replay.complete(&ChatRequest::new("x")).unwrap(), "X");
        let v = replay.embed(&["abd".into()]).unwrap();
        assert_eq!(v[0], rec.embed(&["abd".into()]).unwrap()[0]);
        assert!(replay.complete(&ChatRequest::new("z")).is_err());
        assert!(replay.embed(&["zzz".into()]).is_err());
    }

    #[test]
    fn repeated_prompts_answer_in_order() {
        let entries = ["first", "second"]
            .iter()
            .map(|r| TranscriptEntry {
                request: TranscriptRequest::Chat(ChatRequest::new("q")),
                response: TranscriptResponse::Text(r.to_string()),
                timestamp: 0,
            })
            .collect();
        let replay = ReplayProvider::new(entries).unwrap();
        let q = ChatRequest::new("q");
        assert_eq!(replay.complete(&q).unwrap(), "first");
        assert_eq!(replay.complete(&q).unwrap(), "second");
        assert_eq!(replay.complete(&q).unwrap(), "second");
    }
}
