use serde::{Deserialize, Serialize};

use super::{check_texts, ChatProvider, ChatRequest, EmbeddingProvider, EmbeddingVector, ProviderError};

pub const MOCK_EMBEDDING_DIM: usize = 256;

/// Responds with `respond` when the prompt contains every string in `contains`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MockRule {
    #[serde(default)]
    pub contains: Vec<String>,
    pub respond: String,
}

/// Ordered rules, first match wins; `fallback` answers anything unmatched.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MockScript {
    #[serde(default)]
    pub rules: Vec<MockRule>,
    #[serde(default)]
    pub fallback: Option<String>,
}

impl MockScript {
    pub fn always(response: impl Into<String>) -> Self {
        Self {
            rules: Vec::new(),
            fallback: Some(response.into()),
        }
    }

    pub fn rule<S: Into<String>>(
        mut self,
        contains: impl IntoIterator<Item = S>,
        respond: impl Into<String>,
    ) -> Self {
        self.rules.push(MockRule {
            contains: contains.into_iter().map(Into::into).collect(),
            respond: respond.into(),
        });
        self
    }

    pub fn respond_to(&self, prompt: &str) -> Option<&str> {
        self.rules
            .iter()
            .find(|r| r.contains.iter().all(|c| prompt.contains(c.as_str())))
            .map(|r| r.respond.as_str())
            .or(self.fallback.as_deref())
    }
}

/// Deterministic provider: chat answers come from a [`MockScript`],
/// embeddings from [`HashingEmbedder`].
#[derive(Clone, Debug, Default)]
pub struct MockProvider {
    script: MockScript,
    embedder: HashingEmbedder,
}

impl MockProvider {
    pub fn new(script: MockScript) -> Self {
        Self {
            script,
            embedder: HashingEmbedder::default(),
        }
    }

    pub fn from_json(json: &str) -> Result<Self, serde_json::Error> {
        Ok(Self::new(serde_json::from_str(json)?))
    }
}

impl ChatProvider for MockProvider {
    fn complete(&self, request: &ChatRequest) -> Result<String, ProviderError> {
        request.check()?;
        self.script
            .respond_to(&request.prompt)
            .map(str::to_string)
            .ok_or_else(|| ProviderError::Rejected("mock script has no rule for this prompt".into()))
    }
}

impl EmbeddingProvider for MockProvider {
    fn embed(&self, texts: &[String]) -> Result<Vec<EmbeddingVector<f64>>, ProviderError> {
        self.embedder.embed(texts)
    }
}

/// L2-normalised feature hashing of lowercase character trigrams.
///
/// Texts shorter than three characters hash as a single gram. Bucket index
/// is FNV-1a (64 bit) of the gram's UTF-8 bytes modulo the dimension.
#[derive(Clone, Copy, Debug)]
pub struct HashingEmbedder {
    pub dim: usize,
}

impl Default for HashingEmbedder {
    fn default() -> Self {
        Self {
            dim: MOCK_EMBEDDING_DIM,
        }
    }
}

pub(crate) fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

impl HashingEmbedder {
    pub fn embed_one(&self, text: &str) -> EmbeddingVector<f64> {
        let chars: Vec<char> = text.to_lowercase().chars().collect();
        let mut v = vec![0.0f64; self.dim];
        let mut gram = String::new();
        let mut bump = |g: &[char]| {
            gram.clear();
            gram.extend(g);
            v[(fnv1a(gram.as_bytes()) % self.dim as u64) as usize] += 1.0;
        };
        if chars.len() < 3 {
            bump(&chars);
        } else {
            chars.windows(3).for_each(&mut bump);
        }
        let norm = crate::num::l2_norm(&v);
        if norm > 0.0 {
            v.iter_mut().for_each(|x| *x /= norm);
        }
        EmbeddingVector::new(v)
    }
}

impl EmbeddingProvider for HashingEmbedder {
    fn embed(&self, texts: &[String]) -> Result<Vec<EmbeddingVector<f64>>, ProviderError> {
        check_texts(texts)?;
        Ok(texts.iter().map(|t| self.embed_one(t)).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scripted_text_is_returned_verbatim() {
        let m = MockProvider::new(MockScript::always(r#"{"indicators":["a","b"]}"#));
        assert_eq!(
            m.complete(&ChatRequest::new("anything")).unwrap(),
            r#"{"indicators":["a","b"]}"#
        );
    }

    #[test]
    fn rules_match_in_order() {
        let script = MockScript::default()
            .rule(["alpha", "beta"], "both")
            .rule(["alpha"], "one")
            .rule(Vec::<String>::new(), "catch-all");
        assert_eq!(script.respond_to("alpha beta"), Some("both"));
        assert_eq!(script.respond_to("alpha"), Some("one"));
        assert_eq!(script.respond_to("gamma"), Some("catch-all"));
        assert_eq!(MockScript::default().respond_to("x"), None);
    }

    #[test]
    fn empty_prompt_rejected_before_call() {
        let m = MockProvider::new(MockScript::always("x"));
        assert!(matches!(
            m.complete(&ChatRequest::new("  ")),
            Err(ProviderError::InvalidRequest(_))
        ));
    }

    #[test]
    fn unmatched_prompt_is_rejected() {
        let m = MockProvider::new(MockScript::default());
        assert!(matches!(
            m.complete(&ChatRequest::new("x")),
            Err(ProviderError::Rejected(_))
        ));
    }

    #[test]
    fn single_trigram_is_one_hot() {
        // "abc" has exactly one trigram, so the vector is a unit basis vector
        let e = HashingEmbedder::default();
        let v = e.embed_one("abc");
        let bucket = (fnv1a(b"abc") % 256) as usize;
        assert_eq!(v.values[bucket], 1.0);
        assert_eq!(v.values.iter().filter(|&&x| x != 0.0).count(), 1);
        assert!((v.norm() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn identical_strings_identical_vectors() {
        let e = HashingEmbedder::default();
        let out = e
            .embed(&["Keep away from them".into(), "keep away from them".into()])
            .unwrap();
        assert_eq!(out[0], out[1]);
        assert!((out[0].cosine(&out[1]) - 1.0).abs() < 1e-12);
        assert_eq!(out[0].dim(), MOCK_EMBEDDING_DIM);
    }

    #[test]
    fn empty_inputs_rejected() {
        let e = HashingEmbedder::default();
        assert!(matches!(e.embed(&[]), Err(ProviderError::InvalidRequest(_))));
        assert!(matches!(e.embed(&["".into()]), Err(ProviderError::InvalidRequest(_))));
    }

    #[test]
    fn fnv_reference_values() {
        assert_eq!(fnv1a(b""), 0xcbf29ce484222325);
        assert_eq!(fnv1a(b"a"), 0xaf63dc4c8601ec8c);
    }
}
