//! Token embedding providers: a deterministic mock for offline runs and
//! tests, a strict orthogonal mock for exact fixtures, and an HTTP client
//! for real embedding endpoints.

use std::collections::HashMap;
use std::sync::Mutex;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rng::{fnv1a64, SplitMix64};
use crate::tokenizer::TokenSeq;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EmbedError {
    #[error("missing bearer token: environment variable {env} is not set")]
    Auth { env: String },
    #[error("transport failure talking to embedding endpoint: {0}")]
    Transport(String),
    #[error("embedding endpoint returned status {status}: {body}")]
    Endpoint { status: u16, body: String },
    #[error("malformed embedding response: {0}")]
    BadResponse(String),
    #[error("orthogonal embedder ran out of axes: dimension {dimension} exhausted")]
    VocabularyExhausted { dimension: usize },
}

/// One fixed-dimension vector per token, in token order. Implementations
/// must be safe for concurrent calls.
pub trait EmbeddingProvider: Send + Sync {
    fn embed(&self, tokens: &TokenSeq) -> Result<Vec<Vec<f64>>, EmbedError>;
}

/// Context-free deterministic provider: each distinct token maps to a
/// pseudo-random unit vector with strictly positive components, derived
/// from (token, seed). Identical tokens get identical vectors across calls.
#[derive(Debug, Clone)]
pub struct MockEmbedder {
    dimension: usize,
    seed: u64,
}

impl MockEmbedder {
    pub fn new(dimension: usize, seed: u64) -> Self {
        assert!(dimension >= 2, "mock embedder needs dimension >= 2");
        Self { dimension, seed }
    }

    fn vector_for(&self, token: &str) -> Vec<f64> {
        let mut key = self.seed.to_le_bytes().to_vec();
        key.extend_from_slice(token.as_bytes());
        let mut rng = SplitMix64::new(fnv1a64(&key));
        let mut v: Vec<f64> = (0..self.dimension).map(|_| 1e-3 + rng.next_f64()).collect();
        let norm: f64 = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        for x in &mut v {
            *x /= norm;
        }
        v
    }
}

/// Builds a [`MockEmbedder`].
pub fn mock_embedder(dimension: usize, seed: u64) -> MockEmbedder {
    MockEmbedder::new(dimension, seed)
}

impl EmbeddingProvider for MockEmbedder {
    fn embed(&self, tokens: &TokenSeq) -> Result<Vec<Vec<f64>>, EmbedError> {
        Ok(tokens.tokens().iter().map(|t| self.vector_for(t)).collect())
    }
}

/// Maps each distinct token to its own basis vector, in arrival order, so
/// distinct tokens are exactly orthogonal and identical tokens identical.
/// Errors once more than `dimension` distinct tokens have been seen.
pub struct OrthogonalEmbedder {
    dimension: usize,
    assigned: Mutex<HashMap<String, usize>>,
}

impl OrthogonalEmbedder {
    pub fn new(dimension: usize) -> Self {
        assert!(dimension >= 2, "orthogonal embedder needs dimension >= 2");
        Self {
            dimension,
            assigned: Mutex::new(HashMap::new()),
        }
    }
}

impl EmbeddingProvider for OrthogonalEmbedder {
    fn embed(&self, tokens: &TokenSeq) -> Result<Vec<Vec<f64>>, EmbedError> {
        let mut assigned = self.assigned.lock().expect("embedder lock poisoned");
        let mut out = Vec::with_capacity(tokens.len());
        for token in tokens.tokens() {
            let next = assigned.len();
            let axis = *assigned.entry(token.clone()).or_insert(next);
            if axis >= self.dimension {
                return Err(EmbedError::VocabularyExhausted {
                    dimension: self.dimension,
                });
            }
            let mut v = vec![0.0; self.dimension];
            v[axis] = 1.0;
            out.push(v);
        }
        Ok(out)
    }
}

/// Client for an HTTP embedding endpoint: POST `{"inputs": [tokens...]}`,
/// response is an array of equal-length real vectors, one per token.
/// Bearer auth comes from the named environment variable when set.
pub struct HttpEmbedder {
    url: String,
    auth_env: Option<String>,
    timeout_ms: u64,
}

impl HttpEmbedder {
    pub fn new(url: impl Into<String>, auth_env: Option<String>) -> Self {
        Self {
            url: url.into(),
            auth_env,
            timeout_ms: 30_000,
        }
    }

    pub fn with_timeout_ms(mut self, timeout_ms: u64) -> Self {
        self.timeout_ms = timeout_ms;
        self
    }
}

impl EmbeddingProvider for HttpEmbedder {
    fn embed(&self, tokens: &TokenSeq) -> Result<Vec<Vec<f64>>, EmbedError> {
        let token = match &self.auth_env {
            None => None,
            Some(env) => Some(
                std::env::var(env).map_err(|_| EmbedError::Auth { env: env.clone() })?,
            ),
        };
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_millis(self.timeout_ms))
            .build()
            .map_err(|e| EmbedError::Transport(e.to_string()))?;
        let mut request = client
            .post(&self.url)
            .json(&serde_json::json!({ "inputs": tokens.tokens() }));
        if let Some(token) = token {
            request = request.bearer_auth(token);
        }
        let response = request
            .send()
            .map_err(|e| EmbedError::Transport(e.to_string()))?;
        let status = response.status().as_u16();
        let body = response
            .text()
            .map_err(|e| EmbedError::Transport(e.to_string()))?;
        if !(200..300).contains(&status) {
            return Err(EmbedError::Endpoint { status, body });
        }
        let vectors: Vec<Vec<f64>> = serde_json::from_str(&body)
            .map_err(|e| EmbedError::BadResponse(format!("{e}: {body}")))?;
        if vectors.len() != tokens.len() {
            return Err(EmbedError::BadResponse(format!(
                "expected {} vectors, got {}",
                tokens.len(),
                vectors.len()
            )));
        }
        if let Some(first) = vectors.first() {
            let d = first.len();
            if d == 0 || vectors.iter().any(|v| v.len() != d) {
                return Err(EmbedError::BadResponse(
                    "vectors must share one non-zero dimension".into(),
                ));
            }
        }
        Ok(vectors)
    }
}

/// Serializable provider selection, persisted in run configs and run-log
/// headers so scoring can be reproduced from disk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "provider", rename_all = "snake_case")]
pub enum EmbeddingSpec {
    Mock { dimension: usize, seed: u64 },
    Orthogonal { dimension: usize },
    Http { url: String, auth_env: Option<String> },
}

impl Default for EmbeddingSpec {
    fn default() -> Self {
        EmbeddingSpec::Mock {
            dimension: 16,
            seed: 0,
        }
    }
}

impl EmbeddingSpec {
    pub fn build(&self) -> Box<dyn EmbeddingProvider> {
        match self {
            EmbeddingSpec::Mock { dimension, seed } => {
                Box::new(MockEmbedder::new(*dimension, *seed))
            }
            EmbeddingSpec::Orthogonal { dimension } => {
                Box::new(OrthogonalEmbedder::new(*dimension))
            }
            EmbeddingSpec::Http { url, auth_env } => {
                Box::new(HttpEmbedder::new(url.clone(), auth_env.clone()))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tokenizer::tokenize;

    #[test]
    fn mock_embedder_is_deterministic() {
        let a = MockEmbedder::new(8, 42);
        let b = MockEmbedder::new(8, 42);
        let seq = tokenize("alpha beta alpha");
        let va = a.embed(&seq).unwrap();
        let vb = b.embed(&seq).unwrap();
        assert_eq!(va, vb);
        // Identical tokens get identical vectors.
        assert_eq!(va[0], va[2]);
        assert_ne!(va[0], va[1]);
    }

    #[test]
    fn mock_embedder_shapes_and_norms() {
        let provider = MockEmbedder::new(5, 0);
        let vectors = provider.embed(&tokenize("a b")).unwrap();
        assert_eq!(vectors.len(), 2);
        for v in &vectors {
            assert_eq!(v.len(), 5);
            let norm: f64 = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            assert!((norm - 1.0).abs() < 1e-12);
            assert!(v.iter().all(|x| *x > 0.0));
        }
    }

    #[test]
    fn mock_embedder_self_similarity_is_one() {
        let provider = MockEmbedder::new(8, 9);
        let v = provider.embed(&tokenize("token")).unwrap();
        let dot: f64 = v[0].iter().map(|x| x * x).sum();
        assert!((dot - 1.0).abs() < 1e-12);
    }

    #[test]
    fn different_seeds_give_different_vectors() {
        let a = MockEmbedder::new(8, 1).embed(&tokenize("x")).unwrap();
        let b = MockEmbedder::new(8, 2).embed(&tokenize("x")).unwrap();
        assert_ne!(a, b);
    }

    #[test]
    fn orthogonal_embedder_assigns_axes() {
        let provider = OrthogonalEmbedder::new(4);
        let v = provider.embed(&tokenize("a b a")).unwrap();
        assert_eq!(v[0], v[2]);
        let dot: f64 = v[0].iter().zip(&v[1]).map(|(x, y)| x * y).sum();
        assert_eq!(dot, 0.0);
        // A second call reuses assignments.
        let w = provider.embed(&tokenize("b")).unwrap();
        assert_eq!(w[0], v[1]);
    }

    #[test]
    fn orthogonal_embedder_exhausts() {
        let provider = OrthogonalEmbedder::new(2);
        let err = provider.embed(&tokenize("a b c")).unwrap_err();
        assert_eq!(err, EmbedError::VocabularyExhausted { dimension: 2 });
    }

    #[test]
    fn embedding_spec_round_trips_and_builds() {
        let spec = EmbeddingSpec::Mock {
            dimension: 8,
            seed: 3,
        };
        let json = serde_json::to_string(&spec).unwrap();
        assert_eq!(serde_json::from_str::<EmbeddingSpec>(&json).unwrap(), spec);
        let provider = spec.build();
        assert_eq!(provider.embed(&tokenize("a b")).unwrap().len(), 2);
    }
}
