//! Review texts to fixed-length vectors.
//!
//! Three interchangeable backends: bag-of-words counts, TF-IDF, and a remote
//! embedding service. [`Featurizer`] fits one of them on training texts and
//! yields a [`FittedFeaturizer`] that transforms any text.

mod embedding;
mod vocab;

use std::path::PathBuf;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

pub use embedding::{
    CacheRecord, EmbedRequest, EmbedResponse, EmbeddingBackendConfig, EmbeddingClient, EmbeddingTransport,
    HealthResponse, HttpEmbeddingTransport,
};
pub use vocab::{fit_vocabulary, transform_bow, transform_tfidf, transform_tfidf_with, TermFrequency, Vocabulary};

/// Default vocabulary cap for the BoW/TF-IDF baselines.
pub const DEFAULT_MAX_FEATURES: usize = 5000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Backend {
    Bow,
    Tfidf,
    Embedding,
}

/// A dense feature vector tagged with the backend that produced it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub values: Vec<f64>,
    pub backend: Backend,
}

impl FeatureVector {
    pub fn new(values: Vec<f64>, backend: Backend) -> Self {
        FeatureVector { values, backend }
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn l2_norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

#[derive(Debug, thiserror::Error)]
pub enum FeatureError {
    #[error("cannot fit a vocabulary on an empty corpus")]
    EmptyCorpus,
    #[error("embedding service timed out")]
    Timeout,
    #[error("embedding service unreachable: {0}")]
    Transport(String),
    #[error("embedding service returned status {status}: {body}")]
    ServiceStatus { status: u16, body: String },
    #[error("malformed embedding response: {0}")]
    BadResponse(String),
    #[error("embedding dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("embedding service returned {got} vectors for {expected} texts")]
    CountMismatch { expected: usize, got: usize },
    #[error("embedding cache {path}: {source}")]
    Cache {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{0}")]
    Config(String),
}

/// An unfitted featurizer choice.
#[derive(Clone, Debug)]
pub enum Featurizer {
    Bow {
        max_features: Option<usize>,
    },
    Tfidf {
        max_features: Option<usize>,
        tf: TermFrequency,
    },
    /// Embeddings from a remote service; `name` identifies the encoder (e.g. `urslm-roberta`).
    Embedding {
        name: String,
        client: Arc<EmbeddingClient>,
    },
}

impl Featurizer {
    pub fn bow() -> Self {
        Featurizer::Bow { max_features: Some(DEFAULT_MAX_FEATURES) }
    }

    pub fn tfidf() -> Self {
        Featurizer::Tfidf { max_features: Some(DEFAULT_MAX_FEATURES), tf: TermFrequency::Raw }
    }

    /// Short lowercase identifier: `bow`, `tfidf`, or the embedder name.
    pub fn name(&self) -> &str {
        match self {
            Featurizer::Bow { .. } => "bow",
            Featurizer::Tfidf { .. } => "tfidf",
            Featurizer::Embedding { name, .. } => name,
        }
    }

    /// Fits on training texts only. Embedding backends have nothing to fit.
    pub fn fit<S: AsRef<str>>(&self, train_texts: &[S]) -> Result<FittedFeaturizer, FeatureError> {
        Ok(match self {
            Featurizer::Bow { max_features } => FittedFeaturizer::Bow(fit_vocabulary(train_texts, *max_features)?),
            Featurizer::Tfidf { max_features, tf } => {
                FittedFeaturizer::Tfidf(fit_vocabulary(train_texts, *max_features)?, *tf)
            }
            Featurizer::Embedding { client, .. } => FittedFeaturizer::Embedding(Arc::clone(client)),
        })
    }
}

#[derive(Debug)]
pub enum FittedFeaturizer {
    Bow(Vocabulary),
    Tfidf(Vocabulary, TermFrequency),
    Embedding(Arc<EmbeddingClient>),
}

impl FittedFeaturizer {
    pub fn transform<S: AsRef<str>>(&self, texts: &[S]) -> Result<Vec<FeatureVector>, FeatureError> {
        match self {
            FittedFeaturizer::Bow(v) => Ok(texts.iter().map(|t| transform_bow(t.as_ref(), v)).collect()),
            FittedFeaturizer::Tfidf(v, tf) => {
                Ok(texts.iter().map(|t| transform_tfidf_with(t.as_ref(), v, *tf)).collect())
            }
            FittedFeaturizer::Embedding(client) => client.embed(texts),
        }
    }
}
