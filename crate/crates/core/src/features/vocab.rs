use std::collections::{HashMap, HashSet};

use serde::{Deserialize, Serialize};

use super::{Backend, FeatureError, FeatureVector};
use crate::text::tokenize;

/// Fitted token statistics: index assignment (alphabetical over kept tokens)
/// and document frequencies.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(from = "VocabularyRepr", into = "VocabularyRepr")]
pub struct Vocabulary {
    tokens: Vec<String>,
    document_frequency: Vec<usize>,
    document_count: usize,
    max_features: Option<usize>,
    index: HashMap<String, usize>,
}

#[derive(Serialize, Deserialize)]
struct VocabularyRepr {
    tokens: Vec<String>,
    document_frequency: Vec<usize>,
    document_count: usize,
    max_features: Option<usize>,
}

impl From<VocabularyRepr> for Vocabulary {
    fn from(r: VocabularyRepr) -> Self {
        let index = r.tokens.iter().enumerate().map(|(i, t)| (t.clone(), i)).collect();
        Vocabulary {
            tokens: r.tokens,
            document_frequency: r.document_frequency,
            document_count: r.document_count,
            max_features: r.max_features,
            index,
        }
    }
}

impl From<Vocabulary> for VocabularyRepr {
    fn from(v: Vocabulary) -> Self {
        VocabularyRepr {
            tokens: v.tokens,
            document_frequency: v.document_frequency,
            document_count: v.document_count,
            max_features: v.max_features,
        }
    }
}

/// How raw token counts become the TF factor of TF-IDF.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TermFrequency {
    #[default]
    Raw,
    /// `1 + ln(count)` for nonzero counts.
    Log,
}

impl Vocabulary {
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn index_of(&self, token: &str) -> Option<usize> {
        self.index.get(token).copied()
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn document_frequency(&self, token: &str) -> Option<usize> {
        self.index_of(token).map(|i| self.document_frequency[i])
    }

    pub fn document_count(&self) -> usize {
        self.document_count
    }

    pub fn max_features(&self) -> Option<usize> {
        self.max_features
    }

    /// Smoothed inverse document frequency `ln((1 + N) / (1 + df)) + 1`.
    pub fn idf(&self, index: usize) -> f64 {
        let n = self.document_count as f64;
        ((1.0 + n) / (1.0 + self.document_frequency[index] as f64)).ln() + 1.0
    }

    fn counts(&self, text: &str) -> Vec<f64> {
        let mut values = vec![0.0; self.len()];
        for token in tokenize(text) {
            if let Some(i) = self.index_of(&token) {
                values[i] += 1.0;
            }
        }
        values
    }
}

/// Fits a vocabulary over `corpus`. With `max_features`, keeps the most
/// frequent tokens by total corpus count, breaking ties alphabetically.
pub fn fit_vocabulary<S: AsRef<str>>(corpus: &[S], max_features: Option<usize>) -> Result<Vocabulary, FeatureError> {
    if corpus.is_empty() {
        return Err(FeatureError::EmptyCorpus);
    }
    // token -> (total count, document frequency)
    let mut stats: HashMap<String, (usize, usize)> = HashMap::new();
    for doc in corpus {
        let mut seen = HashSet::new();
        for token in tokenize(doc.as_ref()) {
            let entry = stats.entry(token.clone()).or_default();
            entry.0 += 1;
            if seen.insert(token) {
                entry.1 += 1;
            }
        }
    }
    let mut entries: Vec<(String, usize, usize)> = stats.into_iter().map(|(t, (c, df))| (t, c, df)).collect();
    if let Some(k) = max_features {
        entries.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        entries.truncate(k);
    }
    entries.sort_by(|a, b| a.0.cmp(&b.0));
    let tokens: Vec<String> = entries.iter().map(|e| e.0.clone()).collect();
    let document_frequency = entries.iter().map(|e| e.2).collect();
    let index = tokens.iter().enumerate().map(|(i, t)| (t.clone(), i)).collect();
    Ok(Vocabulary { tokens, document_frequency, document_count: corpus.len(), max_features, index })
}

/// Raw in-vocabulary token counts; unknown tokens are ignored.
pub fn transform_bow(text: &str, vocab: &Vocabulary) -> FeatureVector {
    FeatureVector::new(vocab.counts(text), Backend::Bow)
}

/// `count * idf` per token, L2-normalized. All-zero vectors stay zero.
pub fn transform_tfidf(text: &str, vocab: &Vocabulary) -> FeatureVector {
    transform_tfidf_with(text, vocab, TermFrequency::Raw)
}

pub fn transform_tfidf_with(text: &str, vocab: &Vocabulary, tf: TermFrequency) -> FeatureVector {
    let mut values = vocab.counts(text);
    for (i, v) in values.iter_mut().enumerate() {
        if *v > 0.0 {
            let weight = match tf {
                TermFrequency::Raw => *v,
                TermFrequency::Log => 1.0 + v.ln(),
            };
            *v = weight * vocab.idf(i);
        }
    }
    let norm = values.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm > 0.0 {
        values.iter_mut().for_each(|v| *v /= norm);
    }
    FeatureVector::new(values, Backend::Tfidf)
}
