use std::collections::BTreeMap;

use crate::text::tokenize;

const DEFAULT_LEXICON: &str = include_str!("../../resources/lexicon.tsv");

/// Token → signed polarity strength. Positive weights mark positive words.
#[derive(Clone, Debug, PartialEq)]
pub struct Lexicon {
    weights: BTreeMap<String, f64>,
}

impl Lexicon {
    /// The bundled English lexicon (40 positive and 40 negative words).
    pub fn default_english() -> Self {
        Self::from_tsv(DEFAULT_LEXICON).expect("bundled lexicon parses")
    }

    /// Parses `token<TAB>weight` lines; `#` starts a comment line.
    pub fn from_tsv(text: &str) -> Result<Self, String> {
        let mut weights = BTreeMap::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (token, weight) = line
                .split_once(char::is_whitespace)
                .ok_or_else(|| format!("line {}: expected `token weight`", n + 1))?;
            let weight: f64 = weight.trim().parse().map_err(|_| format!("line {}: bad weight {weight:?}", n + 1))?;
            if !weight.is_finite() {
                return Err(format!("line {}: weight must be finite", n + 1));
            }
            weights.insert(token.to_lowercase(), weight);
        }
        Ok(Lexicon { weights })
    }

    pub fn from_pairs<I, S>(pairs: I) -> Self
    where
        I: IntoIterator<Item = (S, f64)>,
        S: Into<String>,
    {
        Lexicon { weights: pairs.into_iter().map(|(t, w)| (t.into(), w)).collect() }
    }

    pub fn weight(&self, token: &str) -> f64 {
        self.weights.get(token).copied().unwrap_or(0.0)
    }

    /// Sum of token weights over the shared tokenizer's output.
    pub fn score(&self, text: &str) -> f64 {
        tokenize(text).iter().map(|t| self.weight(t)).sum()
    }

    pub fn positive_words(&self) -> Vec<&str> {
        self.weights.iter().filter(|(_, &w)| w > 0.0).map(|(t, _)| t.as_str()).collect()
    }

    pub fn negative_words(&self) -> Vec<&str> {
        self.weights.iter().filter(|(_, &w)| w < 0.0).map(|(t, _)| t.as_str()).collect()
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
}
