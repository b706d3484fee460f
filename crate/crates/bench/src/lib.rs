//! Shared fixtures for the criterion benches.

use zerolabel_core::labeler::Lexicon;
use zerolabel_core::synthetic::{synthetic_corpus, SyntheticConfig};
use zerolabel_core::LabeledReview;

/// A deterministic synthetic corpus of `n` labeled reviews.
pub fn corpus(n: usize) -> Vec<LabeledReview> {
    let config = SyntheticConfig { n, ..SyntheticConfig::default() };
    synthetic_corpus(&config, 7, &Lexicon::default_english())
}
