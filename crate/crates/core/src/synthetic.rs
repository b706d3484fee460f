//! Seeded synthetic review corpora with a known polarity rule.
//!
//! Every review mixes neutral filler with words from a [`Lexicon`]; its gold
//! label is the sign of the lexicon score, which is never zero. The generator
//! is the ground truth for desk experiments where real datasets are absent.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{LabeledReview, Polarity, RawReview, Source};
use crate::labeler::Lexicon;
use crate::util::rng_for;

const FILLER: &[&str] = &[
    "the",
    "a",
    "this",
    "that",
    "it",
    "was",
    "is",
    "and",
    "but",
    "with",
    "for",
    "of",
    "to",
    "in",
    "on",
    "we",
    "i",
    "they",
    "my",
    "our",
    "product",
    "item",
    "hotel",
    "room",
    "movie",
    "film",
    "story",
    "staff",
    "service",
    "price",
    "order",
    "delivery",
    "box",
    "screen",
    "battery",
    "night",
    "day",
    "week",
    "time",
    "place",
    "food",
    "actor",
    "plot",
    "ending",
    "size",
    "color",
    "material",
    "shipping",
    "package",
    "seller",
    "stay",
    "view",
    "breakfast",
    "location",
    "music",
    "scene",
    "camera",
    "phone",
    "book",
    "chapter",
    "after",
    "before",
    "during",
    "really",
    "quite",
    "very",
    "just",
    "also",
    "again",
    "still",
    "overall",
    "first",
    "second",
    "bought",
    "watched",
    "used",
    "arrived",
    "looked",
    "felt",
    "seemed",
    "came",
    "went",
    "family",
    "friends",
    "kids",
    "weekend",
    "trip",
];

const STREAM: u64 = 0x7379_6e74;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SyntheticConfig {
    pub n: usize,
    pub positive_fraction: f64,
    pub min_tokens: usize,
    pub max_tokens: usize,
    /// Probability that a review also contains one word of the opposite class.
    pub contrary_probability: f64,
    /// Share of a review's tokens drawn from its own class's cue words (at least one).
    pub cue_fraction: f64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        SyntheticConfig {
            n: 5000,
            positive_fraction: 0.5,
            min_tokens: 8,
            max_tokens: 40,
            contrary_probability: 0.3,
            cue_fraction: 0.25,
        }
    }
}

/// Generates `config.n` labeled reviews; identical output for identical inputs.
pub fn synthetic_corpus(config: &SyntheticConfig, seed: u64, lexicon: &Lexicon) -> Vec<LabeledReview> {
    let pos = lexicon.positive_words();
    let neg = lexicon.negative_words();
    assert!(!pos.is_empty() && !neg.is_empty(), "lexicon needs words of both signs");
    let min_len = config.min_tokens.max(2);
    let max_len = config.max_tokens.max(min_len);
    let mut rng = rng_for(seed, STREAM);

    (0..config.n)
        .map(|i| {
            let positive = rng.gen_bool(config.positive_fraction.clamp(0.0, 1.0));
            let (own, other) = if positive { (&pos, &neg) } else { (&neg, &pos) };
            let len = rng.gen_range(min_len..=max_len);
            let mut words: Vec<&str> = Vec::with_capacity(len + 4);
            let cue_count = ((len as f64 * config.cue_fraction.clamp(0.0, 1.0)).round() as usize).clamp(1, len);
            for _ in 0..cue_count {
                words.push(own.choose(&mut rng).unwrap());
            }
            if rng.gen_bool(config.contrary_probability.clamp(0.0, 1.0)) {
                words.push(other.choose(&mut rng).unwrap());
            }
            while words.len() < len {
                words.push(FILLER.choose(&mut rng).unwrap());
            }
            words.shuffle(&mut rng);
            // top up with cue words until the score has the intended sign
            let sign = if positive { 1.0 } else { -1.0 };
            while sign * lexicon.score(&words.join(" ")) <= 0.0 {
                words.push(own.choose(&mut rng).unwrap());
            }
            let text = words.join(" ");
            let polarity = Polarity::from_positive(lexicon.score(&text) > 0.0);
            LabeledReview { id: format!("syn-{i:06}"), text, polarity, source: Source::Other }
        })
        .collect()
}

/// Raw 1–5 star reviews built on [`synthetic_corpus`]: positives get 4–5
/// stars, negatives 1–2, and `neutral_fraction` of reviews are relabeled 3.
pub fn synthetic_rated(
    config: &SyntheticConfig,
    seed: u64,
    lexicon: &Lexicon,
    neutral_fraction: f64,
) -> Vec<RawReview> {
    let mut rng = rng_for(seed, STREAM + 1);
    synthetic_corpus(config, seed, lexicon)
        .into_iter()
        .map(|r| {
            let rating = if rng.gen_bool(neutral_fraction.clamp(0.0, 1.0)) {
                3
            } else if r.polarity.is_positive() {
                rng.gen_range(4..=5)
            } else {
                rng.gen_range(1..=2)
            };
            RawReview { id: r.id, text: r.text, rating: Some(rating), binary_label: None, source: r.source }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::text::token_count;

    #[test]
    fn cue_fraction_sets_cue_density() {
        let lex = Lexicon::default_english();
        let share = |cue_fraction: f64| {
            let cfg = SyntheticConfig { n: 400, contrary_probability: 0.0, cue_fraction, ..SyntheticConfig::default() };
            let (cues, tokens) = synthetic_corpus(&cfg, 5, &lex).iter().fold((0usize, 0usize), |(c, t), r| {
                let words: Vec<&str> = r.text.split(' ').collect();
                (c + words.iter().filter(|w| lex.weight(w) != 0.0).count(), t + words.len())
            });
            cues as f64 / tokens as f64
        };
        let sparse = share(0.0);
        let dense = share(0.25);
        assert!(sparse < 0.1, "{sparse}");
        assert!((dense - 0.25).abs() < 0.03, "{dense}");
    }

    #[test]
    fn labels_follow_the_lexicon_rule() {
        let lex = Lexicon::default_english();
        let cfg = SyntheticConfig { n: 500, ..SyntheticConfig::default() };
        let corpus = synthetic_corpus(&cfg, 1, &lex);
        assert_eq!(corpus.len(), 500);
        for r in &corpus {
            let score = lex.score(&r.text);
            assert!(score != 0.0);
            assert_eq!(r.polarity.is_positive(), score > 0.0);
            assert!(token_count(&r.text) >= cfg.min_tokens);
        }
        let pos = corpus.iter().filter(|r| r.polarity.is_positive()).count();
        assert!((200..300).contains(&pos), "{pos}");
    }

    #[test]
    fn deterministic_and_seed_sensitive() {
        let lex = Lexicon::default_english();
        let cfg = SyntheticConfig { n: 50, ..SyntheticConfig::default() };
        assert_eq!(synthetic_corpus(&cfg, 4, &lex), synthetic_corpus(&cfg, 4, &lex));
        assert_ne!(synthetic_corpus(&cfg, 4, &lex), synthetic_corpus(&cfg, 5, &lex));
    }

    #[test]
    fn ratings_agree_with_polarity() {
        let lex = Lexicon::default_english();
        let cfg = SyntheticConfig { n: 300, ..SyntheticConfig::default() };
        let labeled = synthetic_corpus(&cfg, 2, &lex);
        let rated = synthetic_rated(&cfg, 2, &lex, 0.1);
        let mut neutral = 0;
        for (l, r) in labeled.iter().zip(&rated) {
            assert_eq!(l.text, r.text);
            match r.rating.unwrap() {
                3 => neutral += 1,
                s => assert_eq!(s >= 4, l.polarity.is_positive()),
            }
        }
        assert!(neutral > 0 && neutral < 80);
    }
}
