use std::collections::HashSet;

use rand::seq::SliceRandom;

use super::{BootstrapSet, LabelerError, LabelerTranscript, TranscriptEntry};
use crate::corpus::{LabeledReview, Polarity, ReviewText, Source};
use crate::labeler::Lexicon;
use crate::util::rng_for;

/// RNG stream reserved for the mock labeler's tie-breaking shuffle.
const MOCK_STREAM: u64 = 0x6d6f_636b;

/// Offline stand-in for the chat labeler.
///
/// Each review is scored with `lexicon`; scores ≥ 0 are labeled positive.
/// The `n/2` most confident reviews of each class are kept (the odd extra
/// goes to the positive side) and ties in confidence fall back to a seeded
/// shuffle. If one class runs short the other pads the set and the result
/// is flagged imbalanced. Gold labels on the pool, if any, are never read.
pub fn mock_bootstrap<T: ReviewText>(
    pool: &[T],
    n: usize,
    seed: u64,
    lexicon: &Lexicon,
) -> Result<BootstrapSet, LabelerError> {
    if n < 2 {
        return Err(LabelerError::InvalidConfig(format!("bootstrap size must be >= 2, got {n}")));
    }
    if pool.len() < n {
        return Err(LabelerError::InsufficientPool { pool: pool.len(), needed: n });
    }
    let mut ids = HashSet::new();
    for r in pool {
        if !ids.insert(r.id()) {
            return Err(LabelerError::DuplicateId(r.id().to_owned()));
        }
    }

    let mut rank: Vec<usize> = (0..pool.len()).collect();
    rank.shuffle(&mut rng_for(seed, MOCK_STREAM));
    let mut shuffle_pos = vec![0; pool.len()];
    for (pos, &i) in rank.iter().enumerate() {
        shuffle_pos[i] = pos;
    }

    let scores: Vec<f64> = pool.iter().map(|r| lexicon.score(r.text())).collect();
    let by_confidence = |positive: bool| {
        let mut idx: Vec<usize> = (0..pool.len()).filter(|&i| (scores[i] >= 0.0) == positive).collect();
        idx.sort_by(|&a, &b| scores[b].abs().total_cmp(&scores[a].abs()).then(shuffle_pos[a].cmp(&shuffle_pos[b])));
        idx
    };
    let positives = by_confidence(true);
    let negatives = by_confidence(false);

    let want_neg = n / 2;
    let want_pos = n - want_neg;
    let take_neg = want_neg.min(negatives.len()).max(n.saturating_sub(positives.len()));
    let take_pos = n - take_neg;
    let imbalanced = take_pos != want_pos;

    let mut chosen: Vec<(usize, Polarity)> = positives[..take_pos]
        .iter()
        .map(|&i| (i, Polarity::Positive))
        .chain(negatives[..take_neg].iter().map(|&i| (i, Polarity::Negative)))
        .collect();
    chosen.sort_by_key(|&(i, _)| i);

    let items: Vec<LabeledReview> = chosen
        .iter()
        .map(|&(i, polarity)| LabeledReview {
            id: pool[i].id().to_owned(),
            text: pool[i].text().to_owned(),
            polarity,
            source: Source::default(),
        })
        .collect();

    let raw: String = items.iter().map(|r| format!("{},{}\n", r.id, r.polarity.as_u8())).collect();
    let mut warnings = Vec::new();
    if imbalanced {
        warnings.push(format!(
            "pool supports only {} positive / {} negative candidates; set has {take_pos} / {take_neg}",
            positives.len(),
            negatives.len()
        ));
    }
    let transcript = LabelerTranscript {
        entries: vec![TranscriptEntry {
            timestamp_ms: None,
            chunk: 0,
            attempt: 0,
            mode: "mock".into(),
            request_messages: Vec::new(),
            raw_response: Some(raw),
            error: None,
            warnings,
            usage: None,
        }],
    };
    Ok(BootstrapSet { items, transcript, imbalanced })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::UnlabeledReview;

    fn review(id: usize, text: &str) -> UnlabeledReview {
        UnlabeledReview { id: format!("u{id}"), text: text.into() }
    }

    #[test]
    fn balanced_selection_by_confidence() {
        let lex = Lexicon::from_pairs([("good", 1.0), ("bad", -1.0)]);
        let pool = vec![
            review(0, "good"),
            review(1, "good good good"),
            review(2, "bad bad"),
            review(3, "bad"),
            review(4, "good good"),
            review(5, "bad bad bad"),
        ];
        let set = mock_bootstrap(&pool, 4, 0, &lex).unwrap();
        let ids: Vec<&str> = set.items.iter().map(|r| r.id.as_str()).collect();
        assert_eq!(ids, ["u1", "u2", "u4", "u5"]);
        assert!(!set.imbalanced);
        assert_eq!(set.items[1].polarity, Polarity::Negative);
    }

    #[test]
    fn one_sided_pool_is_flagged() {
        let lex = Lexicon::from_pairs([("good", 1.0)]);
        let pool: Vec<_> = (0..10).map(|i| review(i, "good")).collect();
        let set = mock_bootstrap(&pool, 6, 3, &lex).unwrap();
        assert_eq!(set.items.len(), 6);
        assert!(set.items.iter().all(|r| r.polarity == Polarity::Positive));
        assert!(set.imbalanced);
        assert_eq!(set.transcript.entries[0].warnings.len(), 1);
    }

    #[test]
    fn seed_breaks_ties_deterministically() {
        let lex = Lexicon::from_pairs([("good", 1.0), ("bad", -1.0)]);
        let pool: Vec<_> = (0..40).map(|i| review(i, if i % 2 == 0 { "good" } else { "bad" })).collect();
        let a = mock_bootstrap(&pool, 10, 7, &lex).unwrap();
        let b = mock_bootstrap(&pool, 10, 7, &lex).unwrap();
        assert_eq!(a.items, b.items);
        let c = mock_bootstrap(&pool, 10, 8, &lex).unwrap();
        assert_ne!(a.items, c.items);
    }

    #[test]
    fn preconditions() {
        let lex = Lexicon::default_english();
        let pool = vec![review(0, "a"), review(1, "b")];
        assert!(matches!(mock_bootstrap(&pool, 3, 0, &lex), Err(LabelerError::InsufficientPool { .. })));
        let dup = vec![review(0, "a"), review(0, "b")];
        assert!(matches!(mock_bootstrap(&dup, 2, 0, &lex), Err(LabelerError::DuplicateId(_))));
    }
}
