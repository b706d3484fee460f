use super::{CorpusError, LabeledReview, Polarity, RawReview, ReviewText};
use crate::text::token_count;

/// Minimum share of alphabetic characters that must be ASCII letters.
pub const DEFAULT_ENGLISH_THRESHOLD: f64 = 0.9;

/// Coarse English check: at least `threshold` of the alphabetic characters are
/// ASCII letters and at least one ASCII vowel occurs.
pub fn is_english(text: &str, threshold: f64) -> bool {
    let mut alphabetic = 0usize;
    let mut ascii = 0usize;
    let mut vowel = false;
    for ch in text.chars().filter(|c| c.is_alphabetic()) {
        alphabetic += 1;
        if ch.is_ascii_alphabetic() {
            ascii += 1;
            vowel |= matches!(ch.to_ascii_lowercase(), 'a' | 'e' | 'i' | 'o' | 'u');
        }
    }
    vowel && ascii as f64 >= threshold * alphabetic as f64
}

/// Keeps English reviews in input order; returns them with the removed count.
pub fn filter_non_english<T: ReviewText>(reviews: Vec<T>, threshold: f64) -> (Vec<T>, usize) {
    let before = reviews.len();
    let kept: Vec<T> = reviews.into_iter().filter(|r| is_english(r.text(), threshold)).collect();
    let removed = before - kept.len();
    (kept, removed)
}

/// Drops the `floor(n * tail_fraction)` shortest and as many longest reviews by
/// token count. Equal lengths keep their input order, so among ties the
/// earliest are cut from the short tail and the latest from the long tail.
/// Survivors stay in input order.
pub fn trim_length_extremes<T: ReviewText>(reviews: Vec<T>, tail_fraction: f64) -> Result<Vec<T>, CorpusError> {
    if !(0.0..0.5).contains(&tail_fraction) {
        return Err(CorpusError::InvalidTailFraction(tail_fraction));
    }
    let n = reviews.len();
    let cut = (n as f64 * tail_fraction).floor() as usize;
    if cut == 0 {
        return Ok(reviews);
    }
    let mut order: Vec<(usize, usize)> = reviews.iter().map(|r| token_count(r.text())).enumerate().collect();
    order.sort_by_key(|&(_, len)| len);
    let mut keep = vec![false; n];
    for &(idx, _) in &order[cut..n - cut] {
        keep[idx] = true;
    }
    Ok(reviews.into_iter().zip(keep).filter_map(|(r, k)| k.then_some(r)).collect())
}

/// Maps a raw review to binary polarity. A binary label passes through;
/// ratings 1-2 are negative, 4-5 positive, and 3 is excluded (`None`).
pub fn standardize_labels(review: &RawReview) -> Result<Option<LabeledReview>, CorpusError> {
    let polarity = match (review.binary_label, review.rating) {
        (Some(label), _) => label,
        (None, Some(1 | 2)) => Polarity::Negative,
        (None, Some(3)) => return Ok(None),
        (None, Some(4 | 5)) => Polarity::Positive,
        (None, Some(rating)) => return Err(CorpusError::RatingOutOfRange { id: review.id.clone(), rating }),
        (None, None) => return Err(CorpusError::MissingLabel { id: review.id.clone() }),
    };
    Ok(Some(LabeledReview { id: review.id.clone(), text: review.text.clone(), polarity, source: review.source }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{Source, UnlabeledReview};
    use proptest::prelude::*;

    fn u(id: usize, text: String) -> UnlabeledReview {
        UnlabeledReview { id: id.to_string(), text }
    }

    fn of_length(len: usize) -> String {
        vec!["w"; len].join(" ")
    }

    fn rated(rating: Option<i32>, label: Option<Polarity>) -> RawReview {
        RawReview { id: "r".into(), text: "t".into(), rating, binary_label: label, source: Source::Other }
    }

    #[test]
    fn english_heuristic_by_hand() {
        // "great product": 12 alphabetic, all ASCII, has vowels -> kept.
        // "很好": 2 alphabetic, 0 ASCII -> 0 < 0.9 * 2 -> removed.
        let input = vec![u(0, "great product".into()), u(1, "很好".into())];
        let (kept, removed) = filter_non_english(input, DEFAULT_ENGLISH_THRESHOLD);
        assert_eq!(removed, 1);
        assert_eq!(kept.len(), 1);
        assert_eq!(kept[0].text, "great product");
    }

    #[test]
    fn english_edge_cases() {
        let (kept, removed) = filter_non_english(Vec::<UnlabeledReview>::new(), 0.9);
        assert!(kept.is_empty());
        assert_eq!(removed, 0);
        let all = vec![u(0, "fine".into()), u(1, "Loved it!".into())];
        assert_eq!(filter_non_english(all, 0.9).1, 0);
        // no vowel
        assert!(!is_english("brrr 123", 0.9));
        // digits only: no alphabetic characters, no vowel
        assert!(!is_english("10/10", 0.9));
        // one accented letter among many ASCII passes
        assert!(is_english("the café was lovely and quiet", 0.9));
        assert!(!is_english("très été où", 0.9));
    }

    #[test]
    fn trim_hundred_distinct_lengths() {
        let reviews: Vec<_> = (1..=100).map(|len| u(len, of_length(len))).collect();
        let kept = trim_length_extremes(reviews, 0.05).unwrap();
        assert_eq!(kept.len(), 90);
        let lengths: Vec<usize> = kept.iter().map(|r| token_count(&r.text)).collect();
        assert_eq!(*lengths.iter().min().unwrap(), 6);
        assert_eq!(*lengths.iter().max().unwrap(), 95);
    }

    #[test]
    fn trim_identity_cases() {
        let reviews: Vec<_> = (0..10).map(|i| u(i, of_length(4))).collect();
        assert_eq!(trim_length_extremes(reviews.clone(), 0.0).unwrap(), reviews);
        assert_eq!(trim_length_extremes(reviews.clone(), 0.05).unwrap(), reviews);
    }

    #[test]
    fn trim_ties_use_input_order() {
        // 20 reviews, cut 1 per tail; all length 3 except none -> first and last removed.
        let reviews: Vec<_> = (0..20).map(|i| u(i, of_length(3))).collect();
        let kept = trim_length_extremes(reviews, 0.05).unwrap();
        assert_eq!(kept.first().unwrap().id, "1");
        assert_eq!(kept.last().unwrap().id, "18");
    }

    #[test]
    fn trim_rejects_bad_fraction() {
        for f in [-0.1, 0.5, 0.7, f64::NAN] {
            assert!(matches!(
                trim_length_extremes(vec![u(0, "a".into())], f),
                Err(CorpusError::InvalidTailFraction(_))
            ));
        }
    }

    #[test]
    fn rating_map() {
        let p = |r| standardize_labels(&rated(Some(r), None)).unwrap().map(|l| l.polarity);
        assert_eq!(p(1), Some(Polarity::Negative));
        assert_eq!(p(2), Some(Polarity::Negative));
        assert_eq!(p(3), None);
        assert_eq!(p(4), Some(Polarity::Positive));
        assert_eq!(p(5), Some(Polarity::Positive));
        assert_eq!(
            standardize_labels(&rated(None, Some(Polarity::Positive))).unwrap().unwrap().polarity,
            Polarity::Positive
        );
    }

    #[test]
    fn rating_errors() {
        assert!(matches!(standardize_labels(&rated(None, None)), Err(CorpusError::MissingLabel { .. })));
        assert!(matches!(
            standardize_labels(&rated(Some(0), None)),
            Err(CorpusError::RatingOutOfRange { rating: 0, .. })
        ));
        assert!(matches!(
            standardize_labels(&rated(Some(6), None)),
            Err(CorpusError::RatingOutOfRange { rating: 6, .. })
        ));
    }

    proptest! {
        #[test]
        fn trim_output_size(lengths in proptest::collection::vec(0usize..40, 0..300), frac in 0.0f64..0.4999) {
            let n = lengths.len();
            let reviews: Vec<_> = lengths.iter().enumerate().map(|(i, &l)| u(i, of_length(l))).collect();
            let kept = trim_length_extremes(reviews, frac).unwrap();
            let cut = (n as f64 * frac).floor() as usize;
            prop_assert_eq!(kept.len(), n - 2 * cut);
        }

        #[test]
        fn neutral_never_labeled(rating in 1i32..=5) {
            let out = standardize_labels(&rated(Some(rating), None)).unwrap();
            prop_assert_eq!(out.is_none(), rating == 3);
        }
    }
}
