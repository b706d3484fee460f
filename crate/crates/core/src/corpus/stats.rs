use serde::{Deserialize, Serialize};

use super::{Polarity, ReviewText};
use crate::text::token_count;

/// Histogram bucket width in tokens.
pub const DEFAULT_BUCKET_WIDTH: usize = 10;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct HistogramBucket {
    /// Inclusive lower bound in tokens.
    pub start: usize,
    /// Exclusive upper bound in tokens.
    pub end: usize,
    pub count: usize,
}

impl HistogramBucket {
    pub fn label(&self) -> String {
        format!("{}-{}", self.start, self.end - 1)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LabelDistribution {
    pub positive: f64,
    pub negative: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub count: usize,
    /// Contiguous buckets from the shortest to the longest observed review.
    pub length_histogram: Vec<HistogramBucket>,
    /// Present only when at least one review carries a label.
    pub label_distribution: Option<LabelDistribution>,
}

pub fn compute_stats<T: ReviewText>(reviews: &[T]) -> CorpusStats {
    compute_stats_with_width(reviews, DEFAULT_BUCKET_WIDTH)
}

pub fn compute_stats_with_width<T: ReviewText>(reviews: &[T], bucket_width: usize) -> CorpusStats {
    let width = bucket_width.max(1);
    let lengths: Vec<usize> = reviews.iter().map(|r| token_count(r.text())).collect();
    let length_histogram = match (lengths.iter().min(), lengths.iter().max()) {
        (Some(&lo), Some(&hi)) => {
            let (first, last) = (lo / width, hi / width);
            let mut counts = vec![0usize; last - first + 1];
            for &len in &lengths {
                counts[len / width - first] += 1;
            }
            counts
                .into_iter()
                .enumerate()
                .map(|(i, count)| {
                    let start = (first + i) * width;
                    HistogramBucket { start, end: start + width, count }
                })
                .collect()
        }
        _ => Vec::new(),
    };

    let (mut pos, mut neg) = (0usize, 0usize);
    for p in reviews.iter().filter_map(ReviewText::polarity) {
        match p {
            Polarity::Positive => pos += 1,
            Polarity::Negative => neg += 1,
        }
    }
    let labeled = pos + neg;
    let label_distribution = (labeled > 0)
        .then(|| LabelDistribution { positive: pos as f64 / labeled as f64, negative: neg as f64 / labeled as f64 });
    CorpusStats { count: reviews.len(), length_histogram, label_distribution }
}

impl CorpusStats {
    /// `bucket,count` CSV.
    pub fn histogram_csv(&self) -> String {
        let mut out = String::from("bucket,count\n");
        for b in &self.length_histogram {
            out.push_str(&format!("{},{}\n", b.label(), b.count));
        }
        out
    }

    /// `label,fraction` CSV; headers only for unlabeled corpora.
    pub fn label_csv(&self) -> String {
        let mut out = String::from("label,fraction\n");
        if let Some(d) = self.label_distribution {
            out.push_str(&format!("positive,{}\nnegative,{}\n", d.positive, d.negative));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{LabeledReview, Source, UnlabeledReview};
    use proptest::prelude::*;

    fn labeled(i: usize, positive: bool, len: usize) -> LabeledReview {
        LabeledReview {
            id: i.to_string(),
            text: vec!["w"; len].join(" "),
            polarity: Polarity::from_positive(positive),
            source: Source::Service,
        }
    }

    #[test]
    fn tripadvisor_like_split() {
        let reviews: Vec<_> = (0..100).map(|i| labeled(i, i < 83, 5)).collect();
        let d = compute_stats(&reviews).label_distribution.unwrap();
        assert!((d.positive - 0.83).abs() < 1e-12);
        assert!((d.negative - 0.17).abs() < 1e-12);
        assert!((d.positive + d.negative - 1.0).abs() < 1e-9);
    }

    #[test]
    fn unlabeled_has_no_distribution() {
        let r = vec![UnlabeledReview { id: "a".into(), text: "one two".into() }];
        let s = compute_stats(&r);
        assert!(s.label_distribution.is_none());
        assert_eq!(s.label_csv(), "label,fraction\n");
    }

    #[test]
    fn single_review_histogram() {
        let s = compute_stats(&[labeled(0, true, 7)]);
        assert_eq!(s.length_histogram, vec![HistogramBucket { start: 0, end: 10, count: 1 }]);
        assert_eq!(s.histogram_csv(), "bucket,count\n0-9,1\n");
    }

    #[test]
    fn empty_corpus() {
        let s = compute_stats::<LabeledReview>(&[]);
        assert_eq!(s.count, 0);
        assert!(s.length_histogram.is_empty());
    }

    #[test]
    fn gaps_are_filled() {
        let s = compute_stats(&[labeled(0, true, 3), labeled(1, false, 31)]);
        let counts: Vec<usize> = s.length_histogram.iter().map(|b| b.count).collect();
        assert_eq!(counts, vec![1, 0, 0, 1]);
        assert_eq!(s.length_histogram[3].label(), "30-39");
    }

    proptest! {
        #[test]
        fn histogram_total(lengths in proptest::collection::vec(0usize..120, 0..200)) {
            let reviews: Vec<_> = lengths.iter().enumerate().map(|(i, &l)| labeled(i, i % 3 == 0, l)).collect();
            let s = compute_stats(&reviews);
            prop_assert_eq!(s.length_histogram.iter().map(|b| b.count).sum::<usize>(), reviews.len());
        }
    }
}
