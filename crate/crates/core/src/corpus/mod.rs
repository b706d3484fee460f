//! Review ingestion and dataset preparation.
//!
//! The preparation workflow is `load -> filter_non_english -> trim_length_extremes
//! -> standardize_labels -> sample_split`, producing an unlabeled domain corpus
//! and a labeled experimental dataset, plus k-fold plans for evaluation.

mod io;
mod load;
mod preprocess;
mod split;
mod stats;

use std::fmt;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

pub use io::{read_canonical, read_labeled, write_canonical, CanonicalReview};
pub use load::{load_dataset, DatasetFormat, LoadOptions, LoadOutcome, SchemaMap};
pub use preprocess::{
    filter_non_english, is_english, standardize_labels, trim_length_extremes, DEFAULT_ENGLISH_THRESHOLD,
};
pub use split::{make_folds, sample_split, sample_split_where, FoldMode, FoldPlan};
pub use stats::{
    compute_stats, compute_stats_with_width, CorpusStats, HistogramBucket, LabelDistribution, DEFAULT_BUCKET_WIDTH,
};

/// Binary sentiment: `0` negative, `1` positive.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub enum Polarity {
    Negative = 0,
    Positive = 1,
}

impl Polarity {
    pub fn as_u8(self) -> u8 {
        self as u8
    }

    pub fn is_positive(self) -> bool {
        self == Polarity::Positive
    }

    /// `-1.0` / `+1.0` encoding used by margin-based learners.
    pub fn signed(self) -> f64 {
        match self {
            Polarity::Negative => -1.0,
            Polarity::Positive => 1.0,
        }
    }

    pub fn from_positive(positive: bool) -> Self {
        if positive {
            Polarity::Positive
        } else {
            Polarity::Negative
        }
    }
}

impl TryFrom<u8> for Polarity {
    type Error = String;

    fn try_from(value: u8) -> std::result::Result<Self, Self::Error> {
        match value {
            0 => Ok(Polarity::Negative),
            1 => Ok(Polarity::Positive),
            other => Err(format!("polarity must be 0 or 1, got {other}")),
        }
    }
}

impl From<Polarity> for u8 {
    fn from(p: Polarity) -> u8 {
        p as u8
    }
}

impl fmt::Display for Polarity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.as_u8())
    }
}

/// Industry the reviews come from.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Source {
    Retail,
    Service,
    Cultural,
    #[default]
    Other,
}

/// A review as ingested, before label standardization.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RawReview {
    pub id: String,
    pub text: String,
    /// Star rating, nominally 1-5.
    pub rating: Option<i32>,
    pub binary_label: Option<Polarity>,
    pub source: Source,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabeledReview {
    pub id: String,
    pub text: String,
    pub polarity: Polarity,
    #[serde(default)]
    pub source: Source,
}

/// A review with its label removed; the only shape the labeler ever sees.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct UnlabeledReview {
    pub id: String,
    pub text: String,
}

impl From<&LabeledReview> for UnlabeledReview {
    fn from(r: &LabeledReview) -> Self {
        UnlabeledReview { id: r.id.clone(), text: r.text.clone() }
    }
}

impl From<&RawReview> for UnlabeledReview {
    fn from(r: &RawReview) -> Self {
        UnlabeledReview { id: r.id.clone(), text: r.text.clone() }
    }
}

/// Common read access over the review shapes.
pub trait ReviewText {
    fn id(&self) -> &str;
    fn text(&self) -> &str;
    /// Binary polarity if the review carries (or implies) one.
    fn polarity(&self) -> Option<Polarity> {
        None
    }
}

impl ReviewText for RawReview {
    fn id(&self) -> &str {
        &self.id
    }
    fn text(&self) -> &str {
        &self.text
    }
    fn polarity(&self) -> Option<Polarity> {
        standardize_labels(self).ok().flatten().map(|l| l.polarity)
    }
}

impl ReviewText for LabeledReview {
    fn id(&self) -> &str {
        &self.id
    }
    fn text(&self) -> &str {
        &self.text
    }
    fn polarity(&self) -> Option<Polarity> {
        Some(self.polarity)
    }
}

impl ReviewText for UnlabeledReview {
    fn id(&self) -> &str {
        &self.id
    }
    fn text(&self) -> &str {
        &self.text
    }
}

impl ReviewText for CanonicalReview {
    fn id(&self) -> &str {
        &self.id
    }
    fn text(&self) -> &str {
        &self.text
    }
    fn polarity(&self) -> Option<Polarity> {
        self.polarity
    }
}

#[derive(Debug, thiserror::Error)]
pub enum CorpusError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("missing column `{0}`")]
    MissingColumn(String),
    #[error("{malformed} of {total} records malformed (tolerance {tolerance})")]
    TooManyMalformed { malformed: usize, total: usize, tolerance: f64 },
    #[error("tail fraction {0} outside [0, 0.5)")]
    InvalidTailFraction(f64),
    #[error("review {id} has neither a rating nor a binary label")]
    MissingLabel { id: String },
    #[error("review {id} has rating {rating} outside 1-5")]
    RatingOutOfRange { id: String, rating: i32 },
    #[error("insufficient data: requested {requested}, available {available}")]
    InsufficientData { requested: usize, available: usize },
    #[error("cannot make {k} folds over {n} reviews (need 2 <= k <= n)")]
    InvalidFoldCount { k: usize, n: usize },
    #[error("duplicate review id `{0}`")]
    DuplicateId(String),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("{path}:{line}: {reason}")]
    BadRecord { path: PathBuf, line: usize, reason: String },
}
