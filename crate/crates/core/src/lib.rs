//! Zero-manual-label sentiment classification for user reviews.
//!
//! A chat-completion model selects and labels a small bootstrap training set
//! from an unlabeled pool, review texts are turned into fixed-length vectors
//! (bag-of-words, TF-IDF, or a remote embedding service), and four classical
//! classifiers are trained on the bootstrap set and evaluated under k-fold
//! cross-validation against gold labels.
//!
//! Modules:
//!
//! * [`corpus`]: ingestion, preprocessing, label standardization, splits and folds.
//! * [`labeler`]: the bootstrap labeling protocol plus a deterministic offline mock.
//! * [`features`]: vocabularies, BoW/TF-IDF transforms and the embedding client.
//! * [`classifiers`]: logistic regression, RBF SVM (SMO), decision tree, random forest.
//! * [`eval`]: metrics, cross-validation and baseline harnesses, reports.
//! * [`synthetic`]: seeded synthetic polarity corpora for desk experiments.

pub mod classifiers;
pub mod corpus;
pub mod error;
pub mod eval;
pub mod features;
mod http;
pub mod labeler;
pub mod synthetic;
pub mod testing;
pub mod text;
mod util;

pub use corpus::{FoldPlan, LabeledReview, Polarity, RawReview, Source, UnlabeledReview};
pub use error::{Error, Result};
pub use util::{peak_rss_bytes, sha256_hex};

/// Version of this crate, recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
