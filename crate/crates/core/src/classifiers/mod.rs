//! The four downstream classifiers and a uniform train/predict wrapper.
//!
//! Labels enter as [`Polarity`]; the SVM maps them to ±1 internally and back
//! on prediction. All models are plain data: immutable after training,
//! `Send + Sync`, and persistable as versioned JSON.

pub mod forest;
pub mod logreg;
pub mod svm;
pub mod tree;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::corpus::Polarity;

pub use forest::{predict_forest, train_forest, vote, ForestConfig, ForestModel};
pub use logreg::{predict_logreg, sigmoid, train_logreg, LogisticConfig, LogisticModel};
pub use svm::{predict_svm, rbf_kernel, train_svm, Gamma, SvmConfig, SvmModel};
pub use tree::{train_tree, Node, TreeConfig, TreeModel};

/// Current on-disk model format.
pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Debug, thiserror::Error)]
pub enum ClassifierError {
    #[error("feature dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("{x} feature rows but {y} labels")]
    LengthMismatch { x: usize, y: usize },
    #[error("need at least {required} training samples, got {got}")]
    TooFewSamples { required: usize, got: usize },
    #[error("training labels contain a single class")]
    SingleClass,
    #[error("non-finite feature value or loss")]
    NonFinite,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("unsupported model format version {0}")]
    UnsupportedFormat(u32),
    #[error("model document: {0}")]
    Json(#[from] serde_json::Error),
}

/// Validates a training set and returns its feature dimension.
pub(crate) fn check_training(x: &[Vec<f64>], y: &[Polarity], min_samples: usize) -> Result<usize, ClassifierError> {
    if x.len() != y.len() {
        return Err(ClassifierError::LengthMismatch { x: x.len(), y: y.len() });
    }
    if x.len() < min_samples.max(1) {
        return Err(ClassifierError::TooFewSamples { required: min_samples.max(1), got: x.len() });
    }
    let dim = x[0].len();
    for row in x {
        if row.len() != dim {
            return Err(ClassifierError::DimensionMismatch { expected: dim, got: row.len() });
        }
        if row.iter().any(|v| !v.is_finite()) {
            return Err(ClassifierError::NonFinite);
        }
    }
    Ok(dim)
}

pub(crate) fn require_both_classes(y: &[Polarity]) -> Result<(), ClassifierError> {
    let positives = y.iter().filter(|p| p.is_positive()).count();
    if positives == 0 || positives == y.len() {
        return Err(ClassifierError::SingleClass);
    }
    Ok(())
}

pub(crate) fn check_dim(expected: usize, x: &[f64]) -> Result<(), ClassifierError> {
    if x.len() != expected {
        return Err(ClassifierError::DimensionMismatch { expected, got: x.len() });
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClassifierKind {
    Svm,
    Dt,
    Rf,
    Lr,
}

impl ClassifierKind {
    pub const ALL: [ClassifierKind; 4] =
        [ClassifierKind::Svm, ClassifierKind::Dt, ClassifierKind::Rf, ClassifierKind::Lr];

    /// Short table label: SVM, DT, RF, LR.
    pub fn label(self) -> &'static str {
        match self {
            ClassifierKind::Svm => "SVM",
            ClassifierKind::Dt => "DT",
            ClassifierKind::Rf => "RF",
            ClassifierKind::Lr => "LR",
        }
    }
}

impl fmt::Display for ClassifierKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for ClassifierKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "svm" => Ok(ClassifierKind::Svm),
            "dt" | "tree" => Ok(ClassifierKind::Dt),
            "rf" | "forest" => Ok(ClassifierKind::Rf),
            "lr" | "logreg" => Ok(ClassifierKind::Lr),
            other => Err(format!("unknown classifier {other:?} (expected svm, dt, rf or lr)")),
        }
    }
}

/// A classifier choice with its hyperparameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ClassifierSpec {
    Svm(SvmConfig),
    Dt(TreeConfig),
    Rf(ForestConfig),
    Lr(LogisticConfig),
}

impl ClassifierSpec {
    /// Default hyperparameters for `kind`; the forest takes `seed`.
    pub fn default_for(kind: ClassifierKind, seed: u64) -> Self {
        match kind {
            ClassifierKind::Svm => ClassifierSpec::Svm(SvmConfig::default()),
            ClassifierKind::Dt => ClassifierSpec::Dt(TreeConfig::default()),
            ClassifierKind::Rf => ClassifierSpec::Rf(ForestConfig { seed, ..ForestConfig::default() }),
            ClassifierKind::Lr => ClassifierSpec::Lr(LogisticConfig::default()),
        }
    }

    pub fn kind(&self) -> ClassifierKind {
        match self {
            ClassifierSpec::Svm(_) => ClassifierKind::Svm,
            ClassifierSpec::Dt(_) => ClassifierKind::Dt,
            ClassifierSpec::Rf(_) => ClassifierKind::Rf,
            ClassifierSpec::Lr(_) => ClassifierKind::Lr,
        }
    }

    /// Same spec with any internal seed replaced.
    pub fn reseeded(&self, seed: u64) -> Self {
        match self {
            ClassifierSpec::Rf(cfg) => ClassifierSpec::Rf(ForestConfig { seed, ..cfg.clone() }),
            other => other.clone(),
        }
    }

    pub fn train(&self, x: &[Vec<f64>], y: &[Polarity]) -> Result<TrainedModel, ClassifierError> {
        Ok(match self {
            ClassifierSpec::Svm(cfg) => TrainedModel::Svm(train_svm(x, y, cfg)?),
            ClassifierSpec::Dt(cfg) => TrainedModel::Dt(train_tree(x, y, cfg)?),
            ClassifierSpec::Rf(cfg) => TrainedModel::Rf(train_forest(x, y, cfg)?),
            ClassifierSpec::Lr(cfg) => TrainedModel::Lr(train_logreg(x, y, cfg)?),
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum TrainedModel {
    Svm(SvmModel),
    Dt(TreeModel),
    Rf(ForestModel),
    Lr(LogisticModel),
}

impl TrainedModel {
    pub fn kind(&self) -> ClassifierKind {
        match self {
            TrainedModel::Svm(_) => ClassifierKind::Svm,
            TrainedModel::Dt(_) => ClassifierKind::Dt,
            TrainedModel::Rf(_) => ClassifierKind::Rf,
            TrainedModel::Lr(_) => ClassifierKind::Lr,
        }
    }

    pub fn predict(&self, x: &[f64]) -> Result<Polarity, ClassifierError> {
        match self {
            TrainedModel::Svm(m) => m.predict(x),
            TrainedModel::Dt(m) => m.predict(x),
            TrainedModel::Rf(m) => m.predict(x),
            TrainedModel::Lr(m) => m.predict(x).map(|(c, _)| c),
        }
    }

    pub fn predict_all(&self, x: &[Vec<f64>]) -> Result<Vec<Polarity>, ClassifierError> {
        x.iter().map(|row| self.predict(row)).collect()
    }

    pub fn to_json(&self) -> Result<String, ClassifierError> {
        let doc = ModelDocument { format_version: MODEL_FORMAT_VERSION, model: self.clone() };
        Ok(serde_json::to_string(&doc)?)
    }

    pub fn from_json(text: &str) -> Result<Self, ClassifierError> {
        let doc: ModelDocument = serde_json::from_str(text)?;
        if doc.format_version != MODEL_FORMAT_VERSION {
            return Err(ClassifierError::UnsupportedFormat(doc.format_version));
        }
        Ok(doc.model)
    }
}

/// Versioned wrapper written to disk.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ModelDocument {
    pub format_version: u32,
    pub model: TrainedModel,
}
