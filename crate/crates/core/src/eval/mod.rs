//! Metrics, the cross-validation and baseline harnesses, and report output.

mod harness;
mod metrics;
mod report;

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::classifiers::{ClassifierError, ClassifierKind};
use crate::corpus::CorpusError;
use crate::features::FeatureError;
use crate::labeler::{LabelerError, LabelerTranscript};

pub use harness::{
    baseline_run, cross_validate, label_fold, BaselineOptions, CvOptions, LabelerSpec, NoopObserver, PipelineSpec,
    Stage, StageObserver,
};
pub use metrics::{accuracy, aggregate, confusion, confusion_from_bits, f1, recall, ConfusionMatrix, Metrics, Summary};
pub use report::{
    emit_baseline_markdown, emit_markdown, emit_summary_csv, emit_timing_markdown, read_records_jsonl,
    read_summary_csv, write_records_jsonl, RunManifest, SummaryRow,
};

#[derive(Debug, thiserror::Error)]
pub enum EvalError {
    #[error("{truth} true labels but {predicted} predictions")]
    LengthMismatch { truth: usize, predicted: usize },
    #[error("label {0} is outside {{0,1}}")]
    InvalidLabel(u8),
    #[error("empty input")]
    EmptyInput,
    #[error("cross-validation needs k >= 2, got {0}")]
    InvalidK(usize),
    #[error("fold plan does not cover the dataset")]
    PlanMismatch,
    #[error("fold {fold}: {stage} input contains held-out id {id:?}")]
    Leakage { fold: usize, stage: Stage, id: String },
    #[error("fold {fold}: requested {requested} training samples but only {available} are available")]
    InsufficientTraining { fold: usize, requested: usize, available: usize },
    #[error("no bootstrap set supplied for fold {0}")]
    MissingBootstrap(usize),
    #[error("fold {fold} failed: {source}")]
    Fold {
        fold: usize,
        #[source]
        source: Box<EvalError>,
        /// Records of the folds that completed.
        partial: Vec<RunRecord>,
    },
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Labeler(#[from] LabelerError),
    #[error(transparent)]
    Feature(#[from] FeatureError),
    #[error(transparent)]
    Classifier(#[from] ClassifierError),
    #[error("report csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("{0}")]
    Io(#[from] std::io::Error),
    #[error("records json: {0}")]
    Json(#[from] serde_json::Error),
}

/// How the training labels were obtained.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LabelSource {
    /// The live chat-completion labeler.
    Escs,
    /// The offline lexicon mock standing in for the live labeler.
    Mock,
    /// Randomly sampled gold labels (baselines).
    Gold,
}

/// Identifies a (labeler, featurizer, classifier) combination.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PipelineId {
    pub labels: LabelSource,
    pub featurizer: String,
    pub classifier: ClassifierKind,
}

/// Display name for a featurizer identifier.
pub fn featurizer_label(name: &str) -> String {
    match name.to_ascii_lowercase().as_str() {
        "bow" => "BoW".into(),
        "tfidf" => "TFIDF".into(),
        "urslm-roberta" => "URSLM-RoBERTa".into(),
        "urslm-albert" => "URSLM-ALBERT".into(),
        "roberta" | "roberta-base" => "RoBERTa".into(),
        "albert" | "albert-base-v2" => "ALBERT".into(),
        _ => name.to_owned(),
    }
}

impl PipelineId {
    pub fn new(labels: LabelSource, featurizer: impl Into<String>, classifier: ClassifierKind) -> Self {
        PipelineId { labels, featurizer: featurizer.into(), classifier }
    }

    /// Compact identifier, e.g. `ESCS+URSLM-RoBERTa+LR` or `TFIDF-SVM`.
    pub fn row_id(&self) -> String {
        let feat = featurizer_label(&self.featurizer);
        match self.labels {
            LabelSource::Escs => format!("ESCS+{feat}+{}", self.classifier),
            LabelSource::Mock => format!("ESCS-mock+{feat}+{}", self.classifier),
            LabelSource::Gold => format!("{feat}-{}", self.classifier),
        }
    }

    /// Row label as printed in the results tables, e.g. `ESCS+URSLM-RoBERTa +LR`.
    pub fn table_label(&self) -> String {
        let feat = featurizer_label(&self.featurizer);
        match self.labels {
            LabelSource::Escs => format!("ESCS+{feat} +{}", self.classifier),
            LabelSource::Mock => format!("ESCS-mock+{feat} +{}", self.classifier),
            LabelSource::Gold => format!("{feat}-{}", self.classifier),
        }
    }
}

impl fmt::Display for PipelineId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.row_id())
    }
}

/// Wall-clock seconds spent in each stage of one run.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Timings {
    /// Featurizer fitting plus train and test transformation.
    pub vectorization_s: f64,
    pub training_s: f64,
    pub prediction_s: f64,
    #[serde(default)]
    pub labeling_s: f64,
}

/// Outcome of one train/evaluate run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub pipeline: PipelineId,
    pub dataset: String,
    pub fold: usize,
    /// Baseline resample index; absent for bootstrap runs.
    pub repeat: Option<usize>,
    pub metrics: Metrics,
    pub confusion: ConfusionMatrix,
    pub timings: Timings,
    /// Process peak RSS after the run, if the OS reports it.
    pub peak_memory_bytes: Option<u64>,
    pub train_size: usize,
    pub train_positive: usize,
    pub test_size: usize,
    /// The bootstrap set missed the balance requirement.
    #[serde(default)]
    pub imbalanced_training: bool,
    /// Training labels had one class; a constant predictor was used.
    #[serde(default)]
    pub single_class_training: bool,
    /// Agreement of bootstrap labels with gold labels, measured after labeling.
    #[serde(default)]
    pub bootstrap_label_accuracy: Option<f64>,
}

impl RunRecord {
    /// Copy with timing and memory fields zeroed, for reproducibility checks.
    pub fn without_measurements(&self) -> RunRecord {
        RunRecord { timings: Timings::default(), peak_memory_bytes: None, ..self.clone() }
    }
}

/// All runs of one or more pipelines on one dataset.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub dataset: String,
    pub records: Vec<RunRecord>,
    /// Labeler transcripts by fold (live runs only).
    #[serde(skip)]
    pub transcripts: Vec<(usize, LabelerTranscript)>,
}

impl EvalReport {
    pub fn new(dataset: impl Into<String>) -> Self {
        EvalReport { dataset: dataset.into(), records: Vec::new(), transcripts: Vec::new() }
    }

    pub fn merge(&mut self, other: EvalReport) {
        self.records.extend(other.records);
        self.transcripts.extend(other.transcripts);
    }

    /// Pipelines in order of first appearance.
    pub fn pipelines(&self) -> Vec<PipelineId> {
        let mut out: Vec<PipelineId> = Vec::new();
        for r in &self.records {
            if !out.contains(&r.pipeline) {
                out.push(r.pipeline.clone());
            }
        }
        out
    }

    /// Per-pipeline aggregates. Baseline repeats are averaged within each
    /// fold first, so the ± spread is always across folds.
    pub fn summaries(&self) -> Vec<SummaryRow> {
        self.pipelines()
            .into_iter()
            .map(|p| {
                let records: Vec<&RunRecord> = self.records.iter().filter(|r| r.pipeline == p).collect();
                let mut folds: Vec<usize> = records.iter().map(|r| r.fold).collect();
                folds.sort_unstable();
                folds.dedup();
                let per_fold = |f: &dyn Fn(&RunRecord) -> f64| -> Vec<f64> {
                    folds
                        .iter()
                        .map(|&fold| {
                            let vals: Vec<f64> = records.iter().filter(|r| r.fold == fold).map(|r| f(r)).collect();
                            vals.iter().sum::<f64>() / vals.len() as f64
                        })
                        .collect()
                };
                let summary = |f: &dyn Fn(&RunRecord) -> f64| aggregate(&per_fold(f)).expect("pipeline has records");
                let mean = |f: &dyn Fn(&RunRecord) -> f64| summary(f).mean;
                SummaryRow {
                    pipeline: p.row_id(),
                    label: p.table_label(),
                    dataset: self.dataset.clone(),
                    runs: records.len(),
                    accuracy: summary(&|r| r.metrics.accuracy),
                    f1: summary(&|r| r.metrics.f1),
                    recall: summary(&|r| r.metrics.recall),
                    vectorization_s: mean(&|r| r.timings.vectorization_s),
                    training_s: mean(&|r| r.timings.training_s),
                    prediction_s: mean(&|r| r.timings.prediction_s),
                }
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pipeline_labels() {
        let p = PipelineId::new(LabelSource::Escs, "urslm-roberta", ClassifierKind::Lr);
        assert_eq!(p.row_id(), "ESCS+URSLM-RoBERTa+LR");
        assert_eq!(p.table_label(), "ESCS+URSLM-RoBERTa +LR");
        assert_eq!(PipelineId::new(LabelSource::Gold, "tfidf", ClassifierKind::Svm).row_id(), "TFIDF-SVM");
        assert_eq!(PipelineId::new(LabelSource::Gold, "roberta-base", ClassifierKind::Rf).table_label(), "RoBERTa-RF");
        assert_eq!(PipelineId::new(LabelSource::Mock, "bow", ClassifierKind::Dt).row_id(), "ESCS-mock+BoW+DT");
    }
}
