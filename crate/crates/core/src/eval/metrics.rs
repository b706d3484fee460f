use serde::{Deserialize, Serialize};

use super::EvalError;
use crate::corpus::Polarity;

/// Binary confusion counts with class 1 as the positive class.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub tp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub fp: u64,
    pub tn: u64,
}

impl ConfusionMatrix {
    pub fn new(tp: u64, fn_: u64, fp: u64, tn: u64) -> Self {
        ConfusionMatrix { tp, fn_, fp, tn }
    }

    pub fn total(&self) -> u64 {
        self.tp + self.fn_ + self.fp + self.tn
    }

    pub fn predicted_positive(&self) -> u64 {
        self.tp + self.fp
    }

    pub fn add(&mut self, other: &ConfusionMatrix) {
        self.tp += other.tp;
        self.fn_ += other.fn_;
        self.fp += other.fp;
        self.tn += other.tn;
    }
}

pub fn confusion(y_true: &[Polarity], y_pred: &[Polarity]) -> Result<ConfusionMatrix, EvalError> {
    if y_true.len() != y_pred.len() {
        return Err(EvalError::LengthMismatch { truth: y_true.len(), predicted: y_pred.len() });
    }
    if y_true.is_empty() {
        return Err(EvalError::EmptyInput);
    }
    let mut cm = ConfusionMatrix::default();
    for (t, p) in y_true.iter().zip(y_pred) {
        match (t.is_positive(), p.is_positive()) {
            (true, true) => cm.tp += 1,
            (true, false) => cm.fn_ += 1,
            (false, true) => cm.fp += 1,
            (false, false) => cm.tn += 1,
        }
    }
    Ok(cm)
}

/// [`confusion`] over raw 0/1 labels; any other value is an error.
pub fn confusion_from_bits(y_true: &[u8], y_pred: &[u8]) -> Result<ConfusionMatrix, EvalError> {
    let convert = |v: &[u8]| {
        v.iter().map(|&b| Polarity::try_from(b).map_err(|_| EvalError::InvalidLabel(b))).collect::<Result<Vec<_>, _>>()
    };
    confusion(&convert(y_true)?, &convert(y_pred)?)
}

/// `(tp + tn) / total`.
pub fn accuracy(cm: &ConfusionMatrix) -> f64 {
    let total = cm.total();
    if total == 0 {
        0.0
    } else {
        (cm.tp + cm.tn) as f64 / total as f64
    }
}

/// `tp / (tp + fn)`; `None` when there are no actual positives.
pub fn recall(cm: &ConfusionMatrix) -> Option<f64> {
    let denom = cm.tp + cm.fn_;
    (denom > 0).then(|| cm.tp as f64 / denom as f64)
}

/// `2tp / (2tp + fp + fn)`; `None` when the denominator is zero.
pub fn f1(cm: &ConfusionMatrix) -> Option<f64> {
    let denom = 2 * cm.tp + cm.fp + cm.fn_;
    (denom > 0).then(|| 2.0 * cm.tp as f64 / denom as f64)
}

/// Undefined recall or F1 is stored as 0.0 with its flag set.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub accuracy: f64,
    pub recall: f64,
    pub f1: f64,
    #[serde(default)]
    pub recall_undefined: bool,
    #[serde(default)]
    pub f1_undefined: bool,
}

impl Metrics {
    pub fn from_confusion(cm: &ConfusionMatrix) -> Self {
        let r = recall(cm);
        let f = f1(cm);
        Metrics {
            accuracy: accuracy(cm),
            recall: r.unwrap_or(0.0),
            f1: f.unwrap_or(0.0),
            recall_undefined: r.is_none(),
            f1_undefined: f.is_none(),
        }
    }
}

/// Mean and sample standard deviation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mean: f64,
    pub std: f64,
}

/// Arithmetic mean and (n−1) standard deviation; a single value has std 0.
pub fn aggregate(values: &[f64]) -> Result<Summary, EvalError> {
    if values.is_empty() {
        return Err(EvalError::EmptyInput);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.iter().all(|v| *v == values[0]) {
        return Ok(Summary { mean: values[0], std: 0.0 });
    }
    let mean = mean.clamp(
        values.iter().copied().fold(f64::INFINITY, f64::min),
        values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
    );
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    Ok(Summary { mean, std: var.sqrt() })
}
