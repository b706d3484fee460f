use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use super::{EvalError, EvalReport, RunRecord, Summary};

/// Aggregate line for one pipeline on one dataset.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub pipeline: String,
    pub label: String,
    pub dataset: String,
    pub runs: usize,
    pub accuracy: Summary,
    pub f1: Summary,
    pub recall: Summary,
    pub vectorization_s: f64,
    pub training_s: f64,
    pub prediction_s: f64,
}

/// Flat CSV shape of [`SummaryRow`].
#[derive(Serialize, Deserialize)]
struct CsvRow {
    pipeline: String,
    label: String,
    dataset: String,
    runs: usize,
    accuracy_mean: f64,
    accuracy_std: f64,
    f1_mean: f64,
    f1_std: f64,
    recall_mean: f64,
    recall_std: f64,
    vectorization_s: f64,
    training_s: f64,
    prediction_s: f64,
}

const CSV_HEADER: [&str; 13] = [
    "pipeline",
    "label",
    "dataset",
    "runs",
    "accuracy_mean",
    "accuracy_std",
    "f1_mean",
    "f1_std",
    "recall_mean",
    "recall_std",
    "vectorization_s",
    "training_s",
    "prediction_s",
];

fn cell(s: &Summary) -> String {
    format!("{:.3}±{:.2}", s.mean, s.std)
}

/// Rows (by table label, first appearance) × datasets (report order).
type Cells = BTreeMap<(String, String), SummaryRow>;

fn grid(reports: &[EvalReport]) -> (Vec<String>, Vec<String>, Cells) {
    let mut labels: Vec<String> = Vec::new();
    let mut datasets: Vec<String> = Vec::new();
    let mut cells = BTreeMap::new();
    for report in reports {
        if !datasets.contains(&report.dataset) {
            datasets.push(report.dataset.clone());
        }
        for row in report.summaries() {
            if !labels.contains(&row.label) {
                labels.push(row.label.clone());
            }
            cells.insert((row.label.clone(), row.dataset.clone()), row);
        }
    }
    (labels, datasets, cells)
}

fn table_row(cells: impl IntoIterator<Item = String>) -> String {
    let mut line = String::from("|");
    for c in cells {
        line.push(' ');
        line.push_str(&c);
        line.push_str(" |");
    }
    line.push('\n');
    line
}

/// Accuracy / F1 Score / Recall per dataset, one row per pipeline.
pub fn emit_markdown(reports: &[EvalReport]) -> String {
    let (labels, datasets, cells) = grid(reports);
    let mut out = String::new();
    out += &table_row(
        std::iter::once("Model".to_owned())
            .chain(datasets.iter().flat_map(|d| [d.clone(), String::new(), String::new()])),
    );
    out += &table_row(std::iter::repeat_n("---".to_owned(), 1 + 3 * datasets.len()));
    out += &table_row(
        std::iter::once(String::new())
            .chain(datasets.iter().flat_map(|_| ["Accuracy", "F1 Score", "Recall"].map(String::from))),
    );
    for label in &labels {
        let values = datasets.iter().flat_map(|d| match cells.get(&(label.clone(), d.clone())) {
            Some(r) => [cell(&r.accuracy), cell(&r.f1), cell(&r.recall)],
            None => ["-".into(), "-".into(), "-".into()],
        });
        out += &table_row(std::iter::once(label.clone()).chain(values));
    }
    out
}

/// Mean stage times in seconds, one row per (pipeline, dataset).
pub fn emit_timing_markdown(reports: &[EvalReport]) -> String {
    let (labels, datasets, cells) = grid(reports);
    let mut out = table_row(
        ["Model", "Data Set", "Average Vectorization Time", "Average Training Time", "Average Prediction Time"]
            .map(String::from),
    );
    out += &table_row(std::iter::repeat_n("---".to_owned(), 5));
    for label in &labels {
        for d in &datasets {
            if let Some(r) = cells.get(&(label.clone(), d.clone())) {
                out += &table_row([
                    label.clone(),
                    d.clone(),
                    format!("{:.4}", r.vectorization_s),
                    format!("{:.4}", r.training_s),
                    format!("{:.4}", r.prediction_s),
                ]);
            }
        }
    }
    out
}

/// Baseline layout: one Acc±STD column per dataset.
pub fn emit_baseline_markdown(reports: &[EvalReport]) -> String {
    let (labels, datasets, cells) = grid(reports);
    let mut out = table_row(std::iter::once("Method".to_owned()).chain(datasets.iter().cloned()));
    out += &table_row(std::iter::repeat_n("---".to_owned(), 1 + datasets.len()));
    out += &table_row(std::iter::once(String::new()).chain(datasets.iter().map(|_| "Acc±STD".to_owned())));
    for label in &labels {
        let values = datasets
            .iter()
            .map(|d| cells.get(&(label.clone(), d.clone())).map_or("-".to_owned(), |r| cell(&r.accuracy)));
        out += &table_row(std::iter::once(label.clone()).chain(values));
    }
    out
}

/// Full-precision summary CSV; reading it back gives identical values.
pub fn emit_summary_csv(reports: &[EvalReport]) -> Result<String, EvalError> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    w.write_record(CSV_HEADER)?;
    for report in reports {
        for r in report.summaries() {
            w.serialize(CsvRow {
                pipeline: r.pipeline,
                label: r.label,
                dataset: r.dataset,
                runs: r.runs,
                accuracy_mean: r.accuracy.mean,
                accuracy_std: r.accuracy.std,
                f1_mean: r.f1.mean,
                f1_std: r.f1.std,
                recall_mean: r.recall.mean,
                recall_std: r.recall.std,
                vectorization_s: r.vectorization_s,
                training_s: r.training_s,
                prediction_s: r.prediction_s,
            })?;
        }
    }
    let bytes = w.into_inner().map_err(|e| EvalError::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

pub fn read_summary_csv(text: &str) -> Result<Vec<SummaryRow>, EvalError> {
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    reader
        .deserialize::<CsvRow>()
        .map(|row| {
            let r = row?;
            Ok(SummaryRow {
                pipeline: r.pipeline,
                label: r.label,
                dataset: r.dataset,
                runs: r.runs,
                accuracy: Summary { mean: r.accuracy_mean, std: r.accuracy_std },
                f1: Summary { mean: r.f1_mean, std: r.f1_std },
                recall: Summary { mean: r.recall_mean, std: r.recall_std },
                vectorization_s: r.vectorization_s,
                training_s: r.training_s,
                prediction_s: r.prediction_s,
            })
        })
        .collect()
}

pub fn write_records_jsonl<W: Write>(records: &[RunRecord], mut out: W) -> Result<(), EvalError> {
    for r in records {
        serde_json::to_writer(&mut out, r)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

pub fn read_records_jsonl<R: BufRead>(input: R) -> Result<Vec<RunRecord>, EvalError> {
    let mut out = Vec::new();
    for line in input.lines() {
        let line = line?;
        if !line.trim().is_empty() {
            out.push(serde_json::from_str(&line)?);
        }
    }
    Ok(out)
}

/// Provenance written beside every report.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub seed: u64,
    pub mock: bool,
    /// SHA-256 of the run configuration as loaded.
    pub config_sha256: String,
    /// Dataset name → SHA-256 of its canonical file.
    pub dataset_sha256: BTreeMap<String, String>,
    /// Component → version.
    pub versions: BTreeMap<String, String>,
    pub pipelines: Vec<String>,
    /// Output file names relative to the output directory.
    pub outputs: Vec<String>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classifiers::ClassifierKind;
    use crate::eval::{ConfusionMatrix, LabelSource, Metrics, PipelineId, Timings};

    fn record(p: &PipelineId, dataset: &str, fold: usize, cm: ConfusionMatrix, t: f64) -> RunRecord {
        RunRecord {
            pipeline: p.clone(),
            dataset: dataset.into(),
            fold,
            repeat: None,
            metrics: Metrics::from_confusion(&cm),
            confusion: cm,
            timings: Timings { vectorization_s: t, training_s: t / 10.0, prediction_s: t / 100.0, labeling_s: 0.0 },
            peak_memory_bytes: Some(1 << 20),
            train_size: 100,
            train_positive: 50,
            test_size: cm.total() as usize,
            imbalanced_training: false,
            single_class_training: false,
            bootstrap_label_accuracy: None,
        }
    }

    fn sample() -> Vec<EvalReport> {
        let lr = PipelineId::new(LabelSource::Escs, "urslm-roberta", ClassifierKind::Lr);
        let svm = PipelineId::new(LabelSource::Escs, "urslm-albert", ClassifierKind::Svm);
        let mut movie = EvalReport::new("Movie");
        movie.records.push(record(&lr, "Movie", 0, ConfusionMatrix::new(40, 10, 5, 45), 1.23456));
        movie.records.push(record(&lr, "Movie", 1, ConfusionMatrix::new(45, 5, 10, 40), 2.5));
        movie.records.push(record(&svm, "Movie", 0, ConfusionMatrix::new(30, 20, 20, 30), 0.1));
        let mut trip = EvalReport::new("TripAdvisor");
        trip.records.push(record(&lr, "TripAdvisor", 0, ConfusionMatrix::new(80, 3, 7, 10), 0.7));
        vec![movie, trip]
    }

    #[test]
    fn markdown_layout() {
        let md = emit_markdown(&sample());
        let lines: Vec<&str> = md.lines().collect();
        assert_eq!(lines[0], "| Model | Movie |  |  | TripAdvisor |  |  |");
        assert_eq!(lines[2], "|  | Accuracy | F1 Score | Recall | Accuracy | F1 Score | Recall |");
        assert!(lines[3].starts_with("| ESCS+URSLM-RoBERTa +LR | 0.850±0.00 |"));
        assert!(lines[4].starts_with("| ESCS+URSLM-ALBERT +SVM | 0.600±0.00 |"));
        assert!(lines[4].ends_with("| - | - | - |"));
    }

    #[test]
    fn timing_layout() {
        let md = emit_timing_markdown(&sample());
        assert!(md.starts_with(
            "| Model | Data Set | Average Vectorization Time | Average Training Time | Average Prediction Time |"
        ));
        assert!(md.contains("| ESCS+URSLM-RoBERTa +LR | Movie | 1.8673 | 0.1867 | 0.0187 |"));
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let reports = sample();
        let text = emit_summary_csv(&reports).unwrap();
        let back = read_summary_csv(&text).unwrap();
        let expected: Vec<SummaryRow> = reports.iter().flat_map(|r| r.summaries()).collect();
        assert_eq!(back, expected);
    }

    #[test]
    fn empty_report_has_headers_only() {
        let md = emit_markdown(&[]);
        assert_eq!(md, "| Model |\n| --- |\n|  |\n");
        let csv = emit_summary_csv(&[]).unwrap();
        assert_eq!(csv.lines().count(), 1);
        assert!(read_summary_csv(&csv).unwrap().is_empty());
    }

    #[test]
    fn records_round_trip() {
        let records = sample().remove(0).records;
        let mut buf = Vec::new();
        write_records_jsonl(&records, &mut buf).unwrap();
        assert_eq!(read_records_jsonl(&buf[..]).unwrap(), records);
    }
}
