use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::{CorpusError, Polarity, RawReview, Source};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DatasetFormat {
    Csv,
    Jsonl,
}

/// Maps input columns (CSV headers or JSON keys) onto review fields.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SchemaMap {
    /// Column holding a stable id; row numbers are used when absent.
    #[serde(default)]
    pub id: Option<String>,
    pub text: String,
    #[serde(default)]
    pub rating: Option<String>,
    #[serde(default)]
    pub label: Option<String>,
}

#[derive(Clone, Debug)]
pub struct LoadOptions {
    pub source: Source,
    /// Malformed records tolerated, as a fraction of all records read.
    pub max_malformed_fraction: f64,
}

impl Default for LoadOptions {
    fn default() -> Self {
        LoadOptions { source: Source::Other, max_malformed_fraction: 0.01 }
    }
}

#[derive(Clone, Debug, Default)]
pub struct LoadOutcome {
    pub reviews: Vec<RawReview>,
    /// Records dropped because their text was empty after trimming.
    pub dropped_empty: usize,
    /// Records skipped as unparsable (within tolerance).
    pub malformed: usize,
}

pub fn load_dataset(
    path: &Path,
    format: DatasetFormat,
    schema: &SchemaMap,
    options: &LoadOptions,
) -> Result<LoadOutcome, CorpusError> {
    let io_err = |source| CorpusError::Io { path: path.to_owned(), source };
    let file = File::open(path).map_err(io_err)?;
    let (outcome, total) = match format {
        DatasetFormat::Csv => load_csv(file, schema, options)?,
        DatasetFormat::Jsonl => load_jsonl(BufReader::new(file), schema, options).map_err(|e| match e {
            JsonlFailure::Io(source) => CorpusError::Io { path: path.to_owned(), source },
            JsonlFailure::Corpus(e) => e,
        })?,
    };
    if outcome.malformed as f64 > options.max_malformed_fraction * total as f64 {
        return Err(CorpusError::TooManyMalformed {
            malformed: outcome.malformed,
            total,
            tolerance: options.max_malformed_fraction,
        });
    }
    if outcome.dropped_empty > 0 || outcome.malformed > 0 {
        log::info!(
            "{}: kept {}, dropped {} empty, skipped {} malformed",
            path.display(),
            outcome.reviews.len(),
            outcome.dropped_empty,
            outcome.malformed
        );
    }
    Ok(outcome)
}

fn load_csv(file: File, schema: &SchemaMap, options: &LoadOptions) -> Result<(LoadOutcome, usize), CorpusError> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(file);
    let headers = reader.headers()?.clone();
    let column = |name: &str| {
        headers.iter().position(|h| h.trim() == name).ok_or_else(|| CorpusError::MissingColumn(name.to_owned()))
    };
    let text_col = column(&schema.text)?;
    let id_col = schema.id.as_deref().map(column).transpose()?;
    let rating_col = schema.rating.as_deref().map(column).transpose()?;
    let label_col = schema.label.as_deref().map(column).transpose()?;

    let mut out = LoadOutcome::default();
    let mut total = 0;
    for (row, record) in reader.records().enumerate() {
        total += 1;
        let Ok(record) = record else {
            out.malformed += 1;
            continue;
        };
        let field = |i: usize| record.get(i).unwrap_or("");
        let rating = match rating_col.map(|i| parse_rating_str(field(i))).transpose() {
            Ok(r) => r.flatten(),
            Err(()) => {
                out.malformed += 1;
                continue;
            }
        };
        let binary_label = match label_col.map(|i| parse_label_str(field(i))).transpose() {
            Ok(l) => l.flatten(),
            Err(()) => {
                out.malformed += 1;
                continue;
            }
        };
        let text = field(text_col).trim();
        if text.is_empty() {
            out.dropped_empty += 1;
            continue;
        }
        let id = match id_col {
            Some(i) => field(i).trim().to_owned(),
            None => row.to_string(),
        };
        out.reviews.push(RawReview { id, text: text.to_owned(), rating, binary_label, source: options.source });
    }
    Ok((out, total))
}

enum JsonlFailure {
    Io(std::io::Error),
    Corpus(CorpusError),
}

fn load_jsonl<R: BufRead>(
    reader: R,
    schema: &SchemaMap,
    options: &LoadOptions,
) -> Result<(LoadOutcome, usize), JsonlFailure> {
    let mut out = LoadOutcome::default();
    let mut total = 0;
    let mut seen_id = false;
    let mut seen_rating = false;
    let mut seen_label = false;
    for (row, line) in reader.lines().enumerate() {
        let line = line.map_err(JsonlFailure::Io)?;
        if line.trim().is_empty() {
            continue;
        }
        total += 1;
        let Ok(Value::Object(obj)) = serde_json::from_str::<Value>(&line) else {
            out.malformed += 1;
            continue;
        };
        let lookup = |key: &Option<String>, seen: &mut bool| -> Option<Value> {
            let v = obj.get(key.as_deref()?)?;
            *seen = true;
            Some(v.clone())
        };
        let rating = match lookup(&schema.rating, &mut seen_rating).map(|v| parse_rating_json(&v)) {
            None => None,
            Some(Ok(r)) => r,
            Some(Err(())) => {
                out.malformed += 1;
                continue;
            }
        };
        let binary_label = match lookup(&schema.label, &mut seen_label).map(|v| parse_label_json(&v)) {
            None => None,
            Some(Ok(l)) => l,
            Some(Err(())) => {
                out.malformed += 1;
                continue;
            }
        };
        let id = match lookup(&schema.id, &mut seen_id) {
            Some(Value::String(s)) => s,
            Some(Value::Number(n)) => n.to_string(),
            Some(_) => {
                out.malformed += 1;
                continue;
            }
            None => row.to_string(),
        };
        let text = match obj.get(&schema.text) {
            Some(Value::String(s)) => s.trim(),
            Some(Value::Null) => "",
            _ => {
                out.malformed += 1;
                continue;
            }
        };
        if text.is_empty() {
            out.dropped_empty += 1;
            continue;
        }
        out.reviews.push(RawReview { id, text: text.to_owned(), rating, binary_label, source: options.source });
    }
    if total > 0 {
        for (key, seen) in [(&schema.id, seen_id), (&schema.rating, seen_rating), (&schema.label, seen_label)] {
            if let (Some(k), false) = (key, seen) {
                return Err(JsonlFailure::Corpus(CorpusError::MissingColumn(k.clone())));
            }
        }
    }
    Ok((out, total))
}

fn parse_rating_str(s: &str) -> Result<Option<i32>, ()> {
    let s = s.trim();
    if s.is_empty() {
        return Ok(None);
    }
    let v: f64 = s.parse().map_err(|_| ())?;
    integral(v).map(Some)
}

fn integral(v: f64) -> Result<i32, ()> {
    if v.fract() == 0.0 && v.abs() < i32::MAX as f64 {
        Ok(v as i32)
    } else {
        Err(())
    }
}

fn parse_rating_json(v: &Value) -> Result<Option<i32>, ()> {
    match v {
        Value::Null => Ok(None),
        Value::Number(n) => integral(n.as_f64().ok_or(())?).map(Some),
        Value::String(s) => parse_rating_str(s),
        _ => Err(()),
    }
}

fn parse_label_str(s: &str) -> Result<Option<Polarity>, ()> {
    match s.trim().to_ascii_lowercase().as_str() {
        "" => Ok(None),
        "0" | "0.0" | "neg" | "negative" | "false" => Ok(Some(Polarity::Negative)),
        "1" | "1.0" | "pos" | "positive" | "true" => Ok(Some(Polarity::Positive)),
        _ => Err(()),
    }
}

fn parse_label_json(v: &Value) -> Result<Option<Polarity>, ()> {
    match v {
        Value::Null => Ok(None),
        Value::Bool(b) => Ok(Some(Polarity::from_positive(*b))),
        Value::Number(n) => match n.as_f64() {
            Some(0.0) => Ok(Some(Polarity::Negative)),
            Some(1.0) => Ok(Some(Polarity::Positive)),
            _ => Err(()),
        },
        Value::String(s) => parse_label_str(s),
        _ => Err(()),
    }
}
