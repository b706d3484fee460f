use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{CorpusError, LabeledReview, Polarity, Source, UnlabeledReview};

/// One line of the canonical JSON-lines dataset format.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CanonicalReview {
    pub id: String,
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub polarity: Option<Polarity>,
    #[serde(default)]
    pub source: Source,
}

impl From<&LabeledReview> for CanonicalReview {
    fn from(r: &LabeledReview) -> Self {
        CanonicalReview { id: r.id.clone(), text: r.text.clone(), polarity: Some(r.polarity), source: r.source }
    }
}

impl CanonicalReview {
    pub fn unlabeled(id: impl Into<String>, text: impl Into<String>, source: Source) -> Self {
        CanonicalReview { id: id.into(), text: text.into(), polarity: None, source }
    }

    pub fn to_unlabeled(&self) -> UnlabeledReview {
        UnlabeledReview { id: self.id.clone(), text: self.text.clone() }
    }
}

/// Writes one JSON object per line, in input order.
pub fn write_canonical<W: Write>(records: &[CanonicalReview], mut out: W) -> std::io::Result<()> {
    for r in records {
        serde_json::to_writer(&mut out, r)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

pub fn read_canonical(path: &Path) -> Result<Vec<CanonicalReview>, CorpusError> {
    let file = File::open(path).map_err(|source| CorpusError::Io { path: path.to_owned(), source })?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|source| CorpusError::Io { path: path.to_owned(), source })?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: CanonicalReview = serde_json::from_str(&line).map_err(|e| CorpusError::BadRecord {
            path: path.to_owned(),
            line: i + 1,
            reason: e.to_string(),
        })?;
        out.push(rec);
    }
    Ok(out)
}

/// Reads a canonical file whose every record carries a polarity.
pub fn read_labeled(path: &Path) -> Result<Vec<LabeledReview>, CorpusError> {
    read_canonical(path)?
        .into_iter()
        .enumerate()
        .map(|(i, r)| match r.polarity {
            Some(polarity) => Ok(LabeledReview { id: r.id, text: r.text, polarity, source: r.source }),
            None => Err(CorpusError::BadRecord {
                path: path.to_owned(),
                line: i + 1,
                reason: format!("review {} has no polarity", r.id),
            }),
        })
        .collect()
}
