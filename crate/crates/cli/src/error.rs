use std::fmt;

use zerolabel_core::corpus::CorpusError;
use zerolabel_core::eval::EvalError;
use zerolabel_core::features::FeatureError;
use zerolabel_core::labeler::LabelerError;
use zerolabel_core::Error as CoreError;

/// A failed command. The variant fixes the process exit code.
#[derive(Debug)]
pub enum CliError {
    /// A pipeline stage failed while running (exit 1).
    Runtime(String),
    /// An input file is missing, unreadable or malformed, or an output cannot be written (exit 2).
    Input(String),
    /// The configuration is invalid or a required secret is missing (exit 3).
    Config(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Runtime(_) => 1,
            CliError::Input(_) => 2,
            CliError::Config(_) => 3,
        }
    }

    pub fn io(path: &std::path::Path, err: impl fmt::Display) -> Self {
        CliError::Input(format!("{}: {err}", path.display()))
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Runtime(m) | CliError::Input(m) | CliError::Config(m) => f.write_str(m),
        }
    }
}

impl std::error::Error for CliError {}

impl From<CorpusError> for CliError {
    fn from(e: CorpusError) -> Self {
        match e {
            CorpusError::Io { .. }
            | CorpusError::MissingColumn(_)
            | CorpusError::TooManyMalformed { .. }
            | CorpusError::BadRecord { .. }
            | CorpusError::Csv(_)
            | CorpusError::DuplicateId(_)
            | CorpusError::MissingLabel { .. }
            | CorpusError::RatingOutOfRange { .. } => CliError::Input(e.to_string()),
            CorpusError::InvalidTailFraction(_) | CorpusError::InvalidFoldCount { .. } => {
                CliError::Config(e.to_string())
            }
            CorpusError::InsufficientData { .. } => CliError::Runtime(e.to_string()),
        }
    }
}

impl From<LabelerError> for CliError {
    fn from(e: LabelerError) -> Self {
        match e {
            LabelerError::MissingApiKey { .. } | LabelerError::InvalidConfig(_) | LabelerError::Auth { .. } => {
                CliError::Config(e.to_string())
            }
            _ => CliError::Runtime(e.to_string()),
        }
    }
}

impl From<FeatureError> for CliError {
    fn from(e: FeatureError) -> Self {
        match e {
            FeatureError::Config(_) => CliError::Config(e.to_string()),
            _ => CliError::Runtime(e.to_string()),
        }
    }
}

impl From<EvalError> for CliError {
    fn from(e: EvalError) -> Self {
        match e {
            EvalError::InvalidK(_) => CliError::Config(e.to_string()),
            EvalError::Labeler(inner) => inner.into(),
            EvalError::Feature(inner) => inner.into(),
            EvalError::Corpus(inner) => inner.into(),
            EvalError::Fold { fold, source, partial } => {
                let inner: CliError = (*source).into();
                let msg = format!("fold {fold} failed after {} completed run(s): {inner}", partial.len());
                match inner {
                    CliError::Config(_) => CliError::Config(msg),
                    _ => CliError::Runtime(msg),
                }
            }
            _ => CliError::Runtime(e.to_string()),
        }
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        match e {
            CoreError::Corpus(e) => e.into(),
            CoreError::Labeler(e) => e.into(),
            CoreError::Feature(e) => e.into(),
            CoreError::Eval(e) => e.into(),
            CoreError::Classifier(e) => CliError::Runtime(e.to_string()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn codes_are_stable() {
        assert_eq!(CliError::Runtime(String::new()).exit_code(), 1);
        assert_eq!(CliError::Input(String::new()).exit_code(), 2);
        assert_eq!(CliError::Config(String::new()).exit_code(), 3);
    }

    #[test]
    fn missing_key_maps_to_config() {
        let e: CliError = LabelerError::MissingApiKey { var: "X".into() }.into();
        assert_eq!(e.exit_code(), 3);
        let e: CliError = EvalError::Fold {
            fold: 2,
            source: Box::new(EvalError::Labeler(LabelerError::MissingApiKey { var: "X".into() })),
            partial: Vec::new(),
        }
        .into();
        assert_eq!(e.exit_code(), 3);
    }

    #[test]
    fn unreadable_input_maps_to_io() {
        let e: CliError = CorpusError::Io {
            path: "/nope.csv".into(),
            source: std::io::Error::new(std::io::ErrorKind::NotFound, "gone"),
        }
        .into();
        assert_eq!(e.exit_code(), 2);
        assert!(e.to_string().contains("/nope.csv"));
    }
}
