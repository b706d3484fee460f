use std::path::{Path, PathBuf};

use serde::Deserialize;
use zerolabel_core::classifiers::{
    ClassifierKind, ClassifierSpec, ForestConfig, LogisticConfig, SvmConfig, TreeConfig,
};
use zerolabel_core::corpus::{DatasetFormat, FoldMode, SchemaMap, DEFAULT_ENGLISH_THRESHOLD};
use zerolabel_core::features::{EmbeddingBackendConfig, TermFrequency, DEFAULT_MAX_FEATURES};
use zerolabel_core::labeler::LabelerConfig;
use zerolabel_core::synthetic::SyntheticConfig;
use zerolabel_core::Source;

use crate::error::CliError;

/// Everything a run needs, read from one TOML file.
///
/// Secrets never appear here: the labeler section names the environment
/// variable that holds the API key.
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    pub datasets: Vec<DatasetConfig>,
    #[serde(default)]
    pub prepare: PrepareConfig,
    #[serde(default)]
    pub labeler: LabelerConfig,
    #[serde(default)]
    pub mock: MockConfig,
    #[serde(default)]
    pub features: FeaturesConfig,
    #[serde(default)]
    pub classifiers: ClassifiersConfig,
    #[serde(default)]
    pub eval: EvalConfig,
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetConfig {
    pub name: String,
    #[serde(default)]
    pub source: Source,
    /// Raw input file; mutually exclusive with `synthetic`.
    pub path: Option<PathBuf>,
    /// Inferred from the file extension when omitted.
    pub format: Option<DatasetFormat>,
    pub schema: Option<SchemaMap>,
    pub synthetic: Option<SyntheticSource>,
    #[serde(default = "default_malformed")]
    pub max_malformed_fraction: f64,
    /// Per-dataset overrides of the `[prepare]` sizes.
    pub domain_n: Option<usize>,
    pub experimental_n: Option<usize>,
}

fn default_malformed() -> f64 {
    0.01
}

/// A generated rated corpus standing in for a real input file.
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SyntheticSource {
    pub n: usize,
    pub positive_fraction: f64,
    pub min_tokens: usize,
    pub max_tokens: usize,
    pub contrary_probability: f64,
    pub cue_fraction: f64,
    /// Share of reviews given a 3-star rating (dropped by label standardization).
    pub neutral_fraction: f64,
}

impl Default for SyntheticSource {
    fn default() -> Self {
        let base = SyntheticConfig::default();
        SyntheticSource {
            n: base.n,
            positive_fraction: base.positive_fraction,
            min_tokens: base.min_tokens,
            max_tokens: base.max_tokens,
            contrary_probability: base.contrary_probability,
            cue_fraction: base.cue_fraction,
            neutral_fraction: 0.0,
        }
    }
}

impl SyntheticSource {
    pub fn corpus_config(&self) -> SyntheticConfig {
        SyntheticConfig {
            n: self.n,
            positive_fraction: self.positive_fraction,
            min_tokens: self.min_tokens,
            max_tokens: self.max_tokens,
            contrary_probability: self.contrary_probability,
            cue_fraction: self.cue_fraction,
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PrepareConfig {
    pub tail_fraction: f64,
    pub english_threshold: f64,
    pub domain_n: usize,
    pub experimental_n: usize,
    /// Token-length histogram bucket width for the stats files.
    pub bucket_width: usize,
}

impl Default for PrepareConfig {
    fn default() -> Self {
        PrepareConfig {
            tail_fraction: 0.05,
            english_threshold: DEFAULT_ENGLISH_THRESHOLD,
            domain_n: 10_000,
            experimental_n: 5_000,
            bucket_width: 10,
        }
    }
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MockConfig {
    /// Tab-separated `word<TAB>weight` lexicon; the bundled English one when absent.
    pub lexicon: Option<PathBuf>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FeaturesConfig {
    /// Vocabulary cap for BoW/TF-IDF; 0 keeps every term.
    pub max_features: usize,
    pub tf: TermFrequency,
    pub embedders: Vec<EmbedderConfig>,
}

impl Default for FeaturesConfig {
    fn default() -> Self {
        FeaturesConfig { max_features: DEFAULT_MAX_FEATURES, tf: TermFrequency::default(), embedders: Vec::new() }
    }
}

impl FeaturesConfig {
    pub fn vocabulary_cap(&self) -> Option<usize> {
        (self.max_features > 0).then_some(self.max_features)
    }
}

/// A named remote encoder, e.g. `urslm-roberta`.
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EmbedderConfig {
    pub name: String,
    pub backend: EmbeddingBackendConfig,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ClassifiersConfig {
    pub svm: SvmConfig,
    pub dt: TreeConfig,
    pub rf: ForestConfig,
    pub lr: LogisticConfig,
}

impl ClassifiersConfig {
    pub fn spec(&self, kind: ClassifierKind) -> ClassifierSpec {
        match kind {
            ClassifierKind::Svm => ClassifierSpec::Svm(self.svm.clone()),
            ClassifierKind::Dt => ClassifierSpec::Dt(self.dt.clone()),
            ClassifierKind::Rf => ClassifierSpec::Rf(self.rf.clone()),
            ClassifierKind::Lr => ClassifierSpec::Lr(self.lr.clone()),
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvalConfig {
    pub k: usize,
    pub fold_mode: FoldMode,
    pub bootstrap_n: usize,
    pub repeats: usize,
    pub sample_n: usize,
    /// Featurizers of the bootstrap pipelines: `bow`, `tfidf` or an embedder name.
    pub featurizers: Vec<String>,
    pub baseline_featurizers: Vec<String>,
    pub classifiers: Vec<ClassifierKind>,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            k: 5,
            fold_mode: FoldMode::Shuffled,
            bootstrap_n: 100,
            repeats: 10,
            sample_n: 100,
            featurizers: vec!["bow".into(), "tfidf".into()],
            baseline_featurizers: vec!["tfidf".into(), "bow".into()],
            classifiers: ClassifierKind::ALL.to_vec(),
        }
    }
}

/// A loaded configuration together with the bytes it was parsed from.
#[derive(Clone, Debug)]
pub struct LoadedConfig {
    pub config: RunConfig,
    pub raw: String,
    /// Directory relative paths in the file are resolved against.
    pub base_dir: PathBuf,
}

impl LoadedConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let raw = std::fs::read_to_string(path)
            .map_err(|e| CliError::Input(format!("cannot read config {}: {e}", path.display())))?;
        let config: RunConfig =
            toml::from_str(&raw).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        let loaded = LoadedConfig { config, raw, base_dir };
        loaded.validate()?;
        Ok(loaded)
    }

    pub fn resolve(&self, path: &Path) -> PathBuf {
        if path.is_absolute() {
            path.to_path_buf()
        } else {
            self.base_dir.join(path)
        }
    }

    /// Checks everything that can be checked without touching data, so a bad
    /// configuration fails before any work starts.
    pub fn validate(&self) -> Result<(), CliError> {
        let c = &self.config;
        let bad = |msg: String| Err(CliError::Config(msg));
        if c.datasets.is_empty() {
            return bad("at least one [[datasets]] entry is required".into());
        }
        let mut names = std::collections::HashSet::new();
        for d in &c.datasets {
            if d.name.is_empty() || !d.name.chars().all(|ch| ch.is_ascii_alphanumeric() || ch == '-' || ch == '_') {
                return bad(format!("dataset name {:?} must be non-empty [A-Za-z0-9_-]", d.name));
            }
            if !names.insert(d.name.as_str()) {
                return bad(format!("dataset {:?} listed twice", d.name));
            }
            match (&d.path, &d.synthetic) {
                (Some(_), Some(_)) => return bad(format!("dataset {}: set either path or synthetic", d.name)),
                (None, None) => return bad(format!("dataset {}: needs path or synthetic", d.name)),
                (Some(path), None) => {
                    if d.schema.is_none() {
                        return bad(format!("dataset {}: [datasets.schema] is required with path", d.name));
                    }
                    if d.format.is_none() && infer_format(path).is_none() {
                        return bad(format!("dataset {}: cannot infer format of {}", d.name, path.display()));
                    }
                }
                (None, Some(s)) => {
                    if !(0.0..=1.0).contains(&s.positive_fraction) || !(0.0..=1.0).contains(&s.neutral_fraction) {
                        return bad(format!("dataset {}: synthetic fractions must lie in [0, 1]", d.name));
                    }
                }
            }
            if !(0.0..=1.0).contains(&d.max_malformed_fraction) {
                return bad(format!("dataset {}: max_malformed_fraction must lie in [0, 1]", d.name));
            }
        }
        let p = &c.prepare;
        if !(0.0..0.5).contains(&p.tail_fraction) {
            return bad(format!("prepare.tail_fraction {} outside [0, 0.5)", p.tail_fraction));
        }
        if !(0.0..=1.0).contains(&p.english_threshold) {
            return bad(format!("prepare.english_threshold {} outside [0, 1]", p.english_threshold));
        }
        if p.bucket_width == 0 {
            return bad("prepare.bucket_width must be >= 1".into());
        }
        let e = &c.eval;
        if e.k < 2 {
            return bad(format!("eval.k = {}: cross-validation needs k >= 2", e.k));
        }
        if e.bootstrap_n == 0 || e.sample_n == 0 || e.repeats == 0 {
            return bad("eval.bootstrap_n, eval.sample_n and eval.repeats must be >= 1".into());
        }
        if e.classifiers.is_empty() {
            return bad("eval.classifiers is empty".into());
        }
        for name in e.featurizers.iter().chain(&e.baseline_featurizers) {
            if name != "bow" && name != "tfidf" && !c.features.embedders.iter().any(|m| &m.name == name) {
                return bad(format!("featurizer {name:?} is neither bow, tfidf nor a configured embedder"));
            }
        }
        for m in &c.features.embedders {
            m.backend.validate().map_err(|err| CliError::Config(format!("embedder {}: {err}", m.name)))?;
        }
        c.labeler.validate().map_err(|err| CliError::Config(format!("labeler: {err}")))?;
        if let Some(lexicon) = &c.mock.lexicon {
            let path = self.resolve(lexicon);
            if !path.is_file() {
                return Err(CliError::Input(format!("mock lexicon {} not found", path.display())));
            }
        }
        Ok(())
    }
}

pub fn infer_format(path: &Path) -> Option<DatasetFormat> {
    match path.extension()?.to_str()?.to_ascii_lowercase().as_str() {
        "csv" => Some(DatasetFormat::Csv),
        "jsonl" | "ndjson" => Some(DatasetFormat::Jsonl),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<LoadedConfig, CliError> {
        let config: RunConfig = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        let loaded = LoadedConfig { config, raw: text.into(), base_dir: PathBuf::new() };
        loaded.validate()?;
        Ok(loaded)
    }

    const MINIMAL: &str = "[[datasets]]\nname = \"syn\"\n[datasets.synthetic]\nn = 300\n";

    #[test]
    fn minimal_config_takes_defaults() {
        let c = parse(MINIMAL).unwrap().config;
        assert_eq!(c.eval.k, 5);
        assert_eq!(c.eval.repeats, 10);
        assert_eq!(c.eval.classifiers.len(), 4);
        assert_eq!(c.prepare.tail_fraction, 0.05);
        assert_eq!(c.labeler.api_key_env, "OPENAI_API_KEY");
        assert_eq!(c.datasets[0].synthetic.as_ref().unwrap().n, 300);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let err = parse(&format!("{MINIMAL}[eval]\nfolds = 3\n")).unwrap_err();
        assert_eq!(err.exit_code(), 3);
        let err = parse(&format!("{MINIMAL}[labeler]\napi_key = \"sk-123\"\n")).unwrap_err();
        assert_eq!(err.exit_code(), 3);
    }

    #[test]
    fn k_below_two_is_a_config_error() {
        let err = parse(&format!("{MINIMAL}[eval]\nk = 1\n")).unwrap_err();
        assert!(matches!(err, CliError::Config(ref m) if m.contains("k >= 2")), "{err}");
    }

    #[test]
    fn featurizer_names_must_resolve() {
        let err = parse(&format!("{MINIMAL}[eval]\nfeaturizers = [\"urslm-roberta\"]\n")).unwrap_err();
        assert_eq!(err.exit_code(), 3);
        let ok = format!(
            "{MINIMAL}[eval]\nfeaturizers = [\"urslm-roberta\"]\n\
             [[features.embedders]]\nname = \"urslm-roberta\"\n\
             [features.embedders.backend]\nbase_url = \"http://127.0.0.1:8000\"\nmodel = \"roberta\"\n"
        );
        parse(&ok).unwrap();
    }

    #[test]
    fn classifier_overrides_parse() {
        let text = format!(
            "{MINIMAL}[classifiers.svm]\nc = 10.0\ngamma = {{ value = 1.0 }}\n[classifiers.rf]\nn_trees = 7\n\
             [eval]\nclassifiers = [\"svm\", \"rf\"]\n"
        );
        let c = parse(&text).unwrap().config;
        assert_eq!(c.classifiers.svm.c, 10.0);
        assert_eq!(c.classifiers.rf.n_trees, 7);
        assert_eq!(c.eval.classifiers, vec![ClassifierKind::Svm, ClassifierKind::Rf]);
    }

    #[test]
    fn path_datasets_need_a_schema_and_format() {
        let err = parse("[[datasets]]\nname = \"a\"\npath = \"x.csv\"\n").unwrap_err();
        assert_eq!(err.exit_code(), 3);
        let err = parse("[[datasets]]\nname = \"a\"\npath = \"x.txt\"\n[datasets.schema]\ntext = \"t\"\n").unwrap_err();
        assert_eq!(err.exit_code(), 3);
        parse("[[datasets]]\nname = \"a\"\npath = \"x.csv\"\n[datasets.schema]\ntext = \"t\"\n").unwrap();
    }

    #[test]
    fn max_features_zero_means_unbounded() {
        let c = parse(&format!("{MINIMAL}[features]\nmax_features = 0\n")).unwrap().config;
        assert_eq!(c.features.vocabulary_cap(), None);
        assert_eq!(FeaturesConfig::default().vocabulary_cap(), Some(DEFAULT_MAX_FEATURES));
    }
}
