//! One function per subcommand. Each reads its inputs from the output
//! directory written by the previous stage, so stages can be rerun alone.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use zerolabel_core::classifiers::ClassifierSpec;
use zerolabel_core::corpus::{
    compute_stats_with_width, filter_non_english, load_dataset, make_folds, read_canonical, read_labeled,
    sample_split_where, standardize_labels, trim_length_extremes, write_canonical, CanonicalReview, CorpusStats,
    LoadOptions,
};
use zerolabel_core::eval::{
    baseline_run, cross_validate, emit_baseline_markdown, emit_markdown, emit_summary_csv, emit_timing_markdown,
    label_fold, write_records_jsonl, BaselineOptions, CvOptions, EvalReport, LabelSource, LabelerSpec, PipelineSpec,
    RunManifest,
};
use zerolabel_core::features::{EmbeddingBackendConfig, EmbeddingClient, Featurizer};
use zerolabel_core::labeler::{resolve_api_key, BootstrapSet, HttpChatTransport, LabelerTranscript, Lexicon};
use zerolabel_core::synthetic::synthetic_rated;
use zerolabel_core::{sha256_hex, FoldPlan, LabeledReview, RawReview};

use crate::config::{infer_format, DatasetConfig, LoadedConfig};
use crate::error::CliError;
use crate::output::OutputDir;

/// Resolved settings shared by every subcommand.
pub struct Context {
    pub config: LoadedConfig,
    pub seed: u64,
    pub mock: bool,
    pub out: PathBuf,
    pub command: String,
}

impl Context {
    fn datasets(&self) -> &[DatasetConfig] {
        &self.config.config.datasets
    }

    fn lexicon(&self) -> Result<Lexicon, CliError> {
        match &self.config.config.mock.lexicon {
            None => Ok(Lexicon::default_english()),
            Some(p) => {
                let path = self.config.resolve(p);
                let text = std::fs::read_to_string(&path).map_err(|e| CliError::io(&path, e))?;
                Lexicon::from_tsv(&text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
            }
        }
    }

    fn dataset_file(&self, name: &str, file: &str) -> PathBuf {
        self.out.join(name).join(file)
    }

    /// Builds the labeler for this run. In live mode the API key must be
    /// present before anything else happens.
    fn labeler(&self) -> Result<LabelerSpec, CliError> {
        if self.mock {
            return Ok(LabelerSpec::Mock { lexicon: Arc::new(self.lexicon()?) });
        }
        let cfg = &self.config.config.labeler;
        let key = resolve_api_key(&cfg.api_key_env)?;
        let transport = HttpChatTransport::new(&cfg.endpoint, key, cfg.timeout());
        Ok(LabelerSpec::Live { config: cfg.clone(), transport: Arc::new(transport) })
    }

    fn label_source(&self) -> LabelSource {
        if self.mock {
            LabelSource::Mock
        } else {
            LabelSource::Escs
        }
    }

    fn featurizer(&self, name: &str, clients: &mut BTreeMap<String, Featurizer>) -> Result<Featurizer, CliError> {
        if let Some(f) = clients.get(name) {
            return Ok(f.clone());
        }
        let features = &self.config.config.features;
        let f = match name {
            "bow" => Featurizer::Bow { max_features: features.vocabulary_cap() },
            "tfidf" => Featurizer::Tfidf { max_features: features.vocabulary_cap(), tf: features.tf },
            other => {
                let embedder = features
                    .embedders
                    .iter()
                    .find(|m| m.name == other)
                    .ok_or_else(|| CliError::Config(format!("unknown featurizer {other:?}")))?;
                let backend = EmbeddingBackendConfig {
                    cache_path: embedder.backend.cache_path.as_deref().map(|p| self.config.resolve(p)),
                    ..embedder.backend.clone()
                };
                Featurizer::Embedding { name: other.to_owned(), client: Arc::new(EmbeddingClient::new(backend)?) }
            }
        };
        clients.insert(name.to_owned(), f.clone());
        Ok(f)
    }

    fn manifest(&self, pipelines: Vec<String>, datasets: BTreeMap<String, String>, outputs: &OutputDir) -> RunManifest {
        let mut versions = BTreeMap::new();
        versions.insert("zerolabel-core".to_owned(), zerolabel_core::VERSION.to_owned());
        versions.insert("zerolabel-cli".to_owned(), env!("CARGO_PKG_VERSION").to_owned());
        if !self.mock {
            versions.insert("labeler-model".to_owned(), self.config.config.labeler.model.clone());
        }
        for m in &self.config.config.features.embedders {
            versions.insert(format!("embedder:{}", m.name), m.backend.model.clone());
        }
        RunManifest {
            command: self.command.clone(),
            seed: self.seed,
            mock: self.mock,
            config_sha256: sha256_hex(self.config.raw.as_bytes()),
            dataset_sha256: datasets,
            versions,
            pipelines,
            outputs: outputs.written().to_vec(),
        }
    }
}

/// Counts from one `prepare` run, written beside the canonical files.
#[derive(Debug, Serialize)]
struct PrepareSummary {
    loaded: usize,
    dropped_empty: usize,
    malformed: usize,
    non_english: usize,
    after_trim: usize,
    domain: usize,
    experimental: usize,
}

fn to_json<T: Serialize>(value: &T) -> Vec<u8> {
    let mut bytes = serde_json::to_vec_pretty(value).expect("in-memory serialization");
    bytes.push(b'\n');
    bytes
}

fn canonical_bytes(records: &[CanonicalReview]) -> Vec<u8> {
    let mut bytes = Vec::new();
    write_canonical(records, &mut bytes).expect("in-memory write");
    bytes
}

fn load_raw(ctx: &Context, d: &DatasetConfig) -> Result<(Vec<RawReview>, usize, usize), CliError> {
    if let Some(s) = &d.synthetic {
        let reviews = synthetic_rated(&s.corpus_config(), ctx.seed, &ctx.lexicon()?, s.neutral_fraction)
            .into_iter()
            .map(|r| RawReview { source: d.source, ..r })
            .collect();
        return Ok((reviews, 0, 0));
    }
    let path = ctx.config.resolve(d.path.as_deref().expect("validated"));
    if !path.is_file() {
        return Err(CliError::Input(format!("input file {} not found", path.display())));
    }
    let format = d.format.or_else(|| infer_format(&path)).expect("validated");
    let schema = d.schema.as_ref().expect("validated");
    let options = LoadOptions { source: d.source, max_malformed_fraction: d.max_malformed_fraction };
    let outcome = load_dataset(&path, format, schema, &options)?;
    Ok((outcome.reviews, outcome.dropped_empty, outcome.malformed))
}

/// load → English filter → length trim → label standardization → split.
pub fn prepare(ctx: &Context, out: &mut OutputDir) -> Result<(), CliError> {
    let p = &ctx.config.config.prepare;
    for d in ctx.datasets() {
        let (raw, dropped_empty, malformed) = load_raw(ctx, d)?;
        let loaded = raw.len() + dropped_empty + malformed;
        let (english, non_english) = filter_non_english(raw, p.english_threshold);
        let trimmed = trim_length_extremes(english, p.tail_fraction)?;
        let after_trim = trimmed.len();
        let domain_n = d.domain_n.unwrap_or(p.domain_n);
        let experimental_n = d.experimental_n.unwrap_or(p.experimental_n);
        let (domain, experimental) = sample_split_where(&trimmed, domain_n, experimental_n, ctx.seed, |r| {
            matches!(standardize_labels(r), Ok(Some(_)))
        })?;

        let domain: Vec<CanonicalReview> =
            domain.iter().map(|r| CanonicalReview::unlabeled(&r.id, &r.text, r.source)).collect();
        let experimental: Vec<CanonicalReview> = experimental
            .iter()
            .map(|r| standardize_labels(r).map(|l| CanonicalReview::from(&l.expect("eligible"))))
            .collect::<Result<_, _>>()?;
        log::info!(
            "{}: {loaded} read, {non_english} non-English, {after_trim} after trimming, {} domain, {} experimental",
            d.name,
            domain.len(),
            experimental.len()
        );
        out.write(&format!("{}/domain_corpus.jsonl", d.name), &canonical_bytes(&domain))?;
        out.write(&format!("{}/experimental.jsonl", d.name), &canonical_bytes(&experimental))?;
        let summary = PrepareSummary {
            loaded,
            dropped_empty,
            malformed,
            non_english,
            after_trim,
            domain: domain.len(),
            experimental: experimental.len(),
        };
        out.write(&format!("{}/prepare.json", d.name), &to_json(&summary))?;
        write_stats(ctx, out, &d.name, &domain, &experimental)?;
    }
    Ok(())
}

fn write_stats(
    ctx: &Context,
    out: &mut OutputDir,
    name: &str,
    domain: &[CanonicalReview],
    experimental: &[CanonicalReview],
) -> Result<(), CliError> {
    let width = ctx.config.config.prepare.bucket_width;
    let d: CorpusStats = compute_stats_with_width(domain, width);
    let e: CorpusStats = compute_stats_with_width(experimental, width);
    out.write(&format!("{name}/stats/domain_lengths.csv"), d.histogram_csv().as_bytes())?;
    out.write(&format!("{name}/stats/experimental_lengths.csv"), e.histogram_csv().as_bytes())?;
    out.write(&format!("{name}/stats/experimental_labels.csv"), e.label_csv().as_bytes())?;
    Ok(())
}

fn read_prepared(ctx: &Context, name: &str, file: &str) -> Result<Vec<CanonicalReview>, CliError> {
    let path = ctx.dataset_file(name, file);
    if !path.is_file() {
        return Err(CliError::Input(format!("{} not found; run `zerolabel prepare` first", path.display())));
    }
    Ok(read_canonical(&path)?)
}

/// Recomputes the stats files from prepared canonical data.
pub fn stats(ctx: &Context, out: &mut OutputDir) -> Result<(), CliError> {
    for d in ctx.datasets() {
        let domain = read_prepared(ctx, &d.name, "domain_corpus.jsonl")?;
        let experimental = read_prepared(ctx, &d.name, "experimental.jsonl")?;
        write_stats(ctx, out, &d.name, &domain, &experimental)?;
    }
    Ok(())
}

/// Labeled experimental data plus its content hash.
fn experimental(ctx: &Context, name: &str) -> Result<(Vec<LabeledReview>, String), CliError> {
    let path = ctx.dataset_file(name, "experimental.jsonl");
    if !path.is_file() {
        return Err(CliError::Input(format!("{} not found; run `zerolabel prepare` first", path.display())));
    }
    let bytes = std::fs::read(&path).map_err(|e| CliError::io(&path, e))?;
    Ok((read_labeled(&path)?, sha256_hex(&bytes)))
}

fn fold_plan(ctx: &Context, data: &[LabeledReview]) -> Result<FoldPlan, CliError> {
    let e = &ctx.config.config.eval;
    Ok(make_folds(data, e.k, ctx.seed, e.fold_mode)?)
}

/// Identifies the inputs a cached set of bootstrap files was produced from.
#[derive(Debug, PartialEq, Serialize, Deserialize)]
struct BootstrapMeta {
    dataset_sha256: String,
    seed: u64,
    mock: bool,
    k: usize,
    fold_mode: String,
    bootstrap_n: usize,
    labeler_model: Option<String>,
    lexicon_sha256: Option<String>,
}

fn bootstrap_meta(ctx: &Context, dataset_sha256: &str) -> Result<BootstrapMeta, CliError> {
    let e = &ctx.config.config.eval;
    let lexicon_sha256 = match (&ctx.config.config.mock.lexicon, ctx.mock) {
        (Some(p), true) => {
            let path = ctx.config.resolve(p);
            Some(sha256_hex(&std::fs::read(&path).map_err(|e| CliError::io(&path, e))?))
        }
        _ => None,
    };
    Ok(BootstrapMeta {
        dataset_sha256: dataset_sha256.to_owned(),
        seed: ctx.seed,
        mock: ctx.mock,
        k: e.k,
        fold_mode: format!("{:?}", e.fold_mode).to_lowercase(),
        bootstrap_n: e.bootstrap_n,
        labeler_model: (!ctx.mock).then(|| ctx.config.config.labeler.model.clone()),
        lexicon_sha256,
    })
}

/// Labels every fold's training pool and writes the sets with transcripts.
fn label_all(
    ctx: &Context,
    out: &mut OutputDir,
    name: &str,
    data: &[LabeledReview],
    plan: &FoldPlan,
    meta: &BootstrapMeta,
) -> Result<Vec<BootstrapSet>, CliError> {
    let labeler = ctx.labeler()?;
    let n = ctx.config.config.eval.bootstrap_n;
    let sets: Vec<BootstrapSet> = (0..plan.k)
        .into_par_iter()
        .map(|fold| label_fold(data, plan, fold, &labeler, n, ctx.seed))
        .collect::<Result<_, _>>()?;
    for (fold, set) in sets.iter().enumerate() {
        let records: Vec<CanonicalReview> = set.items.iter().map(CanonicalReview::from).collect();
        out.write(&format!("{name}/bootstrap/fold{fold}.jsonl"), &canonical_bytes(&records))?;
        let mut transcript = Vec::new();
        set.transcript.write_jsonl(&mut transcript).expect("in-memory write");
        out.write(&format!("{name}/bootstrap/fold{fold}.transcript.jsonl"), &transcript)?;
        if set.imbalanced {
            log::warn!("{name} fold {fold}: bootstrap set is imbalanced ({} positive of {})", set.positives(), n);
        }
    }
    out.write(&format!("{name}/folds.json"), &to_json(plan))?;
    out.write(&format!("{name}/bootstrap/meta.json"), &to_json(meta))?;
    Ok(sets)
}

/// Reuses bootstrap files when they were made from the same inputs.
fn cached_bootstrap(ctx: &Context, name: &str, k: usize, meta: &BootstrapMeta) -> Option<Vec<BootstrapSet>> {
    let meta_path = ctx.dataset_file(name, "bootstrap/meta.json");
    let stored: BootstrapMeta = serde_json::from_slice(&std::fs::read(meta_path).ok()?).ok()?;
    if &stored != meta {
        return None;
    }
    let mut sets = Vec::with_capacity(k);
    for fold in 0..k {
        let items = read_labeled(&ctx.dataset_file(name, &format!("bootstrap/fold{fold}.jsonl"))).ok()?;
        let n = items.len();
        let positives = items.iter().filter(|r| r.polarity.is_positive()).count();
        let tolerance = ctx.config.config.labeler.balance_tolerance;
        let imbalanced = (2 * positives).abs_diff(n) as f64 > tolerance * n as f64;
        sets.push(BootstrapSet { items, transcript: LabelerTranscript::default(), imbalanced });
    }
    log::info!("{name}: reusing cached bootstrap sets");
    Some(sets)
}

pub fn bootstrap(ctx: &Context, out: &mut OutputDir) -> Result<(), CliError> {
    // fail on a missing key before reading any data
    ctx.labeler()?;
    let mut hashes = BTreeMap::new();
    for d in ctx.datasets() {
        let (data, sha) = experimental(ctx, &d.name)?;
        let plan = fold_plan(ctx, &data)?;
        let meta = bootstrap_meta(ctx, &sha)?;
        label_all(ctx, out, &d.name, &data, &plan, &meta)?;
        hashes.insert(d.name.clone(), sha);
    }
    let manifest = ctx.manifest(Vec::new(), hashes, out);
    out.write("reports/bootstrap.manifest.json", &to_json(&manifest))?;
    Ok(())
}

fn classifier_specs(ctx: &Context) -> Vec<ClassifierSpec> {
    let c = &ctx.config.config;
    c.eval.classifiers.iter().map(|&k| c.classifiers.spec(k)).collect()
}

/// Bootstrap pipelines: every configured featurizer × classifier, k-fold.
pub fn evaluate(ctx: &Context, out: &mut OutputDir) -> Result<(), CliError> {
    if !ctx.mock {
        resolve_api_key(&ctx.config.config.labeler.api_key_env)?;
    }
    let e = &ctx.config.config.eval;
    let mut clients = BTreeMap::new();
    let featurizers: Vec<Featurizer> =
        e.featurizers.iter().map(|n| ctx.featurizer(n, &mut clients)).collect::<Result<_, _>>()?;
    let classifiers = classifier_specs(ctx);

    let mut reports = Vec::new();
    let mut hashes = BTreeMap::new();
    for d in ctx.datasets() {
        let (data, sha) = experimental(ctx, &d.name)?;
        let plan = fold_plan(ctx, &data)?;
        let meta = bootstrap_meta(ctx, &sha)?;
        let sets = match cached_bootstrap(ctx, &d.name, plan.k, &meta) {
            Some(sets) => sets,
            None => label_all(ctx, out, &d.name, &data, &plan, &meta)?,
        };
        let labeler = LabelerSpec::Fixed { source: ctx.label_source(), sets: Arc::new(sets) };
        let specs: Vec<PipelineSpec> = featurizers
            .iter()
            .flat_map(|f| {
                classifiers.iter().map(|c| PipelineSpec {
                    labeler: labeler.clone(),
                    featurizer: f.clone(),
                    classifier: c.clone(),
                    bootstrap_n: e.bootstrap_n,
                })
            })
            .collect();
        let options = CvOptions::new(d.name.clone(), ctx.seed);
        let results: Vec<EvalReport> =
            specs.par_iter().map(|spec| cross_validate(&data, &plan, spec, &options)).collect::<Result<_, _>>()?;
        let mut report = EvalReport::new(d.name.clone());
        for r in results {
            report.merge(r);
        }
        reports.push(report);
        hashes.insert(d.name.clone(), sha);
    }
    write_reports(ctx, out, &reports, hashes, "results", "records")
}

/// Gold-label baselines: sampled training sets, repeated per fold.
pub fn baselines(ctx: &Context, out: &mut OutputDir) -> Result<(), CliError> {
    let e = &ctx.config.config.eval;
    let mut clients = BTreeMap::new();
    let featurizers: Vec<Featurizer> =
        e.baseline_featurizers.iter().map(|n| ctx.featurizer(n, &mut clients)).collect::<Result<_, _>>()?;
    let classifiers = classifier_specs(ctx);

    let mut reports = Vec::new();
    let mut hashes = BTreeMap::new();
    for d in ctx.datasets() {
        let (data, sha) = experimental(ctx, &d.name)?;
        let plan = fold_plan(ctx, &data)?;
        let mut options = BaselineOptions::new(d.name.clone(), ctx.seed);
        options.sample_n = e.sample_n;
        options.repeats = e.repeats;
        let pairs: Vec<(&Featurizer, &ClassifierSpec)> =
            featurizers.iter().flat_map(|f| classifiers.iter().map(move |c| (f, c))).collect();
        let results: Vec<EvalReport> =
            pairs.par_iter().map(|(f, c)| baseline_run(&data, &plan, f, c, &options)).collect::<Result<_, _>>()?;
        let mut report = EvalReport::new(d.name.clone());
        for r in results {
            report.merge(r);
        }
        reports.push(report);
        hashes.insert(d.name.clone(), sha);
    }
    write_reports(ctx, out, &reports, hashes, "baselines", "baseline_records")
}

fn write_reports(
    ctx: &Context,
    out: &mut OutputDir,
    reports: &[EvalReport],
    hashes: BTreeMap<String, String>,
    stem: &str,
    records_stem: &str,
) -> Result<(), CliError> {
    let baseline = stem == "baselines";
    let markdown = if baseline { emit_baseline_markdown(reports) } else { emit_markdown(reports) };
    out.write(&format!("reports/{stem}.md"), markdown.as_bytes())?;
    out.write(&format!("reports/{stem}.csv"), emit_summary_csv(reports)?.as_bytes())?;
    if !baseline {
        out.write("reports/timing.md", emit_timing_markdown(reports).as_bytes())?;
    }
    let records: Vec<_> = reports.iter().flat_map(|r| r.records.iter().cloned()).collect();
    let mut bytes = Vec::new();
    write_records_jsonl(&records, &mut bytes)?;
    out.write(&format!("reports/{records_stem}.jsonl"), &bytes)?;

    let mut pipelines: Vec<String> = Vec::new();
    for r in reports {
        for p in r.pipelines() {
            let id = p.row_id();
            if !pipelines.contains(&id) {
                pipelines.push(id);
            }
        }
    }
    let manifest = ctx.manifest(pipelines, hashes, out);
    out.write(&format!("reports/{stem}.manifest.json"), &to_json(&manifest))?;
    println!("{markdown}");
    Ok(())
}

/// prepare → bootstrap → evaluate → baselines.
pub fn full_run(ctx: &Context, out: &mut OutputDir) -> Result<(), CliError> {
    if !ctx.mock {
        resolve_api_key(&ctx.config.config.labeler.api_key_env)?;
    }
    prepare(ctx, out)?;
    bootstrap(ctx, out)?;
    evaluate(ctx, out)?;
    baselines(ctx, out)
}
