use std::collections::HashSet;
use std::fmt;
use std::sync::Arc;
use std::time::Instant;

use rand::seq::index;
use rayon::prelude::*;

use super::{ConfusionMatrix, EvalError, EvalReport, LabelSource, Metrics, PipelineId, RunRecord, Timings};
use crate::classifiers::ClassifierSpec;
use crate::corpus::{FoldPlan, LabeledReview, Polarity, UnlabeledReview};
use crate::features::Featurizer;
use crate::labeler::{
    mock_bootstrap, request_bootstrap, BootstrapSet, ChatTransport, LabelerConfig, LabelerTranscript, Lexicon,
};
use crate::util::{derive_seed, peak_rss_bytes, rng_for};

/// Stage boundaries at which input ids are checked against the held-out fold.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Stage {
    /// Reviews handed to the labeler (labels already stripped).
    LabelerInput,
    /// Reviews the labeler returned.
    BootstrapSet,
    /// Texts the vocabulary or other featurizer statistics are fitted on.
    FeaturizerFit,
    /// Rows the classifier is trained on.
    ClassifierTrain,
    /// The held-out fold itself.
    Evaluation,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Stage::LabelerInput => "labeler",
            Stage::BootstrapSet => "bootstrap set",
            Stage::FeaturizerFit => "featurizer fit",
            Stage::ClassifierTrain => "classifier training",
            Stage::Evaluation => "evaluation",
        })
    }
}

/// Receives the ids entering every stage of every run.
pub trait StageObserver: Send + Sync {
    fn observe(&self, fold: usize, stage: Stage, ids: &[&str]);
}

pub struct NoopObserver;

impl StageObserver for NoopObserver {
    fn observe(&self, _: usize, _: Stage, _: &[&str]) {}
}

#[derive(Clone)]
pub enum LabelerSpec {
    Mock {
        lexicon: Arc<Lexicon>,
    },
    Live {
        config: LabelerConfig,
        transport: Arc<dyn ChatTransport>,
    },
    /// Bootstrap sets produced earlier, indexed by fold, so that every
    /// pipeline of a sweep trains on the same labels.
    Fixed {
        source: LabelSource,
        sets: Arc<Vec<BootstrapSet>>,
    },
}

impl LabelerSpec {
    pub fn source(&self) -> LabelSource {
        match self {
            LabelerSpec::Mock { .. } => LabelSource::Mock,
            LabelerSpec::Live { .. } => LabelSource::Escs,
            LabelerSpec::Fixed { source, .. } => *source,
        }
    }
}

/// Runs the labeler of `spec` on the training pool of `fold`.
///
/// The pool holds the other folds' reviews with labels removed.
pub fn label_fold(
    dataset: &[LabeledReview],
    plan: &FoldPlan,
    fold: usize,
    labeler: &LabelerSpec,
    bootstrap_n: usize,
    seed: u64,
) -> Result<BootstrapSet, EvalError> {
    let pool: Vec<UnlabeledReview> =
        dataset.iter().filter(|r| plan.fold_of(&r.id) != Some(fold)).map(UnlabeledReview::from).collect();
    run_labeler(&pool, fold, labeler, bootstrap_n, seed)
}

fn run_labeler(
    pool: &[UnlabeledReview],
    fold: usize,
    labeler: &LabelerSpec,
    bootstrap_n: usize,
    seed: u64,
) -> Result<BootstrapSet, EvalError> {
    Ok(match labeler {
        LabelerSpec::Mock { lexicon } => {
            mock_bootstrap(pool, bootstrap_n, derive_seed(seed, LABEL_STREAM + fold as u64), lexicon)?
        }
        LabelerSpec::Live { config, transport } => {
            let config = LabelerConfig { bootstrap_size: bootstrap_n, ..config.clone() };
            request_bootstrap(pool, &config, transport.as_ref())?
        }
        LabelerSpec::Fixed { sets, .. } => sets.get(fold).cloned().ok_or(EvalError::MissingBootstrap(fold))?,
    })
}

#[derive(Clone)]
pub struct PipelineSpec {
    pub labeler: LabelerSpec,
    pub featurizer: Featurizer,
    pub classifier: ClassifierSpec,
    pub bootstrap_n: usize,
}

impl PipelineSpec {
    pub fn id(&self) -> PipelineId {
        PipelineId::new(self.labeler.source(), self.featurizer.name(), self.classifier.kind())
    }
}

pub struct CvOptions {
    pub dataset: String,
    pub seed: u64,
    pub observer: Arc<dyn StageObserver>,
}

impl CvOptions {
    pub fn new(dataset: impl Into<String>, seed: u64) -> Self {
        CvOptions { dataset: dataset.into(), seed, observer: Arc::new(NoopObserver) }
    }
}

pub struct BaselineOptions {
    pub dataset: String,
    pub seed: u64,
    pub sample_n: usize,
    pub repeats: usize,
    pub observer: Arc<dyn StageObserver>,
}

impl BaselineOptions {
    pub fn new(dataset: impl Into<String>, seed: u64) -> Self {
        BaselineOptions { dataset: dataset.into(), seed, sample_n: 100, repeats: 10, observer: Arc::new(NoopObserver) }
    }
}

/// Seed streams, kept apart so labeling, sampling and model seeds never collide.
const LABEL_STREAM: u64 = 1 << 40;
const MODEL_STREAM: u64 = 2 << 40;
const SAMPLE_STREAM: u64 = 3 << 40;

fn check_plan(dataset: &[LabeledReview], plan: &FoldPlan) -> Result<(), EvalError> {
    if plan.k < 2 {
        return Err(EvalError::InvalidK(plan.k));
    }
    if !plan.covers(dataset) {
        return Err(EvalError::PlanMismatch);
    }
    Ok(())
}

fn split_fold<'a>(
    dataset: &'a [LabeledReview],
    plan: &FoldPlan,
    fold: usize,
) -> (Vec<&'a LabeledReview>, Vec<&'a LabeledReview>) {
    dataset.iter().partition(|r| plan.fold_of(&r.id) != Some(fold))
}

/// Reports `ids` to the observer and fails if any is held out.
fn guard<'a>(
    observer: &dyn StageObserver,
    fold: usize,
    stage: Stage,
    ids: impl Iterator<Item = &'a str>,
    held: &HashSet<&str>,
) -> Result<(), EvalError> {
    let ids: Vec<&str> = ids.collect();
    observer.observe(fold, stage, &ids);
    match ids.iter().find(|id| held.contains(*id)) {
        Some(id) => Err(EvalError::Leakage { fold, stage, id: (*id).to_owned() }),
        None => Ok(()),
    }
}

/// k-fold evaluation of one bootstrap pipeline.
///
/// For each fold the other folds, with labels removed, form the labeler's
/// pool; the featurizer and classifier see only the bootstrap set; metrics
/// are computed on the held-out fold against gold labels.
pub fn cross_validate(
    dataset: &[LabeledReview],
    plan: &FoldPlan,
    spec: &PipelineSpec,
    options: &CvOptions,
) -> Result<EvalReport, EvalError> {
    check_plan(dataset, plan)?;
    let results: Vec<Result<(RunRecord, LabelerTranscript), EvalError>> =
        (0..plan.k).into_par_iter().map(|fold| bootstrap_fold(dataset, plan, fold, spec, options)).collect();

    let mut report = EvalReport::new(options.dataset.clone());
    let mut failure = None;
    for (fold, result) in results.into_iter().enumerate() {
        match result {
            Ok((record, transcript)) => {
                report.records.push(record);
                report.transcripts.push((fold, transcript));
            }
            Err(e) if failure.is_none() => failure = Some((fold, e)),
            Err(e) => log::error!("fold {fold} also failed: {e}"),
        }
    }
    match failure {
        Some((fold, source)) => Err(EvalError::Fold { fold, source: Box::new(source), partial: report.records }),
        None => Ok(report),
    }
}

fn bootstrap_fold(
    dataset: &[LabeledReview],
    plan: &FoldPlan,
    fold: usize,
    spec: &PipelineSpec,
    options: &CvOptions,
) -> Result<(RunRecord, LabelerTranscript), EvalError> {
    let observer = options.observer.as_ref();
    let (train, test) = split_fold(dataset, plan, fold);
    let held: HashSet<&str> = test.iter().map(|r| r.id.as_str()).collect();
    observer.observe(fold, Stage::Evaluation, &test.iter().map(|r| r.id.as_str()).collect::<Vec<_>>());

    let pool: Vec<UnlabeledReview> = train.iter().map(|r| UnlabeledReview::from(*r)).collect();
    guard(observer, fold, Stage::LabelerInput, pool.iter().map(|r| r.id.as_str()), &held)?;

    let started = Instant::now();
    let bootstrap = run_labeler(&pool, fold, &spec.labeler, spec.bootstrap_n, options.seed)?;
    let labeling_s = started.elapsed().as_secs_f64();
    guard(observer, fold, Stage::BootstrapSet, bootstrap.items.iter().map(|r| r.id.as_str()), &held)?;

    // measured after labeling, for reporting only
    let gold: std::collections::HashMap<&str, Polarity> = train.iter().map(|r| (r.id.as_str(), r.polarity)).collect();
    let agree = bootstrap.items.iter().filter(|r| gold.get(r.id.as_str()) == Some(&r.polarity)).count();
    let label_accuracy = (!bootstrap.items.is_empty()).then(|| agree as f64 / bootstrap.items.len() as f64);

    let train_refs: Vec<&LabeledReview> = bootstrap.items.iter().collect();
    let classifier = spec.classifier.reseeded(derive_seed(options.seed, MODEL_STREAM + fold as u64));
    let mut record = train_and_score(
        observer,
        fold,
        &held,
        &train_refs,
        &test,
        &spec.featurizer,
        &classifier,
        spec.id(),
        &options.dataset,
    )?;
    record.timings.labeling_s = labeling_s;
    record.imbalanced_training = bootstrap.imbalanced;
    record.bootstrap_label_accuracy = label_accuracy;
    Ok((record, bootstrap.transcript))
}

#[allow(clippy::too_many_arguments)]
fn train_and_score(
    observer: &dyn StageObserver,
    fold: usize,
    held: &HashSet<&str>,
    train: &[&LabeledReview],
    test: &[&LabeledReview],
    featurizer: &Featurizer,
    classifier: &ClassifierSpec,
    pipeline: PipelineId,
    dataset: &str,
) -> Result<RunRecord, EvalError> {
    guard(observer, fold, Stage::FeaturizerFit, train.iter().map(|r| r.id.as_str()), held)?;
    let train_texts: Vec<&str> = train.iter().map(|r| r.text.as_str()).collect();
    let test_texts: Vec<&str> = test.iter().map(|r| r.text.as_str()).collect();

    let started = Instant::now();
    let fitted = featurizer.fit(&train_texts)?;
    let x_train: Vec<Vec<f64>> = fitted.transform(&train_texts)?.into_iter().map(|v| v.values).collect();
    let x_test: Vec<Vec<f64>> = fitted.transform(&test_texts)?.into_iter().map(|v| v.values).collect();
    let vectorization_s = started.elapsed().as_secs_f64();

    guard(observer, fold, Stage::ClassifierTrain, train.iter().map(|r| r.id.as_str()), held)?;
    let y_train: Vec<Polarity> = train.iter().map(|r| r.polarity).collect();
    let train_positive = y_train.iter().filter(|p| p.is_positive()).count();
    let single_class = train_positive == 0 || train_positive == y_train.len();

    let started = Instant::now();
    let model = if single_class {
        log::warn!("fold {fold}: training labels are all one class; predicting it constantly");
        None
    } else {
        Some(classifier.train(&x_train, &y_train)?)
    };
    let training_s = started.elapsed().as_secs_f64();

    let started = Instant::now();
    let predictions: Vec<Polarity> = match &model {
        Some(model) => x_test.iter().map(|x| model.predict(x)).collect::<Result<_, _>>()?,
        None => vec![y_train[0]; x_test.len()],
    };
    let prediction_s = started.elapsed().as_secs_f64();

    let truth: Vec<Polarity> = test.iter().map(|r| r.polarity).collect();
    let confusion: ConfusionMatrix = super::confusion(&truth, &predictions)?;
    Ok(RunRecord {
        pipeline,
        dataset: dataset.to_owned(),
        fold,
        repeat: None,
        metrics: Metrics::from_confusion(&confusion),
        confusion,
        timings: Timings { vectorization_s, training_s, prediction_s, labeling_s: 0.0 },
        peak_memory_bytes: peak_rss_bytes(),
        train_size: train.len(),
        train_positive,
        test_size: test.len(),
        imbalanced_training: false,
        single_class_training: single_class,
        bootstrap_label_accuracy: None,
    })
}

/// Gold-label baseline: per fold, `repeats` random samples of `sample_n`
/// training reviews, each trained and scored on the held-out fold.
pub fn baseline_run(
    dataset: &[LabeledReview],
    plan: &FoldPlan,
    featurizer: &Featurizer,
    classifier: &ClassifierSpec,
    options: &BaselineOptions,
) -> Result<EvalReport, EvalError> {
    check_plan(dataset, plan)?;
    if options.repeats == 0 || options.sample_n == 0 {
        return Err(EvalError::EmptyInput);
    }
    let pipeline = PipelineId::new(LabelSource::Gold, featurizer.name(), classifier.kind());
    for fold in 0..plan.k {
        let available = dataset.iter().filter(|r| plan.fold_of(&r.id) != Some(fold)).count();
        if options.sample_n > available {
            return Err(EvalError::InsufficientTraining { fold, requested: options.sample_n, available });
        }
    }

    let jobs: Vec<(usize, usize)> = (0..plan.k).flat_map(|f| (0..options.repeats).map(move |r| (f, r))).collect();
    let results: Vec<Result<RunRecord, EvalError>> = jobs
        .par_iter()
        .map(|&(fold, repeat)| {
            let observer = options.observer.as_ref();
            let (train, test) = split_fold(dataset, plan, fold);
            let held: HashSet<&str> = test.iter().map(|r| r.id.as_str()).collect();
            observer.observe(fold, Stage::Evaluation, &test.iter().map(|r| r.id.as_str()).collect::<Vec<_>>());
            let stream = SAMPLE_STREAM + ((fold as u64) << 20) + repeat as u64;
            let mut picks = index::sample(&mut rng_for(options.seed, stream), train.len(), options.sample_n).into_vec();
            picks.sort_unstable();
            let sample: Vec<&LabeledReview> = picks.into_iter().map(|i| train[i]).collect();
            let model_spec = classifier.reseeded(derive_seed(options.seed, MODEL_STREAM + stream));
            let mut record = train_and_score(
                observer,
                fold,
                &held,
                &sample,
                &test,
                featurizer,
                &model_spec,
                pipeline.clone(),
                &options.dataset,
            )?;
            record.repeat = Some(repeat);
            Ok(record)
        })
        .collect();

    let mut report = EvalReport::new(options.dataset.clone());
    let mut failure = None;
    for (&(fold, _), result) in jobs.iter().zip(results) {
        match result {
            Ok(record) => report.records.push(record),
            Err(e) if failure.is_none() => failure = Some((fold, e)),
            Err(e) => log::error!("fold {fold} also failed: {e}"),
        }
    }
    match failure {
        Some((fold, source)) => Err(EvalError::Fold { fold, source: Box::new(source), partial: report.records }),
        None => Ok(report),
    }
}
