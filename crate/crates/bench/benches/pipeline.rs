use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use zerolabel_bench::corpus;
use zerolabel_core::classifiers::{ClassifierKind, ClassifierSpec};
use zerolabel_core::features::Featurizer;
use zerolabel_core::labeler::{mock_bootstrap, Lexicon};
use zerolabel_core::{Polarity, UnlabeledReview};

fn bench_vectorize(c: &mut Criterion) {
    let texts: Vec<String> = corpus(2000).into_iter().map(|r| r.text).collect();
    let mut group = c.benchmark_group("vectorize");
    for featurizer in [Featurizer::bow(), Featurizer::tfidf()] {
        group.bench_function(format!("{}_fit_2000", featurizer.name()), |b| b.iter(|| featurizer.fit(&texts).unwrap()));
        let fitted = featurizer.fit(&texts[..100]).unwrap();
        group.bench_function(format!("{}_transform_2000", featurizer.name()), |b| {
            b.iter(|| fitted.transform(&texts).unwrap())
        });
    }
    group.finish();
}

fn bench_mock_labeler(c: &mut Criterion) {
    let pool: Vec<UnlabeledReview> =
        corpus(4000).into_iter().map(|r| UnlabeledReview { id: r.id, text: r.text }).collect();
    let lexicon = Lexicon::default_english();
    c.bench_function("mock_bootstrap_4000_to_100", |b| b.iter(|| mock_bootstrap(&pool, 100, 1, &lexicon).unwrap()));
}

// Training sizes match the bootstrap set: 100 reviews, vocabulary fit on them.
fn bench_train(c: &mut Criterion) {
    let reviews = corpus(1100);
    let (train, test) = reviews.split_at(100);
    let texts: Vec<&str> = train.iter().map(|r| r.text.as_str()).collect();
    let y: Vec<Polarity> = train.iter().map(|r| r.polarity).collect();
    let fitted = Featurizer::tfidf().fit(&texts).unwrap();
    let x: Vec<Vec<f64>> = fitted.transform(&texts).unwrap().into_iter().map(|v| v.values).collect();
    let test_texts: Vec<&str> = test.iter().map(|r| r.text.as_str()).collect();
    let test_x: Vec<Vec<f64>> = fitted.transform(&test_texts).unwrap().into_iter().map(|v| v.values).collect();

    let mut group = c.benchmark_group("classifiers");
    group.sample_size(20);
    for kind in ClassifierKind::ALL {
        let spec = ClassifierSpec::default_for(kind, 0);
        group.bench_function(format!("{kind}_train_100"), |b| {
            b.iter_batched(|| spec.clone(), |s| s.train(&x, &y).unwrap(), BatchSize::SmallInput)
        });
        let model = spec.train(&x, &y).unwrap();
        group.bench_function(format!("{kind}_predict_1000"), |b| b.iter(|| model.predict_all(&test_x).unwrap()));
    }
    group.finish();
}

criterion_group!(benches, bench_vectorize, bench_mock_labeler, bench_train);
criterion_main!(benches);
