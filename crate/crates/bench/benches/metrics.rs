use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use zerolabel_core::eval::{aggregate, confusion, Metrics};
use zerolabel_core::Polarity;

fn labels(n: usize, stride: usize) -> Vec<Polarity> {
    (0..n).map(|i| Polarity::from_positive(i % stride == 0)).collect()
}

fn bench_metrics(c: &mut Criterion) {
    let mut group = c.benchmark_group("metrics");
    for n in [100, 10_000] {
        let (truth, pred) = (labels(n, 2), labels(n, 3));
        group.bench_with_input(BenchmarkId::new("confusion", n), &n, |b, _| {
            b.iter(|| Metrics::from_confusion(&confusion(black_box(&truth), black_box(&pred)).unwrap()))
        });
    }
    let accs: Vec<f64> = (0..50).map(|i| 0.8 + i as f64 * 1e-3).collect();
    group.bench_function("aggregate_50", |b| b.iter(|| aggregate(black_box(&accs)).unwrap()));
    group.finish();
}

criterion_group!(benches, bench_metrics);
criterion_main!(benches);
