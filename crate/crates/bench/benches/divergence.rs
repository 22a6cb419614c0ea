use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use shift_audit::densities::EstimatorConfig;
use shift_audit::divergence::{
    kernel_support_divergence, mmd_squared, support_divergence_empirical, Epsilon, Kernel, MmdVariant,
};
use shift_audit::trainer::{objective_gradient, train, TrainConfig};
use shift_audit_bench::{overlap_samples, quadrant_samples};
use std::hint::black_box;

const SIZES: [usize; 3] = [250, 1000, 4000];

fn mmd(c: &mut Criterion) {
    let kernel = Kernel::gaussian(0.5).unwrap();
    let mut g = c.benchmark_group("mmd_squared");
    for n in SIZES {
        let (s, t) = overlap_samples(n, 1);
        for (name, v) in [("u", MmdVariant::U), ("v", MmdVariant::V)] {
            g.bench_with_input(BenchmarkId::new(name, n), &n, |b, _| {
                b.iter(|| mmd_squared(black_box(&s), black_box(&t), &kernel, v).unwrap())
            });
        }
    }
    g.finish();
}

fn kernel_support(c: &mut Criterion) {
    let kernel = Kernel::gaussian(0.5).unwrap();
    let eps = Epsilon::new(0.2).unwrap();
    let mut g = c.benchmark_group("kernel_support_divergence");
    for n in SIZES {
        let (s, t) = overlap_samples(n, 2);
        let p_hat = EstimatorConfig::default().fit(&s, &[&t]).unwrap();
        g.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, _| {
            b.iter(|| kernel_support_divergence(black_box(&s), black_box(&t), &p_hat, eps, &kernel).unwrap())
        });
    }
    g.finish();
}

fn empirical_support(c: &mut Criterion) {
    let eps = Epsilon::new(0.2).unwrap();
    let mut g = c.benchmark_group("support_divergence_empirical");
    for n in SIZES {
        let (s, t) = overlap_samples(n, 3);
        for (name, est) in [
            ("kde", EstimatorConfig::default()),
            ("hist", EstimatorConfig::Histogram { bins: 40 }),
        ] {
            g.bench_with_input(BenchmarkId::new(name, n), &n, |b, _| {
                b.iter(|| support_divergence_empirical(black_box(&s), black_box(&t), eps, &est).unwrap())
            });
        }
    }
    g.finish();
}

fn kde(c: &mut Criterion) {
    let mut g = c.benchmark_group("kde_fit_and_evaluate");
    for n in SIZES {
        let (s, t) = quadrant_samples(n, 4);
        g.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, _| {
            b.iter(|| {
                let d = EstimatorConfig::default().fit(black_box(&s), &[]).unwrap();
                d.evaluate_samples(&t).unwrap()
            })
        });
    }
    g.finish();
}

fn trainer_gradient(c: &mut Criterion) {
    let mut g = c.benchmark_group("trainer_gradient");
    for n in [100, 400] {
        let (s, t) = quadrant_samples(n, 5);
        let config = TrainConfig::new(0);
        let model = train(&s, &t, &TrainConfig { max_iters: 0, ..config.clone() }).unwrap();
        g.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, _| {
            b.iter(|| objective_gradient(black_box(&model), &s, &t, &config).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, mmd, kernel_support, empirical_support, kde, trainer_gradient);
criterion_main!(benches);
