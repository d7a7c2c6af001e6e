use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use rand::Rng;

use smotelab::classify::{fit_forest, roc_auc, ForestConfig};
use smotelab::density::{smote_conditional_density, DensitySpec, UniformBox};
use smotelab::protocols::{default_simulation_law, similarity_c};
use smotelab::samplers::{mgs_matrix, smote_matrix};
use smotelab::neighbors::knn;
use smotelab::{Matrix, Seed};

fn cloud(n: usize, d: usize, seed: u64) -> Matrix {
    let mut rng = Seed(seed).stream();
    let v: Vec<f64> = (0..n * d).map(|_| rng.random::<f64>()).collect();
    Matrix::from_vec(n, d, v).unwrap()
}

fn labelled(n: usize, d: usize, seed: u64) -> (Matrix, Vec<u8>) {
    let x = cloud(n, d, seed);
    let y = x.iter_rows().map(|r| u8::from(r[0] + 0.3 * r[1] > 0.9)).collect();
    (x, y)
}

fn neighbours(c: &mut Criterion) {
    let x = cloud(2000, 2, 1);
    c.bench_function("knn table n=2000 k=5", |b| b.iter(|| knn(&x, &x, 5, true).unwrap()));
}

fn generators(c: &mut Criterion) {
    let x = cloud(1000, 2, 2);
    c.bench_function("smote n=1000 m=1000 k=5", |b| b.iter(|| smote_matrix(&x, 5, 1000, Seed(3)).unwrap()));
    c.bench_function("mgs n=1000 m=1000 k=3", |b| b.iter(|| mgs_matrix(&x, 3, 1000, Seed(3)).unwrap()));
}

fn similarity(c: &mut Criterion) {
    let law = default_simulation_law();
    let x = law.sample(1000, &mut Seed(4).stream());
    let z = law.sample(1000, &mut Seed(5).stream());
    c.bench_function("similarity C(Z,X) 1000x1000", |b| b.iter(|| similarity_c(&z, &x).unwrap()));
}

fn density(c: &mut Criterion) {
    let spec = UniformBox::cube(2, 0.0, 1.0).unwrap();
    c.bench_function("conditional density d=2 n=50 k=5", |b| {
        b.iter(|| smote_conditional_density(&[0.4, 0.6], &[0.5, 0.5], 5, 50, &spec).unwrap())
    });
}

fn forest(c: &mut Criterion) {
    let (x, y) = labelled(300, 3, 6);
    let cfg = ForestConfig::default();
    c.bench_function("forest fit 300x3 100 trees", |b| b.iter(|| fit_forest(&x, &y, None, &cfg, Seed(7)).unwrap()));
    let model = fit_forest(&x, &y, None, &cfg, Seed(7)).unwrap();
    c.bench_function("forest predict 300x3", |b| b.iter(|| model.predict_proba(&x).unwrap()));
}

fn metrics(c: &mut Criterion) {
    let mut rng = Seed(8).stream();
    c.bench_function("roc auc n=10000", |b| {
        b.iter_batched(
            || {
                let s: Vec<f64> = (0..10_000).map(|_| rng.random::<f64>()).collect();
                let l: Vec<u8> = (0..10_000).map(|i| u8::from(i % 7 == 0)).collect();
                (s, l)
            },
            |(s, l)| roc_auc(&s, &l).unwrap(),
            BatchSize::SmallInput,
        )
    });
}

criterion_group!(benches, neighbours, generators, similarity, density, forest, metrics);
criterion_main!(benches);
