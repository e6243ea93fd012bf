use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use pitflex::labels::{best_permutation, constrained_2means, pit_losses, ClusterConfig};
use pitflex::separator::{backward, forward, loss, AdamConfig, OptimizerState};
use pitflex::trainer::{run_epoch, validate, EpochMode};
use pitflex_bench::{dataset, embedding_pairs, loss_matrix, params};
use std::hint::black_box;

fn separator(c: &mut Criterion) {
    let data = dataset(1, 512);
    let m = &data.mixtures[0];
    let p = params();
    c.bench_function("forward_512", |b| b.iter(|| forward(black_box(&p), &m.mix).unwrap()));
    c.bench_function("loss_backward_512", |b| {
        b.iter(|| {
            let (_, cache) = loss(&p, m, &[0, 1]).unwrap();
            backward(&p, m, &[0, 1], &cache).unwrap()
        })
    });
    c.bench_function("pit_losses_512", |b| b.iter(|| pit_losses(&p, black_box(m)).unwrap()));
}

fn training(c: &mut Criterion) {
    let train = dataset(50, 512);
    let p = params();
    let mut group = c.benchmark_group("epoch_50x512");
    group.sample_size(10);
    group.bench_function("pit", |b| {
        b.iter_batched(
            || (p.clone(), OptimizerState::new(&p, AdamConfig::default())),
            |(mut p, mut opt)| run_epoch(&mut p, &mut opt, &train, EpochMode::Pit, 1, 0).unwrap(),
            BatchSize::LargeInput,
        )
    });
    group.bench_function("validate", |b| b.iter(|| validate(&p, &train).unwrap()));
    group.finish();
}

fn assignment(c: &mut Criterion) {
    for n in [2, 3, 5] {
        let matrices: Vec<_> = (0..16).map(|k| loss_matrix(n, k)).collect();
        c.bench_function(&format!("best_permutation_n{n}"), |b| {
            b.iter(|| {
                for m in &matrices {
                    black_box(best_permutation(m).unwrap());
                }
            })
        });
    }
    let pairs = embedding_pairs(&dataset(200, 512));
    c.bench_function("constrained_2means_200", |b| {
        b.iter(|| constrained_2means(black_box(&pairs), &ClusterConfig::default()).unwrap())
    });
}

criterion_group!(benches, separator, training, assignment);
criterion_main!(benches);
