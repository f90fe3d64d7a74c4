use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use gigareg::features::detect_and_describe;
use gigareg::imaging::{clahe, gaussian_blur, ClaheParams};
use gigareg::nonrigid::{objective, DisplacementField};
use gigareg_bench::case;

fn bench_filters(c: &mut Criterion) {
    let img = case(512).source;
    c.bench_function("gaussian_blur_512_s2", |b| b.iter(|| gaussian_blur(black_box(&img), 2.0)));
    c.bench_function("clahe_512", |b| b.iter(|| clahe(black_box(&img), ClaheParams::default())));
}

fn bench_objective(c: &mut Criterion) {
    let k = case(256);
    let u = DisplacementField::zeros(256, 256);
    c.bench_function("objective_256", |b| {
        b.iter(|| objective(black_box(&k.source), black_box(&k.target), &u, 0.5, 7).unwrap())
    });
}

fn bench_detect(c: &mut Criterion) {
    let img = case(512).source;
    c.bench_function("detect_describe_512", |b| b.iter(|| detect_and_describe(black_box(&img), 1024)));
}

criterion_group!(benches, bench_filters, bench_objective, bench_detect);
criterion_main!(benches);
