use criterion::{criterion_group, criterion_main, Criterion};
use kernprod::{PositiveKernel, ProductWindow, SignedMeasure};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use std::hint::black_box;

fn random_kernel(rng: &mut impl Rng, p: usize) -> PositiveKernel {
    let entries = (0..p * p).map(|_| rng.random_range(0.1..2.0)).collect();
    PositiveKernel::dense(p, entries).unwrap()
}

fn bench_compose(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let a = random_kernel(&mut rng, 64);
    let b = random_kernel(&mut rng, 64);
    c.bench_function("compose_dense_64", |bch| {
        bch.iter(|| black_box(&a).compose(black_box(&b)).unwrap())
    });
}

fn bench_mass_vector(c: &mut Criterion) {
    let f = vec![1.0; 256];
    let mut s = vec![0.8; 256];
    s[255] = 0.0;
    let leslie = PositiveKernel::leslie(f, s).unwrap();
    let window = ProductWindow::new(vec![leslie; 200]).unwrap();
    c.bench_function("mass_vector_leslie_256_n200", |bch| {
        bch.iter(|| black_box(&window).mass_vector(0, 200).unwrap())
    });
}

fn bench_projective_chain(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let kernels: Vec<_> = (0..500).map(|_| random_kernel(&mut rng, 8)).collect();
    let window = ProductWindow::new(kernels).unwrap();
    let mu = SignedMeasure::uniform(8);
    c.bench_function("projective_chain_8_n500", |bch| {
        bch.iter(|| black_box(&window).evolve(black_box(&mu), 0, 500).unwrap())
    });
}

criterion_group!(benches, bench_compose, bench_mass_vector, bench_projective_chain);
criterion_main!(benches);
