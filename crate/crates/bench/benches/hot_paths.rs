use criterion::{criterion_group, criterion_main, Criterion};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::hint::black_box;
use vqmorl::env::{Environment, SimConfig};
use vqmorl::learner::{gradient_step, QFunction, Transition};
use vqmorl::quantum::{parameter_shift_grad, q_values, InitScheme};
use vqmorl::{FeatureVector, MomdpEnv, NeuralQ, VqcParams, VqcQ};

fn features() -> FeatureVector {
    FeatureVector::new([0.3, -0.5, 0.9, 0.1, -1.0]).unwrap()
}

fn circuit(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let p = VqcParams::init(3, InitScheme::Uniform, 0.1, &mut rng);
    let f = features();
    c.bench_function("vqc_q_values", |b| b.iter(|| q_values(black_box(&p), black_box(&f))));
    c.bench_function("vqc_parameter_shift", |b| {
        b.iter(|| parameter_shift_grad(black_box(&p), black_box(&f), 7).unwrap())
    });
}

fn batch(n: usize) -> (Vec<Transition>, Vec<f64>) {
    let f = features();
    let batch = (0..n).map(|i| Transition { s: f, a: i % 15, r: 1.0, s_next: f, done: false }).collect();
    (batch, vec![0.5; n])
}

fn learner(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let (b32, y32) = batch(32);
    let mut vqc = VqcQ::new(3, InitScheme::Uniform, 0.1, &mut rng);
    c.bench_function("vqc_gradient_step_32", |b| b.iter(|| gradient_step(&mut vqc, &b32, &y32, 1e-3).unwrap()));
    let mut nn = NeuralQ::new(&[64, 64], &mut rng);
    c.bench_function("neural_grad_q", |b| b.iter(|| nn.grad_q(black_box(&features()), 3)));
    c.bench_function("neural_gradient_step_32", |b| b.iter(|| gradient_step(&mut nn, &b32, &y32, 5e-4).unwrap()));
}

fn environment(c: &mut Criterion) {
    let mut env = MomdpEnv::new(SimConfig::default()).unwrap();
    let mut seed = 0;
    env.reset(seed).unwrap();
    c.bench_function("env_step", |b| {
        b.iter(|| {
            if env.step(black_box(7)).unwrap().done {
                seed += 1;
                env.reset(seed).unwrap();
            }
        })
    });
}

criterion_group!(benches, circuit, learner, environment);
criterion_main!(benches);
