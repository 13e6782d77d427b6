use std::hint::black_box;

use cpafdm::link::awgn;
use cpafdm::{
    daft, mmse_equalize, receive, BigUint, ChannelScenarioConfig, ChirpProfile, Direction, FastDaft,
    GuessDistribution, PermutationKey,
};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// `n! - 1`, the largest valid rank.
fn factorial_minus_one(n: usize) -> BigUint {
    (1..=n as u64).fold(BigUint::from(1u8), |acc, k| acc * k) - 1u8
}

fn transforms(c: &mut Criterion) {
    let mut group = c.benchmark_group("daft");
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for n in [64usize, 256, 1024] {
        let profile = ChirpProfile::for_max_doppler(n, 1.0).unwrap();
        let key = PermutationKey::random(n, &mut rng);
        let x = awgn(n, 1.0, &mut rng);
        let fast = FastDaft::new(&profile);
        group.bench_with_input(BenchmarkId::new("fast_forward", n), &n, |b, _| {
            b.iter(|| fast.forward(&key, black_box(&x)).unwrap())
        });
        if n <= 256 {
            let dense = daft(&profile, &key, Direction::Forward).unwrap();
            let v = cpafdm::CVector::from_vec(x.clone());
            group.bench_with_input(BenchmarkId::new("dense_apply", n), &n, |b, _| {
                b.iter(|| &dense.matrix * black_box(&v))
            });
            group.bench_with_input(BenchmarkId::new("dense_build", n), &n, |b, _| {
                b.iter(|| daft(&profile, &key, Direction::Forward).unwrap())
            });
        }
    }
    group.finish();
}

fn equalizer(c: &mut Criterion) {
    let mut group = c.benchmark_group("mmse_trial");
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for n in [64usize, 256] {
        let cfg = ChannelScenarioConfig { n, ..Default::default() };
        let profile = ChirpProfile::for_max_doppler(n, 1.0).unwrap();
        let key = PermutationKey::random(n, &mut rng);
        let h = cfg.sample(&mut rng).unwrap();
        let s = awgn(n, 1.0, &mut rng);
        let r = receive(&s, &h, 0.01, &mut rng).unwrap();
        group.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, _| {
            b.iter(|| mmse_equalize(black_box(&r), &h, 0.01, &profile, &key).unwrap())
        });
    }
    group.finish();
}

fn codec(c: &mut Criterion) {
    let mut group = c.benchmark_group("codec");
    for n in [64usize, 1024, 3300] {
        let rank: BigUint = factorial_minus_one(n) / 3u8;
        let key = PermutationKey::from_rank(&rank, n).unwrap();
        group.bench_with_input(BenchmarkId::new("unrank", n), &n, |b, _| {
            b.iter(|| PermutationKey::from_rank(black_box(&rank), n).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("rank", n), &n, |b, _| {
            b.iter(|| cpafdm::perm_to_rank(black_box(key.perm())).unwrap())
        });
    }
    group.finish();
}

fn guessing(c: &mut Criterion) {
    let mut group = c.benchmark_group("guess_pmf");
    group.sample_size(10);
    for n in [64usize, 512, 3300] {
        group.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, &n| {
            b.iter(|| GuessDistribution::new(black_box(n)).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, transforms, equalizer, codec, guessing);
criterion_main!(benches);
