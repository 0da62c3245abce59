use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use quart_qkd::eavesdrop::EveStrategy;
use quart_qkd::protocol::{run_session_sequential, ProtocolConfig};
use quart_qkd::qudit::Dimension;
use std::hint::black_box;

fn sessions(c: &mut Criterion) {
    let mut g = c.benchmark_group("session");
    g.sample_size(10);
    for rounds in [10_000usize, 100_000] {
        let cfg =
            ProtocolConfig::new(Dimension::Four, rounds, 7).with_eve(EveStrategy::intermediate());
        g.bench_with_input(BenchmarkId::new("sequential", rounds), &cfg, |b, cfg| {
            b.iter(|| run_session_sequential(black_box(cfg)).unwrap())
        });
        #[cfg(feature = "parallel")]
        g.bench_with_input(BenchmarkId::new("parallel", rounds), &cfg, |b, cfg| {
            b.iter(|| quart_qkd::protocol::run_session_parallel(black_box(cfg)).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, sessions);
criterion_main!(benches);
