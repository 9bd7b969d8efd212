use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use peelbound::peel::NormWeight;
use peelbound::sim::{self, Law};
use peelbound::{par, rng};

fn halfline_rep(n: usize, i: usize) -> f64 {
    let b = sim::draw_sample(&Law::Uniform1d, n, rng::replicate_seed(7, i as u64)).unwrap();
    sim::sup_halfline(&b, 1.0 / n as f64, 0.5, &NormWeight::identity()).unwrap().value
}

fn intervals_rep(n: usize, i: usize) -> f64 {
    let b = sim::draw_sample(&Law::Uniform1d, n, rng::replicate_seed(11, i as u64)).unwrap();
    sim::sup_intervals(&b, 0.0, 0.25, &NormWeight::constant()).unwrap().value
}

fn replicates(c: &mut Criterion) {
    let reps = 32;
    let mut g = c.benchmark_group("replicates");
    g.sample_size(10);
    for (name, f) in [("halfline", halfline_rep as fn(usize, usize) -> f64), ("intervals", intervals_rep)] {
        let n = 10_000;
        g.bench_with_input(BenchmarkId::new(format!("{name}/parallel"), n), &n, |b, &n| {
            b.iter(|| black_box(par::map_indexed(reps, |i| f(n, i))))
        });
        g.bench_with_input(BenchmarkId::new(format!("{name}/sequential"), n), &n, |b, &n| {
            b.iter(|| black_box(par::map_indexed_seq(reps, |i| f(n, i))))
        });
    }
    g.finish();
}

criterion_group!(benches, replicates);
criterion_main!(benches);
