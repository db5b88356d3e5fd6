use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use gtlab::decode::{comp_decode, dd_decode, subset_decode, Frontend, SubsetParams};
use gtlab::design::DesignSpec;
use gtlab::metrics::tests_for_rate;
use gtlab_bench::instance;

const SIZES: [(usize, usize); 3] = [(1 << 10, 32), (1 << 13, 90), (1 << 16, 256)];

fn designs(c: &mut Criterion) {
    let mut group = c.benchmark_group("design");
    for (n, k) in SIZES {
        let t = tests_for_rate(n, k, 0.5).unwrap();
        for (name, spec) in [("bernoulli", DesignSpec::bernoulli_default()), ("ncc", DesignSpec::ncc_default())] {
            group.bench_with_input(BenchmarkId::new(name, n), &t, |b, &t| {
                b.iter(|| spec.build(black_box(n), k, t, 7).unwrap())
            });
        }
    }
    group.finish();
}

fn comp_dd(c: &mut Criterion) {
    let mut group = c.benchmark_group("decode");
    for (n, k) in SIZES {
        let t = tests_for_rate(n, k, 0.5).unwrap();
        let inst = instance(&DesignSpec::ncc_default(), n, k, t, 11);
        group.bench_with_input(BenchmarkId::new("comp", n), &inst, |b, i| {
            b.iter(|| comp_decode(&i.design, black_box(&i.outcomes)).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("dd", n), &inst, |b, i| {
            b.iter(|| dd_decode(&i.design, black_box(&i.outcomes)).unwrap())
        });
    }
    group.finish();
}

fn subset(c: &mut Criterion) {
    let mut group = c.benchmark_group("subset");
    group.sample_size(20);
    for (n, k) in [(200usize, 5usize), (1000, 6)] {
        let t = tests_for_rate(n, k, 0.5).unwrap();
        let inst = instance(&DesignSpec::bernoulli_default(), n, k, t, 13);
        let params = SubsetParams::new(0.2, Frontend::Provided(inst.truth.members().to_vec()));
        group.bench_with_input(BenchmarkId::new("provided_base", n), &inst, |b, i| {
            b.iter(|| subset_decode(&i.design, black_box(&i.outcomes), k, &params).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, designs, comp_dd, subset);
criterion_main!(benches);
