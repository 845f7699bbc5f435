use std::path::PathBuf;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use slice_core::ast::Protocol;
use slice_core::parser::parse_protocol;
use slice_core::testkit::{
    sample_runs, sample_runs_sequential, soundness_probe, soundness_probe_sequential, PolicyChoice, Sampling,
};
use slice_core::translate::IteMode;

fn load(name: &str) -> Protocol {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../corpus")
        .join(format!("{name}.slice"));
    parse_protocol(&std::fs::read_to_string(path).unwrap()).unwrap()
}

const PROTOCOLS: [&str; 3] = ["surplus", "selfridge_conway", "waste_makes_haste"];

fn soundness(c: &mut Criterion) {
    let sampling = Sampling::new(PolicyChoice::Mixed);
    let mut g = c.benchmark_group("soundness_probe");
    g.sample_size(10);
    for name in PROTOCOLS {
        let p = load(name);
        g.bench_with_input(BenchmarkId::new("parallel", name), &p, |b, p| {
            b.iter(|| soundness_probe(p, &sampling, IteMode::Core, 100, 7))
        });
        g.bench_with_input(BenchmarkId::new("sequential", name), &p, |b, p| {
            b.iter(|| soundness_probe_sequential(p, &sampling, IteMode::Core, 100, 7))
        });
    }
    g.finish();
}

fn sampled_runs(c: &mut Criterion) {
    let sampling = Sampling::new(PolicyChoice::Mixed);
    let mut g = c.benchmark_group("sampled_runs");
    g.sample_size(10);
    for name in PROTOCOLS {
        let p = load(name);
        g.bench_with_input(BenchmarkId::new("parallel", name), &p, |b, p| {
            b.iter(|| sample_runs(p, &sampling, 1000, 11))
        });
        g.bench_with_input(BenchmarkId::new("sequential", name), &p, |b, p| {
            b.iter(|| sample_runs_sequential(p, &sampling, 1000, 11))
        });
    }
    g.finish();
}

criterion_group!(benches, soundness, sampled_runs);
criterion_main!(benches);
