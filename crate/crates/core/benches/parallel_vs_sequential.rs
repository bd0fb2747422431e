use std::sync::Arc;

use batlab_core::agent::AgentClass;
use batlab_core::battery::{approximate_battery, evaluate, AaiSpec, EvalMode};
use batlab_core::kernel::{Library, Theorem};
use batlab_core::scorer::{evaluation_distance, math_nondensity_witness, Scorer};
use batlab_core::trace::{enumerate_traces, Alphabet, Trace};
use batlab_core::{par, random, rng, Agent};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

fn modes() -> [(&'static str, bool); 2] {
    [("parallel", true), ("sequential", false)]
}

fn class_distance(c: &mut Criterion) {
    let pool = enumerate_traces(&Alphabet::new(['a', 'b', 'c']).unwrap(), 6).unwrap();
    let mut r = rng::keyed(1, &[]);
    let agents = (0..256).map(|_| random::agent(&pool, 64, &mut r)).collect();
    let class = AgentClass::new("bench", agents).unwrap();
    let f = Scorer::Table(random::table(&pool, 0.5, &mut r));
    let g = Scorer::Table(random::table(&pool, 0.5, &mut r));
    let mut group = c.benchmark_group("evaluation_distance");
    for (name, on) in modes() {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            par::set_parallel(on);
            b.iter(|| evaluation_distance(&f, &g, &class).value)
        });
    }
    group.finish();
}

fn nondensity_scan(c: &mut Criterion) {
    let lib = Arc::new(Library::base("base"));
    let theorems = vec![
        Theorem::parse("two", "(s(0)+s(0))", "s(s(0))", &[]).unwrap(),
        Theorem::parse("sx", "(x+s(0))", "s(x)", &["x"]).unwrap(),
    ];
    let (w1, w2) = (Trace::from("PUSH 1 OUT HALT"), Trace::from("HALT"));
    let class = AgentClass::new(
        "d",
        vec![Agent::point_mass(w1.clone()), Agent::point_mass(w2.clone())],
    )
    .unwrap();
    let mut group = c.benchmark_group("nondensity_scan");
    for (name, on) in modes() {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            par::set_parallel(on);
            b.iter(|| {
                math_nondensity_witness(&lib, &theorems, (&w1, &w2), &class, 512, 7)
                    .unwrap()
                    .min_distance
            })
        });
    }
    group.finish();
}

fn battery_density(c: &mut Criterion) {
    let pool = enumerate_traces(&Alphabet::new(['a', 'b', 'c']).unwrap(), 3).unwrap();
    let mut r = rng::keyed(2, &[]);
    let b = random::battery(&pool, 3, 8, 1, &mut r);
    let spec = AaiSpec::new(vec![0.5, 0.3, 0.2], 0.1, 2.0).unwrap();
    let policies = random::policies(&b, 32, &mut r);
    let mut group = c.benchmark_group("approximate_battery");
    for (name, on) in modes() {
        group.bench_function(BenchmarkId::from_parameter(name), |bch| {
            par::set_parallel(on);
            bch.iter(|| {
                approximate_battery(&b, &policies, 0.05, &spec)
                    .unwrap()
                    .1
                    .sup_gap
            })
        });
    }
    group.finish();
    let mut group = c.benchmark_group("sampled_law");
    for (name, on) in modes() {
        group.bench_function(BenchmarkId::from_parameter(name), |bch| {
            par::set_parallel(on);
            bch.iter(|| {
                evaluate(
                    &b,
                    &policies[0],
                    EvalMode::Sampled {
                        episodes: 50_000,
                        seed: 3,
                    },
                )
                .unwrap()
                .atoms()
                .len()
            })
        });
    }
    group.finish();
    par::set_parallel(true);
}

criterion_group!(benches, class_distance, nondensity_scan, battery_density);
criterion_main!(benches);
