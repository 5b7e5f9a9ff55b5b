use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};

use geospin_core::exec::Execution;
use geospin_core::flow::{integrate_batch, GeodesicState, IntegratorConfig};
use geospin_core::metric::{builtin, Params};
use geospin_core::suite::{verify_metric, VerifyConfig};

const MODES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn verify_suite(c: &mut Criterion) {
    let mut group = c.benchmark_group("verify");
    group.sample_size(10);
    for name in ["sphere", "schwarzschild"] {
        let spec = builtin(name, &Params::new()).unwrap();
        for (label, execution) in MODES {
            let cfg = VerifyConfig {
                samples: 64,
                execution,
                ..VerifyConfig::default()
            };
            group.bench_with_input(BenchmarkId::new(label, name), &cfg, |b, cfg| {
                b.iter(|| verify_metric(black_box(&spec), cfg).unwrap())
            });
        }
    }
    group.finish();
}

fn geodesic_batch(c: &mut Criterion) {
    let spec = builtin("sphere", &Params::new()).unwrap();
    let states: Vec<GeodesicState> = (0..64)
        .map(|i| {
            let a = i as f64 / 64.0 * std::f64::consts::TAU;
            GeodesicState::new(vec![1.2, 0.0], vec![0.3 * a.cos(), 0.3 * a.sin()])
        })
        .collect();
    let cfg = IntegratorConfig::rk4(1e-3, 1.0);
    let mut group = c.benchmark_group("integrate_batch");
    group.sample_size(10);
    for (label, execution) in MODES {
        group.bench_function(label, |b| {
            b.iter(|| {
                let out = integrate_batch(&spec, black_box(&states), &cfg, execution);
                assert!(out.iter().all(|t| t.is_ok()));
                out
            })
        });
    }
    group.finish();
}

criterion_group!(benches, verify_suite, geodesic_batch);
criterion_main!(benches);
