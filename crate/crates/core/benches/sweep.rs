use std::path::Path;

use blsnc::cli::parse;
use blsnc::cli::scenario::run_scenario_with;
use criterion::{criterion_group, criterion_main, Criterion};

fn load(name: &str) -> blsnc::cli::Config {
    let p = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(name);
    parse(&std::fs::read_to_string(p).unwrap()).unwrap()
}

fn sweeps(c: &mut Criterion) {
    for name in ["usecase1_scenario_ur_sct.json", "usecase2.json"] {
        let cfg = load(name);
        let mut g = c.benchmark_group(name.trim_end_matches(".json"));
        g.sample_size(10);
        g.bench_function("parallel", |b| b.iter(|| run_scenario_with(&cfg, true).unwrap()));
        g.bench_function("sequential", |b| b.iter(|| run_scenario_with(&cfg, false).unwrap()));
        g.finish();
    }
}

criterion_group!(benches, sweeps);
criterion_main!(benches);
