use criterion::{criterion_group, criterion_main, Criterion, Throughput};
use strm_bench::{optimized, trace, typed, EVENTS};
use strm_core::corpus;
use strm_core::interp::run;
use strm_core::parser::parse_spec;
use strm_core::passes::Pass;

fn monitors(c: &mut Criterion) {
    let mut group = c.benchmark_group("run");
    group.throughput(Throughput::Elements(EVENTS as u64));
    for (name, src) in [
        ("geofence_2d", corpus::GEOFENCE_2D),
        ("geofence_3d", corpus::GEOFENCE_3D),
        ("geofence_under", corpus::GEOFENCE_UNDER),
    ] {
        let ts = typed(src);
        let events = trace(&ts, EVENTS);
        let opt = optimized(&ts);
        group.bench_function(format!("{name}/original"), |b| b.iter(|| run(&ts, &events).unwrap()));
        group.bench_function(format!("{name}/optimized"), |b| b.iter(|| run(&opt, &events).unwrap()));
    }
    group.finish();
}

fn passes(c: &mut Criterion) {
    let ts = typed(corpus::GEOFENCE_UNDER);
    let mut group = c.benchmark_group("pass");
    for pass in Pass::DEFAULT_ORDER {
        group.bench_function(pass.name(), |b| b.iter(|| pass.apply(&ts).unwrap()));
    }
    group.bench_function("pipeline", |b| b.iter(|| optimized(&ts)));
    group.finish();
}

fn frontend(c: &mut Criterion) {
    c.bench_function("parse/geofence_3d", |b| b.iter(|| parse_spec(corpus::GEOFENCE_3D).unwrap()));
    c.bench_function("check/geofence_3d", |b| b.iter(|| typed(corpus::GEOFENCE_3D)));
}

criterion_group!(benches, monitors, passes, frontend);
criterion_main!(benches);
