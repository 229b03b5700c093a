use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use credible_core::diagnosis::{diagnose, DiagnosisConfig, DiagnosisLabel};
use credible_core::elt::{elt_test, EltConfig};
use credible_core::sim::{generate_trial, ScenarioSpec};
use credible_core::uwb::fixture::{generate_fixture, FixtureKind};
use credible_core::uwb::pipeline::build_periods;
use credible_core::uwb::{wls_position, UwbConfig};
use credible_core::SeededRng;

fn bench_elt(c: &mut Criterion) {
    let spec = ScenarioSpec::standard(DiagnosisLabel::OptimismSmm);
    let set = generate_trial(&spec, 0, 42).unwrap().set;
    let cfg = EltConfig::default();
    c.bench_function("elt_test N=100 d=2", |b| {
        b.iter(|| elt_test(black_box(&set), &cfg, &mut SeededRng::new(1)).unwrap())
    });
}

fn bench_diagnose(c: &mut Criterion) {
    let spec = ScenarioSpec::standard(DiagnosisLabel::Pessimism);
    let set = generate_trial(&spec, 0, 42).unwrap().set;
    let cfg = DiagnosisConfig::default();
    c.bench_function("diagnose N=100 d=2", |b| {
        b.iter(|| diagnose(black_box(&set), &cfg, &SeededRng::new(1)).unwrap())
    });
}

fn bench_wls(c: &mut Criterion) {
    let data = generate_fixture(FixtureKind::Honest, 42);
    let period = build_periods(&data, &UwbConfig::default()).unwrap().remove(0);
    let packet = &period.packets[0];
    c.bench_function("wls_position 8 anchors", |b| {
        b.iter(|| wls_position(black_box(packet), &data.anchors, None, period.tag_height).unwrap())
    });
}

criterion_group!(benches, bench_elt, bench_diagnose, bench_wls);
criterion_main!(benches);
