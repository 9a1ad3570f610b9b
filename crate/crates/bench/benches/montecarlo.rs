use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use layerpc::montecarlo::{estimate_max_contention, estimate_outage, estimate_spatial_reuse, sample_realization};
use layerpc::schemes::{design_powers, DesignVariant};
use layerpc::{LayerPartition, NetworkConfig, PowerScheme, ReceiverModel};

fn outage(c: &mut Criterion) {
    let mut g = c.benchmark_group("estimate_outage");
    g.sample_size(10);
    let fixed = NetworkConfig::new(1e-4, 3.5, 1.0, ReceiverModel::Fixed { distance: 20.0 }).unwrap();
    g.bench_function("nopc/fixed/2000", |b| {
        b.iter(|| estimate_outage(black_box(&fixed), &PowerScheme::NoPc { power: 1.0 }, 2000, 1).unwrap())
    });
    let p = LayerPartition::equal_width(20.0, 5).unwrap();
    let powers = design_powers(&p, 3.5, DesignVariant::Thm3Lower, 1.0).unwrap();
    let dpc = PowerScheme::n_layer(powers, p.clone()).unwrap();
    let layered = NetworkConfig::new(1e-4, 3.5, 1.0, ReceiverModel::Partition { partition: p }).unwrap();
    g.bench_function("dpc5/layers/2000", |b| {
        b.iter(|| estimate_outage(black_box(&layered), &dpc, 2000, 1).unwrap())
    });
    g.finish();
}

fn contention(c: &mut Criterion) {
    let mut g = c.benchmark_group("estimate_max_contention");
    g.sample_size(10);
    let p = LayerPartition::discrete(15.0, vec![3.0, 6.0, 9.0, 12.0, 15.0]).unwrap();
    let powers = design_powers(&p, 3.5, DesignVariant::Thm5, 1.0).unwrap();
    let dpc = PowerScheme::n_layer(powers, p.clone()).unwrap();
    let cfg = NetworkConfig::new(1e-4, 3.5, 1.0, ReceiverModel::Partition { partition: p }).unwrap();
    g.bench_function("thm5/2000", |b| {
        b.iter(|| estimate_max_contention(black_box(&cfg), &dpc, 0.1, 1e-3, 2000, 1).unwrap())
    });
    g.finish();
}

fn realization(c: &mut Criterion) {
    let cfg = NetworkConfig::new(1e-3, 3.5, 1.0, ReceiverModel::Fixed { distance: 20.0 }).unwrap();
    let scheme = PowerScheme::fractional(0.5).unwrap();
    c.bench_function("sample_realization/1e-3", |b| {
        let mut t = 0u64;
        b.iter(|| {
            t += 1;
            sample_realization(black_box(&cfg), &scheme, 7, t).unwrap()
        })
    });
    let two = PowerScheme::two_level(1.5, 0.4).unwrap();
    let mut g = c.benchmark_group("estimate_spatial_reuse");
    g.sample_size(10);
    g.bench_function("two-level/2000", |b| {
        b.iter(|| estimate_spatial_reuse(black_box(&cfg), &two, 2000, 1).unwrap())
    });
    g.finish();
}

criterion_group!(benches, outage, contention, realization);
criterion_main!(benches);
