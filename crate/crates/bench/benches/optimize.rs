use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use layerpc::analytic::{analytic_outage, tc_closed_form, OutageMode, TcModel, TcParams};
use layerpc::optimize::{numeric_powers, search_optimal_n, CoefficientRule, NPartitionRule, PowerDesignProblem};
use layerpc::schemes::{design_powers, DesignVariant};
use layerpc::LayerPartition;

fn design(c: &mut Criterion) {
    let mut g = c.benchmark_group("numeric_powers");
    for n in [5usize, 20, 100] {
        let probs: Vec<f64> = (1..=n).map(|i| (2 * i - 1) as f64 / (n * n) as f64).collect();
        let problem = PowerDesignProblem::new(probs, 3.5, 1.29).unwrap();
        g.bench_with_input(BenchmarkId::from_parameter(n), &problem, |b, p| {
            b.iter(|| numeric_powers(black_box(p)).unwrap())
        });
    }
    g.finish();

    c.bench_function("search_optimal_n/32", |b| {
        b.iter(|| {
            search_optimal_n(
                NPartitionRule::EqualWidth,
                32,
                black_box(3.5),
                &CoefficientRule::Numeric { rho0: 1.29 },
                15.0,
            )
            .unwrap()
        })
    });
}

fn closed_forms(c: &mut Criterion) {
    let params = TcParams::new(0.1, 1.0, 1.0, 3.5).unwrap();
    let model = TcModel::Thm5 {
        radii: vec![3.0, 6.0, 9.0, 12.0, 15.0],
        probs: vec![0.2; 5],
    };
    c.bench_function("tc_closed_form/thm5", |b| b.iter(|| tc_closed_form(black_box(&params), &model).unwrap()));

    let p = LayerPartition::equal_width(20.0, 32).unwrap();
    let powers = design_powers(&p, 3.5, DesignVariant::Thm3Lower, 1.0).unwrap();
    c.bench_function("analytic_outage/32-layers", |b| {
        b.iter(|| analytic_outage(black_box(1e-4), &p, &powers, 1.0, 3.5, OutageMode::Exact).unwrap())
    });
}

criterion_group!(benches, design, closed_forms);
criterion_main!(benches);
