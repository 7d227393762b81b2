use criterion::{criterion_group, criterion_main, Criterion};

use mtvlint_bench::{scatter_fixture, two_bar_fixture};
use mtvlint_core::morphisms::VisualMorphism;
use mtvlint_core::simlab::{run_cell, Manipulation, SimScenario};
use mtvlint_core::{compile, rasterize, run_statistical, DataMorphism, EqualityMeasure, MtvConfig};

fn render(c: &mut Criterion) {
    let (spec, table) = two_bar_fixture();
    c.bench_function("compile_rasterize_two_bars", |b| {
        b.iter(|| rasterize(&compile(&spec, &table).unwrap()).unwrap())
    });
    let (spec, table) = scatter_fixture(1000);
    c.bench_function("compile_rasterize_scatter_1000", |b| {
        b.iter(|| rasterize(&compile(&spec, &table).unwrap()).unwrap())
    });
}

fn runner(c: &mut Criterion) {
    let (spec, table) = two_bar_fixture();
    let shuffle = MtvConfig::new(
        DataMorphism::Shuffle,
        VisualMorphism::Identity,
        EqualityMeasure::pixels(0),
        1,
    );
    c.bench_function("shuffle_pixels_n100", |b| {
        b.iter(|| run_statistical(&shuffle, &spec, &table).unwrap())
    });
    let bootstrap = MtvConfig::new(
        DataMorphism::Bootstrap {
            category_field: "category".into(),
            value_field: "value".into(),
        },
        VisualMorphism::Identity,
        EqualityMeasure::BarHeightOrder { tolerance: 0.0 },
        1,
    );
    c.bench_function("bootstrap_order_n100", |b| {
        b.iter(|| run_statistical(&bootstrap, &spec, &table).unwrap())
    });
    let scenario = SimScenario::new(Manipulation::Variance, 3, 1, 0).unwrap();
    c.bench_function("simulation_cell_n100", |b| {
        b.iter(|| run_cell(&scenario, 100).unwrap())
    });
}

criterion_group! {
    name = benches;
    config = Criterion::default().sample_size(20);
    targets = render, runner
}
criterion_main!(benches);
