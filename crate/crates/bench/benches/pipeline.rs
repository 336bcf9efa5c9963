use std::f64::consts::FRAC_PI_3;
use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use qtrack_core::hitgraph::{build_doublets, SelectionCuts};
use qtrack_core::statevector::{GateOp, StateVector};
use qtrack_core::training::{subgraph_step, TrainConfig};
use qtrack_core::ttn::{forward, forward_and_gradient, init_params, EdgeFeatures};

fn gates(c: &mut Criterion) {
    let mut group = c.benchmark_group("statevector");
    for n in [6, 10, 12] {
        let layer: Vec<GateOp> = (0..n)
            .map(|q| GateOp::ry(q, FRAC_PI_3))
            .chain((0..n - 1).map(|q| GateOp::cnot(q, q + 1)))
            .collect();
        group.bench_with_input(BenchmarkId::new("ry_cnot_layer", n), &layer, |b, layer| {
            let mut s = StateVector::zero(n).unwrap();
            b.iter(|| s.apply_all(black_box(layer)).unwrap());
        });
    }
    group.finish();
}

fn classifier(c: &mut Criterion) {
    let (graphs, scaler) = qtrack_bench::subgraphs(20);
    let g = &graphs[0];
    let x: EdgeFeatures = g.features(&g.edges[0]);
    let params = init_params(1);
    c.bench_function("ttn/forward", |b| {
        b.iter(|| forward(black_box(&x), &params, &scaler, None))
    });
    c.bench_function("ttn/forward_and_gradient", |b| {
        b.iter(|| forward_and_gradient(black_box(&x), &params, &scaler))
    });
    let cfg = TrainConfig::default();
    c.bench_function("training/subgraph_step", |b| {
        b.iter(|| subgraph_step(black_box(g), &params, &scaler, &cfg))
    });
}

fn doublets(c: &mut Criterion) {
    let mut group = c.benchmark_group("hitgraph/build_doublets");
    for tracks in [50, 200] {
        let hits = qtrack_bench::barrel_hits(tracks);
        group.bench_with_input(BenchmarkId::from_parameter(tracks), &hits, |b, hits| {
            b.iter(|| build_doublets(black_box(hits), &SelectionCuts::default()))
        });
    }
    group.finish();
}

criterion_group!(benches, gates, classifier, doublets);
criterion_main!(benches);
