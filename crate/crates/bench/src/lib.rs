//! Fixed inputs shared by the criterion benchmarks.

use qtrack_core::hitgraph::{process_event, select_barrel_hits, SelectionCuts, SubGraph};
use qtrack_core::synthgen::{gen_event, GeneratorConfig};
use qtrack_core::training::fit_scaler;
use qtrack_core::{Event, FeatureScaler, Hit};

/// One event with `tracks` helices and as many noise hits.
pub fn event(tracks: usize) -> Event {
    let cfg = GeneratorConfig {
        n_tracks: tracks,
        noise_hits: tracks,
        seed: 42,
        ..Default::default()
    };
    gen_event(&cfg, 0)
        .expect("valid generator config")
        .to_event()
}

pub fn barrel_hits(tracks: usize) -> Vec<Hit> {
    select_barrel_hits(&event(tracks))
}

/// Non-empty sector graphs of one event plus a scaler fitted on them.
pub fn subgraphs(tracks: usize) -> (Vec<SubGraph>, FeatureScaler) {
    let cuts = SelectionCuts {
        z0_max: 2000.0,
        ..Default::default()
    };
    let graphs: Vec<SubGraph> = process_event("0", &event(tracks), &cuts)
        .subgraphs
        .into_iter()
        .filter(|g| !g.edges.is_empty())
        .collect();
    let scaler = fit_scaler(&graphs).expect("fixture has edges");
    (graphs, scaler)
}
