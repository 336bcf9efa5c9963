//! From detector hits to labeled sector graphs.
//!
//! The per-event pipeline is `load → select → build → label → section`,
//! wrapped up by [`process_event`].

mod doublet;
mod event;
mod section;

pub use doublet::{
    build_doublets, filter_low_pt, label_edges, select_barrel_hits, wrap_angle, CutMode, Doublet,
    DoubletSet, LabelStats, PtMode, SelectionCuts, BARREL_VOLUMES,
};
pub use event::{discover_events, load_event, Event, EventFiles, Hit, Particle};
pub use section::{
    parse_subgraph_name, read_subgraph, read_subgraphs, section_graph, write_subgraph, Edge, Node,
    Sectioned, Sector, SubGraph, PHI_SECTORS, SECTORS_PER_EVENT, Z_HALVES,
};

/// Counters reported for one processed event.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct EventSummary {
    pub hits_total: usize,
    pub hits_kept: usize,
    pub doublets: usize,
    pub true_edges: usize,
    pub fake_edges: usize,
    pub zero_dr: usize,
    pub missing_truth: usize,
    pub cross_sector: usize,
}

#[derive(Debug, Clone)]
pub struct ProcessedEvent {
    pub subgraphs: Vec<SubGraph>,
    pub summary: EventSummary,
}

pub fn process_event(event_id: &str, event: &Event, cuts: &SelectionCuts) -> ProcessedEvent {
    let mut hits = select_barrel_hits(event);
    if cuts.pt_mode == PtMode::Filter {
        hits = filter_low_pt(hits, event, cuts.pt_min);
    }
    let DoubletSet {
        mut doublets,
        zero_dr,
    } = build_doublets(&hits, cuts);
    let labels = label_edges(&mut doublets, event, cuts);
    let sectioned = section_graph(event_id, &hits, &doublets);
    ProcessedEvent {
        subgraphs: sectioned.subgraphs,
        summary: EventSummary {
            hits_total: event.hits.len(),
            hits_kept: hits.len(),
            doublets: doublets.len(),
            true_edges: labels.true_edges,
            fake_edges: labels.fake_edges,
            zero_dr,
            missing_truth: labels.missing_truth,
            cross_sector: sectioned.cross_sector,
        },
    }
}
