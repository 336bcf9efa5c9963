use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::hitgraph::SubGraph;
use crate::statevector::ShotConfig;
use crate::ttn::{forward, FeatureScaler, TtnParams};

/// Confusion counts of an edge classifier. Ratios with a zero denominator
/// are `None`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Metrics {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    pub fn_: usize,
}

fn ratio(num: usize, den: usize) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

impl Metrics {
    pub fn record(&mut self, predicted: bool, actual: bool) {
        match (predicted, actual) {
            (true, true) => self.tp += 1,
            (true, false) => self.fp += 1,
            (false, false) => self.tn += 1,
            (false, true) => self.fn_ += 1,
        }
    }

    pub fn total(&self) -> usize {
        self.tp + self.fp + self.tn + self.fn_
    }

    /// TP / (TP + FP)
    pub fn purity(&self) -> Option<f64> {
        ratio(self.tp, self.tp + self.fp)
    }

    /// TP / (TP + FN)
    pub fn efficiency(&self) -> Option<f64> {
        ratio(self.tp, self.tp + self.fn_)
    }

    pub fn accuracy(&self) -> Option<f64> {
        ratio(self.tp + self.tn, self.total())
    }

    /// Accuracy of always predicting the more common class.
    pub fn majority_baseline(&self) -> Option<f64> {
        let pos = self.tp + self.fn_;
        let neg = self.fp + self.tn;
        ratio(pos.max(neg), self.total())
    }
}

/// Predicted probability of every edge, flattened in subgraph then edge
/// order. With `shots`, edge `i` is sampled with `shots.for_index(i)`.
pub fn predict_edges(
    subgraphs: &[SubGraph],
    params: &TtnParams,
    scaler: &FeatureScaler,
    shots: Option<&ShotConfig>,
) -> Vec<f64> {
    let edges: Vec<_> = subgraphs
        .iter()
        .flat_map(|g| g.edges.iter().map(move |e| g.features(e)))
        .collect();
    edges
        .par_iter()
        .enumerate()
        .map(|(i, x)| {
            let cfg = shots.map(|s| s.for_index(i as u64));
            forward(x, params, scaler, cfg.as_ref())
        })
        .collect()
}

/// Tallies the confusion matrix over all edges, calling an edge true when
/// its predicted probability is at least `threshold`.
pub fn evaluate_metrics(
    subgraphs: &[SubGraph],
    params: &TtnParams,
    scaler: &FeatureScaler,
    threshold: f64,
    shots: Option<&ShotConfig>,
) -> Result<Metrics> {
    let preds = predict_edges(subgraphs, params, scaler, shots);
    if preds.is_empty() {
        return Err(Error::Data("no edges to evaluate".into()));
    }
    let labels = subgraphs
        .iter()
        .flat_map(|g| g.edges.iter().map(|e| e.label));
    let mut m = Metrics::default();
    for (p, y) in preds.iter().zip(labels) {
        m.record(*p >= threshold, y);
    }
    Ok(m)
}
