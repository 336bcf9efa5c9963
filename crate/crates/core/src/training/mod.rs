//! Dataset split, per-subgraph SGD on weighted cross entropy, and
//! evaluation.
//!
//! One update is taken per training subgraph: the loss gradient is averaged
//! over the subgraph's edges, with class weights balanced inside that
//! subgraph. Training always uses exact readout probabilities.

mod history;
mod loss;
mod metrics;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

pub use history::{EpochRecord, History, UpdateRecord};
pub use loss::{weighted_bce, weighted_bce_grad, ClassWeights};
pub use metrics::{evaluate_metrics, predict_edges, Metrics};

use crate::error::{Error, Result};
use crate::hitgraph::SubGraph;
use crate::ttn::{forward, forward_and_gradient, EdgeFeatures, FeatureScaler, TtnParams, N_PARAMS};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    pub split_ratio: f64,
    pub threshold: f64,
    /// Seeds the per-epoch reshuffle of the training subgraphs.
    pub seed: u64,
    pub eps: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 2,
            learning_rate: 0.01,
            split_ratio: 0.9,
            threshold: 0.5,
            seed: 0,
            eps: 1e-7,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.split_ratio > 0.0 && self.split_ratio < 1.0) {
            return Err(Error::Config(format!(
                "split ratio must lie in (0, 1), got {}",
                self.split_ratio
            )));
        }
        if !(self.threshold > 0.0 && self.threshold < 1.0) {
            return Err(Error::Config(format!(
                "threshold must lie in (0, 1), got {}",
                self.threshold
            )));
        }
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Config(format!(
                "learning rate must be finite and non-negative, got {}",
                self.learning_rate
            )));
        }
        if !(self.eps > 0.0 && self.eps < 0.5) {
            return Err(Error::Config(format!(
                "eps must lie in (0, 0.5), got {}",
                self.eps
            )));
        }
        Ok(())
    }
}

/// Seeded shuffle, then the first `⌈ratio·N⌉` items train and the rest test.
/// Both sides are kept non-empty.
pub fn split_dataset<T: Clone>(items: &[T], ratio: f64, seed: u64) -> Result<(Vec<T>, Vec<T>)> {
    let n = items.len();
    if n < 2 {
        return Err(Error::Data(format!(
            "need at least 2 subgraphs to split, got {n}"
        )));
    }
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(Error::Config(format!(
            "split ratio must lie in (0, 1), got {ratio}"
        )));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    // tolerance keeps 0.9 × 1600 from rounding up to 1441
    let n_train = ((ratio * n as f64 - 1e-9).ceil() as usize).clamp(1, n - 1);
    let train = order[..n_train].iter().map(|&i| items[i].clone()).collect();
    let test = order[n_train..].iter().map(|&i| items[i].clone()).collect();
    Ok((train, test))
}

/// Fits the feature scaler on every edge of `subgraphs`.
pub fn fit_scaler(subgraphs: &[SubGraph]) -> Result<FeatureScaler> {
    let features: Vec<EdgeFeatures> = subgraphs
        .iter()
        .flat_map(|g| g.edges.iter().map(move |e| g.features(e)))
        .collect();
    FeatureScaler::fit(&features)
}

/// Mean weighted loss over the edges of one subgraph, `None` if it has none.
pub fn subgraph_loss(
    g: &SubGraph,
    params: &TtnParams,
    scaler: &FeatureScaler,
    eps: f64,
) -> Option<f64> {
    if g.edges.is_empty() {
        return None;
    }
    let w = ClassWeights::for_subgraph(g);
    let losses: Vec<f64> = g
        .edges
        .par_iter()
        .map(|e| w.loss(forward(&g.features(e), params, scaler, None), e.label, eps))
        .collect();
    Some(losses.iter().sum::<f64>() / losses.len() as f64)
}

/// Mean loss and its gradient with respect to the circuit parameters.
pub fn subgraph_loss_and_grad(
    g: &SubGraph,
    params: &TtnParams,
    scaler: &FeatureScaler,
    eps: f64,
) -> Option<(f64, [f64; N_PARAMS])> {
    if g.edges.is_empty() {
        return None;
    }
    let w = ClassWeights::for_subgraph(g);
    let per_edge: Vec<(f64, [f64; N_PARAMS])> = g
        .edges
        .par_iter()
        .map(|e| {
            let (p, dp) = forward_and_gradient(&g.features(e), params, scaler);
            let dl = w.loss_grad(p, e.label, eps);
            (w.loss(p, e.label, eps), dp.map(|d| dl * d))
        })
        .collect();
    // sequential reduction in edge order keeps results bit-reproducible
    let n = per_edge.len() as f64;
    let mut loss = 0.0;
    let mut grad = [0.0; N_PARAMS];
    for (l, g) in &per_edge {
        loss += l;
        for (acc, v) in grad.iter_mut().zip(g) {
            *acc += v;
        }
    }
    Some((loss / n, grad.map(|v| v / n)))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepOutcome {
    Updated {
        params: TtnParams,
        loss: f64,
    },
    /// The subgraph had no edges; parameters are unchanged.
    Skipped,
}

/// One SGD step on one subgraph.
pub fn subgraph_step(
    g: &SubGraph,
    params: &TtnParams,
    scaler: &FeatureScaler,
    cfg: &TrainConfig,
) -> StepOutcome {
    match subgraph_loss_and_grad(g, params, scaler, cfg.eps) {
        None => StepOutcome::Skipped,
        Some((loss, grad)) => {
            let mut next = *params;
            for (t, d) in next.0.iter_mut().zip(grad) {
                *t -= cfg.learning_rate * d;
            }
            StepOutcome::Updated { params: next, loss }
        }
    }
}

fn mean(values: impl Iterator<Item = f64>) -> Option<f64> {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    (n > 0).then(|| sum / n as f64)
}

/// Mean of [`subgraph_loss`] over the subgraphs that have edges.
pub fn dataset_loss(
    subgraphs: &[SubGraph],
    params: &TtnParams,
    scaler: &FeatureScaler,
    eps: f64,
) -> Option<f64> {
    mean(
        subgraphs
            .iter()
            .filter_map(|g| subgraph_loss(g, params, scaler, eps)),
    )
}

/// Runs `cfg.epochs` passes over `train`, one update per subgraph, and
/// validates on `test` after every epoch.
pub fn train(
    train: &[SubGraph],
    test: &[SubGraph],
    cfg: &TrainConfig,
    init: &TtnParams,
    scaler: &FeatureScaler,
) -> Result<(TtnParams, History)> {
    cfg.validate()?;
    if train.is_empty() {
        return Err(Error::Data("training set is empty".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut params = *init;
    let mut history = History {
        initial_loss: dataset_loss(train, &params, scaler, cfg.eps),
        ..Default::default()
    };
    let mut order: Vec<usize> = (0..train.len()).collect();

    for epoch in 1..=cfg.epochs {
        order.shuffle(&mut rng);
        let mut epoch_losses = Vec::with_capacity(order.len());
        for &i in &order {
            let g = &train[i];
            let loss = match subgraph_step(g, &params, scaler, cfg) {
                StepOutcome::Skipped => None,
                StepOutcome::Updated { params: next, loss } => {
                    if !loss.is_finite() || next.0.iter().any(|t| !t.is_finite()) {
                        return Err(Error::Numeric(format!(
                            "epoch {epoch}, subgraph {}: loss {loss}",
                            g.name()
                        )));
                    }
                    params = next;
                    epoch_losses.push(loss);
                    Some(loss)
                }
            };
            history.updates.push(UpdateRecord {
                update: history.updates.len() + 1,
                epoch,
                subgraph: g.name(),
                loss,
            });
        }
        let validation = evaluate_metrics(test, &params, scaler, cfg.threshold, None).ok();
        history.epochs.push(EpochRecord {
            epoch,
            train_loss: mean(epoch_losses.into_iter()),
            validation,
        });
    }
    Ok((params, history))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hitgraph::{Edge, Node, Sector};
    use crate::ttn::init_params;

    fn toy_graph(id: usize, labels: &[bool]) -> SubGraph {
        let nodes = (0..=labels.len())
            .map(|i| Node {
                r: 30.0 + 40.0 * i as f64,
                phi: 0.05 * ((i * 7 + id) % 5) as f64,
                z: -20.0 + 9.0 * ((i * 3 + id) % 7) as f64,
            })
            .collect();
        let edges = labels
            .iter()
            .enumerate()
            .map(|(i, &label)| Edge {
                src: i,
                dst: i + 1,
                label,
            })
            .collect();
        SubGraph {
            event_id: id.to_string(),
            sector: Sector { phi: 0, z: 0 },
            nodes,
            edges,
        }
    }

    #[test]
    fn split_counts() {
        let items: Vec<usize> = (0..1600).collect();
        let (tr, te) = split_dataset(&items, 0.9, 3).unwrap();
        assert_eq!((tr.len(), te.len()), (1440, 160));
        let items: Vec<usize> = (0..10).collect();
        let (tr, te) = split_dataset(&items, 0.9, 3).unwrap();
        assert_eq!((tr.len(), te.len()), (9, 1));
        let mut all: Vec<_> = tr.iter().chain(&te).copied().collect();
        all.sort();
        assert_eq!(all, items);
        assert_eq!(split_dataset(&items, 0.9, 3).unwrap(), (tr, te));
        assert!(split_dataset(&[1], 0.9, 0).is_err());
        let (tr, te) = split_dataset(&[1, 2], 0.99, 0).unwrap();
        assert_eq!((tr.len(), te.len()), (1, 1));
    }

    #[test]
    fn step_on_single_true_edge_raises_prediction() {
        // both hits at their scaler minima encode to |000000⟩; θ10 = π/2 then
        // puts the readout at p = 0.5
        let g = SubGraph {
            nodes: vec![
                Node {
                    r: 30.0,
                    phi: 0.0,
                    z: -20.0,
                },
                Node {
                    r: 70.0,
                    phi: 0.0,
                    z: -20.0,
                },
            ],
            ..toy_graph(0, &[true])
        };
        let scaler = FeatureScaler::new([
            (30.0, 31.0),
            (0.0, 1.0),
            (-20.0, -19.0),
            (70.0, 71.0),
            (0.0, 1.0),
            (-20.0, -19.0),
        ])
        .unwrap();
        let x = g.features(&g.edges[0]);
        let mut params = TtnParams::zeros();
        params.0[10] = std::f64::consts::FRAC_PI_2;
        let before = forward(&x, &params, &scaler, None);
        assert!((before - 0.5).abs() < 1e-12);

        let cfg = TrainConfig {
            learning_rate: 0.1,
            ..Default::default()
        };
        let StepOutcome::Updated { params: next, loss } = subgraph_step(&g, &params, &scaler, &cfg)
        else {
            panic!("step skipped");
        };
        // one-class subgraph: w_true = E / (2·E_true) = 1/2
        assert!((loss - 0.5 * 2f64.ln()).abs() < 1e-12);
        assert!(forward(&x, &next, &scaler, None) > before);
    }

    #[test]
    fn empty_subgraph_is_skipped() {
        let g = SubGraph::empty("1", Sector { phi: 0, z: 0 });
        let scaler = FeatureScaler::new([(0.0, 1.0); 6]).unwrap();
        assert_eq!(
            subgraph_step(&g, &TtnParams::zeros(), &scaler, &TrainConfig::default()),
            StepOutcome::Skipped
        );
    }

    #[test]
    fn zero_learning_rate_keeps_params() {
        let graphs: Vec<_> = (0..6)
            .map(|i| toy_graph(i, &[true, false, i % 2 == 0]))
            .collect();
        let scaler = fit_scaler(&graphs).unwrap();
        let init = init_params(4);
        let cfg = TrainConfig {
            learning_rate: 0.0,
            ..Default::default()
        };
        let (fin, hist) = train(&graphs[..4], &graphs[4..], &cfg, &init, &scaler).unwrap();
        assert_eq!(fin, init);
        assert_eq!(hist.updates.len(), 8);
        assert_eq!(hist.epochs.len(), 2);
    }

    #[test]
    fn training_is_deterministic() {
        let graphs: Vec<_> = (0..8)
            .map(|i| toy_graph(i, &[true, false, i % 3 == 0, false]))
            .collect();
        let scaler = fit_scaler(&graphs).unwrap();
        let cfg = TrainConfig {
            learning_rate: 0.2,
            seed: 5,
            ..Default::default()
        };
        let a = train(&graphs[..6], &graphs[6..], &cfg, &init_params(1), &scaler).unwrap();
        let b = train(&graphs[..6], &graphs[6..], &cfg, &init_params(1), &scaler).unwrap();
        assert_eq!(a, b);
        assert!(a.1.updates.iter().all(|u| u.loss.unwrap() >= 0.0));
    }

    #[test]
    fn invalid_config_rejected() {
        let bad = TrainConfig {
            split_ratio: 1.0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let bad = TrainConfig {
            threshold: 0.0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
    }
}
