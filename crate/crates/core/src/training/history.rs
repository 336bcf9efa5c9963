use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::metrics::Metrics;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct UpdateRecord {
    /// 1-based, counted across epochs.
    pub update: usize,
    pub epoch: usize,
    pub subgraph: String,
    /// `None` when the subgraph had no edges and no step was taken.
    pub loss: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    /// Mean of this epoch's update losses.
    pub train_loss: Option<f64>,
    /// `None` when the test set has no edges.
    pub validation: Option<Metrics>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct History {
    /// Mean training loss at the initial parameters, before any update.
    pub initial_loss: Option<f64>,
    pub updates: Vec<UpdateRecord>,
    pub epochs: Vec<EpochRecord>,
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

impl History {
    /// `update,subgraph,loss`; skipped updates leave `loss` empty.
    pub fn updates_csv(&self) -> String {
        let mut out = String::from("update,subgraph,loss\n");
        for u in &self.updates {
            writeln!(out, "{},{},{}", u.update, u.subgraph, opt(u.loss)).unwrap();
        }
        out
    }

    /// `epoch,train_loss,purity,efficiency,accuracy`; undefined values are
    /// left empty.
    pub fn epochs_csv(&self) -> String {
        let mut out = String::from("epoch,train_loss,purity,efficiency,accuracy\n");
        for e in &self.epochs {
            let m = e.validation;
            writeln!(
                out,
                "{},{},{},{},{}",
                e.epoch,
                opt(e.train_loss),
                opt(m.and_then(|m| m.purity())),
                opt(m.and_then(|m| m.efficiency())),
                opt(m.and_then(|m| m.accuracy())),
            )
            .unwrap();
        }
        out
    }

    /// Writes `updates.csv` and `epochs.csv` into `dir`.
    pub fn write_csv(&self, dir: &Path) -> Result<()> {
        for (name, text) in [
            ("updates.csv", self.updates_csv()),
            ("epochs.csv", self.epochs_csv()),
        ] {
            let path = dir.join(name);
            fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_layout() {
        let mut m = Metrics::default();
        m.record(false, true);
        m.record(false, false);
        let h = History {
            initial_loss: Some(0.9),
            updates: vec![
                UpdateRecord {
                    update: 1,
                    epoch: 1,
                    subgraph: "evt1_s00".into(),
                    loss: Some(0.5),
                },
                UpdateRecord {
                    update: 2,
                    epoch: 1,
                    subgraph: "evt1_s01".into(),
                    loss: None,
                },
            ],
            epochs: vec![EpochRecord {
                epoch: 1,
                train_loss: Some(0.5),
                validation: Some(m),
            }],
        };
        assert_eq!(
            h.updates_csv(),
            "update,subgraph,loss\n1,evt1_s00,0.5\n2,evt1_s01,\n"
        );
        assert_eq!(
            h.epochs_csv(),
            "epoch,train_loss,purity,efficiency,accuracy\n1,0.5,,0,0.5\n"
        );
    }
}
