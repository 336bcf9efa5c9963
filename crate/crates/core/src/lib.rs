//! Quantum edge classification for particle track seeding.
//!
//! * [`statevector`]: dense simulation of Ry/CNOT circuits with shot sampling.
//! * [`ttn`]: the six-qubit tree tensor network classifier and its
//!   parameter-shift gradient.
//! * [`hitgraph`]: barrel hit selection, doublet cuts, truth labels and the
//!   8 × 2 sector split.
//! * [`synthgen`]: helical toy events in TrackML CSV layout.
//! * [`training`]: weighted cross entropy, per-subgraph SGD and metrics.
//! * [`model`]: text persistence of a trained classifier.

// `!(x > 0.0)` is used on purpose so that NaN fails validation
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod hitgraph;
pub mod model;
pub mod statevector;
pub mod synthgen;
pub mod training;
pub mod ttn;

pub use error::{Error, Result};
pub use hitgraph::{Doublet, Event, Hit, Particle, SelectionCuts, SubGraph};
pub use model::TtnModel;
pub use statevector::{GateOp, ShotConfig, StateVector};
pub use synthgen::GeneratorConfig;
pub use training::{History, Metrics, TrainConfig};
pub use ttn::{EdgeFeatures, FeatureScaler, TtnParams};
