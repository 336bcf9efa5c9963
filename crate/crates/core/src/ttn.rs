//! Six-qubit tree tensor network edge classifier.
//!
//! Each edge is described by the cylindrical coordinates of its two hits,
//! inner hit first. Every coordinate is scaled onto `[0, 2π]` and loaded as
//! an Ry rotation on its own qubit; the trainable tree then contracts the
//! register pairwise onto qubit 3, whose `|1⟩` probability is the predicted
//! probability that the edge is true.
//!
//! Circuit layout (`ttn-v1`), after encoding `Ry(x_i)` on qubit `i`:
//!
//! ```text
//! layer 1: Ry(θ0..θ5) on qubits 0..5; CNOT 0→1, 2→3, 4→5
//! layer 2: Ry(θ6) on 1, Ry(θ7) on 3;   CNOT 1→3
//! layer 3: Ry(θ8) on 3, Ry(θ9) on 5;   CNOT 5→3
//! layer 4: Ry(θ10) on 3;               readout qubit 3
//! ```

use std::f64::consts::{FRAC_PI_2, TAU};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::statevector::{sample_bernoulli_mean, GateOp, ShotConfig, StateVector};

pub const N_QUBITS: usize = 6;
pub const N_FEATURES: usize = 6;
pub const N_PARAMS: usize = 11;
pub const READOUT_QUBIT: usize = 3;
pub const LAYOUT_VERSION: &str = "ttn-v1";

/// Trainable part of the circuit, as (parameter index, qubit) rotations and
/// CNOTs in application order.
#[derive(Debug, Clone, Copy)]
enum LayoutStep {
    Rot(usize, usize),
    Cnot(usize, usize),
}

const LAYOUT: [LayoutStep; 16] = {
    use LayoutStep::{Cnot, Rot};
    [
        Rot(0, 0),
        Rot(1, 1),
        Rot(2, 2),
        Rot(3, 3),
        Rot(4, 4),
        Rot(5, 5),
        Cnot(0, 1),
        Cnot(2, 3),
        Cnot(4, 5),
        Rot(6, 1),
        Rot(7, 3),
        Cnot(1, 3),
        Rot(8, 3),
        Rot(9, 5),
        Cnot(5, 3),
        Rot(10, 3),
    ]
};

/// Raw geometric features of an edge: `(r, φ, z)` of the inner hit followed
/// by `(r, φ, z)` of the outer hit, in mm and rad.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EdgeFeatures(pub [f64; N_FEATURES]);

impl EdgeFeatures {
    /// Builds the feature vector from two hits given as `(r, φ, z)`, putting
    /// the hit with smaller radius first.
    pub fn from_hits(a: (f64, f64, f64), b: (f64, f64, f64)) -> Self {
        let (inner, outer) = if b.0 < a.0 { (b, a) } else { (a, b) };
        EdgeFeatures([inner.0, inner.1, inner.2, outer.0, outer.1, outer.2])
    }

    pub fn values(&self) -> &[f64; N_FEATURES] {
        &self.0
    }
}

/// Trainable rotation angles, in layout order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TtnParams(pub [f64; N_PARAMS]);

impl TtnParams {
    pub fn zeros() -> Self {
        TtnParams([0.0; N_PARAMS])
    }

    pub fn new(thetas: &[f64]) -> Result<Self> {
        let arr: [f64; N_PARAMS] = thetas.try_into().map_err(|_| {
            Error::Argument(format!(
                "expected {N_PARAMS} parameters, got {}",
                thetas.len()
            ))
        })?;
        if let Some(i) = arr.iter().position(|t| !t.is_finite()) {
            return Err(Error::Numeric(format!("parameter {i} is {}", arr[i])));
        }
        Ok(TtnParams(arr))
    }

    /// Independent uniform draws on `[0, 2π)`.
    pub fn random(seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut thetas = [0.0; N_PARAMS];
        for t in thetas.iter_mut() {
            *t = rng.random_range(0.0..TAU);
        }
        TtnParams(thetas)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

/// Per-feature `(min, max)` bounds mapping raw features onto `[0, 2π]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeatureScaler {
    bounds: [(f64, f64); N_FEATURES],
}

/// Rotation angles for one edge plus the number of features that fell
/// outside the scaler bounds and were clamped.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Encoding {
    pub angles: [f64; N_FEATURES],
    pub clamped: usize,
}

impl FeatureScaler {
    pub fn new(bounds: [(f64, f64); N_FEATURES]) -> Result<Self> {
        for (i, (lo, hi)) in bounds.iter().enumerate() {
            if !(lo.is_finite() && hi.is_finite() && hi > lo) {
                return Err(Error::Data(format!(
                    "feature {i}: bounds ({lo}, {hi}) need finite min < max"
                )));
            }
        }
        Ok(Self { bounds })
    }

    /// Per-feature min/max over `edges`. A constant feature is widened to
    /// `(v − 0.5, v + 0.5)`.
    pub fn fit<'a>(edges: impl IntoIterator<Item = &'a EdgeFeatures>) -> Result<Self> {
        let mut bounds = [(f64::INFINITY, f64::NEG_INFINITY); N_FEATURES];
        let mut seen = 0usize;
        for edge in edges {
            seen += 1;
            for (b, &v) in bounds.iter_mut().zip(edge.values()) {
                b.0 = b.0.min(v);
                b.1 = b.1.max(v);
            }
        }
        if seen == 0 {
            return Err(Error::Data(
                "cannot fit feature scaler on an empty edge set".into(),
            ));
        }
        for b in bounds.iter_mut() {
            if b.1 == b.0 {
                *b = (b.0 - 0.5, b.1 + 0.5);
            }
        }
        Self::new(bounds)
    }

    pub fn bounds(&self) -> &[(f64, f64); N_FEATURES] {
        &self.bounds
    }

    pub fn encode(&self, raw: &EdgeFeatures) -> Encoding {
        let mut angles = [0.0; N_FEATURES];
        let mut clamped = 0;
        for ((angle, &(lo, hi)), &x) in angles.iter_mut().zip(&self.bounds).zip(raw.values()) {
            let a = TAU * (x - lo) / (hi - lo);
            *angle = if a.is_nan() {
                clamped += 1;
                0.0
            } else if !(0.0..=TAU).contains(&a) {
                clamped += 1;
                a.clamp(0.0, TAU)
            } else {
                a
            };
        }
        Encoding { angles, clamped }
    }
}

/// Gate list of the full circuit: encoding rotations followed by the tree.
pub fn circuit_gates(angles: &[f64; N_FEATURES], params: &TtnParams) -> Vec<GateOp> {
    let encode = angles.iter().enumerate().map(|(q, &a)| GateOp::ry(q, a));
    let tree = LAYOUT.iter().map(|step| match *step {
        LayoutStep::Rot(k, q) => GateOp::ry(q, params.0[k]),
        LayoutStep::Cnot(c, t) => GateOp::cnot(c, t),
    });
    encode.chain(tree).collect()
}

/// Register after the encoding layer only.
pub fn encode_state(angles: &[f64; N_FEATURES]) -> StateVector {
    let mut state = StateVector::zero(N_QUBITS).expect("6 qubits is a valid register");
    for (q, &a) in angles.iter().enumerate() {
        state.apply_ry(q, a).expect("encoding qubit in range");
    }
    state
}

/// State produced by [`encode_state`] for the features of one edge; also
/// reports how many features were clamped.
pub fn encode_features(raw: &EdgeFeatures, scaler: &FeatureScaler) -> (StateVector, usize) {
    let enc = scaler.encode(raw);
    (encode_state(&enc.angles), enc.clamped)
}

fn run_tree(state: &mut StateVector, params: &[f64; N_PARAMS]) {
    for step in LAYOUT.iter() {
        match *step {
            LayoutStep::Rot(k, q) => state.apply_ry(q, params[k]),
            LayoutStep::Cnot(c, t) => state.apply_cnot(c, t),
        }
        .expect("layout gates are valid on 6 qubits");
    }
}

fn readout(encoded: &StateVector, params: &[f64; N_PARAMS]) -> f64 {
    let mut state = encoded.clone();
    run_tree(&mut state, params);
    state
        .prob_one(READOUT_QUBIT)
        .expect("readout qubit in range")
}

fn shifted_gradient(encoded: &StateVector, params: &TtnParams) -> [f64; N_PARAMS] {
    let mut grad = [0.0; N_PARAMS];
    for (k, g) in grad.iter_mut().enumerate() {
        let mut plus = params.0;
        let mut minus = params.0;
        plus[k] += FRAC_PI_2;
        minus[k] -= FRAC_PI_2;
        *g = (readout(encoded, &plus) - readout(encoded, &minus)) / 2.0;
    }
    grad
}

/// Edge-truth probability. Exact when `shots` is `None`; otherwise the mean
/// of `shots.n_shots` sampled readouts.
pub fn forward(
    raw: &EdgeFeatures,
    params: &TtnParams,
    scaler: &FeatureScaler,
    shots: Option<&ShotConfig>,
) -> f64 {
    let (encoded, _) = encode_features(raw, scaler);
    let p = readout(&encoded, &params.0);
    match shots {
        None => p,
        Some(cfg) => sample_bernoulli_mean(p, cfg),
    }
}

/// Parameter-shift gradient `∂p/∂θ_k = [p(θ_k + π/2) − p(θ_k − π/2)] / 2`.
pub fn gradient(raw: &EdgeFeatures, params: &TtnParams, scaler: &FeatureScaler) -> [f64; N_PARAMS] {
    let (encoded, _) = encode_features(raw, scaler);
    shifted_gradient(&encoded, params)
}

/// Analytic probability and its gradient, sharing one encoding.
pub fn forward_and_gradient(
    raw: &EdgeFeatures,
    params: &TtnParams,
    scaler: &FeatureScaler,
) -> (f64, [f64; N_PARAMS]) {
    let (encoded, _) = encode_features(raw, scaler);
    (
        readout(&encoded, &params.0),
        shifted_gradient(&encoded, params),
    )
}

/// Parameters drawn uniformly on `[0, 2π)`; same seed, same parameters.
pub fn init_params(seed: u64) -> TtnParams {
    TtnParams::random(seed)
}
