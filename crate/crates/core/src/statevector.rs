//! Dense statevector simulation for small Ry/CNOT circuits.
//!
//! Basis indices are little-endian: qubit `k` is bit `k` of the amplitude
//! index, so `|10⟩` written with qubit 0 first is index `0b01`.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

pub const MAX_QUBITS: usize = 12;
pub const MAX_ORACLE_QUBITS: usize = 8;
pub const DEFAULT_SHOTS: u32 = 1000;

/// A single gate in a circuit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GateOp {
    Ry { target: usize, angle: f64 },
    Cnot { control: usize, target: usize },
}

impl GateOp {
    pub fn ry(target: usize, angle: f64) -> Self {
        GateOp::Ry { target, angle }
    }

    pub fn cnot(control: usize, target: usize) -> Self {
        GateOp::Cnot { control, target }
    }

    pub fn validate(&self, n_qubits: usize) -> Result<()> {
        match *self {
            GateOp::Ry { target, .. } => check_qubit(target, n_qubits),
            GateOp::Cnot { control, target } => {
                check_qubit(control, n_qubits)?;
                check_qubit(target, n_qubits)?;
                if control == target {
                    return Err(Error::Argument(format!(
                        "CNOT control and target are both qubit {control}"
                    )));
                }
                Ok(())
            }
        }
    }
}

/// Shot-sampling configuration for readout estimation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ShotConfig {
    pub n_shots: u32,
    pub seed: u64,
}

impl ShotConfig {
    pub fn new(n_shots: u32, seed: u64) -> Result<Self> {
        if n_shots == 0 {
            return Err(Error::Config("n_shots must be at least 1".into()));
        }
        Ok(Self { n_shots, seed })
    }

    /// Derives an independent configuration for the `index`-th circuit of a
    /// batch, so batches can be sampled in any order with the same result.
    pub fn for_index(&self, index: u64) -> Self {
        Self {
            n_shots: self.n_shots,
            seed: splitmix64(self.seed ^ splitmix64(index)),
        }
    }
}

impl Default for ShotConfig {
    fn default() -> Self {
        Self {
            n_shots: DEFAULT_SHOTS,
            seed: 0,
        }
    }
}

fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn check_qubit(index: usize, n_qubits: usize) -> Result<()> {
    if index >= n_qubits {
        Err(Error::Index { index, n_qubits })
    } else {
        Ok(())
    }
}

/// The `2^n` complex amplitudes of an `n`-qubit register.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    n_qubits: usize,
    amplitudes: Vec<Complex64>,
}

impl StateVector {
    /// Prepares `|0…0⟩`.
    pub fn zero(n_qubits: usize) -> Result<Self> {
        if n_qubits == 0 || n_qubits > MAX_QUBITS {
            return Err(Error::Size(n_qubits, MAX_QUBITS));
        }
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); 1 << n_qubits];
        amplitudes[0] = Complex64::new(1.0, 0.0);
        Ok(Self {
            n_qubits,
            amplitudes,
        })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    /// Rotation about Y: on each amplitude pair differing only in the target
    /// bit, `a0' = c·a0 − s·a1` and `a1' = s·a0 + c·a1` with `c = cos(θ/2)`,
    /// `s = sin(θ/2)`.
    pub fn apply_ry(&mut self, target: usize, angle: f64) -> Result<()> {
        check_qubit(target, self.n_qubits)?;
        let (s, c) = (angle / 2.0).sin_cos();
        let stride = 1usize << target;
        for block in self.amplitudes.chunks_exact_mut(stride << 1) {
            let (lo, hi) = block.split_at_mut(stride);
            for (a0, a1) in lo.iter_mut().zip(hi.iter_mut()) {
                let (x0, x1) = (*a0, *a1);
                *a0 = x0 * c - x1 * s;
                *a1 = x0 * s + x1 * c;
            }
        }
        Ok(())
    }

    pub fn apply_cnot(&mut self, control: usize, target: usize) -> Result<()> {
        GateOp::cnot(control, target).validate(self.n_qubits)?;
        let cbit = 1usize << control;
        let tbit = 1usize << target;
        for i in 0..self.amplitudes.len() {
            // visit each swapped pair once, from its target-bit-0 member
            if i & cbit != 0 && i & tbit == 0 {
                self.amplitudes.swap(i, i | tbit);
            }
        }
        Ok(())
    }

    pub fn apply(&mut self, gate: &GateOp) -> Result<()> {
        match *gate {
            GateOp::Ry { target, angle } => self.apply_ry(target, angle),
            GateOp::Cnot { control, target } => self.apply_cnot(control, target),
        }
    }

    pub fn apply_all<'a>(&mut self, gates: impl IntoIterator<Item = &'a GateOp>) -> Result<()> {
        gates.into_iter().try_for_each(|g| self.apply(g))
    }

    /// Probability of measuring `|1⟩` on `qubit`.
    pub fn prob_one(&self, qubit: usize) -> Result<f64> {
        check_qubit(qubit, self.n_qubits)?;
        let bit = 1usize << qubit;
        let p: f64 = self
            .amplitudes
            .iter()
            .enumerate()
            .filter(|(i, _)| i & bit != 0)
            .map(|(_, a)| a.norm_sqr())
            .sum();
        Ok(p.clamp(0.0, 1.0))
    }

    /// Estimates [`prob_one`](Self::prob_one) from `cfg.n_shots` Bernoulli
    /// draws of the exact single-qubit marginal.
    pub fn sample_shots(&self, qubit: usize, cfg: &ShotConfig) -> Result<f64> {
        let p = self.prob_one(qubit)?;
        Ok(sample_bernoulli_mean(p, cfg))
    }
}

pub(crate) fn sample_bernoulli_mean(p: f64, cfg: &ShotConfig) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let hits = (0..cfg.n_shots).filter(|_| rng.random::<f64>() < p).count();
    hits as f64 / cfg.n_shots as f64
}

/// Full `2^n × 2^n` unitary of a gate sequence, built from Kronecker
/// products and explicit permutation matrices. Intended as a brute-force
/// reference for small registers only.
pub fn dense_unitary(gates: &[GateOp], n_qubits: usize) -> Result<DMatrix<Complex64>> {
    if n_qubits == 0 || n_qubits > MAX_ORACLE_QUBITS {
        return Err(Error::Size(n_qubits, MAX_ORACLE_QUBITS));
    }
    let dim = 1usize << n_qubits;
    let mut total = DMatrix::<Complex64>::identity(dim, dim);
    for gate in gates {
        gate.validate(n_qubits)?;
        let m = match *gate {
            GateOp::Ry { target, angle } => ry_full(target, angle, n_qubits),
            GateOp::Cnot { control, target } => cnot_full(control, target, dim),
        };
        total = m * total;
    }
    Ok(total)
}

fn ry_full(target: usize, angle: f64, n_qubits: usize) -> DMatrix<Complex64> {
    let (s, c) = (angle / 2.0).sin_cos();
    let ry = DMatrix::from_row_slice(
        2,
        2,
        &[
            Complex64::new(c, 0.0),
            Complex64::new(-s, 0.0),
            Complex64::new(s, 0.0),
            Complex64::new(c, 0.0),
        ],
    );
    let eye = DMatrix::<Complex64>::identity(2, 2);
    // highest qubit is the leftmost Kronecker factor
    (0..n_qubits).rev().fold(DMatrix::identity(1, 1), |acc, q| {
        let factor = if q == target { &ry } else { &eye };
        acc.kronecker(factor)
    })
}

fn cnot_full(control: usize, target: usize, dim: usize) -> DMatrix<Complex64> {
    let mut m = DMatrix::<Complex64>::zeros(dim, dim);
    for col in 0..dim {
        let row = if (col >> control) & 1 == 1 {
            col ^ (1 << target)
        } else {
            col
        };
        m[(row, col)] = Complex64::new(1.0, 0.0);
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn re(state: &StateVector) -> Vec<f64> {
        state.amplitudes().iter().map(|a| a.re).collect()
    }

    #[test]
    fn zero_state_sizes() {
        assert_eq!(re(&StateVector::zero(1).unwrap()), vec![1.0, 0.0]);
        assert_eq!(re(&StateVector::zero(2).unwrap()), vec![1.0, 0.0, 0.0, 0.0]);
        let s6 = StateVector::zero(6).unwrap();
        assert_eq!(s6.amplitudes().len(), 64);
        assert_eq!(s6.amplitudes()[0], Complex64::new(1.0, 0.0));
        assert!(matches!(StateVector::zero(0), Err(Error::Size(0, _))));
        assert!(matches!(StateVector::zero(13), Err(Error::Size(13, _))));
    }

    #[test]
    fn ry_examples() {
        let mut s = StateVector::zero(1).unwrap();
        s.apply_ry(0, PI).unwrap();
        assert_abs_diff_eq!(s.amplitudes()[0].re, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(s.amplitudes()[1].re, 1.0, epsilon = 1e-15);

        let mut s = StateVector::zero(1).unwrap();
        s.apply_ry(0, 0.0).unwrap();
        assert_eq!(re(&s), vec![1.0, 0.0]);

        let mut s = StateVector::zero(1).unwrap();
        s.apply_ry(0, FRAC_PI_2).unwrap();
        let h = 2f64.sqrt() / 2.0;
        assert_abs_diff_eq!(s.amplitudes()[0].re, h, epsilon = 1e-15);
        assert_abs_diff_eq!(s.amplitudes()[1].re, h, epsilon = 1e-15);

        assert!(matches!(
            s.apply_ry(1, 0.3),
            Err(Error::Index {
                index: 1,
                n_qubits: 1
            })
        ));
    }

    #[test]
    fn cnot_examples() {
        let mut s = StateVector::zero(2).unwrap();
        s.apply_cnot(0, 1).unwrap();
        assert_eq!(re(&s), vec![1.0, 0.0, 0.0, 0.0]);

        // qubit 0 set is index 0b01
        let mut s = StateVector::zero(2).unwrap();
        s.apply_ry(0, PI).unwrap();
        s.apply_cnot(0, 1).unwrap();
        assert_abs_diff_eq!(s.amplitudes()[3].re, 1.0, epsilon = 1e-15);

        let mut s = StateVector::zero(2).unwrap();
        s.apply_ry(0, FRAC_PI_2).unwrap();
        s.apply_cnot(0, 1).unwrap();
        let h = 2f64.sqrt() / 2.0;
        let v = re(&s);
        assert_abs_diff_eq!(v[0], h, epsilon = 1e-15);
        assert_abs_diff_eq!(v[1], 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(v[2], 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(v[3], h, epsilon = 1e-15);

        assert!(matches!(s.apply_cnot(1, 1), Err(Error::Argument(_))));
        assert!(matches!(s.apply_cnot(0, 2), Err(Error::Index { .. })));
    }

    #[test]
    fn prob_one_examples() {
        let s = StateVector::zero(6).unwrap();
        assert_eq!(s.prob_one(3).unwrap(), 0.0);
        assert!(s.prob_one(6).is_err());

        let mut s = StateVector::zero(1).unwrap();
        s.apply_ry(0, FRAC_PI_2).unwrap();
        assert_abs_diff_eq!(s.prob_one(0).unwrap(), 0.5, epsilon = 1e-12);

        // oracle: sin²(θ/2) at θ = 2π/3
        let oracle = (PI / 3.0).sin().powi(2);
        assert_abs_diff_eq!(oracle, 0.75, epsilon = 1e-15);
        let mut s = StateVector::zero(1).unwrap();
        s.apply_ry(0, 2.0 * PI / 3.0).unwrap();
        assert_abs_diff_eq!(s.prob_one(0).unwrap(), 0.75, epsilon = 1e-12);
    }

    #[test]
    fn shots_at_extremes() {
        let zero = StateVector::zero(1).unwrap();
        let mut one = zero.clone();
        one.apply_ry(0, PI).unwrap();
        for seed in [0, 1, 99, u64::MAX] {
            let cfg = ShotConfig::new(1000, seed).unwrap();
            assert_eq!(zero.sample_shots(0, &cfg).unwrap(), 0.0);
            assert_eq!(one.sample_shots(0, &cfg).unwrap(), 1.0);
        }
        assert!(ShotConfig::new(0, 1).is_err());
    }

    #[test]
    fn shots_reproducible_per_seed() {
        let mut s = StateVector::zero(1).unwrap();
        s.apply_ry(0, 1.1).unwrap();
        let cfg = ShotConfig::new(1000, 42).unwrap();
        let a = s.sample_shots(0, &cfg).unwrap();
        let b = s.sample_shots(0, &cfg).unwrap();
        assert_eq!(a.to_bits(), b.to_bits());
        assert_ne!(cfg.for_index(0), cfg.for_index(1));
    }

    #[test]
    fn dense_unitary_examples() {
        let u = dense_unitary(&[GateOp::ry(0, PI)], 1).unwrap();
        let expect = [[0.0, -1.0], [1.0, 0.0]];
        for r in 0..2 {
            for c in 0..2 {
                assert_abs_diff_eq!(u[(r, c)].re, expect[r][c], epsilon = 1e-15);
                assert_eq!(u[(r, c)].im, 0.0);
            }
        }
        let id = dense_unitary(&[], 2).unwrap();
        assert_eq!(id, DMatrix::identity(4, 4));
        assert!(matches!(dense_unitary(&[], 9), Err(Error::Size(9, 8))));
    }
}
