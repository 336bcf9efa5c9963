use std::f64::consts::{PI, TAU};

use nalgebra::DVector;
use num_complex::Complex64;
use proptest::prelude::*;
use qtrack_core::statevector::{dense_unitary, ShotConfig};
use qtrack_core::ttn::{
    circuit_gates, encode_state, forward, forward_and_gradient, gradient, init_params,
    EdgeFeatures, FeatureScaler, TtnParams, N_QUBITS, READOUT_QUBIT,
};

fn params() -> impl Strategy<Value = TtnParams> {
    prop::array::uniform11(0.0..TAU).prop_map(TtnParams)
}

fn scaler() -> impl Strategy<Value = FeatureScaler> {
    prop::array::uniform6((-500.0..500.0f64, 0.1..1000.0f64))
        .prop_map(|b| FeatureScaler::new(b.map(|(lo, w)| (lo, lo + w))).unwrap())
}

/// Raw features drawn a little beyond the scaler's range so clamping is exercised.
fn triple() -> impl Strategy<Value = (EdgeFeatures, TtnParams, FeatureScaler)> {
    (scaler(), params(), prop::array::uniform6(-0.1..1.1f64)).prop_map(|(s, p, u)| {
        let b = *s.bounds();
        let raw = std::array::from_fn(|i| b[i].0 + u[i] * (b[i].1 - b[i].0));
        (EdgeFeatures(raw), p, s)
    })
}

fn oracle_probability(raw: &EdgeFeatures, p: &TtnParams, s: &FeatureScaler) -> f64 {
    let gates = circuit_gates(&s.encode(raw).angles, p);
    let u = dense_unitary(&gates, N_QUBITS).unwrap();
    let mut e0 = DVector::<Complex64>::zeros(1 << N_QUBITS);
    e0[0] = Complex64::new(1.0, 0.0);
    (u * e0)
        .iter()
        .enumerate()
        .filter(|(i, _)| i >> READOUT_QUBIT & 1 == 1)
        .map(|(_, a)| a.norm_sqr())
        .sum()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn forward_matches_dense_oracle((raw, p, s) in triple()) {
        let got = forward(&raw, &p, &s, None);
        prop_assert!((0.0..=1.0).contains(&got));
        prop_assert!((got - oracle_probability(&raw, &p, &s)).abs() < 1e-10);
    }

    #[test]
    fn shift_rule_matches_finite_difference((raw, p, s) in triple()) {
        let h = 1e-4;
        let g = gradient(&raw, &p, &s);
        for (k, gk) in g.iter().enumerate() {
            let (mut up, mut down) = (p, p);
            up.0[k] += h;
            down.0[k] -= h;
            let fd = (forward(&raw, &up, &s, None) - forward(&raw, &down, &s, None)) / (2.0 * h);
            prop_assert!((gk - fd).abs() < 1e-5, "component {k}: {gk} vs {fd}");
        }
        let (p0, g2) = forward_and_gradient(&raw, &p, &s);
        prop_assert_eq!(p0, forward(&raw, &p, &s, None));
        prop_assert_eq!(g, g2);
    }

    #[test]
    fn encoding_is_undone_by_inverse_rotations(angles in prop::array::uniform6(0.0..=TAU)) {
        let mut state = encode_state(&angles);
        for (q, &a) in angles.iter().enumerate() {
            state.apply_ry(q, -a).unwrap();
        }
        let amps = state.amplitudes();
        prop_assert!((amps[0] - Complex64::new(1.0, 0.0)).norm() < 1e-12);
        prop_assert!(amps[1..].iter().all(|a| a.norm() < 1e-12));
    }

    #[test]
    fn encoded_angles_stay_in_range((raw, _p, s) in triple()) {
        let enc = s.encode(&raw);
        prop_assert!(enc.angles.iter().all(|a| (0.0..=TAU).contains(a)));
        prop_assert!(enc.clamped <= 6);
    }
}

#[test]
fn shot_estimates_converge() {
    let s = FeatureScaler::new([(0.0, 1.0); 6]).unwrap();
    let mut inside = 0;
    for trial in 0..1000u64 {
        let p = init_params(trial);
        let raw = EdgeFeatures(std::array::from_fn(|i| {
            ((trial as f64 + 1.0) * (i as f64 + 0.37)).fract()
        }));
        let exact = forward(&raw, &p, &s, None);
        let shots = ShotConfig::new(1000, trial).unwrap();
        let sampled = forward(&raw, &p, &s, Some(&shots));
        assert!(((sampled * 1000.0).round() - sampled * 1000.0).abs() < 1e-9);
        let sigma = (exact * (1.0 - exact) / 1000.0).sqrt();
        if (sampled - exact).abs() <= 5.0 * sigma {
            inside += 1;
        }
    }
    assert!(inside >= 990, "{inside} of 1000 within 5 sigma");
}

#[test]
fn init_seeds_differ_and_average_to_pi() {
    for s in 0..100u64 {
        assert_eq!(init_params(s), init_params(s));
        assert_ne!(init_params(s), init_params(s + 1000));
    }
    let angles: Vec<f64> = (0..910u64).flat_map(|s| init_params(s).0).collect();
    assert!(angles.len() >= 10_000);
    assert!(angles.iter().all(|a| (0.0..TAU).contains(a)));
    let mean = angles.iter().sum::<f64>() / angles.len() as f64;
    assert!((mean - PI).abs() < 0.1, "mean {mean}");
}

#[test]
fn fitted_phi_bounds_cover_the_circle() {
    let edges: Vec<EdgeFeatures> = (0..2000)
        .map(|i| {
            let phi = -PI + TAU * (i as f64 + 0.5) / 2000.0;
            EdgeFeatures([32.0, phi, 0.0, 72.0, -phi, 1.0])
        })
        .collect();
    let s = FeatureScaler::fit(&edges).unwrap();
    for k in [1, 4] {
        let (lo, hi) = s.bounds()[k];
        assert!(
            (lo + PI).abs() < 1e-2 && (hi - PI).abs() < 1e-2,
            "{lo} {hi}"
        );
    }
}
