use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use proptest::prelude::*;

use ionqec::codes::{CodeScheme, LogicalState, SchemeKind};
use ionqec::gates::{apply_step, invert_circuit, run_circuit, CircuitStep, PulseSpec};
use ionqec::state::{BasisIndex, StateVector};
use ionqec::trajectory::{conditional_evolve, DecayModel};

fn state(n: usize) -> impl Strategy<Value = StateVector> {
    prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 1 << n).prop_filter_map("nonzero", move |v| {
        let amps = v.into_iter().map(|(re, im)| C64::new(re, im)).collect();
        StateVector::from_amplitudes(n, amps).ok()?.normalized().ok()
    })
}

fn step(n: usize) -> impl Strategy<Value = CircuitStep> {
    prop_oneof![
        (1..=n, -4.0 * PI..4.0 * PI, -PI..PI).prop_map(|(ion, k, phi)| CircuitStep::pulse(ion, k, phi)),
        (1..=n, 1..n).prop_map(move |(c, shift)| CircuitStep::cnot(c, (c - 1 + shift) % n + 1)),
    ]
}

fn circuit(n: usize) -> impl Strategy<Value = (StateVector, Vec<CircuitStep>)> {
    (state(n), prop::collection::vec(step(n), 0..20))
}

fn logical(n_qubits: usize) -> impl Strategy<Value = LogicalState> {
    prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 1 << n_qubits).prop_filter_map("nonzero", |v| {
        LogicalState::new(v.into_iter().map(|(re, im)| C64::new(re, im)).collect())
            .ok()?
            .normalized()
            .ok()
    })
}

proptest! {
    #[test]
    fn circuits_preserve_the_norm((psi, steps) in circuit(4)) {
        let (out, _) = run_circuit(&psi, &steps).unwrap();
        prop_assert!((out.norm_sqr() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn inverse_circuit_restores_the_state((psi, steps) in circuit(4)) {
        let (there, _) = run_circuit(&psi, &steps).unwrap();
        let (back, _) = run_circuit(&there, &invert_circuit(&steps)).unwrap();
        prop_assert!(psi.max_abs_diff(&back) < 1e-12);
    }

    #[test]
    fn pulse_then_inverse_is_identity(psi in state(2), ion in 1usize..=2, k in -4.0 * PI..4.0 * PI, phi in -PI..PI) {
        let p = PulseSpec::new(ion, k, phi);
        let (out, _) = run_circuit(&psi, &[CircuitStep::Pulse(p), CircuitStep::Pulse(p.inverse())]).unwrap();
        prop_assert!(psi.max_abs_diff(&out) < 1e-12);
    }

    #[test]
    fn gates_on_disjoint_ions_commute(psi in state(4), k1 in -PI..PI, k2 in -PI..PI, phi in -PI..PI) {
        let a = CircuitStep::pulse(1, k1, phi);
        let b = CircuitStep::cnot(3, 4);
        let c = CircuitStep::pulse(2, k2, -phi);
        let mut ab = psi.clone();
        for s in [&a, &b, &c] {
            apply_step(&mut ab, s).unwrap();
        }
        let mut ba = psi.clone();
        for s in [&c, &b, &a] {
            apply_step(&mut ba, s).unwrap();
        }
        prop_assert!(ab.max_abs_diff(&ba) < 1e-12);
    }

    #[test]
    fn complement_is_an_involution(n in 1usize..=14, raw in any::<usize>()) {
        let k = BasisIndex::new(raw % (1 << n), n).unwrap();
        prop_assert_eq!(k.complement().complement(), k);
        prop_assert_eq!(k.hamming_weight() + k.complement().hamming_weight(), n as u32);
    }

    #[test]
    fn conditional_evolution_composes(psi in state(3), t1 in 0.0f64..4.0, t2 in 0.0f64..4.0) {
        let model = DecayModel { gamma: 1.0, per_ion_gamma: Some(vec![0.3, 1.0, 2.5]) };
        let (whole, s) = conditional_evolve(&psi, t1 + t2, &model);
        let (half, s1) = conditional_evolve(&psi, t1, &model);
        let (split, _) = conditional_evolve(&half, t2, &model);
        prop_assert!(whole.max_abs_diff(&split) < 1e-12);
        prop_assert!(s <= s1 + 1e-15);
    }

    #[test]
    fn fourier_codewords_round_trip(l in logical(1), symmetrized in any::<bool>()) {
        let scheme = if symmetrized { CodeScheme::fourier_symmetrized() } else { CodeScheme::fourier_pair() };
        let decoded = scheme.decode(&scheme.encode(&l).unwrap()).unwrap();
        prop_assert!(1.0 - decoded.fidelity(&l) < 1e-12);
    }

    #[test]
    fn number_codewords_round_trip(m in 1usize..=3, symmetrized in any::<bool>(), seed in any::<u64>()) {
        use rand::SeedableRng;
        let kind = if symmetrized { SchemeKind::NumberStateSymmetrized } else { SchemeKind::NumberState };
        let scheme = CodeScheme::default_for(kind, m);
        let l = LogicalState::random(m, &mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
        let encoded = scheme.encode(&l).unwrap();
        prop_assert!((encoded.norm_sqr() - 1.0).abs() < 1e-12);
        prop_assert!(1.0 - scheme.decode(&encoded).unwrap().fidelity(&l) < 1e-12);
    }
}
