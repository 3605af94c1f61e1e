use proptest::prelude::*;

use spinmech::analysis::{fidelity, min_quadrature_variance, phonon_number, quadrature_variance};
use spinmech::dynamics::{self, Axis, Tolerances};
use spinmech::model::{hamiltonian_n, liouvillian, Dephasing, ModelParams, QubitParams};
use spinmech::quantum::{coherent_state, expectation, fock_ops, HilbertSpec, Spin, StateVector};
use spinmech::C64;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn coherent_state_moments(re in -3.0..3.0f64, im in -3.0..3.0f64) {
        let spec = HilbertSpec::oscillator(70).unwrap();
        let a = C64::new(re, im);
        let rho = coherent_state(spec, a).unwrap().density();
        let b = expectation(&rho, &fock_ops(spec).annihilation).unwrap();
        prop_assert!((b - a).norm() < 1e-8);
        prop_assert!((phonon_number(&rho) - a.norm_sqr()).abs() < 1e-8);
        let (_, v) = min_quadrature_variance(&rho).unwrap();
        prop_assert!((v - 1.0).abs() < 1e-8);
    }

    #[test]
    fn min_variance_bounds_every_angle(re in -1.0..1.0f64, im in -1.0..1.0f64, mix in 0.0..1.0f64, theta in 0.0..3.2f64) {
        let spec = HilbertSpec::oscillator(30).unwrap();
        let a = coherent_state(spec, C64::new(re, im)).unwrap();
        let b = coherent_state(spec, C64::new(-re, im)).unwrap();
        let psi = a.scale(C64::new(mix.sqrt(), 0.0)).add(&b.scale(C64::new((1.0 - mix).sqrt(), 0.0))).unwrap().normalized().unwrap();
        let rho = psi.density();
        let (_, vmin) = min_quadrature_variance(&rho).unwrap();
        prop_assert!(vmin <= quadrature_variance(&rho, theta).unwrap() + 1e-12);
    }

    #[test]
    fn fidelity_ignores_global_phase(re in -2.0..2.0f64, phase in 0.0..6.3f64) {
        let spec = HilbertSpec::oscillator(40).unwrap();
        let psi = coherent_state(spec, C64::new(re, 0.5)).unwrap();
        let f = fidelity(&psi.density(), &psi.scale(C64::from_polar(1.0, phase))).unwrap();
        prop_assert!((f - 1.0).abs() < 1e-12);
    }

    #[test]
    fn pulse_inverse_restores_state(angle in -3.2..3.2f64, axis in 0usize..3) {
        let spec = HilbertSpec::new(1, 3).unwrap();
        let rho = StateVector::basis(spec, &[Spin::Up], 1).unwrap().density();
        let ax = [Axis::X, Axis::Y, Axis::Z][axis];
        let there = dynamics::apply_pulse(&rho, 0, ax, angle).unwrap();
        let back = dynamics::apply_pulse(&there, 0, ax, -angle).unwrap();
        let err = (back.matrix() - rho.matrix()).iter().map(|x| x.norm()).fold(0.0, f64::max);
        prop_assert!(err < 1e-12);
    }

    #[test]
    fn evolution_preserves_trace(rabi in 0.0..2.0f64, det in -2.0..2.0f64, g in 0.0..0.5f64, gamma in 0.0..0.5f64) {
        let spec = HilbertSpec::new(1, 6).unwrap();
        let q = QubitParams { rabi, detuning: det, coupling: g, relaxation: gamma, dephasing: Dephasing::lumped(0.1), splitting: 10.0 };
        let mut p = ModelParams::new(spec, vec![q]);
        p.quality_factor = 50.0;
        let p = p.with_mechanical_occupation(0.3);
        let l = liouvillian(&p, &hamiltonian_n(&p).unwrap()).unwrap();
        let rho0 = StateVector::basis(spec, &[Spin::Down], 0).unwrap().density();
        let ev = dynamics::evolve_sampled(&rho0, &l, &[0.5, 2.0], Tolerances::default()).unwrap();
        prop_assert!(ev.trace_drift <= 1e-9);
        prop_assert!(ev.states.iter().all(|s| s.hermiticity_defect() <= 1e-12));
    }
}
