mod common;

use boussinesq_core::harness::{ExperimentConfig, InitialKind, Probe};
use boussinesq_core::model::{energy, rhs, Nonlinearity, State};
use boussinesq_core::spectral::{Grid, RealField, Spectral};
use boussinesq_core::virial::{NormWeight, Virial};
use boussinesq_core::waveforms::{boosted_soliton, small_data, SmallDataKind, SolitonParams};
use boussinesq_core::weights::{derivative_table, ScalingLaw, Weight};
use common::{flat_spectrum_field, linear_step_error, rel_max_diff, smooth_field};
use proptest::prelude::*;

fn spectral(n: usize, l: f64) -> Spectral {
    Spectral::new(Grid::new(n, l).unwrap())
}

fn integral_of_product(sp: &Spectral, a: &[f64], b: &[f64]) -> f64 {
    let prod: Vec<f64> = a.iter().zip(b).map(|(x, y)| x * y).collect();
    sp.integrate(&prod).unwrap()
}

fn random_state(sp: &Spectral, amplitude: f64, seed: u64) -> State {
    small_data(SmallDataKind::FilteredRandom, amplitude, 3.0, seed, sp, 1e-10).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn integration_by_parts_is_exact(seed in any::<u64>(), modes in 1usize..40) {
        let sp = spectral(256, 20.0);
        let f = smooth_field(sp.grid(), modes, seed);
        let g = smooth_field(sp.grid(), modes, seed.wrapping_add(1));
        let lhs = integral_of_product(&sp, &f, &sp.derivative(&g, 1).unwrap());
        let rhs = -integral_of_product(&sp, &g, &sp.derivative(&f, 1).unwrap());
        prop_assert!((lhs - rhs).abs() <= 1e-10, "{lhs} vs {rhs}");
    }

    #[test]
    fn derivatives_integrate_to_zero(values in proptest::collection::vec(-1.0f64..1.0, 128)) {
        let sp = spectral(128, 7.5);
        let d = sp.derivative(&values, 1).unwrap();
        prop_assert!(sp.integrate(&d).unwrap().abs() <= 1e-12);
    }

    #[test]
    fn first_derivative_twice_is_second(seed in any::<u64>(), modes in 1usize..60) {
        let sp = spectral(256, 20.0);
        let f = smooth_field(sp.grid(), modes, seed);
        let twice = sp.derivative(&sp.derivative(&f, 1).unwrap(), 1).unwrap();
        let direct = sp.derivative(&f, 2).unwrap();
        prop_assert!(rel_max_diff(&twice, &direct) <= 1e-10);
    }

    #[test]
    fn rhs_components_are_exact_derivatives(seed in any::<u64>(), amplitude in 0.0f64..0.5, p in 2u32..6) {
        let sp = spectral(256, 40.0);
        let state = random_state(&sp, amplitude, seed);
        let nl = Nonlinearity::SignedPower { p: p as f64 };
        let (du1, du2) = rhs(&state, &nl, &sp, 2.0 / 3.0).unwrap();
        prop_assert!(sp.integrate(&du1).unwrap().abs() <= 1e-12);
        prop_assert!(sp.integrate(&du2).unwrap().abs() <= 1e-12);
    }

    #[test]
    fn small_energy_is_equivalent_to_norm(seed in any::<u64>(), amplitude in 1e-4f64..0.1) {
        let sp = spectral(256, 40.0);
        let state = random_state(&sp, amplitude, seed);
        let norm_sq = state.energy_norm_sq(&sp).unwrap();
        let e = energy(&state, &Nonlinearity::PurePower { p: 2.0 }, &sp).unwrap();
        prop_assert!(e > 0.0);
        prop_assert!(e >= 0.25 * norm_sq && e <= norm_sq, "E = {e}, norm^2 = {norm_sq}");
    }

    #[test]
    fn linear_step_is_exact_per_mode(seed in any::<u64>(), dt in 1e-3f64..0.5) {
        let sp = spectral(64, 10.0);
        let state = State::new(flat_spectrum_field(&sp, seed), flat_spectrum_field(&sp, seed ^ 0x55), 0.0);
        let err = linear_step_error(&sp, &state, dt);
        prop_assert!(err <= 1e-12, "{err}");
    }

    #[test]
    fn psi_derivative_is_phi0(x in -30.0f64..30.0) {
        let psi = derivative_table(Weight::Psi, x);
        let phi0 = derivative_table(Weight::Phi0, x);
        for n in 0..4 {
            prop_assert!((psi[n + 1] - phi0[n]).abs() <= 1e-14);
        }
    }

    #[test]
    fn soliton_velocity_structure(v in -0.95f64..0.95, p in 2u32..5, x0 in -3.0f64..3.0) {
        let sp = spectral(512, 60.0);
        let params = SolitonParams::new(p as f64, v, x0).unwrap();
        let state = boosted_soliton(&params, sp.grid(), 1e-6).unwrap();
        for (a, b) in state.u1.iter().zip(state.u2.iter()) {
            prop_assert_eq!(*b, -v * a);
        }
    }

    #[test]
    fn functional_values_sum_their_terms(seed in any::<u64>(), t in 2.0f64..50.0) {
        let sp = spectral(256, 40.0);
        let state = random_state(&sp, 0.1, seed).with_time(t);
        let virial = Virial::new(sp, ScalingLaw::log2(1.0), Nonlinearity::PurePower { p: 2.0 }).unwrap();
        let snap = virial.snapshot(&state).unwrap();
        for fv in [
            snap.j_rhs().unwrap(),
            snap.i_plus_rhs().unwrap(),
            snap.i_minus_rhs().unwrap(),
            snap.e_phi1_eval().unwrap(),
            snap.e_phi1_rhs().unwrap(),
            snap.weighted_norm(NormWeight::Phi1Scaled).unwrap(),
            snap.smoothing_density().unwrap(),
        ] {
            let sum: f64 = fv.terms.values().sum();
            prop_assert!((fv.value - sum).abs() <= 1e-15 * sum.abs().max(1e-300));
        }
    }

    #[test]
    fn i_functionals_are_bounded_by_the_norm(seed in any::<u64>(), t in 2.0f64..200.0) {
        let sp = spectral(256, 40.0);
        let state = random_state(&sp, 0.1, seed).with_time(t);
        let law = ScalingLaw::log2(1.0);
        let lambda = law.lambda(t).unwrap();
        let virial = Virial::new(sp.clone(), law, Nonlinearity::PurePower { p: 2.0 }).unwrap();
        let snap = virial.snapshot(&state).unwrap();
        let total = snap.i_plus_eval().unwrap().value.abs() + snap.i_minus_eval().unwrap().value.abs();
        // |phi| <= 1/lambda, |phi_x| <= 0.385/lambda^2, Cauchy-Schwarz per term
        let k = 1.0 / lambda + 0.385 / (lambda * lambda);
        prop_assert!(total <= k * state.energy_norm_sq(&sp).unwrap());
    }

    #[test]
    fn config_round_trips(
        n in (2usize..12).prop_map(|e| 1 << e),
        l in 1.0f64..500.0,
        dt in 1e-5f64..1e-1,
        seed in any::<u64>(),
        amplitude in 0.0f64..1.0,
        c in 0.1f64..10.0,
        t_final in 2.0f64..1000.0,
        soliton in any::<bool>(),
    ) {
        let mut cfg = ExperimentConfig::default();
        cfg.grid.n_points = n;
        cfg.grid.half_length = l;
        cfg.stepper.dt = dt;
        cfg.initial.seed = seed;
        cfg.initial.amplitude = amplitude;
        cfg.initial.kind = if soliton { InitialKind::Soliton } else { InitialKind::Gaussian };
        cfg.law.c = c;
        cfg.t_final = t_final;
        cfg.probes = vec![Probe::J, Probe::Smoothing];
        let back = ExperimentConfig::from_json(&cfg.to_json().unwrap()).unwrap();
        prop_assert_eq!(back, cfg);
    }
}

#[test]
fn smooth_fields_have_no_nyquist_content() {
    let sp = spectral(256, 20.0);
    let f: RealField = smooth_field(sp.grid(), 60, 3);
    let hat = sp.forward(&f).unwrap();
    let nyq = hat[sp.grid().nyquist_index()].norm();
    assert!(nyq < 1e-12 * hat.iter().map(|c| c.norm()).fold(0.0, f64::max));
}
