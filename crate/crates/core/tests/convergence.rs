mod common;

use boussinesq_core::integrator::{Stepper, StepperConfig};
use boussinesq_core::model::{Nonlinearity, State};
use boussinesq_core::spectral::{Grid, Spectral};
use boussinesq_core::waveforms::{boosted_soliton, SolitonParams};
use common::{flat_spectrum_field, linear_step_error};

fn max_error(a: &State, b: &State) -> f64 {
    a.u1.iter()
        .zip(b.u1.iter())
        .chain(a.u2.iter().zip(b.u2.iter()))
        .fold(0.0_f64, |m, (x, y)| m.max((x - y).abs()))
}

#[test]
fn halving_dt_gains_fourth_order() {
    let sp = Spectral::new(Grid::new(1024, 50.0).unwrap());
    let params = SolitonParams::new(2.0, 0.6, 0.0).unwrap();
    let initial = boosted_soliton(&params, sp.grid(), 1e-10).unwrap();
    let t_final = 20.0;
    let exact = params.profile_at(sp.grid(), t_final);
    let errors: Vec<f64> = [3.2e-2, 1.6e-2, 8e-3]
        .iter()
        .map(|&dt| {
            let stepper = Stepper::new(
                sp.clone(),
                Nonlinearity::PurePower { p: 2.0 },
                StepperConfig::etdrk4(dt),
            )
            .unwrap();
            let end = stepper.evolve(&initial, t_final, t_final, &mut []).unwrap();
            max_error(&end, &exact)
        })
        .collect();
    for pair in errors.windows(2) {
        assert!(pair[0] / pair[1] >= 14.0, "{errors:?}");
    }
}

#[test]
fn rk4_and_etdrk4_share_the_soliton() {
    let sp = Spectral::new(Grid::new(256, 30.0).unwrap());
    let params = SolitonParams::new(3.0, 0.5, 1.0).unwrap();
    let initial = boosted_soliton(&params, sp.grid(), 1e-8).unwrap();
    let exact = params.profile_at(sp.grid(), 2.0);
    let nl = Nonlinearity::PurePower { p: 3.0 };
    let etd = Stepper::new(sp.clone(), nl, StepperConfig::etdrk4(1e-2)).unwrap();
    let rk = Stepper::new(sp.clone(), nl, StepperConfig::rk4(5e-4)).unwrap();
    let a = etd.evolve(&initial, 2.0, 2.0, &mut []).unwrap();
    let b = rk.evolve(&initial, 2.0, 2.0, &mut []).unwrap();
    assert!(max_error(&a, &exact) < 1e-6);
    assert!(max_error(&b, &exact) < 1e-6);
}

#[test]
fn linear_flow_is_exact_at_reference_resolution() {
    let sp = Spectral::new(Grid::new(1024, 50.0).unwrap());
    let state = State::new(flat_spectrum_field(&sp, 1), flat_spectrum_field(&sp, 2), 0.0);
    for dt in [1e-3, 0.1, 2.5] {
        let err = linear_step_error(&sp, &state, dt);
        assert!(err <= 1e-12, "dt = {dt}: {err}");
    }
}
