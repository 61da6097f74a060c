#![allow(dead_code)]

use boussinesq_core::integrator::{characteristic_transform, dispersion_factor, Stepper, StepperConfig};
use boussinesq_core::model::{Nonlinearity, State};
use boussinesq_core::spectral::{Grid, RealField, Spectral};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rustfft::num_complex::Complex64;

/// Random trigonometric polynomial with modes `1..=modes` (no Nyquist
/// content), scaled to unit maximum.
pub fn smooth_field(grid: &Grid, modes: usize, seed: u64) -> RealField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let base = std::f64::consts::PI / grid.half_length();
    let coeffs: Vec<(f64, f64, f64)> = (1..=modes)
        .map(|m| {
            let decay = 1.0 / (1.0 + m as f64).powi(2);
            (
                m as f64 * base,
                decay * rng.gen_range(-1.0..1.0),
                decay * rng.gen_range(-1.0..1.0),
            )
        })
        .collect();
    let mean = rng.gen_range(-0.5..0.5);
    let raw = RealField::from_fn(grid, |x| {
        mean + coeffs
            .iter()
            .map(|(k, a, b)| a * (k * x).cos() + b * (k * x).sin())
            .sum::<f64>()
    });
    let peak = raw.max_abs();
    raw.scale(1.0 / peak)
}

/// `max |a - b| / max(max |b|, 1e-300)`.
pub fn rel_max_diff(a: &[f64], b: &[f64]) -> f64 {
    let diff = a.iter().zip(b).fold(0.0_f64, |m, (x, y)| m.max((x - y).abs()));
    let scale = b.iter().fold(0.0_f64, |m, y| m.max(y.abs()));
    diff / scale.max(1e-300)
}

/// Real field whose Fourier modes all have unit magnitude and random
/// phase, except the mean and the Nyquist mode, which are zero.
pub fn flat_spectrum_field(spectral: &Spectral, seed: u64) -> RealField {
    let n = spectral.grid().n_points();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut hat = vec![Complex64::new(0.0, 0.0); n];
    for j in 1..n / 2 {
        let c = Complex64::from_polar(1.0, rng.gen_range(0.0..std::f64::consts::TAU));
        hat[j] = c;
        hat[n - j] = c.conj();
    }
    spectral.inverse(&hat).unwrap()
}

/// Largest relative per-mode deviation of one linear step of size `dt`
/// from the exact rotation of the characteristic variables.
pub fn linear_step_error(spectral: &Spectral, state: &State, dt: f64) -> f64 {
    let grid = spectral.grid();
    let stepper = Stepper::new(spectral.clone(), Nonlinearity::Disabled, StepperConfig::etdrk4(dt)).unwrap();
    let next = stepper.step(state).unwrap();
    let m = dispersion_factor(grid);
    let transform = |s: &State| {
        characteristic_transform(
            grid,
            &spectral.forward(&s.u1).unwrap(),
            &spectral.forward(&s.u2).unwrap(),
        )
    };
    let (p0, q0) = transform(state);
    let (p1, q1) = transform(&next);
    let top = p0.iter().chain(&q0).fold(0.0_f64, |a, c| a.max(c.norm()));
    let mut worst = 0.0_f64;
    for (j, &k) in grid.wavenumbers().iter().enumerate() {
        let rot = Complex64::new(0.0, k * m[j] * dt).exp();
        for (got, want) in [(p1[j], p0[j] * rot), (q1[j], q0[j] / rot)] {
            // skip modes holding only transform roundoff
            if want.norm() > 1e-8 * top {
                worst = worst.max((got - want).norm() / want.norm());
            }
        }
    }
    worst
}
