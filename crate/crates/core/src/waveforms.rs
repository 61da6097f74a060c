//! Initial data: exact solitary waves and small localized packets.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{rhs, Nonlinearity, State};
use crate::spectral::{Grid, RealField, Spectral};
use crate::weights::sech;

/// Standing profile `Q(s) = ((p+1) / (2 cosh^2((p-1)s/2)))^(1/(p-1))`,
/// the positive even solution of `Q'' - Q + Q^p = 0`.
pub fn q_profile(p: f64, s: f64) -> f64 {
    let a = sech(0.5 * (p - 1.0) * s);
    (0.5 * (p + 1.0) * a * a).powf(1.0 / (p - 1.0))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolitonParams {
    pub p: f64,
    pub v: f64,
    pub x0: f64,
}

impl SolitonParams {
    pub fn new(p: f64, v: f64, x0: f64) -> Result<Self> {
        let params = Self { p, v, x0 };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.p.is_finite() && self.p > 1.0) {
            return Err(Error::invalid("soliton.p", format!("need p > 1, got {}", self.p)));
        }
        if !(self.v.abs() < 1.0) {
            return Err(Error::invalid("soliton.v", format!("need |v| < 1, got {}", self.v)));
        }
        if !self.x0.is_finite() {
            return Err(Error::invalid("soliton.x0", "must be finite"));
        }
        Ok(())
    }

    /// `gamma = sqrt(1 - v^2)`.
    pub fn gamma(&self) -> f64 {
        (1.0 - self.v * self.v).sqrt()
    }

    pub fn amplitude(&self) -> f64 {
        self.gamma().powf(2.0 / (self.p - 1.0)) * q_profile(self.p, 0.0)
    }

    /// Exact solution at time `t`, with the center wrapped into the periodic box.
    pub fn profile_at(&self, grid: &Grid, t: f64) -> State {
        let gamma = self.gamma();
        let scale = gamma.powf(2.0 / (self.p - 1.0));
        let period = 2.0 * grid.half_length();
        let center = self.x0 + self.v * t;
        let u1 = RealField::from_fn(grid, |x| {
            let d = (x - center + grid.half_length()).rem_euclid(period) - grid.half_length();
            scale * q_profile(self.p, gamma * d)
        });
        let u2 = u1.scale(-self.v);
        State::new(u1, u2, t)
    }
}

/// `t = 0` snapshot of the boosted solitary wave. Fails when the profile is
/// not below `threshold` at `|x| > 0.9 L`.
pub fn boosted_soliton(params: &SolitonParams, grid: &Grid, threshold: f64) -> Result<State> {
    params.validate()?;
    let state = params.profile_at(grid, 0.0);
    state.check_boundary(grid, threshold)?;
    Ok(state)
}

/// `max |rhs(state) + v d/dx state|`, zero for an exact traveling wave.
pub fn traveling_residual(
    v: f64,
    state: &State,
    nl: &Nonlinearity,
    spectral: &Spectral,
    dealias_rule: f64,
) -> Result<f64> {
    let (du1, du2) = rhs(state, nl, spectral, dealias_rule)?;
    let d1 = spectral.derivative(&state.u1, 1)?;
    let d2 = spectral.derivative(&state.u2, 1)?;
    let res = (0..du1.len())
        .map(|j| (du1[j] + v * d1[j]).abs().max((du2[j] + v * d2[j]).abs()))
        .fold(0.0, f64::max);
    Ok(res)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SmallDataKind {
    /// `u1 = sech(x/w)`, `u2 = 0`
    SechPacket,
    /// `u1 = exp(-(x/w)^2)`, `u2 = 0`
    Gaussian,
    /// Seeded random phases under the envelope `exp(-k^2)`, localized by a
    /// Gaussian window of width `w`, independently for `u1` and `u2`.
    FilteredRandom,
}

/// Localized data normalized to `||(u1,u2)||_{H^1 x L^2} = amplitude`.
pub fn small_data(
    kind: SmallDataKind,
    amplitude: f64,
    width: f64,
    seed: u64,
    spectral: &Spectral,
    threshold: f64,
) -> Result<State> {
    if !(amplitude.is_finite() && amplitude >= 0.0) {
        return Err(Error::invalid("initial.amplitude", "must be non-negative"));
    }
    if !(width.is_finite() && width > 0.0) {
        return Err(Error::invalid("initial.width", "must be positive"));
    }
    let grid = spectral.grid();
    if amplitude == 0.0 {
        return Ok(State::zeros(grid, 0.0));
    }
    let shape = match kind {
        SmallDataKind::SechPacket => State::new(
            RealField::from_fn(grid, |x| sech(x / width)),
            RealField::zeros(grid.n_points()),
            0.0,
        ),
        SmallDataKind::Gaussian => State::new(
            RealField::from_fn(grid, |x| (-(x / width).powi(2)).exp()),
            RealField::zeros(grid.n_points()),
            0.0,
        ),
        SmallDataKind::FilteredRandom => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let u1 = filtered_random_field(spectral, &mut rng, width)?;
            let u2 = filtered_random_field(spectral, &mut rng, width)?;
            State::new(u1, u2, 0.0)
        }
    };
    let norm = shape.energy_norm_sq(spectral)?.sqrt();
    let factor = amplitude / norm;
    let state = State::new(shape.u1.scale(factor), shape.u2.scale(factor), 0.0);
    state.check_boundary(grid, threshold)?;
    Ok(state)
}

fn filtered_random_field(spectral: &Spectral, rng: &mut ChaCha8Rng, width: f64) -> Result<RealField> {
    let grid = spectral.grid();
    let hat: Vec<Complex64> = grid
        .wavenumbers()
        .iter()
        .map(|&k| {
            let re: f64 = StandardNormal.sample(rng);
            let im: f64 = StandardNormal.sample(rng);
            Complex64::new(re, im) * (-k * k).exp()
        })
        .collect();
    let raw = spectral.inverse(&hat)?;
    Ok(RealField::from_vec(
        raw.iter()
            .zip(grid.nodes())
            .map(|(v, x)| v * (-(x / width).powi(2)).exp())
            .collect(),
    ))
}
