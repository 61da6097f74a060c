//! First-order form of the good Boussinesq equation,
//!
//! ```text
//! d/dt u1 = d/dx u2
//! d/dt u2 = d/dx (u1 - u1_xx - f(u1))
//! ```
//!
//! together with the power-type nonlinearity and the conserved energy.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::{dealias_in_place, Grid, RealField, Spectral};

/// Power-type nonlinearity `f` with `f(0) = 0`.
///
/// `SignedPower` is `|u|^(p-1) u`, `PurePower` is `u^p` for integer `p >= 2`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "snake_case")]
pub enum Nonlinearity {
    Disabled,
    SignedPower { p: f64 },
    PurePower { p: f64 },
}

impl Nonlinearity {
    pub fn signed_power(p: f64) -> Result<Self> {
        let nl = Nonlinearity::SignedPower { p };
        nl.validate()?;
        Ok(nl)
    }

    pub fn pure_power(p: f64) -> Result<Self> {
        let nl = Nonlinearity::PurePower { p };
        nl.validate()?;
        Ok(nl)
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Nonlinearity::Disabled => Ok(()),
            Nonlinearity::SignedPower { p } => {
                if !(p.is_finite() && p > 1.0) {
                    return Err(Error::invalid("nonlinearity.p", format!("need p > 1, got {p}")));
                }
                Ok(())
            }
            Nonlinearity::PurePower { p } => {
                if !(p.is_finite() && p >= 2.0 && p.fract() == 0.0) {
                    return Err(Error::invalid(
                        "nonlinearity.p",
                        format!("pure_power needs an integer p >= 2, got {p}"),
                    ));
                }
                Ok(())
            }
        }
    }

    /// Exponent, or `None` when the nonlinearity is switched off.
    pub fn exponent(&self) -> Option<f64> {
        match *self {
            Nonlinearity::Disabled => None,
            Nonlinearity::SignedPower { p } | Nonlinearity::PurePower { p } => Some(p),
        }
    }

    pub fn f(&self, s: f64) -> f64 {
        match *self {
            Nonlinearity::Disabled => 0.0,
            Nonlinearity::SignedPower { p } => s.abs().powf(p - 1.0) * s,
            Nonlinearity::PurePower { p } => s.powi(p as i32),
        }
    }

    /// `f'(s)`; for `SignedPower` with `p < 2` the value at `s = 0` is taken as 0.
    pub fn f_prime(&self, s: f64) -> f64 {
        match *self {
            Nonlinearity::Disabled => 0.0,
            Nonlinearity::SignedPower { p } => {
                if s == 0.0 {
                    0.0
                } else {
                    p * s.abs().powf(p - 1.0)
                }
            }
            Nonlinearity::PurePower { p } => p * s.powi(p as i32 - 1),
        }
    }

    /// Primitive `F(s) = int_0^s f`.
    pub fn big_f(&self, s: f64) -> f64 {
        match *self {
            Nonlinearity::Disabled => 0.0,
            Nonlinearity::SignedPower { p } => s.abs().powf(p + 1.0) / (p + 1.0),
            Nonlinearity::PurePower { p } => s.powi(p as i32 + 1) / (p + 1.0),
        }
    }

    pub fn f_eval(&self, u: &[f64]) -> RealField {
        RealField::from_vec(u.iter().map(|&s| self.f(s)).collect())
    }

    pub fn f_prime_eval(&self, u: &[f64]) -> RealField {
        RealField::from_vec(u.iter().map(|&s| self.f_prime(s)).collect())
    }

    pub fn big_f_eval(&self, u: &[f64]) -> RealField {
        RealField::from_vec(u.iter().map(|&s| self.big_f(s)).collect())
    }
}

/// Solution snapshot `(u1, u2)` at a time stamp. `u2` plays the role of
/// `d/dt d/dx^{-1} u1`.
#[derive(Clone, Debug, PartialEq)]
pub struct State {
    pub u1: RealField,
    pub u2: RealField,
    pub time: f64,
}

impl State {
    pub fn new(u1: RealField, u2: RealField, time: f64) -> Self {
        Self { u1, u2, time }
    }

    pub fn zeros(grid: &Grid, time: f64) -> Self {
        let n = grid.n_points();
        Self::new(RealField::zeros(n), RealField::zeros(n), time)
    }

    pub fn with_time(mut self, time: f64) -> Self {
        self.time = time;
        self
    }

    pub fn validate(&self, grid: &Grid) -> Result<()> {
        grid.check_len(&self.u1)?;
        grid.check_len(&self.u2)?;
        if !self.u1.is_finite() {
            return Err(Error::NonFinite { term: "u1".into() });
        }
        if !self.u2.is_finite() {
            return Err(Error::NonFinite { term: "u2".into() });
        }
        Ok(())
    }

    /// `max(|u1|, |u2|)` over `|x| > 0.9 L`.
    pub fn boundary_magnitude(&self, grid: &Grid) -> f64 {
        grid.edge_magnitude(&self.u1, 0.9)
            .max(grid.edge_magnitude(&self.u2, 0.9))
    }

    pub fn check_boundary(&self, grid: &Grid, threshold: f64) -> Result<()> {
        let magnitude = self.boundary_magnitude(grid);
        if magnitude > threshold {
            return Err(Error::BoundaryContract { magnitude, threshold });
        }
        Ok(())
    }

    /// Squared `H^1 x L^2` norm, `int (u1_x^2 + u1^2 + u2^2)`.
    pub fn energy_norm_sq(&self, spectral: &Spectral) -> Result<f64> {
        let u1x = spectral.derivative(&self.u1, 1)?;
        let density: Vec<f64> = self
            .u1
            .iter()
            .zip(u1x.iter())
            .zip(self.u2.iter())
            .map(|((a, ax), b)| ax * ax + a * a + b * b)
            .collect();
        spectral.integrate(&density)
    }
}

/// Time derivative `(du1, du2)` of the system. The nonlinear product
/// `f(u1)` is dealiased before the outer derivative.
pub fn rhs(state: &State, nl: &Nonlinearity, spectral: &Spectral, dealias_rule: f64) -> Result<(RealField, RealField)> {
    let grid = spectral.grid();
    grid.check_len(&state.u1)?;
    grid.check_len(&state.u2)?;

    let du1 = spectral.derivative(&state.u2, 1)?;
    ensure_finite(&du1, "d/dx u2")?;

    let mut u1_hat = spectral.forward(&state.u1)?;
    let mut f_hat = spectral.forward(&nl.f_eval(&state.u1))?;
    dealias_in_place(&mut f_hat, grid, dealias_rule)?;
    for ((u, f), &k) in u1_hat.iter_mut().zip(&f_hat).zip(grid.wavenumbers()) {
        *u = *u * (1.0 + k * k) - *f;
    }
    let du2 = {
        spectral.apply_derivative(&mut u1_hat, 1);
        spectral.inverse(&u1_hat)?
    };
    ensure_finite(&du2, "d/dx (u1 - u1_xx - f(u1))")?;
    Ok((du1, du2))
}

/// `E = 1/2 int (u2^2 + u1_x^2 + u1^2) - int F(u1)`.
pub fn energy(state: &State, nl: &Nonlinearity, spectral: &Spectral) -> Result<f64> {
    let quadratic = state.energy_norm_sq(spectral)?;
    let potential = spectral.integrate(&nl.big_f_eval(&state.u1))?;
    Ok(0.5 * quadratic - potential)
}

fn ensure_finite(field: &RealField, term: &str) -> Result<()> {
    if field.is_finite() {
        Ok(())
    } else {
        Err(Error::NonFinite { term: term.into() })
    }
}
