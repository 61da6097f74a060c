//! Periodic grid, Fourier differentiation, quadrature and dealiasing.
//!
//! The real line is replaced by the periodic box `[-L, L)` sampled at `N`
//! equispaced nodes. Derivatives are taken on the trigonometric interpolant
//! and integrals use the periodic trapezoid rule, which is spectrally
//! accurate for smooth integrands that decay before reaching the boundary.

use std::f64::consts::PI;
use std::ops::Deref;
use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

/// Uniform periodic grid on `[-L, L)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Grid {
    n_points: usize,
    half_length: f64,
    spacing: f64,
    nodes: Vec<f64>,
    wavenumbers: Vec<f64>,
}

impl Grid {
    pub fn new(n_points: usize, half_length: f64) -> Result<Self> {
        if n_points < 4 || !n_points.is_multiple_of(2) {
            return Err(Error::invalid(
                "n_points",
                format!("must be an even integer >= 4, got {n_points}"),
            ));
        }
        if !(half_length.is_finite() && half_length > 0.0) {
            return Err(Error::invalid(
                "half_length",
                format!("must be positive, got {half_length}"),
            ));
        }
        let spacing = 2.0 * half_length / n_points as f64;
        let nodes = (0..n_points).map(|j| -half_length + j as f64 * spacing).collect();
        let wavenumbers = (0..n_points)
            .map(|j| {
                let index = if j <= n_points / 2 {
                    j as f64
                } else {
                    j as f64 - n_points as f64
                };
                PI * index / half_length
            })
            .collect();
        Ok(Self {
            n_points,
            half_length,
            spacing,
            nodes,
            wavenumbers,
        })
    }

    pub fn n_points(&self) -> usize {
        self.n_points
    }

    pub fn half_length(&self) -> f64 {
        self.half_length
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    /// Node coordinates `x_j = -L + j h`.
    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    /// Wavenumbers in FFT order: `0, 1, .., N/2, -N/2+1, .., -1` times `pi/L`.
    pub fn wavenumbers(&self) -> &[f64] {
        &self.wavenumbers
    }

    pub fn nyquist_index(&self) -> usize {
        self.n_points / 2
    }

    /// Largest resolved wavenumber, `pi N / (2L)`.
    pub fn k_max(&self) -> f64 {
        self.wavenumbers[self.nyquist_index()]
    }

    /// Wavenumbers used by odd-order operators: Nyquist entry set to zero.
    pub fn odd_wavenumbers(&self) -> Vec<f64> {
        let mut k = self.wavenumbers.clone();
        k[self.nyquist_index()] = 0.0;
        k
    }

    pub fn check_len(&self, values: &[f64]) -> Result<()> {
        if values.len() != self.n_points {
            return Err(Error::LengthMismatch {
                expected: self.n_points,
                found: values.len(),
            });
        }
        Ok(())
    }

    /// Periodic trapezoid rule, `h * sum(values)`.
    pub fn integrate(&self, values: &[f64]) -> Result<f64> {
        self.check_len(values)?;
        Ok(self.spacing * values.iter().sum::<f64>())
    }

    /// Largest `|value|` over nodes with `|x| > fraction * L`.
    pub fn edge_magnitude(&self, values: &[f64], fraction: f64) -> f64 {
        let cut = fraction * self.half_length;
        self.nodes
            .iter()
            .zip(values)
            .filter(|(x, _)| x.abs() > cut)
            .fold(0.0_f64, |acc, (_, v)| acc.max(v.abs()))
    }
}

/// Real samples on the grid nodes.
#[derive(Clone, Debug, PartialEq)]
pub struct RealField(Vec<f64>);

impl RealField {
    pub fn zeros(n: usize) -> Self {
        Self(vec![0.0; n])
    }

    pub fn from_vec(values: Vec<f64>) -> Self {
        Self(values)
    }

    pub fn from_fn(grid: &Grid, f: impl Fn(f64) -> f64) -> Self {
        Self(grid.nodes().iter().map(|&x| f(x)).collect())
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self(self.0.iter().map(|&v| f(v)).collect())
    }

    pub fn scale(&self, factor: f64) -> Self {
        self.map(|v| v * factor)
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }
}

impl Deref for RealField {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

/// Grid plus FFT plans. Plans are immutable once built, so one `Spectral`
/// can be shared across threads.
#[derive(Clone)]
pub struct Spectral {
    grid: Grid,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for Spectral {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Spectral").field("grid", &self.grid).finish()
    }
}

impl Spectral {
    pub fn new(grid: Grid) -> Self {
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(grid.n_points());
        let inverse = planner.plan_fft_inverse(grid.n_points());
        Self { grid, forward, inverse }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    /// Unnormalized forward DFT of real samples.
    pub fn forward(&self, values: &[f64]) -> Result<Vec<Complex64>> {
        self.grid.check_len(values)?;
        let mut buf: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.forward.process(&mut buf);
        Ok(buf)
    }

    /// Inverse DFT (normalized by `1/N`), keeping the real part.
    pub fn inverse(&self, hat: &[Complex64]) -> Result<RealField> {
        if hat.len() != self.grid.n_points() {
            return Err(Error::LengthMismatch {
                expected: self.grid.n_points(),
                found: hat.len(),
            });
        }
        let mut buf = hat.to_vec();
        self.inverse.process(&mut buf);
        let norm = 1.0 / self.grid.n_points() as f64;
        Ok(RealField(buf.iter().map(|c| c.re * norm).collect()))
    }

    /// Derivative of the trigonometric interpolant, `order` in `1..=4`.
    pub fn derivative(&self, field: &[f64], order: u32) -> Result<RealField> {
        check_order(order)?;
        let mut hat = self.forward(field)?;
        self.apply_derivative(&mut hat, order);
        self.inverse(&hat)
    }

    /// All derivatives `1..=max_order` from a single forward transform.
    pub fn derivatives(&self, field: &[f64], max_order: u32) -> Result<Vec<RealField>> {
        check_order(max_order)?;
        let hat = self.forward(field)?;
        (1..=max_order)
            .map(|order| {
                let mut h = hat.clone();
                self.apply_derivative(&mut h, order);
                self.inverse(&h)
            })
            .collect()
    }

    /// Multiplies spectral coefficients by `(ik)^order` in place.
    pub fn apply_derivative(&self, hat: &mut [Complex64], order: u32) {
        let nyq = self.grid.nyquist_index();
        for (j, (c, &k)) in hat.iter_mut().zip(self.grid.wavenumbers()).enumerate() {
            *c *= derivative_symbol(k, order, j == nyq);
        }
    }

    pub fn integrate(&self, field: &[f64]) -> Result<f64> {
        self.grid.integrate(field)
    }

    /// Zeroes every mode with `|k| > rule * k_max`. Idempotent.
    pub fn dealias(&self, hat: &[Complex64], rule: f64) -> Result<Vec<Complex64>> {
        let mut out = hat.to_vec();
        dealias_in_place(&mut out, &self.grid, rule)?;
        Ok(out)
    }
}

pub fn check_dealias_rule(rule: f64) -> Result<()> {
    if !(rule > 0.0 && rule <= 1.0) {
        return Err(Error::invalid(
            "dealias_rule",
            format!("must lie in (0, 1], got {rule}"),
        ));
    }
    Ok(())
}

pub fn dealias_in_place(hat: &mut [Complex64], grid: &Grid, rule: f64) -> Result<()> {
    check_dealias_rule(rule)?;
    if hat.len() != grid.n_points() {
        return Err(Error::LengthMismatch {
            expected: grid.n_points(),
            found: hat.len(),
        });
    }
    if rule >= 1.0 {
        return Ok(());
    }
    let cutoff = rule * grid.k_max();
    for (c, k) in hat.iter_mut().zip(grid.wavenumbers()) {
        if k.abs() > cutoff {
            *c = Complex64::new(0.0, 0.0);
        }
    }
    Ok(())
}

fn check_order(order: u32) -> Result<()> {
    if (1..=4).contains(&order) {
        Ok(())
    } else {
        Err(Error::DerivativeOrder(order))
    }
}

fn derivative_symbol(k: f64, order: u32, nyquist: bool) -> Complex64 {
    if nyquist && order % 2 == 1 {
        return Complex64::new(0.0, 0.0);
    }
    Complex64::new(0.0, k).powu(order)
}
