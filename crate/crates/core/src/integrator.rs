//! Time stepping.
//!
//! In Fourier space the system reads
//!
//! ```text
//! d/dt u1^ = ik u2^
//! d/dt u2^ = ik m(k)^2 u1^ - ik f^(u1),      m(k) = sqrt(1 + k^2)
//! ```
//!
//! and the characteristic variables `w+- = u1^ +- u2^/m` decouple the linear
//! part into scalar rotations `d/dt w+- = +-ikm w+- -+ (ik/m) f^`. The
//! fourth-order exponential Runge-Kutta scheme of Cox and Matthews is applied
//! per mode, so the linear flow is integrated exactly for any step size.
//! Classical RK4 on the physical-space right-hand side is kept as an
//! independent cross-check at small steps.

use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{rhs, Nonlinearity, State};
use crate::spectral::{check_dealias_rule, dealias_in_place, Grid, RealField, Spectral};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    Etdrk4,
    Rk4,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepperConfig {
    pub dt: f64,
    pub scheme: Scheme,
    pub dealias_rule: f64,
    /// Safety factor `c` in `dt <= c h / sqrt(1 + k_max^2)`; only enforced for RK4.
    #[serde(default = "default_cfl")]
    pub cfl_safety: f64,
}

fn default_cfl() -> f64 {
    0.5
}

impl Default for StepperConfig {
    fn default() -> Self {
        Self {
            dt: 1e-3,
            scheme: Scheme::Etdrk4,
            dealias_rule: 2.0 / 3.0,
            cfl_safety: default_cfl(),
        }
    }
}

impl StepperConfig {
    pub fn etdrk4(dt: f64) -> Self {
        Self { dt, ..Self::default() }
    }

    pub fn rk4(dt: f64) -> Self {
        Self {
            dt,
            scheme: Scheme::Rk4,
            ..Self::default()
        }
    }

    pub fn validate(&self, grid: &Grid) -> Result<()> {
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::invalid(
                "stepper.dt",
                format!("must be positive, got {}", self.dt),
            ));
        }
        check_dealias_rule(self.dealias_rule).map_err(|_| {
            Error::invalid(
                "stepper.dealias_rule",
                format!("must lie in (0, 1], got {}", self.dealias_rule),
            )
        })?;
        if self.scheme == Scheme::Rk4 {
            if !(self.cfl_safety.is_finite() && self.cfl_safety > 0.0) {
                return Err(Error::invalid("stepper.cfl_safety", "must be positive"));
            }
            let k = grid.k_max();
            let limit = self.cfl_safety * grid.spacing() / (1.0 + k * k).sqrt();
            if self.dt > limit {
                return Err(Error::invalid(
                    "stepper.dt",
                    format!("rk4 needs dt <= {limit:.3e} on this grid, got {}", self.dt),
                ));
            }
        }
        Ok(())
    }
}

/// `m(k) = sqrt(1 + k^2)` for each wavenumber of the grid.
pub fn dispersion_factor(grid: &Grid) -> Vec<f64> {
    grid.wavenumbers().iter().map(|k| (1.0 + k * k).sqrt()).collect()
}

/// Group speed `|omega'(k)|` of `omega = k m(k)`.
pub fn group_speed(k: f64) -> f64 {
    (1.0 + 2.0 * k * k) / (1.0 + k * k).sqrt()
}

/// `(u1^, u2^) -> (w+, w-)`.
pub fn characteristic_transform(
    grid: &Grid,
    u1_hat: &[Complex64],
    u2_hat: &[Complex64],
) -> (Vec<Complex64>, Vec<Complex64>) {
    let m = dispersion_factor(grid);
    let plus = u1_hat.iter().zip(u2_hat).zip(&m).map(|((a, b), m)| a + b / m).collect();
    let minus = u1_hat.iter().zip(u2_hat).zip(&m).map(|((a, b), m)| a - b / m).collect();
    (plus, minus)
}

/// `(w+, w-) -> (u1^, u2^)`.
pub fn characteristic_inverse(
    grid: &Grid,
    w_plus: &[Complex64],
    w_minus: &[Complex64],
) -> (Vec<Complex64>, Vec<Complex64>) {
    let m = dispersion_factor(grid);
    let u1 = w_plus.iter().zip(w_minus).map(|(p, q)| 0.5 * (p + q)).collect();
    let u2 = w_plus
        .iter()
        .zip(w_minus)
        .zip(&m)
        .map(|((p, q), m)| 0.5 * m * (p - q))
        .collect();
    (u1, u2)
}

/// `phi_1, phi_2, phi_3` of the exponential integrator at `z`.
pub fn phi_functions(z: Complex64) -> [Complex64; 3] {
    if z.norm() < 1.0 {
        // phi_k(z) = sum_n z^n / (n + k)!
        let mut out = [Complex64::new(0.0, 0.0); 3];
        for (k, slot) in out.iter_mut().enumerate() {
            let mut term = Complex64::new(1.0 / factorial(k as u32 + 1), 0.0);
            let mut sum = term;
            for n in 1..30 {
                term = term * z / (n + k + 1) as f64;
                sum += term;
            }
            *slot = sum;
        }
        out
    } else {
        let p1 = (z.exp() - 1.0) / z;
        let p2 = (p1 - 1.0) / z;
        let p3 = (p2 - 0.5) / z;
        [p1, p2, p3]
    }
}

fn factorial(n: u32) -> f64 {
    (1..=n).map(f64::from).product()
}

/// Per-mode coefficients of the `w+` branch; the `w-` branch uses conjugates.
#[derive(Clone, Debug)]
struct EtdCoefficients {
    e: Vec<Complex64>,
    e_half: Vec<Complex64>,
    q: Vec<Complex64>,
    f1: Vec<Complex64>,
    f2: Vec<Complex64>,
    f3: Vec<Complex64>,
}

impl EtdCoefficients {
    fn new(symbol: &[Complex64], dt: f64) -> Self {
        let n = symbol.len();
        let mut c = Self {
            e: Vec::with_capacity(n),
            e_half: Vec::with_capacity(n),
            q: Vec::with_capacity(n),
            f1: Vec::with_capacity(n),
            f2: Vec::with_capacity(n),
            f3: Vec::with_capacity(n),
        };
        for &l in symbol {
            let z = l * dt;
            let [p1, p2, p3] = phi_functions(z);
            let [h1, _, _] = phi_functions(0.5 * z);
            c.e.push(z.exp());
            c.e_half.push((0.5 * z).exp());
            c.q.push(0.5 * dt * h1);
            c.f1.push(dt * (p1 - 3.0 * p2 + 4.0 * p3));
            c.f2.push(dt * (p2 - 2.0 * p3));
            c.f3.push(dt * (-p2 + 4.0 * p3));
        }
        c
    }
}

#[derive(Clone, Debug)]
struct Modes {
    plus: Vec<Complex64>,
    minus: Vec<Complex64>,
}

/// Advances states of one grid, nonlinearity and step configuration.
#[derive(Clone, Debug)]
pub struct Stepper {
    spectral: Spectral,
    nl: Nonlinearity,
    cfg: StepperConfig,
    m: Vec<f64>,
    k_odd: Vec<f64>,
    symbol: Vec<Complex64>,
    coeffs: Option<EtdCoefficients>,
}

impl Stepper {
    pub fn new(spectral: Spectral, nl: Nonlinearity, cfg: StepperConfig) -> Result<Self> {
        nl.validate()?;
        cfg.validate(spectral.grid())?;
        let grid = spectral.grid();
        let m = dispersion_factor(grid);
        let k_odd = grid.odd_wavenumbers();
        let symbol: Vec<Complex64> = k_odd.iter().zip(&m).map(|(k, m)| Complex64::new(0.0, k * m)).collect();
        let coeffs = match cfg.scheme {
            Scheme::Etdrk4 => Some(EtdCoefficients::new(&symbol, cfg.dt)),
            Scheme::Rk4 => None,
        };
        Ok(Self {
            spectral,
            nl,
            cfg,
            m,
            k_odd,
            symbol,
            coeffs,
        })
    }

    pub fn spectral(&self) -> &Spectral {
        &self.spectral
    }

    pub fn grid(&self) -> &Grid {
        self.spectral.grid()
    }

    pub fn nonlinearity(&self) -> &Nonlinearity {
        &self.nl
    }

    pub fn config(&self) -> &StepperConfig {
        &self.cfg
    }

    /// One step of size `dt`.
    pub fn step(&self, state: &State) -> Result<State> {
        self.step_by(state, self.cfg.dt)
    }

    /// One step of arbitrary size `h > 0` with the configured scheme.
    pub fn step_by(&self, state: &State, h: f64) -> Result<State> {
        state.validate(self.grid())?;
        let next = match self.cfg.scheme {
            Scheme::Etdrk4 => {
                let mut modes = self.to_modes(state)?;
                if h == self.cfg.dt {
                    self.etd_step(&mut modes, self.coeffs.as_ref().expect("etd coefficients"), state.time)?;
                } else {
                    let c = EtdCoefficients::new(&self.symbol, h);
                    self.etd_step(&mut modes, &c, state.time)?;
                }
                self.state_from_modes(&modes, state.time + h)?
            }
            Scheme::Rk4 => self.rk4_step(state, h)?,
        };
        self.check_finite(&next, state.time)?;
        Ok(next)
    }

    fn to_modes(&self, state: &State) -> Result<Modes> {
        let u1 = self.spectral.forward(&state.u1)?;
        let u2 = self.spectral.forward(&state.u2)?;
        let (plus, minus) = characteristic_transform(self.grid(), &u1, &u2);
        Ok(Modes { plus, minus })
    }

    fn state_from_modes(&self, modes: &Modes, time: f64) -> Result<State> {
        let (u1, u2) = characteristic_inverse(self.grid(), &modes.plus, &modes.minus);
        Ok(State::new(
            self.spectral.inverse(&u1)?,
            self.spectral.inverse(&u2)?,
            time,
        ))
    }

    /// Nonlinear forcing of both branches, `-+(ik/m) f^(u1)`.
    fn forcing(&self, modes: &Modes, time: f64) -> Result<Modes> {
        let n = modes.plus.len();
        if self.nl == Nonlinearity::Disabled {
            let zero = vec![Complex64::new(0.0, 0.0); n];
            return Ok(Modes {
                plus: zero.clone(),
                minus: zero,
            });
        }
        let u1_hat: Vec<Complex64> = modes
            .plus
            .iter()
            .zip(&modes.minus)
            .map(|(p, q)| 0.5 * (p + q))
            .collect();
        let u1 = self.spectral.inverse(&u1_hat)?;
        let f = self.nl.f_eval(&u1);
        if !f.is_finite() {
            return Err(Error::Instability {
                time,
                detail: "non-finite f(u1) inside an ETDRK4 stage".into(),
            });
        }
        let mut f_hat = self.spectral.forward(&f)?;
        dealias_in_place(&mut f_hat, self.grid(), self.cfg.dealias_rule)?;
        let plus: Vec<Complex64> = f_hat
            .iter()
            .zip(&self.k_odd)
            .zip(&self.m)
            .map(|((f, k), m)| Complex64::new(0.0, -k / m) * f)
            .collect();
        let minus = plus.iter().map(|c| -c).collect();
        Ok(Modes { plus, minus })
    }

    fn etd_step(&self, v: &mut Modes, c: &EtdCoefficients, time: f64) -> Result<()> {
        let n = v.plus.len();
        // the minus branch has the conjugate symbol, hence conjugate coefficients
        let stage = |base: &Modes, force: &Modes, coef: &[Complex64], mul: &[Complex64]| Modes {
            plus: (0..n)
                .map(|j| mul[j] * base.plus[j] + coef[j] * force.plus[j])
                .collect(),
            minus: (0..n)
                .map(|j| mul[j].conj() * base.minus[j] + coef[j].conj() * force.minus[j])
                .collect(),
        };
        let nv = self.forcing(v, time)?;
        let a = stage(v, &nv, &c.q, &c.e_half);
        let na = self.forcing(&a, time)?;
        let b = stage(v, &na, &c.q, &c.e_half);
        let nb = self.forcing(&b, time)?;
        let combo = Modes {
            plus: (0..n).map(|j| 2.0 * nb.plus[j] - nv.plus[j]).collect(),
            minus: (0..n).map(|j| 2.0 * nb.minus[j] - nv.minus[j]).collect(),
        };
        let cc = stage(&a, &combo, &c.q, &c.e_half);
        let nc = self.forcing(&cc, time)?;
        for j in 0..n {
            v.plus[j] = c.e[j] * v.plus[j]
                + c.f1[j] * nv.plus[j]
                + 2.0 * c.f2[j] * (na.plus[j] + nb.plus[j])
                + c.f3[j] * nc.plus[j];
            v.minus[j] = c.e[j].conj() * v.minus[j]
                + c.f1[j].conj() * nv.minus[j]
                + 2.0 * c.f2[j].conj() * (na.minus[j] + nb.minus[j])
                + c.f3[j].conj() * nc.minus[j];
        }
        Ok(())
    }

    fn rk4_step(&self, s: &State, h: f64) -> Result<State> {
        let sp = &self.spectral;
        let rule = self.cfg.dealias_rule;
        let eval = |st: &State| {
            rhs(st, &self.nl, sp, rule).map_err(|e| Error::Instability {
                time: s.time,
                detail: e.to_string(),
            })
        };
        let shift = |k: &(RealField, RealField), factor: f64| {
            State::new(
                RealField::from_vec(s.u1.iter().zip(k.0.iter()).map(|(a, b)| a + factor * b).collect()),
                RealField::from_vec(s.u2.iter().zip(k.1.iter()).map(|(a, b)| a + factor * b).collect()),
                s.time,
            )
        };
        let k1 = eval(s)?;
        let k2 = eval(&shift(&k1, 0.5 * h))?;
        let k3 = eval(&shift(&k2, 0.5 * h))?;
        let k4 = eval(&shift(&k3, h))?;
        let combine = |base: &RealField, a: &RealField, b: &RealField, c: &RealField, d: &RealField| {
            RealField::from_vec(
                (0..base.len())
                    .map(|j| base[j] + h / 6.0 * (a[j] + 2.0 * b[j] + 2.0 * c[j] + d[j]))
                    .collect(),
            )
        };
        Ok(State::new(
            combine(&s.u1, &k1.0, &k2.0, &k3.0, &k4.0),
            combine(&s.u2, &k1.1, &k2.1, &k3.1, &k4.1),
            s.time + h,
        ))
    }

    fn check_finite(&self, state: &State, time: f64) -> Result<()> {
        if state.u1.is_finite() && state.u2.is_finite() {
            Ok(())
        } else {
            Err(Error::Instability {
                time,
                detail: "non-finite field values after step".into(),
            })
        }
    }

    /// Advances `initial` to exactly `t_final`, calling every observer at
    /// `t0 + i * cadence` and at `t_final`. The cadence is rounded to a whole
    /// number of steps; the last step is shortened to land on `t_final`.
    pub fn evolve(
        &self,
        initial: &State,
        t_final: f64,
        cadence: f64,
        observers: &mut [&mut dyn Observer],
    ) -> Result<State> {
        initial.validate(self.grid())?;
        let t0 = initial.time;
        if !(t_final >= t0) {
            return Err(Error::invalid(
                "t_final",
                format!("must not precede the start time {t0}, got {t_final}"),
            ));
        }
        if !(cadence.is_finite() && cadence > 0.0) {
            return Err(Error::invalid("output.cadence", "must be positive"));
        }
        let dt = self.cfg.dt;
        let stride = ((cadence / dt).round() as usize).max(1);
        let span = t_final - t0;
        let mut n_full = (span / dt).floor() as usize;
        if span - n_full as f64 * dt > dt * (1.0 - 1e-9) {
            n_full += 1;
        }
        let remainder = span - n_full as f64 * dt;
        let has_tail = remainder > 1e-9 * dt;

        let notify = |state: &State, observers: &mut [&mut dyn Observer]| -> Result<()> {
            for obs in observers.iter_mut() {
                obs.observe(state)?;
            }
            Ok(())
        };
        notify(initial, observers)?;

        let mut current = initial.clone();
        match self.cfg.scheme {
            Scheme::Etdrk4 => {
                let coeffs = self.coeffs.as_ref().expect("etd coefficients");
                let mut modes = self.to_modes(initial)?;
                for i in 1..=n_full {
                    let t_prev = t0 + (i - 1) as f64 * dt;
                    self.etd_step(&mut modes, coeffs, t_prev)?;
                    let last = i == n_full && !has_tail;
                    if i % stride == 0 || last {
                        let time = if last { t_final } else { t0 + i as f64 * dt };
                        current = self.state_from_modes(&modes, time)?;
                        self.check_finite(&current, t_prev)?;
                        notify(&current, observers)?;
                    }
                }
                if has_tail {
                    let t_prev = t0 + n_full as f64 * dt;
                    let tail = EtdCoefficients::new(&self.symbol, remainder);
                    self.etd_step(&mut modes, &tail, t_prev)?;
                    current = self.state_from_modes(&modes, t_final)?;
                    self.check_finite(&current, t_prev)?;
                    notify(&current, observers)?;
                }
            }
            Scheme::Rk4 => {
                for i in 1..=n_full {
                    let t_prev = t0 + (i - 1) as f64 * dt;
                    let mut next = self.rk4_step(&current, dt)?;
                    self.check_finite(&next, t_prev)?;
                    let last = i == n_full && !has_tail;
                    next.time = if last { t_final } else { t0 + i as f64 * dt };
                    current = next;
                    if i % stride == 0 || last {
                        notify(&current, observers)?;
                    }
                }
                if has_tail {
                    let t_prev = current.time;
                    let mut next = self.rk4_step(&current, remainder)?;
                    self.check_finite(&next, t_prev)?;
                    next.time = t_final;
                    current = next;
                    notify(&current, observers)?;
                }
            }
        }
        Ok(current)
    }
}

/// Receives sampled states from [`Stepper::evolve`], in time order.
pub trait Observer {
    fn observe(&mut self, state: &State) -> Result<()>;
}

impl<F: FnMut(&State) -> Result<()>> Observer for F {
    fn observe(&mut self, state: &State) -> Result<()> {
        self(state)
    }
}
