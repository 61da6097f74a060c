//! Weighted functionals of a state and their exact time derivatives.
//!
//! Every `*_rhs` evaluation returns the derivative split into named terms, so
//! a failing identity can be traced to a single contribution. With
//! `s = x / lambda(t)` the weights are
//!
//! ```text
//! J       = int psi(s) u1 u2
//! I+      = int phi u1_x u2,              phi = phi0(s) / lambda
//! I-      = -int (phi u1)_x u2
//! E_phi1  = 1/2 int phi1(s) (u1_x^2 + u1^2 + u2^2 - 2 F(u1))
//! ```

use std::cell::OnceCell;
use std::fmt;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Nonlinearity, State};
use crate::spectral::{Grid, RealField, Spectral};
use crate::weights::{derivative_table, ScalingLaw, Weight};

/// `cosh^4(1)`: ratio between the cone-restricted norm and the
/// `phi1`-weighted norm, since `phi1(s) >= sech^4(1)` for `|s| < 1`.
pub const RESTRICTION_CONSTANT: f64 = 5.669_626_950_043_877;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FunctionalName {
    J,
    #[serde(rename = "I_plus")]
    IPlus,
    #[serde(rename = "I_minus")]
    IMinus,
    #[serde(rename = "E_phi1")]
    EPhi1,
    #[serde(rename = "weighted_norm")]
    WeightedNorm,
    #[serde(rename = "smoothing_density")]
    SmoothingDensity,
}

impl FunctionalName {
    pub fn as_str(&self) -> &'static str {
        match self {
            FunctionalName::J => "J",
            FunctionalName::IPlus => "I_plus",
            FunctionalName::IMinus => "I_minus",
            FunctionalName::EPhi1 => "E_phi1",
            FunctionalName::WeightedNorm => "weighted_norm",
            FunctionalName::SmoothingDensity => "smoothing_density",
        }
    }
}

impl fmt::Display for FunctionalName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A functional (or its derivative) at one time. When `terms` is non-empty,
/// `value` is their sum. `aux` carries side diagnostics outside that sum.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FunctionalValue {
    pub name: FunctionalName,
    pub value: f64,
    pub time: f64,
    #[serde(default, skip_serializing_if = "IndexMap::is_empty")]
    pub terms: IndexMap<String, f64>,
    #[serde(default, skip_serializing_if = "IndexMap::is_empty")]
    pub aux: IndexMap<String, f64>,
}

impl FunctionalValue {
    pub fn scalar(name: FunctionalName, time: f64, value: f64) -> Self {
        Self {
            name,
            value,
            time,
            terms: IndexMap::new(),
            aux: IndexMap::new(),
        }
    }

    pub fn from_terms(name: FunctionalName, time: f64, terms: IndexMap<String, f64>) -> Self {
        let value = terms.values().sum();
        Self {
            name,
            value,
            time,
            terms,
            aux: IndexMap::new(),
        }
    }

    pub fn term(&self, name: &str) -> Option<f64> {
        self.terms.get(name).copied()
    }

    /// Flips the sign of one term and recomputes `value`.
    pub fn negate_term(&mut self, name: &str) -> Result<()> {
        let term = self
            .terms
            .get_mut(name)
            .ok_or_else(|| Error::invalid("term", format!("no term named `{name}`")))?;
        *term = -*term;
        self.value = self.terms.values().sum();
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormWeight {
    /// `sech^2(x / lambda(t))`
    Phi0Scaled,
    /// `sech^2(x / lambda0)`
    Phi0Fixed,
    /// `sech^4(x / lambda(t))`, also reporting the norm restricted to `|x| < lambda(t)`
    Phi1Scaled,
}

/// Fields, derivatives and weight tables of one state, shared by all
/// functionals evaluated at its time.
pub struct Snapshot<'a> {
    virial: &'a Virial,
    grid: &'a Grid,
    state: &'a State,
    u1: &'a [f64],
    u2: &'a [f64],
    u1x: RealField,
    u1xx: RealField,
    u2x: RealField,
    time: f64,
    scaled: OnceCell<Tables>,
    fixed_phi0: OnceCell<Vec<[f64; 5]>>,
}

/// Weight tables at `s = x / lambda(t)`, indexed `[node][order]`.
struct Tables {
    lambda: f64,
    rate: f64,
    psi: Vec<[f64; 5]>,
    phi0: Vec<[f64; 5]>,
    phi1: Vec<[f64; 5]>,
}

impl Snapshot<'_> {
    /// `h * sum_j g(j)`.
    fn integral(&self, g: impl Fn(usize) -> f64) -> f64 {
        self.grid.spacing() * (0..self.grid.n_points()).map(g).sum::<f64>()
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn state(&self) -> &State {
        self.state
    }

    pub fn virial(&self) -> &Virial {
        self.virial
    }

    fn tables(&self) -> Result<&Tables> {
        if let Some(t) = self.scaled.get() {
            return Ok(t);
        }
        let law = &self.virial.law;
        let lambda = law.lambda(self.time)?;
        let rate = law.log_derivative(self.time)?;
        let table = |which| {
            self.grid
                .nodes()
                .iter()
                .map(|&x| derivative_table(which, x / lambda))
                .collect::<Vec<_>>()
        };
        Ok(self.scaled.get_or_init(|| Tables {
            lambda,
            rate,
            psi: table(Weight::Psi),
            phi0: table(Weight::Phi0),
            phi1: table(Weight::Phi1),
        }))
    }

    /// `d^n/dx^n phi(t, x)` for `phi = phi0(x / lambda) / lambda`.
    fn phi(&self, tab: &Tables, order: usize) -> Vec<f64> {
        let scale = tab.lambda.powi(order as i32 + 1).recip();
        tab.phi0.iter().map(|w| w[order] * scale).collect()
    }

    /// `d/dt phi = -(lambda'/lambda) phi - (lambda'/lambda^2) s phi0'(s)`.
    fn phi_dt(&self, tab: &Tables) -> Vec<f64> {
        let nodes = self.grid.nodes();
        tab.phi0
            .iter()
            .zip(nodes)
            .map(|(w, &x)| {
                let s = x / tab.lambda;
                -tab.rate * w[0] / tab.lambda - tab.rate / tab.lambda * s * w[1]
            })
            .collect()
    }

    pub fn j_eval(&self) -> Result<FunctionalValue> {
        let tab = self.tables()?;
        let value = self.integral(|j| tab.psi[j][0] * self.u1[j] * self.u2[j]);
        Ok(FunctionalValue::scalar(FunctionalName::J, self.time, value))
    }

    pub fn j_rhs(&self) -> Result<FunctionalValue> {
        let tab = self.tables()?;
        let (lambda, rate) = (tab.lambda, tab.rate);
        let psi = &tab.psi;
        let nodes = self.grid.nodes();
        let nl = &self.virial.nl;
        let fu = nl.f_eval(self.u1);
        let big_f = nl.big_f_eval(self.u1);
        let (u1, u2, u1x) = (self.u1, self.u2, &self.u1x);
        let mut terms = IndexMap::new();
        terms.insert(
            "boost".to_string(),
            -rate * self.integral(|j| nodes[j] / lambda * psi[j][1] * u1[j] * u2[j]),
        );
        terms.insert(
            "u2_sq".to_string(),
            -0.5 / lambda * self.integral(|j| psi[j][1] * u2[j] * u2[j]),
        );
        terms.insert(
            "u1_sq".to_string(),
            -0.5 / lambda * self.integral(|j| psi[j][1] * u1[j] * u1[j]),
        );
        terms.insert(
            "psi3_u1_sq".to_string(),
            0.5 / lambda.powi(3) * self.integral(|j| psi[j][3] * u1[j] * u1[j]),
        );
        terms.insert(
            "u1x_sq".to_string(),
            -1.5 / lambda * self.integral(|j| psi[j][1] * u1x[j] * u1x[j]),
        );
        terms.insert(
            "nonlinear".to_string(),
            1.0 / lambda * self.integral(|j| psi[j][1] * (u1[j] * fu[j] - big_f[j])),
        );
        Ok(FunctionalValue::from_terms(FunctionalName::J, self.time, terms))
    }

    pub fn i_plus_eval(&self) -> Result<FunctionalValue> {
        let phi = self.phi(self.tables()?, 0);
        let value = self.integral(|j| phi[j] * self.u1x[j] * self.u2[j]);
        Ok(FunctionalValue::scalar(FunctionalName::IPlus, self.time, value))
    }

    pub fn i_minus_eval(&self) -> Result<FunctionalValue> {
        let tab = self.tables()?;
        let (phi, phi_x) = (self.phi(tab, 0), self.phi(tab, 1));
        let value = -self.integral(|j| (phi_x[j] * self.u1[j] + phi[j] * self.u1x[j]) * self.u2[j]);
        Ok(FunctionalValue::scalar(FunctionalName::IMinus, self.time, value))
    }

    pub fn i_plus_rhs(&self) -> Result<FunctionalValue> {
        let tab = self.tables()?;
        let (phi, phi_xx, phi_t) = (self.phi(tab, 0), self.phi(tab, 2), self.phi_dt(tab));
        let fp = self.virial.nl.f_prime_eval(self.u1);
        let (u2, u1x, u1xx, u2x) = (self.u2, &self.u1x, &self.u1xx, &self.u2x);
        let mut terms = IndexMap::new();
        terms.insert("dt_phi".to_string(), self.integral(|j| phi_t[j] * u1x[j] * u2[j]));
        terms.insert("u2x_sq".to_string(), -self.integral(|j| phi[j] * u2x[j] * u2x[j]));
        terms.insert("u1xx_sq".to_string(), self.integral(|j| phi[j] * u1xx[j] * u1xx[j]));
        terms.insert(
            "phi_xx_u2_sq".to_string(),
            0.5 * self.integral(|j| phi_xx[j] * u2[j] * u2[j]),
        );
        terms.insert(
            "u1x_sq".to_string(),
            self.integral(|j| (phi[j] - 0.5 * phi_xx[j]) * u1x[j] * u1x[j]),
        );
        terms.insert(
            "nonlinear".to_string(),
            -self.integral(|j| phi[j] * u1x[j] * u1x[j] * fp[j]),
        );
        Ok(FunctionalValue::from_terms(FunctionalName::IPlus, self.time, terms))
    }

    pub fn i_minus_rhs(&self) -> Result<FunctionalValue> {
        let tab = self.tables()?;
        let phi = self.phi(tab, 0);
        let phi_x = self.phi(tab, 1);
        let phi_xx = self.phi(tab, 2);
        let phi_xxxx = self.phi(tab, 4);
        let phi_t = self.phi_dt(tab);
        let fp = self.virial.nl.f_prime_eval(self.u1);
        let (u1, u1x, u1xx, u2x) = (self.u1, &self.u1x, &self.u1xx, &self.u2x);
        let mut terms = IndexMap::new();
        // -int (phi_t u1)_x u2 = int phi_t u1 u2_x
        terms.insert("dt_phi".to_string(), self.integral(|j| phi_t[j] * u1[j] * u2x[j]));
        terms.insert("u2x_sq".to_string(), self.integral(|j| phi[j] * u2x[j] * u2x[j]));
        terms.insert("u1xx_sq".to_string(), -self.integral(|j| phi[j] * u1xx[j] * u1xx[j]));
        terms.insert(
            "u1x_sq".to_string(),
            -self.integral(|j| (phi[j] - 2.0 * phi_xx[j]) * u1x[j] * u1x[j]),
        );
        terms.insert(
            "u1_sq".to_string(),
            0.5 * self.integral(|j| (phi_xx[j] - phi_xxxx[j]) * u1[j] * u1[j]),
        );
        terms.insert(
            "nonlinear_cross".to_string(),
            self.integral(|j| phi_x[j] * u1[j] * u1x[j] * fp[j]),
        );
        terms.insert(
            "nonlinear".to_string(),
            self.integral(|j| phi[j] * fp[j] * u1x[j] * u1x[j]),
        );
        Ok(FunctionalValue::from_terms(FunctionalName::IMinus, self.time, terms))
    }

    pub fn e_phi1_eval(&self) -> Result<FunctionalValue> {
        let w = &self.tables()?.phi1;
        let big_f = self.virial.nl.big_f_eval(self.u1);
        let (u1, u2, u1x) = (self.u1, self.u2, &self.u1x);
        let mut terms = IndexMap::new();
        terms.insert("u1x_sq".to_string(), 0.5 * self.integral(|j| w[j][0] * u1x[j] * u1x[j]));
        terms.insert("u1_sq".to_string(), 0.5 * self.integral(|j| w[j][0] * u1[j] * u1[j]));
        terms.insert("u2_sq".to_string(), 0.5 * self.integral(|j| w[j][0] * u2[j] * u2[j]));
        terms.insert("potential".to_string(), -self.integral(|j| w[j][0] * big_f[j]));
        Ok(FunctionalValue::from_terms(FunctionalName::EPhi1, self.time, terms))
    }

    pub fn e_phi1_rhs(&self) -> Result<FunctionalValue> {
        let tab = self.tables()?;
        let (lambda, rate) = (tab.lambda, tab.rate);
        let w = &tab.phi1;
        let nodes = self.grid.nodes();
        let nl = &self.virial.nl;
        let fu = nl.f_eval(self.u1);
        let big_f = nl.big_f_eval(self.u1);
        let (u1, u2, u1x, u1xx) = (self.u1, self.u2, &self.u1x, &self.u1xx);
        let mut terms = IndexMap::new();
        terms.insert(
            "dt_phi1".to_string(),
            -0.5 * rate
                * self.integral(|j| {
                    let density = u1x[j] * u1x[j] + u1[j] * u1[j] + u2[j] * u2[j] - 2.0 * big_f[j];
                    nodes[j] / lambda * w[j][1] * density
                }),
        );
        terms.insert(
            "u2_u1xx".to_string(),
            2.0 / lambda * self.integral(|j| w[j][1] * u2[j] * u1xx[j]),
        );
        terms.insert(
            "u1x_u2".to_string(),
            1.0 / (lambda * lambda) * self.integral(|j| w[j][2] * u1x[j] * u2[j]),
        );
        terms.insert(
            "u1_u2".to_string(),
            -1.0 / lambda * self.integral(|j| w[j][1] * u1[j] * u2[j]),
        );
        terms.insert(
            "nonlinear".to_string(),
            1.0 / lambda * self.integral(|j| w[j][1] * u2[j] * fu[j]),
        );
        Ok(FunctionalValue::from_terms(FunctionalName::EPhi1, self.time, terms))
    }

    /// Weighted `H^1 x L^2` density `int w (u1_x^2 + u1^2 + u2^2)`.
    pub fn weighted_norm(&self, kind: NormWeight) -> Result<FunctionalValue> {
        let lambda0 = self.virial.law.lambda0;
        let (w, lambda): (Vec<f64>, f64) = match kind {
            NormWeight::Phi0Fixed => {
                let tab = self.fixed_phi0.get_or_init(|| {
                    self.grid
                        .nodes()
                        .iter()
                        .map(|&x| derivative_table(Weight::Phi0, x / lambda0))
                        .collect()
                });
                (tab.iter().map(|w| w[0]).collect(), lambda0)
            }
            NormWeight::Phi0Scaled => {
                let tab = self.tables()?;
                (tab.phi0.iter().map(|w| w[0]).collect(), tab.lambda)
            }
            NormWeight::Phi1Scaled => {
                let tab = self.tables()?;
                (tab.phi1.iter().map(|w| w[0]).collect(), tab.lambda)
            }
        };
        let (u1, u2, u1x) = (self.u1, self.u2, &self.u1x);
        let mut terms = IndexMap::new();
        terms.insert("u1x_sq".to_string(), self.integral(|j| w[j] * u1x[j] * u1x[j]));
        terms.insert("u1_sq".to_string(), self.integral(|j| w[j] * u1[j] * u1[j]));
        terms.insert("u2_sq".to_string(), self.integral(|j| w[j] * u2[j] * u2[j]));
        let mut out = FunctionalValue::from_terms(FunctionalName::WeightedNorm, self.time, terms);
        out.aux.insert("lambda".to_string(), lambda);
        if kind == NormWeight::Phi1Scaled {
            let nodes = self.grid.nodes();
            let restricted_sq = self.integral(|j| {
                if nodes[j].abs() < lambda {
                    u1x[j] * u1x[j] + u1[j] * u1[j] + u2[j] * u2[j]
                } else {
                    0.0
                }
            });
            out.aux.insert("restricted_sq".to_string(), restricted_sq);
            out.aux.insert("restricted".to_string(), restricted_sq.sqrt());
            out.aux.insert("restriction_constant".to_string(), RESTRICTION_CONSTANT);
        }
        Ok(out)
    }

    /// `int sech^2(x / lambda(t)) (u1_xx^2 + u2_x^2)`.
    pub fn smoothing_density(&self) -> Result<FunctionalValue> {
        let w = &self.tables()?.phi0;
        let (u1xx, u2x) = (&self.u1xx, &self.u2x);
        let mut terms = IndexMap::new();
        terms.insert("u1xx_sq".to_string(), self.integral(|j| w[j][0] * u1xx[j] * u1xx[j]));
        terms.insert("u2x_sq".to_string(), self.integral(|j| w[j][0] * u2x[j] * u2x[j]));
        Ok(FunctionalValue::from_terms(
            FunctionalName::SmoothingDensity,
            self.time,
            terms,
        ))
    }
}

/// Evaluates functionals and their derivatives for one grid, law and
/// nonlinearity.
#[derive(Clone, Debug)]
pub struct Virial {
    spectral: Spectral,
    law: ScalingLaw,
    nl: Nonlinearity,
    boundary_threshold: Option<f64>,
}

impl Virial {
    pub fn new(spectral: Spectral, law: ScalingLaw, nl: Nonlinearity) -> Result<Self> {
        law.validate()?;
        nl.validate()?;
        Ok(Self {
            spectral,
            law,
            nl,
            boundary_threshold: None,
        })
    }

    /// Rejects states whose magnitude near the box edge exceeds `threshold`.
    pub fn with_boundary_threshold(mut self, threshold: Option<f64>) -> Self {
        self.boundary_threshold = threshold;
        self
    }

    pub fn law(&self) -> &ScalingLaw {
        &self.law
    }

    pub fn spectral(&self) -> &Spectral {
        &self.spectral
    }

    pub fn nonlinearity(&self) -> &Nonlinearity {
        &self.nl
    }

    /// Validates `state` and precomputes its derivatives.
    pub fn snapshot<'a>(&'a self, state: &'a State) -> Result<Snapshot<'a>> {
        let grid = self.spectral.grid();
        state.validate(grid)?;
        if let Some(threshold) = self.boundary_threshold {
            state.check_boundary(grid, threshold)?;
        }
        let mut d1 = self.spectral.derivatives(&state.u1, 2)?;
        let u1xx = d1.pop().expect("second derivative");
        let u1x = d1.pop().expect("first derivative");
        let u2x = self.spectral.derivative(&state.u2, 1)?;
        Ok(Snapshot {
            virial: self,
            grid,
            state,
            u1: &state.u1,
            u2: &state.u2,
            u1x,
            u1xx,
            u2x,
            time: state.time,
            scaled: OnceCell::new(),
            fixed_phi0: OnceCell::new(),
        })
    }

    pub fn j_eval(&self, state: &State) -> Result<FunctionalValue> {
        self.snapshot(state)?.j_eval()
    }

    pub fn j_rhs(&self, state: &State) -> Result<FunctionalValue> {
        self.snapshot(state)?.j_rhs()
    }

    pub fn i_plus_eval(&self, state: &State) -> Result<FunctionalValue> {
        self.snapshot(state)?.i_plus_eval()
    }

    pub fn i_minus_eval(&self, state: &State) -> Result<FunctionalValue> {
        self.snapshot(state)?.i_minus_eval()
    }

    pub fn i_plus_rhs(&self, state: &State) -> Result<FunctionalValue> {
        self.snapshot(state)?.i_plus_rhs()
    }

    pub fn i_minus_rhs(&self, state: &State) -> Result<FunctionalValue> {
        self.snapshot(state)?.i_minus_rhs()
    }

    pub fn e_phi1_eval(&self, state: &State) -> Result<FunctionalValue> {
        self.snapshot(state)?.e_phi1_eval()
    }

    pub fn e_phi1_rhs(&self, state: &State) -> Result<FunctionalValue> {
        self.snapshot(state)?.e_phi1_rhs()
    }

    pub fn weighted_norm(&self, state: &State, kind: NormWeight) -> Result<FunctionalValue> {
        self.snapshot(state)?.weighted_norm(kind)
    }

    pub fn smoothing_density(&self, state: &State) -> Result<FunctionalValue> {
        self.snapshot(state)?.smoothing_density()
    }
}

/// Term-wise `a + sign * b`, with terms prefixed by their source functional.
pub fn combine(a: &FunctionalValue, b: &FunctionalValue, sign: f64) -> FunctionalValue {
    let mut terms = IndexMap::new();
    for (k, v) in &a.terms {
        terms.insert(format!("{}:{k}", a.name), *v);
    }
    for (k, v) in &b.terms {
        terms.insert(format!("{}:{k}", b.name), sign * v);
    }
    let mut out = FunctionalValue::from_terms(a.name, a.time, terms);
    if a.terms.is_empty() && b.terms.is_empty() {
        out.value = a.value + sign * b.value;
    }
    out
}
