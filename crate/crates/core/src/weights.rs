//! Weight functions and time-dependent scaling laws.
//!
//! `psi = tanh`, `phi0 = sech^2 = psi'` and `phi1 = sech^4 = phi0^2`, with
//! closed-form derivatives up to fourth order, and the dilation `lambda(t)`
//! that stretches them over (almost) the whole light cone.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `sup_s |s sech^2(s) tanh(s)|`.
pub const SUP_S_SECH2_TANH: f64 = 0.319_893_052_913_080_4;

/// `sup_s s^2 sech^2(s)`.
pub const SUP_S2_SECH2: f64 = 0.439_228_839_890_645_2;

/// Earliest admissible time for the logarithmic laws.
pub const T_MIN: f64 = 2.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScalingKind {
    /// `C t / log^2 t`
    Log2,
    /// `C t / log^(1+eps) t`
    Log1PlusEps,
    /// `C t / (log t (log log t)^(1+eps))`
    Loglog,
    /// `C t / log t`; exploration only.
    Log1,
    /// `lambda0`
    Fixed,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingLaw {
    pub kind: ScalingKind,
    #[serde(rename = "C")]
    pub c: f64,
    pub eps: f64,
    pub lambda0: f64,
}

impl Default for ScalingLaw {
    fn default() -> Self {
        Self {
            kind: ScalingKind::Log2,
            c: 1.0,
            eps: 0.5,
            lambda0: 10.0,
        }
    }
}

impl ScalingLaw {
    pub fn log2(c: f64) -> Self {
        Self {
            kind: ScalingKind::Log2,
            c,
            ..Self::default()
        }
    }

    pub fn fixed(lambda0: f64) -> Self {
        Self {
            kind: ScalingKind::Fixed,
            lambda0,
            ..Self::default()
        }
    }

    pub fn with_kind(kind: ScalingKind, c: f64, eps: f64) -> Self {
        Self {
            kind,
            c,
            eps,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self.kind {
            ScalingKind::Fixed => {
                if !(self.lambda0.is_finite() && self.lambda0 > 0.0) {
                    return Err(Error::invalid("law.lambda0", "must be positive"));
                }
            }
            _ => {
                if !(self.c.is_finite() && self.c > 0.0) {
                    return Err(Error::invalid("law.C", "must be positive"));
                }
                if matches!(self.kind, ScalingKind::Log1PlusEps | ScalingKind::Loglog)
                    && !(self.eps.is_finite() && self.eps > 0.0)
                {
                    return Err(Error::invalid("law.eps", "must be positive"));
                }
            }
        }
        Ok(())
    }

    fn check_time(&self, t: f64) -> Result<()> {
        let ok = match self.kind {
            ScalingKind::Fixed => t.is_finite(),
            // log log t must be positive
            ScalingKind::Loglog => t > std::f64::consts::E,
            _ => t >= T_MIN,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::invalid(
                "time",
                format!("t = {t} is outside the domain of the {:?} law", self.kind),
            ))
        }
    }

    /// `lambda(t)`.
    pub fn lambda(&self, t: f64) -> Result<f64> {
        self.check_time(t)?;
        let c = self.c;
        Ok(match self.kind {
            ScalingKind::Fixed => self.lambda0,
            ScalingKind::Log2 => c * t / t.ln().powi(2),
            ScalingKind::Log1PlusEps => c * t / t.ln().powf(1.0 + self.eps),
            ScalingKind::Loglog => c * t / (t.ln() * t.ln().ln().powf(1.0 + self.eps)),
            ScalingKind::Log1 => c * t / t.ln(),
        })
    }

    /// `lambda'(t) / lambda(t)` in closed form.
    pub fn log_derivative(&self, t: f64) -> Result<f64> {
        self.check_time(t)?;
        let l = t.ln();
        Ok(match self.kind {
            ScalingKind::Fixed => 0.0,
            ScalingKind::Log2 => (1.0 - 2.0 / l) / t,
            ScalingKind::Log1PlusEps => (1.0 - (1.0 + self.eps) / l) / t,
            ScalingKind::Loglog => (1.0 - 1.0 / l - (1.0 + self.eps) / (l * l.ln())) / t,
            ScalingKind::Log1 => (1.0 - 1.0 / l) / t,
        })
    }

    /// `lambda'(t)`.
    pub fn derivative(&self, t: f64) -> Result<f64> {
        Ok(self.lambda(t)? * self.log_derivative(t)?)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Weight {
    Psi,
    Phi0,
    Phi1,
}

/// The three profile functions of the virial arguments.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct WeightFamily;

impl WeightFamily {
    /// `which^(order)(x)` for `order <= 4`.
    pub fn eval(&self, which: Weight, order: u32, x: f64) -> Result<f64> {
        if order > 4 {
            return Err(Error::invalid(
                "order",
                format!("weights support order <= 4, got {order}"),
            ));
        }
        Ok(derivative_table(which, x)[order as usize])
    }

    /// `phi(t,x) = phi0(x/lambda)/lambda`, differentiated `order_x` times in x.
    pub fn phi_spacetime(&self, law: &ScalingLaw, t: f64, x: f64, order_x: u32) -> Result<f64> {
        let lambda = law.lambda(t)?;
        Ok(self.eval(Weight::Phi0, order_x, x / lambda)? / lambda.powi(order_x as i32 + 1))
    }

    /// `d/dt phi(t,x) = -(lambda'/lambda) phi - (lambda'/lambda^2) (x/lambda) phi0'(x/lambda)`.
    pub fn phi_time_derivative(&self, law: &ScalingLaw, t: f64, x: f64) -> Result<f64> {
        let lambda = law.lambda(t)?;
        let rate = law.log_derivative(t)?;
        let s = x / lambda;
        let w = derivative_table(Weight::Phi0, s);
        Ok(-rate * w[0] / lambda - rate / lambda * s * w[1])
    }
}

/// `sech(x)` without overflow for large `|x|`.
pub fn sech(x: f64) -> f64 {
    let e = (-x.abs()).exp();
    2.0 * e / (1.0 + e * e)
}

/// Derivatives of orders `0..=4` of `which` at `x`, sharing one `tanh` and
/// one `sech` evaluation.
pub fn derivative_table(which: Weight, x: f64) -> [f64; 5] {
    let t = x.tanh();
    let s = sech(x).powi(2);
    let s2 = s * s;
    match which {
        Weight::Psi => [t, s, -2.0 * s * t, 4.0 * s - 6.0 * s2, t * (-8.0 * s + 24.0 * s2)],
        Weight::Phi0 => [
            s,
            -2.0 * s * t,
            4.0 * s - 6.0 * s2,
            t * (-8.0 * s + 24.0 * s2),
            16.0 * s - 120.0 * s2 + 120.0 * s2 * s,
        ],
        Weight::Phi1 => [
            s2,
            -4.0 * s2 * t,
            16.0 * s2 - 20.0 * s2 * s,
            t * (-64.0 * s2 + 120.0 * s2 * s),
            256.0 * s2 - 1040.0 * s2 * s + 840.0 * s2 * s2,
        ],
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::E;

    #[test]
    fn log2_law_at_e_squared() {
        let law = ScalingLaw::log2(1.0);
        let t = E * E;
        assert!((law.lambda(t).unwrap() - t / 4.0).abs() < 1e-14);
        assert!(law.log_derivative(t).unwrap().abs() < 1e-16);
    }

    #[test]
    fn fixed_law_is_static() {
        let law = ScalingLaw::fixed(10.0);
        for t in [-3.0, 0.0, 2.0, 1e4] {
            assert_eq!(law.lambda(t).unwrap(), 10.0);
            assert_eq!(law.log_derivative(t).unwrap(), 0.0);
        }
    }

    #[test]
    fn log_laws_reject_early_times() {
        for kind in [
            ScalingKind::Log2,
            ScalingKind::Log1PlusEps,
            ScalingKind::Loglog,
            ScalingKind::Log1,
        ] {
            let law = ScalingLaw::with_kind(kind, 1.0, 0.5);
            assert!(law.lambda(1.5).is_err(), "{kind:?}");
            assert!(law.log_derivative(1.9).is_err(), "{kind:?}");
        }
        let loglog = ScalingLaw::with_kind(ScalingKind::Loglog, 1.0, 0.5);
        assert!(loglog.lambda(2.5).is_err());
        assert!(loglog.lambda(3.0).is_ok());
    }

    #[test]
    fn log_derivative_matches_finite_differences() {
        for kind in [
            ScalingKind::Log2,
            ScalingKind::Log1PlusEps,
            ScalingKind::Loglog,
            ScalingKind::Log1,
        ] {
            let law = ScalingLaw::with_kind(kind, 1.3, 0.25);
            for t in [4.0, 10.0, 57.0] {
                let h = 1e-5;
                let fd = (law.lambda(t + h).unwrap().ln() - law.lambda(t - h).unwrap().ln()) / (2.0 * h);
                let exact = law.log_derivative(t).unwrap();
                assert!((fd - exact).abs() < 1e-8, "{kind:?} at {t}: {fd} vs {exact}");
            }
        }
    }

    #[test]
    fn log2_law_growth() {
        let law = ScalingLaw::log2(1.0);
        let mut prev = law.lambda(E * E).unwrap();
        let mut t = E * E;
        while t < 1e8 {
            t *= 1.3;
            let l = law.lambda(t).unwrap();
            assert!(l > prev);
            prev = l;
        }
        assert!(prev > 1e5);
        assert!(prev / t < 0.01);
    }

    #[test]
    fn weight_values() {
        let fam = WeightFamily;
        assert_eq!(fam.eval(Weight::Psi, 0, 0.0).unwrap(), 0.0);
        assert_eq!(fam.eval(Weight::Psi, 1, 0.0).unwrap(), 1.0);
        assert_eq!(fam.eval(Weight::Phi1, 0, 0.0).unwrap(), 1.0);
        let p0 = fam.eval(Weight::Phi0, 0, 1.3).unwrap();
        let p1 = fam.eval(Weight::Phi1, 0, 1.3).unwrap();
        assert!((p1 - p0 * p0).abs() < 1e-16);
        assert!(fam.eval(Weight::Phi0, 5, 0.0).is_err());
        // psi' = phi0 on a dense sample
        for i in 0..=2000 {
            let x = -20.0 + 0.02 * i as f64;
            let a = fam.eval(Weight::Psi, 1, x).unwrap();
            let b = fam.eval(Weight::Phi0, 0, x).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let fam = WeightFamily;
        let h = 1e-3;
        for which in [Weight::Psi, Weight::Phi0, Weight::Phi1] {
            for order in 1..=4 {
                for x in [-2.0, 0.5, 3.0] {
                    // fourth-order centered stencil
                    let g = |y: f64| fam.eval(which, order - 1, y).unwrap();
                    let fd = (8.0 * (g(x + h) - g(x - h)) - (g(x + 2.0 * h) - g(x - 2.0 * h))) / (12.0 * h);
                    let exact = fam.eval(which, order, x).unwrap();
                    assert!(
                        (fd - exact).abs() < 1e-7,
                        "{which:?} order {order} at {x}: {fd} vs {exact}"
                    );
                }
            }
        }
    }

    #[test]
    fn parity() {
        let fam = WeightFamily;
        for which in [Weight::Psi, Weight::Phi0, Weight::Phi1] {
            // psi is odd, phi0 and phi1 are even
            let base = if which == Weight::Psi { 1 } else { 0 };
            for order in 0..=4 {
                let a = fam.eval(which, order, 0.77).unwrap();
                let b = fam.eval(which, order, -0.77).unwrap();
                if (base + order) % 2 == 0 {
                    assert!((a - b).abs() < 1e-15);
                } else {
                    assert!((a + b).abs() < 1e-15);
                }
            }
        }
    }

    #[test]
    fn sup_constants_by_fine_grid_maximization() {
        let (mut a, mut b) = (0.0_f64, 0.0_f64);
        for i in 0..=2_000_000 {
            let s = 1e-5 * i as f64;
            let sh = sech(s).powi(2);
            a = a.max(s * sh * s.tanh());
            b = b.max(s * s * sh);
        }
        assert!((a - SUP_S_SECH2_TANH).abs() < 1e-10);
        assert!((b - SUP_S2_SECH2).abs() < 1e-10);
        assert!(SUP_S_SECH2_TANH >= a && SUP_S2_SECH2 >= b);
    }

    #[test]
    fn spacetime_phi() {
        let fam = WeightFamily;
        let fixed = ScalingLaw::fixed(3.0);
        for x in [-4.0, 0.0, 2.5] {
            assert_eq!(fam.phi_time_derivative(&fixed, 5.0, x).unwrap(), 0.0);
        }
        let law = ScalingLaw::log2(1.0);
        for x in [-4.0, 0.3, 7.0] {
            assert!(fam.phi_time_derivative(&law, E * E, x).unwrap().abs() < 1e-16);
        }
        let (t, x, h) = (10.0, 1.0, 1e-5);
        let fd =
            (fam.phi_spacetime(&law, t + h, x, 0).unwrap() - fam.phi_spacetime(&law, t - h, x, 0).unwrap()) / (2.0 * h);
        let exact = fam.phi_time_derivative(&law, t, x).unwrap();
        assert!((fd - exact).abs() < 1e-7);

        // x-derivatives carry the chain-rule powers
        let hx = 1e-4;
        for order in 1..=4 {
            let fd = (fam.phi_spacetime(&law, t, x + hx, order - 1).unwrap()
                - fam.phi_spacetime(&law, t, x - hx, order - 1).unwrap())
                / (2.0 * hx);
            let exact = fam.phi_spacetime(&law, t, x, order).unwrap();
            assert!((fd - exact).abs() < 1e-7, "order {order}");
        }
    }
}
