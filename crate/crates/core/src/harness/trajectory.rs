use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::integrator::Observer;
use crate::model::{energy, State};
use crate::spectral::Spectral;
use crate::virial::{FunctionalValue, NormWeight, Snapshot, Virial};

/// A recorded time series; each probe is written to `<name>.csv`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Probe {
    #[serde(rename = "energy")]
    Energy,
    J,
    #[serde(rename = "J_rhs")]
    JRhs,
    #[serde(rename = "I_plus")]
    IPlus,
    #[serde(rename = "I_plus_rhs")]
    IPlusRhs,
    #[serde(rename = "I_minus")]
    IMinus,
    #[serde(rename = "I_minus_rhs")]
    IMinusRhs,
    #[serde(rename = "E_phi1")]
    EPhi1,
    #[serde(rename = "E_phi1_rhs")]
    EPhi1Rhs,
    #[serde(rename = "weighted_norm_phi0_scaled")]
    NormPhi0Scaled,
    #[serde(rename = "weighted_norm_phi0_fixed")]
    NormPhi0Fixed,
    #[serde(rename = "weighted_norm_phi1_scaled")]
    NormPhi1Scaled,
    #[serde(rename = "smoothing_density")]
    Smoothing,
}

impl Probe {
    pub const ALL: [Probe; 13] = [
        Probe::Energy,
        Probe::J,
        Probe::JRhs,
        Probe::IPlus,
        Probe::IPlusRhs,
        Probe::IMinus,
        Probe::IMinusRhs,
        Probe::EPhi1,
        Probe::EPhi1Rhs,
        Probe::NormPhi0Scaled,
        Probe::NormPhi0Fixed,
        Probe::NormPhi1Scaled,
        Probe::Smoothing,
    ];

    /// `(functional, derivative)` pairs checked by the virial report.
    pub const IDENTITIES: [(Probe, Probe); 4] = [
        (Probe::J, Probe::JRhs),
        (Probe::IPlus, Probe::IPlusRhs),
        (Probe::IMinus, Probe::IMinusRhs),
        (Probe::EPhi1, Probe::EPhi1Rhs),
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Probe::Energy => "energy",
            Probe::J => "J",
            Probe::JRhs => "J_rhs",
            Probe::IPlus => "I_plus",
            Probe::IPlusRhs => "I_plus_rhs",
            Probe::IMinus => "I_minus",
            Probe::IMinusRhs => "I_minus_rhs",
            Probe::EPhi1 => "E_phi1",
            Probe::EPhi1Rhs => "E_phi1_rhs",
            Probe::NormPhi0Scaled => "weighted_norm_phi0_scaled",
            Probe::NormPhi0Fixed => "weighted_norm_phi0_fixed",
            Probe::NormPhi1Scaled => "weighted_norm_phi1_scaled",
            Probe::Smoothing => "smoothing_density",
        }
    }

    /// Whether evaluating the probe needs `lambda(t)`.
    pub fn needs_law(&self) -> bool {
        !matches!(self, Probe::Energy | Probe::NormPhi0Fixed)
    }

    fn evaluate(&self, snap: &Snapshot<'_>) -> Result<Sample> {
        let fv = match self {
            Probe::Energy => {
                let virial = snap.virial();
                let value = energy(snap.state(), virial.nonlinearity(), virial.spectral())?;
                return Ok(Sample::scalar(snap.time(), value));
            }
            Probe::J => snap.j_eval()?,
            Probe::JRhs => snap.j_rhs()?,
            Probe::IPlus => snap.i_plus_eval()?,
            Probe::IPlusRhs => snap.i_plus_rhs()?,
            Probe::IMinus => snap.i_minus_eval()?,
            Probe::IMinusRhs => snap.i_minus_rhs()?,
            Probe::EPhi1 => snap.e_phi1_eval()?,
            Probe::EPhi1Rhs => snap.e_phi1_rhs()?,
            Probe::NormPhi0Scaled => snap.weighted_norm(NormWeight::Phi0Scaled)?,
            Probe::NormPhi0Fixed => snap.weighted_norm(NormWeight::Phi0Fixed)?,
            Probe::NormPhi1Scaled => snap.weighted_norm(NormWeight::Phi1Scaled)?,
            Probe::Smoothing => snap.smoothing_density()?,
        };
        Ok(fv.into())
    }
}

impl std::fmt::Display for Probe {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// One row of a probe series.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub time: f64,
    pub value: f64,
    pub terms: IndexMap<String, f64>,
    pub aux: IndexMap<String, f64>,
}

impl Sample {
    pub fn scalar(time: f64, value: f64) -> Self {
        Self {
            time,
            value,
            terms: IndexMap::new(),
            aux: IndexMap::new(),
        }
    }
}

impl From<FunctionalValue> for Sample {
    fn from(fv: FunctionalValue) -> Self {
        Self {
            time: fv.time,
            value: fv.value,
            terms: fv.terms,
            aux: fv.aux,
        }
    }
}

/// Sampled times, one series per probe, and optional sparse snapshots.
#[derive(Clone, Debug, Default)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub series: IndexMap<Probe, Vec<Sample>>,
    pub snapshots: Vec<State>,
    /// Largest edge magnitude seen over all samples.
    pub boundary_max: f64,
}

impl Trajectory {
    pub fn values(&self, probe: Probe) -> Option<Vec<f64>> {
        self.series.get(&probe).map(|s| s.iter().map(|r| r.value).collect())
    }

    pub fn aux(&self, probe: Probe, key: &str) -> Option<Vec<f64>> {
        self.series
            .get(&probe)?
            .iter()
            .map(|r| r.aux.get(key).copied())
            .collect()
    }

    pub fn term(&self, probe: Probe, key: &str) -> Option<Vec<f64>> {
        self.series
            .get(&probe)?
            .iter()
            .map(|r| r.terms.get(key).copied())
            .collect()
    }
}

/// Observer evaluating the configured probes at every notification.
pub struct Recorder<'a> {
    virial: &'a Virial,
    probes: Vec<Probe>,
    snapshot_every: Option<f64>,
    next_snapshot: f64,
    pub trajectory: Trajectory,
}

impl<'a> Recorder<'a> {
    pub fn new(virial: &'a Virial, probes: &[Probe], snapshot_every: Option<f64>) -> Self {
        let mut unique: Vec<Probe> = Vec::new();
        for p in probes {
            if !unique.contains(p) {
                unique.push(*p);
            }
        }
        let series = unique.iter().map(|p| (*p, Vec::new())).collect();
        Self {
            virial,
            probes: unique,
            snapshot_every,
            next_snapshot: f64::NEG_INFINITY,
            trajectory: Trajectory {
                series,
                ..Trajectory::default()
            },
        }
    }

    pub fn spectral(&self) -> &Spectral {
        self.virial.spectral()
    }
}

impl Observer for Recorder<'_> {
    fn observe(&mut self, state: &State) -> Result<()> {
        if let Some(&last) = self.trajectory.times.last() {
            if !(state.time > last) {
                return Err(Error::invalid(
                    "time",
                    format!("samples must be strictly increasing ({last} then {})", state.time),
                ));
            }
        }
        let time = state.time;
        let to_instability = |probe: &dyn std::fmt::Display, e: Error| match e {
            Error::NonFinite { term } => Error::Instability {
                time,
                detail: format!("non-finite `{term}` while evaluating {probe}"),
            },
            other => other,
        };
        let snap = self
            .virial
            .snapshot(state)
            .map_err(|e| to_instability(&"derivatives", e))?;
        for probe in &self.probes {
            let sample = probe.evaluate(&snap).map_err(|e| to_instability(probe, e))?;
            if !sample.value.is_finite() {
                return Err(Error::Instability {
                    time: state.time,
                    detail: format!("{probe} is not finite"),
                });
            }
            self.trajectory
                .series
                .get_mut(probe)
                .expect("series registered")
                .push(sample);
        }
        let grid = self.virial.spectral().grid();
        self.trajectory.boundary_max = self.trajectory.boundary_max.max(state.boundary_magnitude(grid));
        if let Some(every) = self.snapshot_every {
            if state.time >= self.next_snapshot {
                self.trajectory.snapshots.push(state.clone());
                self.next_snapshot = state.time + every * (1.0 - 1e-9);
            }
        }
        self.trajectory.times.push(state.time);
        Ok(())
    }
}
