use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::integrator::StepperConfig;
use crate::model::{Nonlinearity, State};
use crate::spectral::{Grid, Spectral};
use crate::waveforms::{boosted_soliton, small_data, SmallDataKind, SolitonParams};
use crate::weights::{ScalingKind, ScalingLaw};

use super::trajectory::Probe;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    #[serde(rename = "N")]
    pub n_points: usize,
    #[serde(rename = "L")]
    pub half_length: f64,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            n_points: 1024,
            half_length: 50.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialKind {
    SechPacket,
    Gaussian,
    FilteredRandom,
    Soliton,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InitialConfig {
    pub kind: InitialKind,
    /// Target `H^1 x L^2` norm of small data.
    pub amplitude: f64,
    pub seed: u64,
    /// Packet width, or Gaussian window width for random data.
    pub width: f64,
    pub soliton: SolitonParams,
}

impl Default for InitialConfig {
    fn default() -> Self {
        Self {
            kind: InitialKind::SechPacket,
            amplitude: 0.01,
            seed: 0,
            width: 4.0,
            soliton: SolitonParams {
                p: 2.0,
                v: 0.0,
                x0: 0.0,
            },
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    /// Spacing of recorded samples.
    pub cadence: f64,
    pub directory: PathBuf,
    /// Keep full states every this many time units.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub snapshot_cadence: Option<f64>,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            cadence: 0.1,
            directory: PathBuf::from("out"),
            snapshot_cadence: None,
        }
    }
}

/// Names one term of one derivative series, e.g. `J_rhs` / `u1_sq`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TermRef {
    pub functional: Probe,
    pub term: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VirialCheckConfig {
    pub tolerance: f64,
    /// Quadrature nodes every this many steps.
    pub quadrature_stride: usize,
    /// Flips the sign of one term before the check (negative control).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub corrupt: Option<TermRef>,
}

impl Default for VirialCheckConfig {
    fn default() -> Self {
        Self {
            tolerance: 1e-6,
            quadrature_stride: 1,
            corrupt: None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DecayConfig {
    /// Largest admissible relative growth over the last quarter.
    pub saturation_threshold: f64,
    /// Relative level defining the leading edge and the resolved band.
    pub edge_fraction: f64,
}

impl Default for DecayConfig {
    fn default() -> Self {
        Self {
            saturation_threshold: 0.05,
            edge_fraction: 1e-8,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub grid: GridConfig,
    pub nonlinearity: Nonlinearity,
    pub stepper: StepperConfig,
    pub initial: InitialConfig,
    pub law: ScalingLaw,
    pub output: OutputConfig,
    pub t_start: f64,
    pub t_final: f64,
    pub boundary_threshold: f64,
    pub probes: Vec<Probe>,
    pub virial: VirialCheckConfig,
    pub decay: DecayConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            grid: GridConfig::default(),
            nonlinearity: Nonlinearity::PurePower { p: 2.0 },
            stepper: StepperConfig::default(),
            initial: InitialConfig::default(),
            law: ScalingLaw::default(),
            output: OutputConfig::default(),
            t_start: 2.0,
            t_final: 200.0,
            boundary_threshold: 1e-10,
            probes: Probe::ALL.to_vec(),
            virial: VirialCheckConfig::default(),
            decay: DecayConfig::default(),
        }
    }
}

/// Command-line overrides.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub dt: Option<f64>,
    pub t_final: Option<f64>,
    pub out: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn apply(&mut self, overrides: &Overrides) {
        if let Some(seed) = overrides.seed {
            self.initial.seed = seed;
        }
        if let Some(dt) = overrides.dt {
            self.stepper.dt = dt;
        }
        if let Some(t_final) = overrides.t_final {
            self.t_final = t_final;
        }
        if let Some(out) = &overrides.out {
            self.output.directory = out.clone();
        }
    }

    pub fn validate(&self) -> Result<()> {
        let grid = self.build_grid()?;
        self.nonlinearity.validate()?;
        self.stepper.validate(&grid)?;
        self.law.validate()?;
        if !self.t_start.is_finite() {
            return Err(Error::invalid("t_start", "must be finite"));
        }
        if !(self.t_final.is_finite() && self.t_final >= self.t_start) {
            return Err(Error::invalid(
                "t_final",
                format!("must be finite and >= t_start = {}, got {}", self.t_start, self.t_final),
            ));
        }
        if !(self.output.cadence.is_finite() && self.output.cadence > 0.0) {
            return Err(Error::invalid("output.cadence", "must be positive"));
        }
        if let Some(c) = self.output.snapshot_cadence {
            if !(c.is_finite() && c > 0.0) {
                return Err(Error::invalid("output.snapshot_cadence", "must be positive"));
            }
        }
        if !(self.boundary_threshold.is_finite() && self.boundary_threshold > 0.0) {
            return Err(Error::invalid("boundary_threshold", "must be positive"));
        }
        if self.law.kind != ScalingKind::Fixed && self.probes.iter().any(|p| p.needs_law()) {
            let earliest = match self.law.kind {
                ScalingKind::Loglog => std::f64::consts::E,
                _ => crate::weights::T_MIN,
            };
            if !(self.t_start >= earliest) {
                return Err(Error::invalid(
                    "t_start",
                    format!("the scaling law needs t >= {earliest}, got {}", self.t_start),
                ));
            }
        }
        if !(self.virial.tolerance.is_finite() && self.virial.tolerance > 0.0) {
            return Err(Error::invalid("virial.tolerance", "must be positive"));
        }
        if self.virial.quadrature_stride == 0 {
            return Err(Error::invalid("virial.quadrature_stride", "must be at least 1"));
        }
        let d = &self.decay;
        if !(d.saturation_threshold.is_finite() && d.saturation_threshold > 0.0) {
            return Err(Error::invalid("decay.saturation_threshold", "must be positive"));
        }
        if !(d.edge_fraction > 0.0 && d.edge_fraction < 1.0) {
            return Err(Error::invalid("decay.edge_fraction", "must lie in (0, 1)"));
        }
        let init = &self.initial;
        match init.kind {
            InitialKind::Soliton => {
                init.soliton.validate()?;
                let p = match self.nonlinearity {
                    Nonlinearity::SignedPower { p } | Nonlinearity::PurePower { p } => Some(p),
                    Nonlinearity::Disabled => None,
                };
                if p != Some(init.soliton.p) {
                    return Err(Error::invalid(
                        "initial.soliton.p",
                        format!("must equal the nonlinearity exponent, got {}", init.soliton.p),
                    ));
                }
            }
            _ => {
                if !(init.amplitude.is_finite() && init.amplitude >= 0.0) {
                    return Err(Error::invalid("initial.amplitude", "must be non-negative"));
                }
                if !(init.width.is_finite() && init.width > 0.0) {
                    return Err(Error::invalid("initial.width", "must be positive"));
                }
            }
        }
        Ok(())
    }

    pub fn build_grid(&self) -> Result<Grid> {
        Grid::new(self.grid.n_points, self.grid.half_length).map_err(|e| match e {
            Error::InvalidParameter { field, reason } => Error::InvalidParameter {
                field: match field.as_str() {
                    "n_points" => "grid.N".into(),
                    "half_length" => "grid.L".into(),
                    _ => field,
                },
                reason,
            },
            other => other,
        })
    }

    /// Initial state at `t_start`.
    pub fn initial_state(&self, spectral: &Spectral) -> Result<State> {
        let init = &self.initial;
        let state = match init.kind {
            InitialKind::Soliton => {
                boosted_soliton(&init.soliton, spectral.grid(), self.boundary_threshold)?;
                init.soliton.profile_at(spectral.grid(), self.t_start)
            }
            kind => {
                let kind = match kind {
                    InitialKind::SechPacket => SmallDataKind::SechPacket,
                    InitialKind::Gaussian => SmallDataKind::Gaussian,
                    _ => SmallDataKind::FilteredRandom,
                };
                small_data(
                    kind,
                    init.amplitude,
                    init.width,
                    init.seed,
                    spectral,
                    self.boundary_threshold,
                )?
            }
        };
        let state = state.with_time(self.t_start);
        state.check_boundary(spectral.grid(), self.boundary_threshold)?;
        Ok(state)
    }
}
