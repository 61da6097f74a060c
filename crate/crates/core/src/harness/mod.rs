//! Experiment configuration, orchestration and persistence.

pub mod config;
pub mod output;
pub mod quadrature;
pub mod run;
pub mod trajectory;

pub use config::{ExperimentConfig, InitialKind, Overrides};
pub use run::{
    decay_report, run_decay_report, run_simulate, run_soliton, run_sweep, run_virial_check, simulate, soliton,
    virial_check, ExitCode, RunOutput, Summary,
};
pub use trajectory::{Probe, Sample, Trajectory};
