use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use boussinesq_core::harness::{
    run_decay_report, run_simulate, run_soliton, run_virial_check, ExitCode as RunCode, ExperimentConfig, Overrides,
    RunOutput,
};
use clap::{Args, Parser, Subcommand};

/// Simulate the good Boussinesq system and check its virial identities.
#[derive(Parser, Debug)]
#[command(name = "boussinesq", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Evolve the configured data and record the configured functionals.
    Simulate(RunArgs),
    /// Evolve a boosted soliton and compare with its exact translate.
    Soliton(RunArgs),
    /// Check the four virial identities along a trajectory.
    VirialCheck(RunArgs),
    /// Report weighted-norm decay trends and cumulative integrals.
    DecayReport(RunArgs),
}

#[derive(Args, Debug)]
struct RunArgs {
    /// JSON experiment configuration.
    #[arg(long, value_name = "PATH")]
    config: PathBuf,
    /// Output directory (overrides `output.directory`).
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Overrides `initial.seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides `stepper.dt`.
    #[arg(long)]
    dt: Option<f64>,
    /// Overrides `t_final`.
    #[arg(long = "t-final")]
    t_final: Option<f64>,
}

impl RunArgs {
    fn load(&self) -> anyhow::Result<ExperimentConfig> {
        let mut cfg = ExperimentConfig::load(&self.config)
            .with_context(|| format!("reading config {}", self.config.display()))?;
        cfg.apply(&Overrides {
            seed: self.seed,
            dt: self.dt,
            t_final: self.t_final,
            out: self.out.clone(),
        });
        Ok(cfg)
    }
}

fn run(cli: &Cli) -> anyhow::Result<RunOutput> {
    let (args, run): (&RunArgs, fn(&ExperimentConfig) -> boussinesq_core::Result<RunOutput>) = match &cli.command {
        Command::Simulate(a) => (a, run_simulate),
        Command::Soliton(a) => (a, run_soliton),
        Command::VirialCheck(a) => (a, run_virial_check),
        Command::DecayReport(a) => (a, run_decay_report),
    };
    let cfg = args.load()?;
    Ok(run(&cfg)?)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(out) => {
            let summary = &out.summary;
            println!("{}", serde_json::to_string_pretty(summary).expect("summary serializes"));
            if let Some(failure) = summary.virial.as_ref().and_then(|v| v.first_failure.as_ref()) {
                eprintln!("identity check failed: {failure}");
            }
            ExitCode::from(summary.exit_code() as u8)
        }
        Err(err) => {
            eprintln!("error: {err:#}");
            let code = err
                .downcast_ref::<boussinesq_core::Error>()
                .map_or(RunCode::Validation, RunCode::for_error);
            ExitCode::from(code as u8)
        }
    }
}
