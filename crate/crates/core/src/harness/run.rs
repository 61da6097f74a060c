use std::path::Path;
use std::time::Instant;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::integrator::{group_speed, Observer, Stepper};
use crate::model::{energy, State};
use crate::spectral::Spectral;
use crate::virial::Virial;
use crate::waveforms::traveling_residual;

use super::config::{ExperimentConfig, InitialKind};
use super::output::{write_series, write_table};
use super::quadrature::{cumulative_trapezoid, simpson};
use super::trajectory::{Probe, Recorder, Sample, Trajectory};

/// Process exit codes of the command-line runs.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExitCode {
    Success = 0,
    Validation = 1,
    IdentityFailure = 2,
    Instability = 3,
}

impl ExitCode {
    pub fn for_error(err: &Error) -> Self {
        match err {
            Error::Instability { .. } | Error::NonFinite { .. } => ExitCode::Instability,
            _ => ExitCode::Validation,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergySummary {
    pub initial: f64,
    #[serde(rename = "final")]
    pub final_value: f64,
    /// `|E(T) - E(t0)| / |E(t0)|`, absolute when `E(t0) = 0`.
    pub relative_drift: f64,
    /// Largest drift over the recorded samples.
    pub max_relative_drift: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundarySummary {
    pub max: f64,
    pub threshold: f64,
    pub ok: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IdentityResult {
    pub functional: String,
    pub delta: f64,
    pub integral: f64,
    pub residual: f64,
    /// `tolerance * (t2 - t1) * max(1, sup |rhs|)`
    pub bound: f64,
    pub sup_rhs: f64,
    /// `|residual| / int |rhs| dt`
    pub relative_residual: f64,
    pub passed: bool,
    pub term_integrals: IndexMap<String, f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub suspect_term: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VirialReport {
    pub tolerance: f64,
    pub identities: Vec<IdentityResult>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub first_failure: Option<String>,
    pub passed: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrendCheck {
    pub first_quarter_min: f64,
    pub last_quarter_max: f64,
    pub passed: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SaturationCheck {
    pub series: String,
    pub final_value: f64,
    pub last_quarter_growth: f64,
    pub passed: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayReport {
    pub leading_edge: f64,
    pub max_group_speed: f64,
    /// Earliest time the leading edge could reach `|x| = 0.9 L`.
    pub clip_time: f64,
    pub analysis_end: f64,
    pub initial_norm_sq: f64,
    pub restricted_norm: TrendCheck,
    pub saturation: Vec<SaturationCheck>,
    /// `max_t |W(t) / W(t0) - 1|` for the `phi1`-weighted norm `W`.
    pub phi1_norm_max_relative_change: f64,
    pub passed: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolitonReport {
    pub amplitude: f64,
    pub traveling_residual: f64,
    /// `L^inf` distance between the evolved state and the translated profile.
    pub profile_error: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub command: String,
    pub t_start: f64,
    pub t_final: f64,
    pub samples: usize,
    pub wall_time_s: f64,
    pub energy: EnergySummary,
    pub boundary: BoundarySummary,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub virial: Option<VirialReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub decay: Option<DecayReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub soliton: Option<SolitonReport>,
    pub passed: bool,
}

impl Summary {
    pub fn exit_code(&self) -> ExitCode {
        match &self.virial {
            Some(v) if !v.passed => ExitCode::IdentityFailure,
            _ => ExitCode::Success,
        }
    }
}

/// Extra CSV table written next to the per-probe series.
#[derive(Clone, Debug, Default)]
pub struct Table {
    pub name: String,
    pub columns: Vec<(String, Vec<f64>)>,
}

#[derive(Clone, Debug)]
pub struct RunOutput {
    pub trajectory: Trajectory,
    pub final_state: State,
    pub summary: Summary,
    /// Keep every `row_stride`-th sample when writing series.
    pub row_stride: usize,
    pub tables: Vec<Table>,
}

impl RunOutput {
    /// Writes `<probe>.csv` per series, extra tables and `summary.json`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        for (probe, samples) in &self.trajectory.series {
            write_series(&dir.join(format!("{}.csv", probe.name())), samples, self.row_stride)?;
        }
        for table in &self.tables {
            let cols: Vec<(&str, &[f64])> = table.columns.iter().map(|(n, c)| (n.as_str(), c.as_slice())).collect();
            write_table(&dir.join(format!("{}.csv", table.name)), &cols)?;
        }
        let json = serde_json::to_string_pretty(&self.summary)?;
        std::fs::write(dir.join("summary.json"), json + "\n")?;
        Ok(())
    }
}

struct Setup {
    spectral: Spectral,
    stepper: Stepper,
    virial: Virial,
    initial: State,
}

fn setup(cfg: &ExperimentConfig) -> Result<Setup> {
    cfg.validate()?;
    let grid = cfg.build_grid()?;
    let spectral = Spectral::new(grid);
    let stepper = Stepper::new(spectral.clone(), cfg.nonlinearity, cfg.stepper)?;
    let virial = Virial::new(spectral.clone(), cfg.law, cfg.nonlinearity)?;
    let initial = cfg.initial_state(&spectral)?;
    Ok(Setup {
        spectral,
        stepper,
        virial,
        initial,
    })
}

struct Evolved {
    trajectory: Trajectory,
    final_state: State,
    energy: EnergySummary,
    wall_time_s: f64,
}

fn evolve(cfg: &ExperimentConfig, s: &Setup, probes: &[Probe], cadence: f64) -> Result<Evolved> {
    let start = Instant::now();
    let mut probes = probes.to_vec();
    if !probes.contains(&Probe::Energy) {
        probes.insert(0, Probe::Energy);
    }
    let mut recorder = Recorder::new(&s.virial, &probes, cfg.output.snapshot_cadence);
    let final_state = {
        let mut observers: [&mut dyn Observer; 1] = [&mut recorder];
        s.stepper.evolve(&s.initial, cfg.t_final, cadence, &mut observers)?
    };
    let trajectory = recorder.trajectory;
    let energies = trajectory.values(Probe::Energy).expect("energy recorded");
    let initial = energies[0];
    let final_value = energy(&final_state, &cfg.nonlinearity, &s.spectral)?;
    let drift = |e: f64| {
        if initial == 0.0 {
            (e - initial).abs()
        } else {
            ((e - initial) / initial).abs()
        }
    };
    let max_relative_drift = energies.iter().map(|&e| drift(e)).fold(0.0, f64::max);
    Ok(Evolved {
        energy: EnergySummary {
            initial,
            final_value,
            relative_drift: drift(final_value),
            max_relative_drift,
        },
        trajectory,
        final_state,
        wall_time_s: start.elapsed().as_secs_f64(),
    })
}

fn summary(command: &str, cfg: &ExperimentConfig, ev: &Evolved) -> Summary {
    let max = ev.trajectory.boundary_max;
    Summary {
        command: command.to_string(),
        t_start: cfg.t_start,
        t_final: cfg.t_final,
        samples: ev.trajectory.times.len(),
        wall_time_s: ev.wall_time_s,
        energy: ev.energy.clone(),
        boundary: BoundarySummary {
            max,
            threshold: cfg.boundary_threshold,
            ok: max <= cfg.boundary_threshold,
        },
        virial: None,
        decay: None,
        soliton: None,
        passed: true,
    }
}

/// Evolves the configured data and records the configured probes.
pub fn simulate(cfg: &ExperimentConfig) -> Result<RunOutput> {
    let s = setup(cfg)?;
    let ev = evolve(cfg, &s, &cfg.probes, cfg.output.cadence)?;
    let summary = summary("simulate", cfg, &ev);
    Ok(RunOutput {
        trajectory: ev.trajectory,
        final_state: ev.final_state,
        summary,
        row_stride: 1,
        tables: Vec::new(),
    })
}

/// Soliton run: as [`simulate`], plus exactness diagnostics.
pub fn soliton(cfg: &ExperimentConfig) -> Result<RunOutput> {
    if cfg.initial.kind != InitialKind::Soliton {
        return Err(Error::invalid("initial.kind", "the soliton run needs kind = soliton"));
    }
    let s = setup(cfg)?;
    let params = cfg.initial.soliton;
    let residual = traveling_residual(
        params.v,
        &s.initial,
        &cfg.nonlinearity,
        &s.spectral,
        cfg.stepper.dealias_rule,
    )?;
    let ev = evolve(cfg, &s, &cfg.probes, cfg.output.cadence)?;
    let exact = params.profile_at(s.spectral.grid(), cfg.t_final);
    let profile_error = (0..exact.u1.len())
        .map(|j| {
            (ev.final_state.u1[j] - exact.u1[j])
                .abs()
                .max((ev.final_state.u2[j] - exact.u2[j]).abs())
        })
        .fold(0.0, f64::max);
    let mut summary = summary("soliton", cfg, &ev);
    summary.soliton = Some(SolitonReport {
        amplitude: params.amplitude(),
        traveling_residual: residual,
        profile_error,
    });
    Ok(RunOutput {
        trajectory: ev.trajectory,
        final_state: ev.final_state,
        summary,
        row_stride: 1,
        tables: Vec::new(),
    })
}

/// Compares `F(t2) - F(t1)` with the Simpson integral of the analytic
/// derivative for each of `J`, `I+`, `I-` and `E_phi1`.
pub fn virial_check(cfg: &ExperimentConfig) -> Result<RunOutput> {
    let s = setup(cfg)?;
    let spacing = cfg.stepper.dt * cfg.virial.quadrature_stride as f64;
    let span = cfg.t_final - cfg.t_start;
    let intervals = (span / spacing).round();
    if (span - intervals * spacing).abs() > 1e-9 * spacing.max(span) {
        return Err(Error::invalid(
            "t_final",
            format!("t_final - t_start must be a whole number of quadrature intervals of {spacing}"),
        ));
    }
    let mut probes: Vec<Probe> = Probe::IDENTITIES.iter().flat_map(|(a, b)| [*a, *b]).collect();
    probes.extend(cfg.probes.iter().copied());
    let mut ev = evolve(cfg, &s, &probes, spacing)?;

    if let Some(corrupt) = &cfg.virial.corrupt {
        if !Probe::IDENTITIES.iter().any(|(_, rhs)| *rhs == corrupt.functional) {
            return Err(Error::invalid(
                "virial.corrupt.functional",
                format!("`{}` is not a derivative series", corrupt.functional),
            ));
        }
        let series = ev.trajectory.series.get_mut(&corrupt.functional).expect("recorded");
        for sample in series.iter_mut() {
            let term = sample.terms.get_mut(&corrupt.term).ok_or_else(|| {
                Error::invalid(
                    "virial.corrupt.term",
                    format!("`{}` has no term `{}`", corrupt.functional, corrupt.term),
                )
            })?;
            *term = -*term;
            sample.value = sample.terms.values().sum();
        }
    }

    let h = if intervals > 0.0 { span / intervals } else { 0.0 };
    let tol = cfg.virial.tolerance;
    let mut identities = Vec::new();
    for (eval, rhs) in Probe::IDENTITIES {
        let f = ev.trajectory.values(eval).expect("recorded");
        let samples = &ev.trajectory.series[&rhs];
        identities.push(check_identity(eval, &f, samples, h, span, tol));
    }
    let first_failure = identities.iter().find(|r| !r.passed).map(|r| match &r.suspect_term {
        Some(t) => format!("{} (suspect term: {t})", r.functional),
        None => r.functional.clone(),
    });
    let passed = first_failure.is_none();
    let mut summary = summary("virial-check", cfg, &ev);
    summary.virial = Some(VirialReport {
        tolerance: tol,
        identities,
        first_failure,
        passed,
    });
    summary.passed = passed;
    let row_stride = ((cfg.output.cadence / spacing).round() as usize).max(1);
    Ok(RunOutput {
        trajectory: ev.trajectory,
        final_state: ev.final_state,
        summary,
        row_stride,
        tables: Vec::new(),
    })
}

fn check_identity(eval: Probe, f: &[f64], rhs: &[Sample], h: f64, span: f64, tol: f64) -> IdentityResult {
    let values: Vec<f64> = rhs.iter().map(|s| s.value).collect();
    let delta = f[f.len() - 1] - f[0];
    let integral = simpson(&values, h);
    let residual = delta - integral;
    let sup_rhs = values.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let bound = tol * span * sup_rhs.max(1.0);
    let abs_integral = simpson(&values.iter().map(|v| v.abs()).collect::<Vec<_>>(), h);
    let relative_residual = if abs_integral > 0.0 {
        residual.abs() / abs_integral
    } else {
        residual.abs()
    };
    let mut term_integrals = IndexMap::new();
    if let Some(first) = rhs.first() {
        for key in first.terms.keys() {
            let series: Vec<f64> = rhs.iter().map(|s| s.terms[key]).collect();
            term_integrals.insert(key.clone(), simpson(&series, h));
        }
    }
    let passed = residual.abs() <= bound;
    // a single sign error in term k shifts the residual by +-2 int term_k
    let suspect_term = if passed {
        None
    } else {
        term_integrals
            .iter()
            .map(|(k, v)| (k, (residual - 2.0 * v).abs().min((residual + 2.0 * v).abs())))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .map(|(k, _)| k.clone())
    };
    IdentityResult {
        functional: eval.name().to_string(),
        delta,
        integral,
        residual,
        bound,
        sup_rhs,
        relative_residual,
        passed,
        term_integrals,
        suspect_term,
    }
}

/// Leading edge of the data and the fastest group speed among its
/// significant modes.
fn edge_and_speed(state: &State, spectral: &Spectral, fraction: f64) -> Result<(f64, f64)> {
    let grid = spectral.grid();
    let peak = state.u1.max_abs().max(state.u2.max_abs());
    if peak == 0.0 {
        return Ok((0.0, 0.0));
    }
    let edge = grid
        .nodes()
        .iter()
        .enumerate()
        .filter(|(j, _)| state.u1[*j].abs().max(state.u2[*j].abs()) > fraction * peak)
        .fold(0.0_f64, |m, (_, x)| m.max(x.abs()));
    let a = spectral.forward(&state.u1)?;
    let b = spectral.forward(&state.u2)?;
    let mags: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x.norm().max(y.norm())).collect();
    let top = mags.iter().fold(0.0_f64, |m, v| m.max(*v));
    let speed = grid
        .wavenumbers()
        .iter()
        .zip(&mags)
        .filter(|(_, m)| **m > fraction * top)
        .fold(0.0_f64, |m, (k, _)| m.max(group_speed(k.abs())));
    Ok((edge, speed))
}

/// Decay diagnostics: weighted and cone-restricted norms plus the
/// cumulative time integrals, with trend and saturation checks over the
/// window before the data could reach the box edge.
pub fn decay_report(cfg: &ExperimentConfig) -> Result<RunOutput> {
    let s = setup(cfg)?;
    let (edge, speed) = edge_and_speed(&s.initial, &s.spectral, cfg.decay.edge_fraction)?;
    let limit = 0.9 * cfg.grid.half_length;
    let clip_time = if speed > 0.0 {
        cfg.t_start + ((limit - edge) / speed).max(0.0)
    } else {
        f64::INFINITY
    };
    let analysis_end = clip_time.min(cfg.t_final);
    let norm_sq = s.initial.energy_norm_sq(&s.spectral)?;

    let mut probes = vec![
        Probe::NormPhi1Scaled,
        Probe::NormPhi0Scaled,
        Probe::NormPhi0Fixed,
        Probe::Smoothing,
    ];
    probes.extend(cfg.probes.iter().copied());
    let ev = evolve(cfg, &s, &probes, cfg.output.cadence)?;
    let tr = &ev.trajectory;

    let n = tr
        .times
        .iter()
        .take_while(|&&t| t <= analysis_end * (1.0 + 1e-12))
        .count();
    let times = &tr.times[..n];
    let cut = |v: Vec<f64>| v[..n].to_vec();
    let weighted = cut(tr.values(Probe::NormPhi1Scaled).expect("recorded"));
    let restricted = cut(tr.aux(Probe::NormPhi1Scaled, "restricted").expect("recorded"));
    let lambda = cut(tr.aux(Probe::NormPhi0Scaled, "lambda").expect("recorded"));
    let over_lambda = |v: Vec<f64>| -> Vec<f64> { v.iter().zip(&lambda).map(|(a, l)| a / l).collect() };
    let scaled = cumulative_trapezoid(
        times,
        &over_lambda(cut(tr.values(Probe::NormPhi0Scaled).expect("recorded"))),
    );
    let fixed_raw = cumulative_trapezoid(times, &cut(tr.values(Probe::NormPhi0Fixed).expect("recorded")));
    let normalizer = cfg.law.lambda0 * norm_sq;
    let fixed: Vec<f64> = fixed_raw
        .iter()
        .map(|v| if normalizer > 0.0 { v / normalizer } else { *v })
        .collect();
    let smoothing = cumulative_trapezoid(times, &over_lambda(cut(tr.values(Probe::Smoothing).expect("recorded"))));

    let t0 = times[0];
    let t_end = times[n - 1];
    let quarter = 0.25 * (t_end - t0);
    let first_q = |v: &[f64]| {
        times
            .iter()
            .zip(v)
            .filter(|(t, _)| **t <= t0 + quarter)
            .fold(f64::INFINITY, |m, (_, x)| m.min(*x))
    };
    let last_q_max = |v: &[f64]| {
        times
            .iter()
            .zip(v)
            .filter(|(t, _)| **t >= t_end - quarter)
            .fold(f64::NEG_INFINITY, |m, (_, x)| m.max(*x))
    };
    let first_quarter_min = first_q(&restricted);
    let last_quarter_max = last_q_max(&restricted);
    let restricted_check = TrendCheck {
        first_quarter_min,
        last_quarter_max,
        passed: n > 1 && (last_quarter_max < first_quarter_min || first_quarter_min == 0.0 && last_quarter_max == 0.0),
    };

    let value_at = |v: &[f64], t: f64| {
        let i = times.iter().rposition(|&x| x <= t).unwrap_or(0);
        v[i]
    };
    let saturation: Vec<SaturationCheck> = [
        ("cumulative_phi0_scaled", &scaled),
        ("cumulative_phi0_fixed_normalized", &fixed),
        ("cumulative_smoothing", &smoothing),
    ]
    .iter()
    .map(|(name, v)| {
        let final_value = v[n - 1];
        let growth = if final_value > 0.0 {
            (final_value - value_at(v, t_end - quarter)) / final_value
        } else {
            0.0
        };
        SaturationCheck {
            series: name.to_string(),
            final_value,
            last_quarter_growth: growth,
            passed: growth < cfg.decay.saturation_threshold,
        }
    })
    .collect();

    let w0 = weighted[0];
    let phi1_change = weighted
        .iter()
        .map(|w| if w0 > 0.0 { (w / w0 - 1.0).abs() } else { w.abs() })
        .fold(0.0, f64::max);

    let passed = restricted_check.passed && saturation.iter().all(|c| c.passed);
    let report = DecayReport {
        leading_edge: edge,
        max_group_speed: speed,
        clip_time,
        analysis_end: t_end,
        initial_norm_sq: norm_sq,
        restricted_norm: restricted_check,
        saturation,
        phi1_norm_max_relative_change: phi1_change,
        passed,
    };
    let table = Table {
        name: "decay".into(),
        columns: vec![
            ("time".into(), times.to_vec()),
            ("weighted_norm_phi1".into(), weighted),
            ("restricted_norm".into(), restricted),
            ("cumulative_phi0_scaled".into(), scaled),
            ("cumulative_phi0_fixed_normalized".into(), fixed),
            ("cumulative_smoothing".into(), smoothing),
        ],
    };
    let mut summary = summary("decay-report", cfg, &ev);
    summary.decay = Some(report);
    summary.passed = passed;
    Ok(RunOutput {
        trajectory: ev.trajectory,
        final_state: ev.final_state,
        summary,
        row_stride: 1,
        tables: vec![table],
    })
}

fn write_to_output(cfg: &ExperimentConfig, out: Result<RunOutput>) -> Result<RunOutput> {
    let out = out?;
    out.write(&cfg.output.directory)?;
    Ok(out)
}

pub fn run_simulate(cfg: &ExperimentConfig) -> Result<RunOutput> {
    write_to_output(cfg, simulate(cfg))
}

pub fn run_soliton(cfg: &ExperimentConfig) -> Result<RunOutput> {
    write_to_output(cfg, soliton(cfg))
}

pub fn run_virial_check(cfg: &ExperimentConfig) -> Result<RunOutput> {
    write_to_output(cfg, virial_check(cfg))
}

pub fn run_decay_report(cfg: &ExperimentConfig) -> Result<RunOutput> {
    write_to_output(cfg, decay_report(cfg))
}

/// Runs independent configurations on separate threads.
pub fn run_sweep<F>(configs: &[ExperimentConfig], run: F) -> Vec<Result<RunOutput>>
where
    F: Fn(&ExperimentConfig) -> Result<RunOutput> + Sync,
{
    std::thread::scope(|scope| {
        let handles: Vec<_> = configs.iter().map(|c| scope.spawn(|| run(c))).collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("sweep worker panicked"))
            .collect()
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::config::TermRef;
    use crate::integrator::StepperConfig;

    fn small(kind: InitialKind, amplitude: f64) -> ExperimentConfig {
        let mut cfg = ExperimentConfig::default();
        cfg.grid.n_points = 256;
        cfg.grid.half_length = 40.0;
        cfg.stepper = StepperConfig::etdrk4(1e-2);
        cfg.initial.kind = kind;
        cfg.initial.amplitude = amplitude;
        cfg.initial.width = if kind == InitialKind::SechPacket { 1.5 } else { 3.0 };
        cfg.initial.seed = 7;
        cfg.t_final = 4.0;
        cfg
    }

    #[test]
    fn zero_data_passes_with_zero_residuals() {
        let out = virial_check(&small(InitialKind::SechPacket, 0.0)).unwrap();
        let report = out.summary.virial.as_ref().unwrap();
        assert!(report.passed);
        assert_eq!(out.summary.exit_code(), ExitCode::Success);
        for id in &report.identities {
            assert_eq!(id.residual, 0.0, "{}", id.functional);
            assert!(id.term_integrals.values().all(|v| *v == 0.0));
        }
    }

    #[test]
    fn small_data_identities_hold() {
        let out = virial_check(&small(InitialKind::FilteredRandom, 0.01)).unwrap();
        let report = out.summary.virial.unwrap();
        assert!(report.passed, "{report:?}");
        assert_eq!(report.identities.len(), 4);
        for id in &report.identities[1..] {
            assert!(
                id.relative_residual < 1e-8,
                "{}: {}",
                id.functional,
                id.relative_residual
            );
        }
    }

    #[test]
    fn corrupted_term_is_named() {
        let mut cfg = small(InitialKind::FilteredRandom, 0.3);
        for (functional, term) in [
            (Probe::IPlusRhs, "u1xx_sq"),
            (Probe::IMinusRhs, "dt_phi"),
            (Probe::EPhi1Rhs, "u1_u2"),
        ] {
            cfg.virial.corrupt = Some(TermRef {
                functional,
                term: term.into(),
            });
            let out = virial_check(&cfg).unwrap();
            let report = out.summary.virial.as_ref().unwrap();
            assert!(!report.passed);
            assert_eq!(out.summary.exit_code(), ExitCode::IdentityFailure);
            let failure = report.first_failure.as_ref().unwrap();
            assert!(failure.contains(term), "{failure}");
            let failed: Vec<_> = report.identities.iter().filter(|r| !r.passed).collect();
            assert_eq!(failed.len(), 1);
            assert_eq!(failed[0].suspect_term.as_deref(), Some(term));
        }
    }

    #[test]
    fn corrupt_hook_rejects_unknown_targets() {
        let mut cfg = small(InitialKind::SechPacket, 0.0);
        cfg.virial.corrupt = Some(TermRef {
            functional: Probe::J,
            term: "boost".into(),
        });
        let err = virial_check(&cfg).unwrap_err();
        assert!(matches!(err, Error::InvalidParameter { ref field, .. } if field == "virial.corrupt.functional"));
        cfg.virial.corrupt = Some(TermRef {
            functional: Probe::JRhs,
            term: "nope".into(),
        });
        let err = virial_check(&cfg).unwrap_err();
        assert!(matches!(err, Error::InvalidParameter { ref field, .. } if field == "virial.corrupt.term"));
    }

    #[test]
    fn quadrature_grid_must_fit_the_window() {
        let mut cfg = small(InitialKind::SechPacket, 0.0);
        cfg.t_final = 2.005;
        let err = virial_check(&cfg).unwrap_err();
        assert!(matches!(err, Error::InvalidParameter { ref field, .. } if field == "t_final"));
        assert_eq!(ExitCode::for_error(&err), ExitCode::Validation);
    }

    #[test]
    fn empty_window_writes_initial_record() {
        let mut cfg = small(InitialKind::SechPacket, 0.01);
        cfg.t_final = cfg.t_start;
        let out = simulate(&cfg).unwrap();
        assert_eq!(out.summary.samples, 1);
        let dir = tempfile::tempdir().unwrap();
        out.write(dir.path()).unwrap();
        let text = std::fs::read_to_string(dir.path().join("energy.csv")).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines.len(), 2);
        assert!(lines[0].starts_with("time,value"));
        assert!(dir.path().join("summary.json").exists());
    }

    #[test]
    fn outputs_are_deterministic() {
        let mut cfg = small(InitialKind::FilteredRandom, 0.01);
        cfg.t_final = 3.0;
        let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
        simulate(&cfg).unwrap().write(a.path()).unwrap();
        simulate(&cfg).unwrap().write(b.path()).unwrap();
        for probe in Probe::ALL {
            let name = format!("{}.csv", probe.name());
            let x = std::fs::read(a.path().join(&name)).unwrap();
            let y = std::fs::read(b.path().join(&name)).unwrap();
            assert_eq!(x, y, "{name}");
        }
    }

    #[test]
    fn csv_times_strictly_increase() {
        let out = simulate(&small(InitialKind::SechPacket, 0.01)).unwrap();
        let dir = tempfile::tempdir().unwrap();
        out.write(dir.path()).unwrap();
        let text = std::fs::read_to_string(dir.path().join("J.csv")).unwrap();
        let times: Vec<f64> = text
            .lines()
            .skip(1)
            .map(|l| l.split(',').next().unwrap().parse().unwrap())
            .collect();
        assert_eq!(times.len(), 21);
        assert!(times.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn decay_of_zero_data_is_zero() {
        let out = decay_report(&small(InitialKind::SechPacket, 0.0)).unwrap();
        let table = &out.tables[0];
        for (name, col) in &table.columns[1..] {
            assert!(col.iter().all(|v| *v == 0.0), "{name}");
        }
        let report = out.summary.decay.unwrap();
        assert_eq!(report.clip_time, f64::INFINITY);
        assert_eq!(report.phi1_norm_max_relative_change, 0.0);
    }

    #[test]
    fn decay_window_is_clipped_before_wraparound() {
        let mut cfg = small(InitialKind::SechPacket, 0.01);
        cfg.t_final = 40.0;
        cfg.output.cadence = 0.5;
        let out = decay_report(&cfg).unwrap();
        let report = out.summary.decay.unwrap();
        assert!(report.max_group_speed >= 1.0);
        assert!(report.clip_time < cfg.t_final);
        assert!(report.analysis_end <= report.clip_time);
        let reach = report.leading_edge + report.max_group_speed * (report.clip_time - cfg.t_start);
        assert!((reach - 0.9 * cfg.grid.half_length).abs() < 1e-9);
    }

    #[test]
    fn soliton_run_reports_exactness() {
        let mut cfg = small(InitialKind::Soliton, 0.0);
        cfg.grid.n_points = 512;
        cfg.initial.soliton.v = 0.6;
        cfg.t_start = 0.0;
        cfg.t_final = 1.0;
        cfg.probes = vec![Probe::Energy];
        let out = soliton(&cfg).unwrap();
        let report = out.summary.soliton.unwrap();
        assert!((report.amplitude - 0.96).abs() < 1e-15);
        assert!(report.traveling_residual < 1e-8);
        assert!(report.profile_error < 1e-6);
        assert!(out.summary.energy.relative_drift < 1e-10);

        cfg.initial.kind = InitialKind::SechPacket;
        assert!(soliton(&cfg).is_err());
    }

    #[test]
    fn blow_up_maps_to_instability() {
        let mut cfg = small(InitialKind::SechPacket, 40.0);
        cfg.initial.width = 1.0;
        cfg.t_final = 50.0;
        cfg.probes = vec![Probe::Energy];
        let err = simulate(&cfg).unwrap_err();
        assert!(matches!(err, Error::Instability { .. }), "{err}");
        assert_eq!(ExitCode::for_error(&err), ExitCode::Instability);
    }

    #[test]
    fn invalid_config_maps_to_validation() {
        let mut cfg = small(InitialKind::SechPacket, 0.01);
        cfg.grid.n_points = 101;
        let err = simulate(&cfg).unwrap_err();
        assert_eq!(ExitCode::for_error(&err), ExitCode::Validation);
    }

    #[test]
    fn sweep_runs_each_config() {
        let configs: Vec<_> = (0..3)
            .map(|seed| {
                let mut c = small(InitialKind::FilteredRandom, 0.01);
                c.initial.seed = seed;
                c.t_final = 2.5;
                c
            })
            .collect();
        let results = run_sweep(&configs, simulate);
        assert_eq!(results.len(), 3);
        let e: Vec<f64> = results
            .iter()
            .map(|r| r.as_ref().unwrap().summary.energy.initial)
            .collect();
        assert!(e[0] != e[1] && e[1] != e[2]);
        let again = simulate(&configs[1]).unwrap();
        assert_eq!(again.summary.energy.initial, e[1]);
    }
}
