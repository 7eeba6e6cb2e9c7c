//! Experiment orchestration: spin-up, twin runs, sweeps and report files.

use std::fmt::Write as _;
use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use rayon::prelude::*;
use thiserror::Error;

use crate::assimilation::{
    check_parameter_window, error_row, initialize_twin, twin_step_in_place, AssimilationError,
    TwinState, WindowError, WindowQuery, WindowReport,
};
use crate::config::{ConfigError, ExperimentConfig};
use crate::diagnostics::{
    fit_decay_rate, gronwall_check, gronwall_ode_instance, inequality_suite, suite_fields,
    DecayFit, DiagnosticsError, ErrorRow, ErrorSeries, GronwallReport, SuiteReport, SERIES_HEADER,
};
use crate::dynamics::{spin_up, DynamicsError, ImexStepper, NormStats, SpinUp, StepperState};
use crate::observers::{
    approx_identity_error, measure_constants, InterpolantOperator, PartitionOfUnity,
};
use crate::spectral::snapshot::save_snapshot;
use crate::spectral::{random_field, FourierField, PhysicalField, WaveGrid};

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("spin-up failed: {0}")]
    SpinUp(#[from] DynamicsError),
    #[error(transparent)]
    Assimilation(#[from] AssimilationError),
    #[error(transparent)]
    Window(#[from] WindowError),
    #[error(transparent)]
    Diagnostics(#[from] DiagnosticsError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl RunError {
    /// True for numerical blow-up, as opposed to setup or I/O failures.
    pub fn is_blow_up(&self) -> bool {
        matches!(
            self,
            Self::SpinUp(DynamicsError::BlowUp { .. })
                | Self::Assimilation(AssimilationError::BlowUp { .. })
        )
    }
}

/// Reference state at the start of the averaging history (`t = −2δ`),
/// shared by every run with the same model parameters.
#[derive(Clone, Debug)]
pub struct Prepared {
    pub grid: WaveGrid,
    pub stepper: ImexStepper,
    pub spin: SpinUp,
}

/// Spins the reference equation up from a seeded random state.
pub fn prepare(cfg: &ExperimentConfig) -> Result<Prepared, RunError> {
    cfg.validate()?;
    let grid = cfg.grid();
    let stepper = cfg.stepper(&grid);
    let kmax = (grid.dealias_cutoff() as f64).min(8.0);
    let initial = random_field(&grid, 1.0, kmax, cfg.init_seed).scaled(cfg.init_norm);
    let spin = spin_up(&initial, &stepper, cfg.spinup_t, &cfg.monitor())?;
    Ok(Prepared {
        grid,
        stepper,
        spin,
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum RunStatus {
    Completed,
    Diverged { time: f64 },
}

#[derive(Clone, Debug)]
pub struct TwinOutcome {
    pub series: ErrorSeries,
    pub status: RunStatus,
    pub fit: Option<DecayFit>,
    /// `log₁₀` of the post-transient peak error over the smallest later error.
    pub decades: f64,
    pub window: Option<WindowReport>,
    pub elapsed_s: f64,
}

impl TwinOutcome {
    /// Fitted rate, `−∞` for diverged runs and NaN when no fit was possible.
    pub fn lambda(&self) -> f64 {
        match (self.status, self.fit) {
            (RunStatus::Diverged { .. }, _) => f64::NEG_INFINITY,
            (_, Some(f)) => f.lambda,
            _ => f64::NAN,
        }
    }

    /// Largest `‖η−θ‖/‖θ‖` over the run.
    pub fn max_relative_error(&self) -> f64 {
        self.series
            .rows
            .iter()
            .map(|r| r.err_l2 / r.theta_l2)
            .fold(0.0, f64::max)
    }
}

/// Post-transient decay in decades: peak over `t ≥ t_start`, then the
/// smallest error after that peak.
pub fn decay_decades(series: &ErrorSeries, t_start: f64) -> f64 {
    let rows: Vec<&ErrorRow> = series.rows.iter().filter(|r| r.t >= t_start).collect();
    let Some((ipeak, peak)) = rows
        .iter()
        .enumerate()
        .map(|(i, r)| (i, r.err_l2))
        .fold(None, |acc: Option<(usize, f64)>, (i, e)| match acc {
            Some((_, best)) if best >= e => acc,
            _ => Some((i, e)),
        })
    else {
        return 0.0;
    };
    let low = rows[ipeak..].iter().map(|r| r.err_l2).fold(f64::INFINITY, f64::min);
    if peak == 0.0 {
        0.0
    } else {
        (peak / low).log10()
    }
}

/// Fit over `(2δ, first time the error reaches the floor]`.
pub fn fit_series(series: &ErrorSeries, delta: f64, floor_rel: f64) -> Option<DecayFit> {
    let first = series.rows.first()?;
    let floor = floor_rel * first.err_l2;
    let t_start = 2.0 * delta;
    let t_end = series
        .rows
        .iter()
        .find(|r| r.t > t_start && r.err_l2 <= floor)
        .map_or(f64::INFINITY, |r| r.t);
    fit_decay_rate(series, t_start, t_end, floor).ok()
}

fn snapshot_name(field: &str, t: f64) -> String {
    format!("{field}_{t:08.3}.sqgf")
}

fn write_snapshots(dir: &Path, state: &TwinState) -> std::io::Result<()> {
    let t = state.time();
    let io = |e: crate::spectral::SpectralError| std::io::Error::other(e.to_string());
    save_snapshot(&dir.join(snapshot_name("theta", t)), &state.theta.to_physical(), t).map_err(io)?;
    save_snapshot(&dir.join(snapshot_name("eta", t)), &state.eta.to_physical(), t).map_err(io)
}

fn run_dir(out: &Path, name: &str) -> std::io::Result<PathBuf> {
    let dir = out.join(name);
    fs::create_dir_all(&dir)?;
    Ok(dir)
}

fn spin_lines(s: &mut String, stats: &NormStats, plateau: bool) {
    let _ = writeln!(s, "spinup_sup_l2: {}", stats.sup_l2);
    let _ = writeln!(s, "spinup_sup_lp: {}", stats.sup_lp);
    let _ = writeln!(s, "spinup_sup_hsigma: {}", stats.sup_hsigma);
    let _ = writeln!(s, "spinup_plateau: {plateau}");
}

fn window_query(cfg: &ExperimentConfig, stats: &NormStats) -> WindowQuery {
    WindowQuery {
        kappa: cfg.kappa,
        gamma: cfg.gamma,
        p: cfg.p,
        mu: cfg.mu,
        delta: cfg.delta,
        h: cfg.h,
        theta_lp: stats.sup_lp,
        c0: cfg.c0,
        c0_prime: cfg.c0_prime,
    }
}

/// Twin experiment for `cfg` starting from a prepared reference state.
/// With `out`, writes `config.echo`, `series.csv` (streamed, so it survives
/// a blow-up), `report.txt` and optional snapshots into `out/<name>/`.
/// Blow-up of η is reported as [`RunStatus::Diverged`], not as an error.
pub fn run_twin_experiment(
    cfg: &ExperimentConfig,
    prepared: &Prepared,
    out: Option<&Path>,
) -> Result<TwinOutcome, RunError> {
    cfg.validate()?;
    let start = Instant::now();
    let dir = out.map(|o| run_dir(o, &cfg.name)).transpose()?;
    let mut csv = None;
    if let Some(d) = &dir {
        fs::write(d.join("config.echo"), cfg.echo())?;
        let mut w = csv::Writer::from_writer(BufWriter::new(File::create(d.join("series.csv"))?));
        w.write_record(SERIES_HEADER).map_err(DiagnosticsError::from)?;
        csv = Some(w);
    }

    let stepper = &prepared.stepper;
    let nudge = cfg.nudge(&prepared.grid);
    let horizon_steps = (cfg.horizon_t / cfg.dt).round() as i64;
    let mut series = ErrorSeries::default();
    let mut status = RunStatus::Completed;

    let mut record = |state: &TwinState, series: &mut ErrorSeries| -> Result<(), RunError> {
        let row = error_row(state, cfg.sigma);
        if let Some(w) = csv.as_mut() {
            w.write_record(row.record()).map_err(DiagnosticsError::from)?;
        }
        if let Some(d) = &dir {
            if cfg.snapshot_every > 0 && state.step() as u64 % cfg.snapshot_every == 0 {
                write_snapshots(d, state)?;
            }
        }
        series.push(row);
        Ok(())
    };

    match initialize_twin(&prepared.spin.theta, stepper, &nudge) {
        Ok(mut state) => {
            record(&state, &mut series)?;
            for _ in 0..horizon_steps {
                match twin_step_in_place(&mut state, stepper, &nudge) {
                    Ok(()) => record(&state, &mut series)?,
                    Err(AssimilationError::BlowUp { field: "eta", source }) => {
                        let time = match source {
                            DynamicsError::BlowUp { time, .. } => time,
                            _ => state.time(),
                        };
                        status = RunStatus::Diverged { time };
                        break;
                    }
                    Err(e) => return Err(e.into()),
                }
            }
        }
        Err(AssimilationError::BlowUp { field: "eta", source }) => {
            let time = match source {
                DynamicsError::BlowUp { time, .. } => time,
                _ => 0.0,
            };
            status = RunStatus::Diverged { time };
        }
        Err(e) => return Err(e.into()),
    }
    if let Some(mut w) = csv {
        w.flush()?;
    }

    let fit = match status {
        RunStatus::Completed => fit_series(&series, cfg.delta, cfg.floor_rel),
        RunStatus::Diverged { .. } => None,
    };
    let decades = decay_decades(&series, 2.0 * cfg.delta);
    let window = check_parameter_window(&window_query(cfg, &prepared.spin.stats)).ok();
    let outcome = TwinOutcome {
        series,
        status,
        fit,
        decades,
        window,
        elapsed_s: start.elapsed().as_secs_f64(),
    };
    if let Some(d) = &dir {
        fs::write(d.join("report.txt"), twin_report(cfg, prepared, &outcome))?;
    }
    Ok(outcome)
}

fn twin_report(cfg: &ExperimentConfig, prepared: &Prepared, o: &TwinOutcome) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "name: {}", cfg.name);
    match o.status {
        RunStatus::Completed => {
            let _ = writeln!(s, "status: completed");
        }
        RunStatus::Diverged { time } => {
            let _ = writeln!(s, "status: diverged");
            let _ = writeln!(s, "diverged_at: {time}");
        }
    }
    let _ = writeln!(s, "observer: {}", cfg.operator(&prepared.grid));
    match o.fit {
        Some(f) => {
            let _ = writeln!(s, "lambda: {}", f.lambda);
            let _ = writeln!(s, "r_squared: {}", f.r_squared);
            let _ = writeln!(s, "fit_samples: {}", f.samples);
        }
        None => {
            let _ = writeln!(s, "lambda: none");
        }
    }
    let _ = writeln!(s, "decades: {}", o.decades);
    if let (Some(first), Some(last)) = (o.series.rows.first(), o.series.last()) {
        let _ = writeln!(s, "initial_err_l2: {}", first.err_l2);
        let _ = writeln!(s, "final_t: {}", last.t);
        let _ = writeln!(s, "final_err_l2: {}", last.err_l2);
    }
    let _ = writeln!(s, "max_relative_err: {}", o.max_relative_error());
    spin_lines(&mut s, &prepared.spin.stats, prepared.spin.plateau);
    if let Some(w) = &o.window {
        s.push_str(&w.to_text());
    }
    let _ = writeln!(s, "elapsed_s: {:.3}", o.elapsed_s);
    s
}

#[derive(Clone, Debug)]
pub struct SimulationOutcome {
    pub theta: FourierField,
    pub stats: NormStats,
}

/// Reference equation only, from the prepared state over the horizon.
/// Writes `series.csv` with `t,theta_l2,theta_lp,theta_hsigma`.
pub fn run_simulation(
    cfg: &ExperimentConfig,
    prepared: &Prepared,
    out: Option<&Path>,
) -> Result<SimulationOutcome, RunError> {
    let dir = out.map(|o| run_dir(o, &cfg.name)).transpose()?;
    let mut rows = String::from("t,theta_l2,theta_lp,theta_hsigma\n");
    let mut stats = NormStats::default();
    let mut state = StepperState::new(prepared.spin.theta.clone(), 0.0, cfg.dt);
    let steps = (cfg.horizon_t / cfg.dt).round() as u64;
    for i in 0..=steps {
        if i > 0 {
            state = prepared.stepper.step(&state, None)?;
        }
        let phys = state.theta.to_physical();
        let row = (state.theta.l2_norm(), phys.lp_norm(cfg.p), state.theta.sobolev_norm(cfg.sigma));
        stats.sup_l2 = stats.sup_l2.max(row.0);
        stats.sup_lp = stats.sup_lp.max(row.1);
        stats.sup_hsigma = stats.sup_hsigma.max(row.2);
        let _ = writeln!(rows, "{},{},{},{}", state.time, row.0, row.1, row.2);
        if let Some(d) = &dir {
            if cfg.snapshot_every > 0 && i % cfg.snapshot_every == 0 {
                save_snapshot(&d.join(snapshot_name("theta", state.time)), &phys, state.time)
                    .map_err(|e| std::io::Error::other(e.to_string()))?;
            }
        }
    }
    if let Some(d) = &dir {
        fs::write(d.join("config.echo"), cfg.echo())?;
        fs::write(d.join("series.csv"), rows)?;
        let mut s = String::new();
        let _ = writeln!(s, "name: {}", cfg.name);
        let _ = writeln!(s, "status: completed");
        let _ = writeln!(s, "sup_l2: {}", stats.sup_l2);
        let _ = writeln!(s, "sup_lp: {}", stats.sup_lp);
        let _ = writeln!(s, "sup_hsigma: {}", stats.sup_hsigma);
        spin_lines(&mut s, &prepared.spin.stats, prepared.spin.plateau);
        fs::write(d.join("report.txt"), s)?;
    }
    Ok(SimulationOutcome {
        theta: state.theta,
        stats,
    })
}

/// One cell of the Gronwall battery.
#[derive(Clone, Debug)]
pub struct GronwallCase {
    pub a: f64,
    pub coupling: f64,
    pub delta: f64,
    pub report: GronwallReport,
}

pub const GRONWALL_RATES: [f64; 3] = [0.5, 1.0, 2.0];
pub const GRONWALL_COUPLINGS: [f64; 3] = [0.01, 1.0, 100.0];

/// 3×3 grid of `(a, A = B)` over the equality ODE family with `b = 1`,
/// `δ = 0.1`, `dt = 10⁻⁴`.
pub fn gronwall_battery() -> Vec<GronwallCase> {
    let delta = 0.1;
    let mut out = Vec::new();
    for &a in &GRONWALL_RATES {
        for &c in &GRONWALL_COUPLINGS {
            let inst = gronwall_ode_instance(a, 1.0, c, c, delta, 1.0, 0.5, 1e-4);
            out.push(GronwallCase {
                a,
                coupling: c,
                delta,
                report: gronwall_check(&inst),
            });
        }
    }
    out
}

#[derive(Clone, Debug)]
pub struct VerifyOutcome {
    pub suite: SuiteReport,
    pub gronwall: Vec<GronwallCase>,
}

impl VerifyOutcome {
    /// Suite failures plus Gronwall counterexamples.
    pub fn failures(&self) -> usize {
        self.suite.failures()
            + self
                .gronwall
                .iter()
                .filter(|c| c.report.counterexample.is_some())
                .count()
    }
}

pub fn run_verify(seed: u64, fields: usize, out: Option<&Path>) -> Result<VerifyOutcome, RunError> {
    let outcome = VerifyOutcome {
        suite: inequality_suite(seed, fields),
        gronwall: gronwall_battery(),
    };
    if let Some(o) = out {
        let dir = run_dir(o, "verify")?;
        let mut s = format!("seed: {seed}\nfields: {fields}\ntotal_failures: {}\n", outcome.failures());
        s.push_str(&outcome.suite.to_text());
        for c in &outcome.gronwall {
            let r = &c.report;
            let _ = writeln!(
                s,
                "gronwall a={} A=B={} delta={}: hypothesis={} condition={} conclusion={} worst_margin={:e} scale={:e}",
                c.a, c.coupling, c.delta, r.hypothesis, r.condition, r.conclusion,
                r.worst_conclusion_margin, r.scale
            );
        }
        fs::write(dir.join("report.txt"), s)?;
        outcome.suite.write_csv(File::create(dir.join("suite.csv"))?)?;
    }
    Ok(outcome)
}

#[derive(Clone, Debug)]
pub struct ObserveOutcome {
    /// Worst spectral-projection ratio for β = 1/2 and β = 1.
    pub spectral_ratio: [f64; 2],
    /// `(h, ratio)` for volume elements with β = 1 on the fixed field.
    pub volume_ratios: Vec<(f64, f64)>,
    /// Least-squares slope of log ratio against log h.
    pub volume_slope: f64,
    /// Empirical constants `(β, sup ratio)` for β ∈ {0, 1/2, 1}, per h.
    pub constants: Vec<(f64, Vec<(f64, f64)>)>,
}

fn slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = points.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    sxy / sxx
}

pub const VOLUME_SIDES: [usize; 3] = [16, 32, 64];

/// Approximation-of-identity battery: spectral projection with `K = ⌈1/h⌉`
/// over random fields, and volume elements at `h = 2π/m` on a fixed smooth
/// field.
pub fn run_observe_test(seed: u64, fields: usize, out: Option<&Path>) -> Result<ObserveOutcome, RunError> {
    let grid = WaveGrid::new(256).expect("valid grid");
    let sample = suite_fields(&WaveGrid::new(64).expect("valid grid"), seed, fields);
    let sample: Vec<FourierField> = sample.iter().map(|f| f.resample(&grid)).collect();

    let mut spectral_ratio = [0.0f64; 2];
    for h in [0.5, 0.25, 1.0 / 6.0, 0.125] {
        let op = InterpolantOperator::spectral_for_h(h, &grid).expect("valid cutoff");
        for phi in &sample {
            for (i, beta) in [0.5, 1.0].into_iter().enumerate() {
                if let Ok((_, r)) = approx_identity_error(&op, phi, beta) {
                    spectral_ratio[i] = spectral_ratio[i].max(r);
                }
            }
        }
    }

    let smooth = PhysicalField::from_fn(&grid, |x, y| x.cos() + 0.5 * (2.0 * y).sin() + 0.25 * (x + y).cos())
        .to_spectral();
    let mut volume_ratios = Vec::new();
    let mut constants = Vec::new();
    let few = &sample[..sample.len().min(10)];
    for m in VOLUME_SIDES {
        let pou = PartitionOfUnity::build(2.0 * std::f64::consts::PI / m as f64, &grid)
            .expect("aligned partition");
        let op = InterpolantOperator::volume_elements(Arc::new(pou));
        let (_, r) = approx_identity_error(&op, &smooth, 1.0).expect("nonzero field");
        volume_ratios.push((op.h(), r));
        constants.push((op.h(), measure_constants(&op, few).expect("same grid")));
    }
    let logs: Vec<(f64, f64)> = volume_ratios.iter().map(|&(h, r)| (h.ln(), r.ln())).collect();
    let outcome = ObserveOutcome {
        spectral_ratio,
        volume_slope: slope(&logs),
        volume_ratios,
        constants,
    };
    if let Some(o) = out {
        let dir = run_dir(o, "observe-test")?;
        let mut s = String::new();
        let _ = writeln!(s, "seed: {seed}");
        let _ = writeln!(s, "fields: {fields}");
        let _ = writeln!(s, "spectral_max_ratio_beta_0.5: {}", outcome.spectral_ratio[0]);
        let _ = writeln!(s, "spectral_max_ratio_beta_1: {}", outcome.spectral_ratio[1]);
        for (h, r) in &outcome.volume_ratios {
            let _ = writeln!(s, "volume_ratio_h_{h}: {r}");
        }
        let _ = writeln!(s, "volume_log_slope: {}", outcome.volume_slope);
        for (h, cs) in &outcome.constants {
            for (beta, c) in cs {
                let _ = writeln!(s, "volume_constant_h_{h}_beta_{beta}: {c}");
            }
        }
        fs::write(dir.join("report.txt"), s)?;
    }
    Ok(outcome)
}

/// Spin-up statistics turned into the dimensionless window report.
pub fn run_window(
    cfg: &ExperimentConfig,
    prepared: &Prepared,
    out: Option<&Path>,
) -> Result<WindowReport, RunError> {
    let report = check_parameter_window(&window_query(cfg, &prepared.spin.stats))?;
    if let Some(o) = out {
        let dir = run_dir(o, &cfg.name)?;
        fs::write(dir.join("config.echo"), cfg.echo())?;
        let mut s = String::new();
        spin_lines(&mut s, &prepared.spin.stats, prepared.spin.plateau);
        s.push_str(&report.to_text());
        fs::write(dir.join("report.txt"), s)?;
        fs::write(dir.join("window.csv"), report.to_csv())?;
    }
    Ok(report)
}

#[derive(Clone, Debug)]
pub struct SweepRow {
    pub name: String,
    pub mu: f64,
    pub delta: f64,
    pub h: f64,
    /// `completed`, `diverged` or `error: …`.
    pub status: String,
    pub lambda: f64,
    pub r_squared: f64,
    pub decades: f64,
    pub final_err: f64,
}

/// Config for one sweep point, named after its parameters.
pub fn sweep_point(base: &ExperimentConfig, mu: f64, delta: f64, h: f64) -> ExperimentConfig {
    ExperimentConfig {
        mu,
        delta,
        h,
        name: format!("mu{mu}_delta{delta}_h{h}"),
        ..base.clone()
    }
}

/// Runs the product of `mus × deltas × hs` concurrently (one run per
/// worker) after a single shared spin-up, then writes `summary.csv`.
/// Failing points are recorded in the summary; the others still run.
pub fn run_sweep(
    base: &ExperimentConfig,
    mus: &[f64],
    deltas: &[f64],
    hs: &[f64],
    out: Option<&Path>,
) -> Result<Vec<SweepRow>, RunError> {
    let prepared = prepare(base)?;
    let dir = out.map(|o| run_dir(o, &base.name)).transpose()?;
    let mut points = Vec::new();
    for &mu in mus {
        for &delta in deltas {
            for &h in hs {
                points.push(sweep_point(base, mu, delta, h));
            }
        }
    }
    let rows: Vec<SweepRow> = points
        .par_iter()
        .map(|cfg| {
            let mut row = SweepRow {
                name: cfg.name.clone(),
                mu: cfg.mu,
                delta: cfg.delta,
                h: cfg.h,
                status: String::new(),
                lambda: f64::NAN,
                r_squared: f64::NAN,
                decades: f64::NAN,
                final_err: f64::NAN,
            };
            match run_twin_experiment(cfg, &prepared, dir.as_deref()) {
                Ok(o) => {
                    row.status = match o.status {
                        RunStatus::Completed => "completed".into(),
                        RunStatus::Diverged { .. } => "diverged".into(),
                    };
                    row.lambda = o.lambda();
                    row.r_squared = o.fit.map_or(f64::NAN, |f| f.r_squared);
                    row.decades = o.decades;
                    row.final_err = o.series.last().map_or(f64::NAN, |r| r.err_l2);
                }
                Err(e) => row.status = format!("error: {}", e.to_string().replace(['\n', ','], " ")),
            }
            row
        })
        .collect();
    if let Some(d) = &dir {
        fs::write(d.join("config.echo"), base.echo())?;
        let mut w = csv::Writer::from_writer(File::create(d.join("summary.csv"))?);
        w.write_record(["name", "mu", "delta", "h", "status", "lambda", "r_squared", "decades", "final_err"])
            .map_err(DiagnosticsError::from)?;
        for r in &rows {
            w.write_record([
                r.name.clone(),
                r.mu.to_string(),
                r.delta.to_string(),
                r.h.to_string(),
                r.status.clone(),
                r.lambda.to_string(),
                r.r_squared.to_string(),
                r.decades.to_string(),
                r.final_err.to_string(),
            ])
            .map_err(DiagnosticsError::from)?;
        }
        w.flush()?;
    }
    Ok(rows)
}
