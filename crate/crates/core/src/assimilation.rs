//! Nudging with delayed moving-average observations: `J_h^δφ(t)` is the mean
//! of `J_hφ` over `[t − 2δ, t − δ]`.

use std::collections::VecDeque;

use thiserror::Error;

use crate::diagnostics::{ErrorRow, ErrorSeries};
use crate::dynamics::{sqg_rhs, DynamicsError, ImexStepper, SqgParams};
use crate::observers::{InterpolantOperator, Observation, ObserverError};
use crate::spectral::{random_field, FourierField};

#[derive(Debug, Error)]
pub enum AssimilationError {
    #[error("averaging window [{start}, {end}] not covered by stored observations at t={t}")]
    IncompleteWindow { t: f64, start: f64, end: f64 },
    #[error("δ={delta} is not a positive integer multiple of dt={dt}")]
    DelayNotMultiple { delta: f64, dt: f64 },
    #[error("t={t} is not on the dt={dt} step lattice")]
    OffLattice { t: f64, dt: f64 },
    #[error("μ must be finite and non-negative, got {0}")]
    InvalidMu(f64),
    #[error("observations must arrive one step apart (expected step {expected}, got {found})")]
    OutOfOrder { expected: i64, found: i64 },
    #[error("{field} blew up: {source}")]
    BlowUp {
        field: &'static str,
        #[source]
        source: DynamicsError,
    },
    #[error(transparent)]
    Observer(#[from] ObserverError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Number of `dt` steps in `delta`, requiring an exact integer ratio.
pub fn window_steps(delta: f64, dt: f64) -> Result<usize, AssimilationError> {
    let ratio = delta / dt;
    let d = ratio.round();
    if !(delta > 0.0 && dt > 0.0 && d >= 1.0 && (ratio - d).abs() <= 1e-9 * d) {
        return Err(AssimilationError::DelayNotMultiple { delta, dt });
    }
    Ok(d as usize)
}

/// Step-indexed history of compact `J_h` observations.
///
/// Entry `s` is the observation at time `s·dt`; only what the delayed
/// window can still need is retained.
#[derive(Clone, Debug)]
pub struct ObservationBuffer {
    dt: f64,
    window: usize,
    entries: VecDeque<(i64, Observation)>,
}

impl ObservationBuffer {
    /// Buffer for averages over windows of `window` steps.
    pub fn new(dt: f64, window: usize) -> Self {
        Self {
            dt,
            window,
            entries: VecDeque::with_capacity(2 * window + 2),
        }
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn window(&self) -> usize {
        self.window
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Step index of the newest entry.
    pub fn latest(&self) -> Option<i64> {
        self.entries.back().map(|(s, _)| *s)
    }

    pub fn earliest(&self) -> Option<i64> {
        self.entries.front().map(|(s, _)| *s)
    }

    pub fn entries(&self) -> impl Iterator<Item = (f64, &Observation)> {
        self.entries.iter().map(|(s, o)| (*s as f64 * self.dt, o))
    }

    /// Appends the observation for `step` and drops entries older than
    /// `t − 2δ − dt`.
    pub fn push(&mut self, step: i64, obs: Observation) -> Result<(), AssimilationError> {
        if let Some(last) = self.latest() {
            if step != last + 1 {
                return Err(AssimilationError::OutOfOrder {
                    expected: last + 1,
                    found: step,
                });
            }
        }
        self.entries.push_back((step, obs));
        let oldest_needed = step - 2 * self.window as i64 - 1;
        while self.earliest().is_some_and(|s| s < oldest_needed) {
            self.entries.pop_front();
        }
        Ok(())
    }

    fn get(&self, step: i64) -> Option<&Observation> {
        let first = self.earliest()?;
        let i = usize::try_from(step - first).ok()?;
        self.entries.get(i).map(|(_, o)| o)
    }

    /// `(1/δ)∫_{a}^{b} J_hφ` over steps `[a, b]` by the composite trapezoid rule.
    fn trapezoid(&self, a: i64, b: i64, t: f64) -> Result<Observation, AssimilationError> {
        let missing = || AssimilationError::IncompleteWindow {
            t,
            start: a as f64 * self.dt,
            end: b as f64 * self.dt,
        };
        let first = self.get(a).ok_or_else(missing)?;
        let mut acc = first.zeros_like();
        for s in a..=b {
            let obs = self.get(s).ok_or_else(missing)?;
            let w = if s == a || s == b { 0.5 } else { 1.0 };
            acc.add_scaled(w, obs);
        }
        acc.scale(1.0 / (b - a) as f64);
        Ok(acc)
    }

    /// Compact `J_h^δφ(step·dt)`: the trapezoid mean over `[step − 2D, step − D]`.
    pub fn delayed_average(&self, step: i64) -> Result<Observation, AssimilationError> {
        let (a, b) = (step - 2 * self.window as i64, step - self.window as i64);
        // causality: nothing newer than t − δ may enter the average
        assert!(b <= step - self.window as i64);
        self.trapezoid(a, b, step as f64 * self.dt)
    }

    /// Centred average over `[t − δ, t + δ]`. It needs observations from the
    /// future, so it is only available for past times and fails at the head
    /// of a running buffer.
    pub fn centered_average(&self, step: i64) -> Result<Observation, AssimilationError> {
        let d = self.window as i64;
        self.trapezoid(step - d, step + d, step as f64 * self.dt)
    }

    fn step_of(&self, t: f64) -> Result<i64, AssimilationError> {
        let s = (t / self.dt).round();
        if (s * self.dt - t).abs() > 1e-9 * self.dt.max(t.abs()) {
            return Err(AssimilationError::OffLattice { t, dt: self.dt });
        }
        Ok(s as i64)
    }
}

/// `J_h^δφ(t)` rebuilt as a field. `delta` must match the buffer's window.
pub fn time_averaged_observe(
    buffer: &ObservationBuffer,
    op: &InterpolantOperator,
    t: f64,
    delta: f64,
) -> Result<FourierField, AssimilationError> {
    if window_steps(delta, buffer.dt())? != buffer.window() {
        return Err(AssimilationError::DelayNotMultiple {
            delta,
            dt: buffer.dt(),
        });
    }
    let obs = buffer.delayed_average(buffer.step_of(t)?)?;
    Ok(op.reconstruct(&obs))
}

/// How η is prescribed on `(−2δ, 0]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum InitialGuess {
    Zero,
    ExactTheta,
    /// Independent trajectory from a seeded random state of the given L² norm.
    RandomBall { seed: u64, norm: f64 },
}

#[derive(Clone, Debug)]
pub struct NudgeParams {
    pub mu: f64,
    pub delta: f64,
    pub operator: InterpolantOperator,
    pub g_init: InitialGuess,
}

impl NudgeParams {
    pub fn new(
        mu: f64,
        delta: f64,
        operator: InterpolantOperator,
        g_init: InitialGuess,
    ) -> Result<Self, AssimilationError> {
        if !(mu >= 0.0 && mu.is_finite()) {
            return Err(AssimilationError::InvalidMu(mu));
        }
        if !(delta > 0.0 && delta.is_finite()) {
            return Err(AssimilationError::DelayNotMultiple { delta, dt: f64::NAN });
        }
        Ok(Self {
            mu,
            delta,
            operator,
            g_init,
        })
    }
}

/// `f − κΛ^γη − v·∇η − μ(obs_eta − obs_theta)`.
pub fn nudged_rhs(
    eta: &FourierField,
    params: &SqgParams,
    nudge: &NudgeParams,
    obs_eta: &FourierField,
    obs_theta: &FourierField,
) -> FourierField {
    sqg_rhs(eta, params).axpy(-nudge.mu, &(obs_eta - obs_theta))
}

/// Reference and assimilated fields with their observation histories.
#[derive(Clone, Debug)]
pub struct TwinState {
    pub theta: FourierField,
    pub eta: FourierField,
    step: i64,
    dt: f64,
    theta_obs: ObservationBuffer,
    eta_obs: ObservationBuffer,
}

impl TwinState {
    pub fn step(&self) -> i64 {
        self.step
    }

    pub fn time(&self) -> f64 {
        self.step as f64 * self.dt
    }

    /// Interval index with `t ∈ (kδ, (k+1)δ]`, so `k = −1` at `t = 0`.
    pub fn interval(&self) -> i64 {
        let d = self.theta_obs.window() as i64;
        self.step.div_euclid(d) + i64::from(self.step.rem_euclid(d) != 0) - 1
    }

    pub fn theta_buffer(&self) -> &ObservationBuffer {
        &self.theta_obs
    }

    pub fn eta_buffer(&self) -> &ObservationBuffer {
        &self.eta_obs
    }

    /// Compact `J_h^δη − J_h^δθ` at the current time.
    pub fn observation_gap(&self) -> Result<Observation, AssimilationError> {
        let mut gap = self.eta_obs.delayed_average(self.step)?;
        gap.add_scaled(-1.0, &self.theta_obs.delayed_average(self.step)?);
        Ok(gap)
    }

    pub fn error(&self) -> FourierField {
        &self.eta - &self.theta
    }
}

fn tagged(field: &'static str) -> impl Fn(DynamicsError) -> AssimilationError {
    move |source| AssimilationError::BlowUp { field, source }
}

fn checked(field: &'static str, f: FourierField, time: f64) -> Result<FourierField, AssimilationError> {
    if f.is_finite() {
        Ok(f)
    } else {
        Err(tagged(field)(DynamicsError::BlowUp {
            time,
            max_coeff: f.max_abs_coeff(),
        }))
    }
}

/// Runs θ from `θ(−2δ) = theta_start` to `t = 0`, filling both observation
/// buffers and preparing η according to `nudge.g_init`.
pub fn initialize_twin(
    theta_start: &FourierField,
    stepper: &ImexStepper,
    nudge: &NudgeParams,
) -> Result<TwinState, AssimilationError> {
    let dt = stepper.dt();
    let d = window_steps(nudge.delta, dt)?;
    let op = &nudge.operator;
    let start = -2 * d as i64;

    let mut theta_obs = ObservationBuffer::new(dt, d);
    let mut theta = theta_start.clone();
    theta_obs.push(start, op.observe(&theta)?)?;
    for s in start + 1..=0 {
        theta = checked("theta", stepper.advance(&theta, None), s as f64 * dt)?;
        theta_obs.push(s, op.observe(&theta)?)?;
    }

    let (eta, eta_obs) = match nudge.g_init {
        InitialGuess::ExactTheta => (theta.clone(), theta_obs.clone()),
        InitialGuess::Zero => {
            let zero = FourierField::zeros(theta.grid());
            let blank = op.observe(&zero)?;
            let mut buf = ObservationBuffer::new(dt, d);
            for s in start..=0 {
                buf.push(s, blank.clone())?;
            }
            (zero, buf)
        }
        InitialGuess::RandomBall { seed, norm } => {
            let g = theta.grid();
            let kmax = (g.dealias_cutoff() as f64).min(8.0);
            let mut eta = random_field(g, 1.0, kmax, seed).scaled(norm);
            let mut buf = ObservationBuffer::new(dt, d);
            buf.push(start, op.observe(&eta)?)?;
            for s in start + 1..=0 {
                eta = checked("eta", stepper.advance(&eta, None), s as f64 * dt)?;
                buf.push(s, op.observe(&eta)?)?;
            }
            (eta, buf)
        }
    };

    Ok(TwinState {
        theta,
        eta,
        step: 0,
        dt,
        theta_obs,
        eta_obs,
    })
}

/// One step of the coupled system. The feedback `−μ(J_h^δη − J_h^δθ)` is
/// evaluated at the step start and held fixed, like a time-dependent force.
pub fn twin_step(
    state: &TwinState,
    stepper: &ImexStepper,
    nudge: &NudgeParams,
) -> Result<TwinState, AssimilationError> {
    let mut next = state.clone();
    twin_step_in_place(&mut next, stepper, nudge)?;
    Ok(next)
}

pub(crate) fn twin_step_in_place(
    state: &mut TwinState,
    stepper: &ImexStepper,
    nudge: &NudgeParams,
) -> Result<(), AssimilationError> {
    let gap = state.observation_gap()?;
    let feedback = if nudge.mu == 0.0 || gap.max_abs() == 0.0 {
        None
    } else {
        Some(nudge.operator.reconstruct(&gap).scaled(-nudge.mu))
    };
    let step = state.step + 1;
    let t = step as f64 * state.dt;
    state.theta = checked("theta", stepper.advance(&state.theta, None), t)?;
    state.eta = checked("eta", stepper.advance(&state.eta, feedback.as_ref()), t)?;
    state.theta_obs.push(step, nudge.operator.observe(&state.theta)?)?;
    state.eta_obs.push(step, nudge.operator.observe(&state.eta)?)?;
    state.step = step;
    Ok(())
}

/// Error norms of the current state.
pub fn error_row(state: &TwinState, sigma: f64) -> ErrorRow {
    let zeta = state.error();
    ErrorRow {
        t: state.time(),
        k: state.interval(),
        err_l2: zeta.l2_norm(),
        err_hsigma: zeta.sobolev_norm(sigma),
        err_hneg_half: zeta.sobolev_norm(-0.5),
        theta_l2: state.theta.l2_norm(),
        eta_l2: state.eta.l2_norm(),
    }
}

/// Twin experiment from `θ(−2δ)` to `horizon`, recording one row per step
/// (including `t = 0`). `on_step` sees every state with its row, so output
/// can be streamed and survives a later blow-up.
pub fn run_twin<F>(
    theta_start: &FourierField,
    stepper: &ImexStepper,
    nudge: &NudgeParams,
    horizon: f64,
    sigma: f64,
    mut on_step: F,
) -> Result<ErrorSeries, AssimilationError>
where
    F: FnMut(&TwinState, &ErrorRow) -> std::io::Result<()>,
{
    let mut state = initialize_twin(theta_start, stepper, nudge)?;
    let steps = (horizon / stepper.dt()).round() as i64;
    let mut series = ErrorSeries::default();
    let row = error_row(&state, sigma);
    on_step(&state, &row)?;
    series.push(row);
    for _ in 0..steps {
        twin_step_in_place(&mut state, stepper, nudge)?;
        let row = error_row(&state, sigma);
        on_step(&state, &row)?;
        series.push(row);
    }
    Ok(series)
}

/// Inputs of the synchronization window check. `c0` and `c0_prime` stand in
/// for the non-constructive constants.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WindowQuery {
    pub kappa: f64,
    pub gamma: f64,
    pub p: f64,
    pub mu: f64,
    pub delta: f64,
    pub h: f64,
    /// Empirical `sup_t ‖θ‖_{L^p}`.
    pub theta_lp: f64,
    pub c0: f64,
    pub c0_prime: f64,
}

/// Dimensionless quantities bracketing `μ`: `A ≤ c₀′B` and `c₀B ≤ C`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WindowReport {
    pub exponent: f64,
    /// `(Θ_{L^p}/κ)^{γ/(γ−1−2/p)}`
    pub a: f64,
    /// `μ/κ`
    pub b: f64,
    /// `h^{−γ}`
    pub c: f64,
    pub mu_h_gamma_over_kappa: f64,
    pub delta_mu: f64,
    pub lower_ok: bool,
    pub upper_ok: bool,
    /// `δκ/h^γ`
    pub delay_indicator: f64,
    /// `δ²κ³h^{−3γ}(2π/h)²`
    pub delay_indicator_sq: f64,
}

#[derive(Debug, Error, PartialEq)]
#[error("H3 violated: γ−1−2/p = {0} must be positive")]
pub struct WindowError(pub f64);

pub fn check_parameter_window(q: &WindowQuery) -> Result<WindowReport, WindowError> {
    let gap = q.gamma - 1.0 - 2.0 / q.p;
    if !(gap > 0.0) {
        return Err(WindowError(gap));
    }
    let exponent = q.gamma / gap;
    let a = (q.theta_lp / q.kappa).powf(exponent);
    let b = q.mu / q.kappa;
    let c = q.h.powf(-q.gamma);
    let hg = q.h.powf(q.gamma);
    Ok(WindowReport {
        exponent,
        a,
        b,
        c,
        mu_h_gamma_over_kappa: q.mu * hg / q.kappa,
        delta_mu: q.delta * q.mu,
        lower_ok: b >= a / q.c0_prime,
        upper_ok: b <= c / q.c0,
        delay_indicator: q.delta * q.kappa / hg,
        delay_indicator_sq: q.delta.powi(2) * q.kappa.powi(3) / hg.powi(3)
            * (2.0 * std::f64::consts::PI / q.h).powi(2),
    })
}

impl WindowReport {
    fn pairs(&self) -> [(&'static str, String); 10] {
        [
            ("exponent", self.exponent.to_string()),
            ("A", self.a.to_string()),
            ("B", self.b.to_string()),
            ("C", self.c.to_string()),
            ("mu_h_gamma_over_kappa", self.mu_h_gamma_over_kappa.to_string()),
            ("delta_mu", self.delta_mu.to_string()),
            ("lower_ok", self.lower_ok.to_string()),
            ("upper_ok", self.upper_ok.to_string()),
            ("delta_kappa_over_h_gamma", self.delay_indicator.to_string()),
            ("delta_sq_indicator", self.delay_indicator_sq.to_string()),
        ]
    }

    /// `key: value` lines.
    pub fn to_text(&self) -> String {
        self.pairs()
            .iter()
            .map(|(k, v)| format!("{k}: {v}\n"))
            .collect()
    }

    /// Header line and one data line.
    pub fn to_csv(&self) -> String {
        let p = self.pairs();
        let head: Vec<&str> = p.iter().map(|(k, _)| *k).collect();
        let vals: Vec<&str> = p.iter().map(|(_, v)| v.as_str()).collect();
        format!("{}\n{}\n", head.join(","), vals.join(","))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::ForcingSpec;
    use crate::spectral::WaveGrid;
    use num_complex::Complex64;

    fn grid() -> WaveGrid {
        WaveGrid::new(32).unwrap()
    }

    fn stepper(g: &WaveGrid, dt: f64) -> ImexStepper {
        let spec = ForcingSpec {
            amplitude: 5.0,
            ..ForcingSpec::default()
        };
        let params = SqgParams::new(1.0, 1.5, spec.build(g, 1.0, 1.5)).unwrap();
        ImexStepper::new(params, dt).unwrap()
    }

    fn mode(g: &WaveGrid) -> FourierField {
        let c = Complex64::new(0.5, 0.0);
        FourierField::from_modes(g, &[((1, 2), c), ((-1, -2), c)]).unwrap()
    }

    fn filled(g: &WaveGrid, op: &InterpolantOperator, dt: f64, d: usize, f: impl Fn(f64) -> f64) -> ObservationBuffer {
        let psi = mode(g);
        let mut buf = ObservationBuffer::new(dt, d);
        for s in -(4 * d as i64)..=0 {
            let t = s as f64 * dt;
            buf.push(s, op.observe(&psi.scaled(f(t))).unwrap()).unwrap();
        }
        buf
    }

    #[test]
    fn window_steps_requires_integer_ratio() {
        assert_eq!(window_steps(0.01, 0.001).unwrap(), 10);
        assert_eq!(window_steps(0.3, 0.1).unwrap(), 3);
        assert!(window_steps(0.0105, 0.001).is_err());
        assert!(window_steps(0.0005, 0.001).is_err());
    }

    #[test]
    fn average_of_constant_and_ramp() {
        let g = grid();
        let op = InterpolantOperator::spectral(4, &g).unwrap();
        let (dt, d) = (0.001, 10);
        let delta = d as f64 * dt;
        let psi = op.apply(&mode(&g)).unwrap();

        let constant = filled(&g, &op, dt, d, |_| 1.0);
        let avg = time_averaged_observe(&constant, &op, 0.0, delta).unwrap();
        assert_eq!(avg.coeffs(), psi.coeffs());

        let ramp = filled(&g, &op, dt, d, |t| t);
        let avg = time_averaged_observe(&ramp, &op, 0.0, delta).unwrap();
        let expect = psi.scaled(-1.5 * delta);
        assert!((&avg - &expect).max_abs_coeff() <= 1e-12);
    }

    #[test]
    fn average_of_sine_matches_closed_form() {
        let g = grid();
        let op = InterpolantOperator::spectral(4, &g).unwrap();
        let omega = 30.0;
        let delta = 0.1;
        let mut errs = Vec::new();
        for d in [20usize, 40] {
            let dt = delta / d as f64;
            let buf = filled(&g, &op, dt, d, |t| (omega * t).sin());
            let avg = time_averaged_observe(&buf, &op, 0.0, delta).unwrap();
            // (1/δ)∫_{−2δ}^{−δ} sin(ωs) ds
            let exact = ((-(2.0 * omega * delta)).cos() - (-(omega * delta)).cos()) / (omega * delta);
            let psi = op.apply(&mode(&g)).unwrap();
            errs.push((&avg - &psi.scaled(exact)).max_abs_coeff() / psi.max_abs_coeff());
        }
        assert!(errs[0] < 1e-2);
        // second order in dt
        assert!(errs[0] / errs[1] > 3.5, "{errs:?}");
    }

    #[test]
    fn buffer_rejects_gaps_and_reports_incomplete_windows() {
        let g = grid();
        let op = InterpolantOperator::spectral(4, &g).unwrap();
        let obs = op.observe(&mode(&g)).unwrap();
        let mut buf = ObservationBuffer::new(0.01, 5);
        buf.push(0, obs.clone()).unwrap();
        assert!(matches!(buf.push(2, obs.clone()), Err(AssimilationError::OutOfOrder { .. })));
        for s in 1..=7 {
            buf.push(s, obs.clone()).unwrap();
        }
        assert!(matches!(buf.delayed_average(7), Err(AssimilationError::IncompleteWindow { .. })));
        buf.push(8, obs.clone()).unwrap();
        assert!(buf.delayed_average(10).is_ok());
        for s in 9..40 {
            buf.push(s, obs.clone()).unwrap();
        }
        assert_eq!(buf.len(), 12);
        assert!(time_averaged_observe(&buf, &op, 0.3905, 0.05).is_err());
    }

    #[test]
    fn delayed_average_never_reads_recent_entries() {
        let g = grid();
        let op = InterpolantOperator::spectral(4, &g).unwrap();
        let (dt, d) = (0.01, 4);
        let good = op.observe(&mode(&g)).unwrap();
        let mut poison = good.clone();
        poison.scale(f64::NAN);
        let mut buf = ObservationBuffer::new(dt, d);
        for s in -8..=0 {
            // anything newer than t − δ is poisoned
            let o = if s > -(d as i64) { poison.clone() } else { good.clone() };
            buf.push(s, o).unwrap();
        }
        let avg = buf.delayed_average(0).unwrap();
        assert!(avg.max_abs().is_finite());
        assert_eq!(avg, good);
    }

    #[test]
    fn centered_average_needs_the_future() {
        let g = grid();
        let op = InterpolantOperator::spectral(4, &g).unwrap();
        let (dt, d) = (0.01, 4);
        let buf = filled(&g, &op, dt, d, |t| t);
        assert!(matches!(buf.centered_average(0), Err(AssimilationError::IncompleteWindow { .. })));
        let past = buf.centered_average(-(d as i64)).unwrap();
        let delayed = buf.delayed_average(0).unwrap();
        assert_ne!(past, delayed);
    }

    #[test]
    fn nudged_rhs_examples() {
        let g = grid();
        let s = stepper(&g, 0.001);
        let params = s.params();
        let op = InterpolantOperator::spectral(4, &g).unwrap();
        let eta = random_field(&g, 1.0, 6.0, 3);
        let a = random_field(&g, 1.0, 4.0, 4);
        let b = random_field(&g, 1.0, 4.0, 5);
        let nudge = NudgeParams::new(7.0, 0.01, op.clone(), InitialGuess::Zero).unwrap();
        let base = sqg_rhs(&eta, params);
        assert_eq!(nudged_rhs(&eta, params, &nudge, &a, &a).coeffs(), base.coeffs());
        let off = NudgeParams { mu: 0.0, ..nudge.clone() };
        assert_eq!(nudged_rhs(&eta, params, &off, &a, &b).coeffs(), base.coeffs());
        let expect = base.axpy(-7.0, &(&a - &b));
        assert!((&nudged_rhs(&eta, params, &nudge, &a, &b) - &expect).max_abs_coeff() <= 1e-12);
        assert!(NudgeParams::new(-1.0, 0.01, op, InitialGuess::Zero).is_err());
    }

    #[test]
    fn initial_guess_variants() {
        let g = grid();
        let s = stepper(&g, 0.001);
        let op = InterpolantOperator::spectral(4, &g).unwrap();
        let theta0 = random_field(&g, 1.0, 6.0, 8).scaled(2.0);

        let exact = NudgeParams::new(1.0, 0.01, op.clone(), InitialGuess::ExactTheta).unwrap();
        let st = initialize_twin(&theta0, &s, &exact).unwrap();
        assert_eq!(st.eta.coeffs(), st.theta.coeffs());
        let pairs: Vec<_> = st.theta_buffer().entries().zip(st.eta_buffer().entries()).collect();
        assert_eq!(pairs.len(), 21);
        assert!(pairs.iter().all(|(x, y)| x == y));
        assert_eq!((st.step(), st.interval()), (0, -1));

        let zero = NudgeParams { g_init: InitialGuess::Zero, ..exact.clone() };
        let st = initialize_twin(&theta0, &s, &zero).unwrap();
        assert_eq!(st.eta.max_abs_coeff(), 0.0);
        assert!(st.eta_buffer().delayed_average(0).unwrap().max_abs() == 0.0);

        let ball = NudgeParams {
            g_init: InitialGuess::RandomBall { seed: 3, norm: 1.0 },
            ..exact
        };
        let st = initialize_twin(&theta0, &s, &ball).unwrap();
        assert!((st.eta.l2_norm() - 1.0).abs() <= 0.1);

        let bad = NudgeParams { delta: 0.0105, ..zero };
        assert!(matches!(
            initialize_twin(&theta0, &s, &bad),
            Err(AssimilationError::DelayNotMultiple { .. })
        ));
    }

    #[test]
    fn exact_initial_guess_stays_synchronized() {
        let g = grid();
        let s = stepper(&g, 0.002);
        let op = InterpolantOperator::spectral(4, &g).unwrap();
        let nudge = NudgeParams::new(10.0, 0.01, op, InitialGuess::ExactTheta).unwrap();
        let mut st = initialize_twin(&random_field(&g, 1.0, 6.0, 2).scaled(3.0), &s, &nudge).unwrap();
        for _ in 0..1000 {
            assert!(st.observation_gap().unwrap().max_abs() <= 1e-13);
            st = twin_step(&st, &s, &nudge).unwrap();
            assert!(st.error().l2_norm() <= 1e-10 * st.theta.l2_norm());
        }
        assert_eq!(st.interval(), 199);
    }

    #[test]
    fn interval_index_convention() {
        let g = grid();
        let s = stepper(&g, 0.01);
        let op = InterpolantOperator::spectral(4, &g).unwrap();
        let nudge = NudgeParams::new(1.0, 0.03, op, InitialGuess::Zero).unwrap();
        let mut st = initialize_twin(&mode(&g), &s, &nudge).unwrap();
        let mut ks = vec![st.interval()];
        for _ in 0..7 {
            st = twin_step(&st, &s, &nudge).unwrap();
            ks.push(st.interval());
        }
        // t = 0, 0.01, …, 0.07 with δ = 0.03
        assert_eq!(ks, vec![-1, 0, 0, 0, 1, 1, 1, 2]);
    }

    #[test]
    fn uncontrolled_twin_does_not_converge() {
        let g = grid();
        let s = stepper(&g, 0.002);
        let op = InterpolantOperator::spectral(4, &g).unwrap();
        let free = NudgeParams::new(0.0, 0.01, op, InitialGuess::Zero).unwrap();
        let nudged = NudgeParams { mu: 20.0, ..free.clone() };
        let theta0 = random_field(&g, 1.0, 6.0, 2).scaled(3.0);
        let a = run_twin(&theta0, &s, &free, 0.5, 0.8, |_, _| Ok(())).unwrap();
        let b = run_twin(&theta0, &s, &nudged, 0.5, 0.8, |_, _| Ok(())).unwrap();
        assert_eq!(a.len(), 251);
        // only dissipation acts on the free error: it stays a sizeable
        // fraction of the reference
        let (first, last) = (a.rows[0], *a.last().unwrap());
        assert!(last.err_l2 > 0.2 * first.err_l2, "{last:?}");
        assert!(last.err_l2 > 0.2 * last.theta_l2, "{last:?}");
        assert!(b.last().unwrap().err_l2 < 0.1 * last.err_l2);
    }

    #[test]
    fn frozen_feedback_matches_constant_forcing() {
        let g = grid();
        let dt = 0.001;
        let s = stepper(&g, dt);
        let op = InterpolantOperator::spectral(4, &g).unwrap();
        let nudge = NudgeParams::new(3.0, 0.01, op.clone(), InitialGuess::Zero).unwrap();
        let theta0 = random_field(&g, 1.0, 6.0, 6);
        let st = initialize_twin(&theta0, &s, &nudge).unwrap();
        let gap = st.observation_gap().unwrap();
        let extra = op.reconstruct(&gap).scaled(-3.0);
        let next = twin_step(&st, &s, &nudge).unwrap();
        assert_eq!(next.eta.coeffs(), s.advance(&st.eta, Some(&extra)).coeffs());
        assert_eq!(next.theta.coeffs(), s.advance(&st.theta, None).coeffs());
    }

    #[test]
    fn mean_value_decomposition() {
        // φ − J^δφ = (φ − Jφ) + (1/δ)∫_{t−2δ}^{t−δ} ∫_s^t J∂_τφ dτ ds
        let g = grid();
        let dt = 0.001;
        let s = stepper(&g, dt);
        let op = InterpolantOperator::spectral(4, &g).unwrap();
        let d = 20usize;
        let delta = d as f64 * dt;
        let mut traj = vec![random_field(&g, 1.0, 6.0, 12).scaled(2.0)];
        for _ in 0..2 * d {
            let next = s.advance(traj.last().unwrap(), None);
            traj.push(next);
        }
        let mut buf = ObservationBuffer::new(dt, d);
        for (i, th) in traj.iter().enumerate() {
            buf.push(i as i64 - 2 * d as i64, op.observe(th).unwrap()).unwrap();
        }
        let phi = traj.last().unwrap();
        let direct = phi - &time_averaged_observe(&buf, &op, 0.0, delta).unwrap();

        let j: Vec<FourierField> = traj.iter().map(|f| op.apply(f).unwrap()).collect();
        let m = j.len();
        let dj: Vec<FourierField> = (0..m)
            .map(|i| {
                let (lo, hi) = (i.saturating_sub(1), (i + 1).min(m - 1));
                (&j[hi] - &j[lo]).scaled(1.0 / ((hi - lo) as f64 * dt))
            })
            .collect();
        // inner(s) = ∫_s^t J∂_τφ dτ by trapezoid, accumulated backwards
        let mut inner = vec![FourierField::zeros(&g); m];
        for i in (0..m - 1).rev() {
            inner[i] = inner[i + 1].axpy(0.5 * dt, &(&dj[i] + &dj[i + 1]));
        }
        let mut outer = FourierField::zeros(&g);
        for (i, v) in inner.iter().enumerate().take(d + 1) {
            let w = if i == 0 || i == d { 0.5 } else { 1.0 };
            outer = outer.axpy(w * dt / delta, v);
        }
        let decomposed = &(phi - &j[m - 1]) + &outer;
        let rel = (&direct - &decomposed).l2_norm() / direct.l2_norm();
        assert!(rel < 10.0 * dt, "relative mismatch {rel}");
    }

    #[test]
    fn runs_are_deterministic() {
        let g = grid();
        let s = stepper(&g, 0.002);
        let op = InterpolantOperator::spectral(4, &g).unwrap();
        let nudge = NudgeParams::new(5.0, 0.01, op, InitialGuess::RandomBall { seed: 4, norm: 1.0 }).unwrap();
        let theta0 = random_field(&g, 1.0, 6.0, 2);
        let run = || {
            let series = run_twin(&theta0, &s, &nudge, 0.5, 0.8, |_, _| Ok(())).unwrap();
            let mut out = Vec::new();
            series.write_csv(&mut out).unwrap();
            out
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn window_report_arithmetic() {
        let q = WindowQuery {
            kappa: 1.0,
            gamma: 1.5,
            p: 8.0,
            mu: 10.0,
            delta: 0.01,
            h: 1.0 / 16.0,
            theta_lp: 2.0,
            c0: 1.0,
            c0_prime: 1.0,
        };
        let r = check_parameter_window(&q).unwrap();
        assert!((r.exponent - 6.0).abs() < 1e-12);
        assert!((r.a - 64.0).abs() < 1e-9);
        assert!((r.c - 64.0).abs() < 1e-9);
        assert!((r.mu_h_gamma_over_kappa - 10.0 / 64.0).abs() < 1e-12);
        assert!(!r.lower_ok && r.upper_ok);
        let off = check_parameter_window(&WindowQuery { mu: 0.0, ..q }).unwrap();
        assert!(!off.lower_ok);
        assert!(check_parameter_window(&WindowQuery { p: 4.0, ..q }).is_err());
        assert!(r.to_text().contains("exponent: 6\n"));
        assert_eq!(r.to_csv().lines().count(), 2);
    }
}
