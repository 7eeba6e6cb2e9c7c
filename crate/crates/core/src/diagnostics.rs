//! Error series, exponential decay fits, the discrete non-local Gronwall
//! checker and the functional-inequality suite.

use std::fmt::Write as _;
use std::io::{Read, Write};
use std::sync::Arc;

use thiserror::Error;

use crate::observers::{approx_identity_error, InterpolantOperator, PartitionOfUnity};
use crate::spectral::{random_field, FourierField, WaveGrid};

#[derive(Debug, Error)]
pub enum DiagnosticsError {
    #[error("only {found} samples above the floor in the fit window (need {needed})")]
    InsufficientDecayWindow { found: usize, needed: usize },
    #[error("malformed series: {0}")]
    Malformed(String),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub const SERIES_HEADER: [&str; 7] = [
    "t",
    "k",
    "err_l2",
    "err_hsigma",
    "err_hneg_half",
    "theta_l2",
    "eta_l2",
];

/// One recorded instant of a twin experiment; `err_*` are norms of `η − θ`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ErrorRow {
    pub t: f64,
    pub k: i64,
    pub err_l2: f64,
    pub err_hsigma: f64,
    pub err_hneg_half: f64,
    pub theta_l2: f64,
    pub eta_l2: f64,
}

impl ErrorRow {
    pub fn record(&self) -> [String; 7] {
        [
            self.t.to_string(),
            self.k.to_string(),
            self.err_l2.to_string(),
            self.err_hsigma.to_string(),
            self.err_hneg_half.to_string(),
            self.theta_l2.to_string(),
            self.eta_l2.to_string(),
        ]
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ErrorSeries {
    pub rows: Vec<ErrorRow>,
}

impl ErrorSeries {
    pub fn push(&mut self, row: ErrorRow) {
        self.rows.push(row);
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn last(&self) -> Option<&ErrorRow> {
        self.rows.last()
    }

    /// Strictly increasing times and finite non-negative norms.
    pub fn validate(&self) -> Result<(), DiagnosticsError> {
        for (i, r) in self.rows.iter().enumerate() {
            let norms = [r.err_l2, r.err_hsigma, r.err_hneg_half, r.theta_l2, r.eta_l2];
            if norms.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
                return Err(DiagnosticsError::Malformed(format!("row {i}: bad norm")));
            }
            if i > 0 && !(r.t > self.rows[i - 1].t) {
                return Err(DiagnosticsError::Malformed(format!("row {i}: time not increasing")));
            }
        }
        Ok(())
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<(), DiagnosticsError> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(SERIES_HEADER)?;
        for r in &self.rows {
            out.write_record(r.record())?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(r: R) -> Result<Self, DiagnosticsError> {
        let mut rdr = csv::Reader::from_reader(r);
        if rdr.headers()?.iter().ne(SERIES_HEADER) {
            return Err(DiagnosticsError::Malformed("unexpected header".into()));
        }
        let mut series = Self::default();
        for rec in rdr.records() {
            let rec = rec?;
            let f = |i: usize| -> Result<f64, DiagnosticsError> {
                rec[i]
                    .parse()
                    .map_err(|_| DiagnosticsError::Malformed(format!("bad number {:?}", &rec[i])))
            };
            let k = rec[1]
                .parse()
                .map_err(|_| DiagnosticsError::Malformed(format!("bad index {:?}", &rec[1])))?;
            series.push(ErrorRow {
                t: f(0)?,
                k,
                err_l2: f(2)?,
                err_hsigma: f(3)?,
                err_hneg_half: f(4)?,
                theta_l2: f(5)?,
                eta_l2: f(6)?,
            });
        }
        Ok(series)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DecayFit {
    pub lambda: f64,
    pub r_squared: f64,
    pub samples: usize,
}

pub const MIN_FIT_SAMPLES: usize = 20;

/// Least-squares fit of `log err_l2 ≈ c − λt` over `t ∈ [t_start, t_end]`
/// using only samples with `err_l2 > floor`.
pub fn fit_decay_rate(
    series: &ErrorSeries,
    t_start: f64,
    t_end: f64,
    floor: f64,
) -> Result<DecayFit, DiagnosticsError> {
    let pts: Vec<(f64, f64)> = series
        .rows
        .iter()
        .filter(|r| r.t >= t_start && r.t <= t_end && r.err_l2 > floor)
        .map(|r| (r.t, r.err_l2.ln()))
        .collect();
    if pts.len() < MIN_FIT_SAMPLES {
        return Err(DiagnosticsError::InsufficientDecayWindow {
            found: pts.len(),
            needed: MIN_FIT_SAMPLES,
        });
    }
    let n = pts.len() as f64;
    let mt = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let (mut stt, mut sty, mut syy) = (0.0, 0.0, 0.0);
    for &(t, y) in &pts {
        stt += (t - mt) * (t - mt);
        sty += (t - mt) * (y - my);
        syy += (y - my) * (y - my);
    }
    let slope = sty / stt;
    let sse: f64 = pts
        .iter()
        .map(|&(t, y)| {
            let e = y - (my + slope * (t - mt));
            e * e
        })
        .sum();
    // a flat series leaves only roundoff in the slope
    let flat = syy <= f64::EPSILON * n * my.abs().max(1.0);
    Ok(DecayFit {
        lambda: if flat || slope == 0.0 { 0.0 } else { -slope },
        r_squared: if flat { 1.0 } else { 1.0 - sse / syy },
        samples: pts.len(),
    })
}

/// Sampled data for the non-local Gronwall lemma on `[t0, t0 + (len−1)·dt]`.
#[derive(Clone, Debug, PartialEq)]
pub struct GronwallInstance {
    pub t0: f64,
    pub dt: f64,
    pub phi: Vec<f64>,
    pub psi: Vec<f64>,
    pub forcing: Vec<f64>,
    pub a: f64,
    pub b: f64,
    pub big_a: f64,
    pub big_b: f64,
    pub delta: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GronwallReport {
    /// `Φ′ + aΦ + bΨ ≤ F + Aδ∫Φ + Bδ∫Ψ` at every sample (within tolerance).
    pub hypothesis: bool,
    /// `δ(e^{aδ/2} − 1) ≤ (a/4)·min(a/A, b/B)`.
    pub condition: bool,
    /// `Φ(t) + (b/2)∫e^{−a(t−s)/2}Ψ ≤ e^{−a(t−t0)/2}Φ(t0) + ∫e^{−a(t−s)/2}F` at every sample.
    pub conclusion: bool,
    pub worst_hypothesis_margin: f64,
    pub worst_conclusion_margin: f64,
    pub scale: f64,
    /// First sample where the conclusion fails although hypothesis and condition hold.
    pub counterexample: Option<usize>,
}

pub const GRONWALL_TOLERANCE: f64 = 1e-6;

/// Smallness condition of the non-local Gronwall lemma (`x/0 = ∞`).
pub fn gronwall_condition(a: f64, b: f64, big_a: f64, big_b: f64, delta: f64) -> bool {
    let ratio = |x: f64, y: f64| if y == 0.0 { f64::INFINITY } else { x / y };
    let bound = 0.25 * a * ratio(a, big_a).min(ratio(b, big_b));
    delta * ((0.5 * a * delta).exp() - 1.0) <= bound
}

/// Second-order finite-difference derivative (central inside, one-sided ends).
fn derivative(v: &[f64], dt: f64) -> Vec<f64> {
    let n = v.len();
    (0..n)
        .map(|i| {
            if i == 0 {
                (-3.0 * v[0] + 4.0 * v[1] - v[2]) / (2.0 * dt)
            } else if i == n - 1 {
                (3.0 * v[n - 1] - 4.0 * v[n - 2] + v[n - 3]) / (2.0 * dt)
            } else {
                (v[i + 1] - v[i - 1]) / (2.0 * dt)
            }
        })
        .collect()
}

/// Running `∫_{t0}^{t_j} v` by the trapezoid rule.
fn cumulative(v: &[f64], dt: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(v.len());
    let mut acc = 0.0;
    out.push(0.0);
    for w in v.windows(2) {
        acc += 0.5 * dt * (w[0] + w[1]);
        out.push(acc);
    }
    out
}

/// Running `∫_{t0}^{t_j} e^{−r(t_j−s)} v(s) ds` by the trapezoid rule.
fn discounted(v: &[f64], dt: f64, r: f64) -> Vec<f64> {
    let q = (-r * dt).exp();
    let mut out = Vec::with_capacity(v.len());
    let mut acc = 0.0;
    out.push(0.0);
    for w in v.windows(2) {
        acc = q * acc + 0.5 * dt * (q * w[0] + w[1]);
        out.push(acc);
    }
    out
}

/// Discrete verification of hypothesis, condition and conclusion.
///
/// # Panics
/// If fewer than 100 samples are supplied or the sequences differ in length.
pub fn gronwall_check(inst: &GronwallInstance) -> GronwallReport {
    let n = inst.phi.len();
    assert!(n >= 100, "need at least 100 samples, got {n}");
    assert!(inst.psi.len() == n && inst.forcing.len() == n);
    let dt = inst.dt;
    let dphi = derivative(&inst.phi, dt);
    let int_phi = cumulative(&inst.phi, dt);
    let int_psi = cumulative(&inst.psi, dt);
    let w_psi = discounted(&inst.psi, dt, 0.5 * inst.a);
    let w_f = discounted(&inst.forcing, dt, 0.5 * inst.a);

    let mut scale: f64 = 1.0;
    for i in 0..n {
        for v in [
            dphi[i],
            inst.a * inst.phi[i],
            inst.b * inst.psi[i],
            inst.forcing[i],
            inst.big_a * inst.delta * int_phi[i],
            inst.big_b * inst.delta * int_psi[i],
            inst.b * w_psi[i],
            w_f[i],
        ] {
            scale = scale.max(v.abs());
        }
    }
    let tol = GRONWALL_TOLERANCE * scale;

    let mut worst_h = f64::INFINITY;
    let mut worst_c = f64::INFINITY;
    let mut first_fail = None;
    for i in 0..n {
        let lhs = dphi[i] + inst.a * inst.phi[i] + inst.b * inst.psi[i];
        let rhs = inst.forcing[i]
            + inst.big_a * inst.delta * int_phi[i]
            + inst.big_b * inst.delta * int_psi[i];
        worst_h = worst_h.min(rhs - lhs);

        let t = i as f64 * dt;
        let left = inst.phi[i] + 0.5 * inst.b * w_psi[i];
        let right = (-0.5 * inst.a * t).exp() * inst.phi[0] + w_f[i];
        let m = right - left;
        worst_c = worst_c.min(m);
        if m < -tol && first_fail.is_none() {
            first_fail = Some(i);
        }
    }
    let hypothesis = worst_h >= -tol;
    let condition = gronwall_condition(inst.a, inst.b, inst.big_a, inst.big_b, inst.delta);
    let conclusion = worst_c >= -tol;
    GronwallReport {
        hypothesis,
        condition,
        conclusion,
        worst_hypothesis_margin: worst_h,
        worst_conclusion_margin: worst_c,
        scale,
        counterexample: if hypothesis && condition { first_fail } else { None },
    }
}

/// Instance from integrating the hypothesis with equality, taking `Ψ = Φ`
/// and `F(t) = f0·(1 + sin t)`, by classical RK4 with step `dt` over `[0, δ]`.
pub fn gronwall_ode_instance(
    a: f64,
    b: f64,
    big_a: f64,
    big_b: f64,
    delta: f64,
    phi0: f64,
    f0: f64,
    dt: f64,
) -> GronwallInstance {
    let steps = (delta / dt).round() as usize;
    let forcing = |t: f64| f0 * (1.0 + t.sin());
    // state: (Φ, ∫Φ); Ψ = Φ so ∫Ψ = ∫Φ
    let rhs = |t: f64, y: [f64; 2]| -> [f64; 2] {
        [
            -(a + b) * y[0] + forcing(t) + (big_a + big_b) * delta * y[1],
            y[0],
        ]
    };
    let mut y = [phi0, 0.0];
    let mut phi = Vec::with_capacity(steps + 1);
    let mut f = Vec::with_capacity(steps + 1);
    phi.push(y[0]);
    f.push(forcing(0.0));
    for i in 0..steps {
        let t = i as f64 * dt;
        let k1 = rhs(t, y);
        let k2 = rhs(t + dt / 2.0, [y[0] + dt / 2.0 * k1[0], y[1] + dt / 2.0 * k1[1]]);
        let k3 = rhs(t + dt / 2.0, [y[0] + dt / 2.0 * k2[0], y[1] + dt / 2.0 * k2[1]]);
        let k4 = rhs(t + dt, [y[0] + dt * k3[0], y[1] + dt * k3[1]]);
        for j in 0..2 {
            y[j] += dt / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
        }
        phi.push(y[0]);
        f.push(forcing(t + dt));
    }
    GronwallInstance {
        t0: 0.0,
        dt,
        psi: phi.clone(),
        phi,
        forcing: f,
        a,
        b,
        big_a,
        big_b,
        delta,
    }
}

/// Pass count and worst margin (bound minus value) of one property check.
#[derive(Clone, Debug, PartialEq)]
pub struct CheckSummary {
    pub name: String,
    pub passed: usize,
    pub failed: usize,
    pub worst_margin: f64,
    pub tolerance: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct SuiteReport {
    pub checks: Vec<CheckSummary>,
}

impl SuiteReport {
    fn record(&mut self, name: &str, margin: f64, tolerance: f64) {
        let idx = match self.checks.iter().position(|c| c.name == name) {
            Some(i) => i,
            None => {
                self.checks.push(CheckSummary {
                    name: name.to_string(),
                    passed: 0,
                    failed: 0,
                    worst_margin: f64::INFINITY,
                    tolerance,
                });
                self.checks.len() - 1
            }
        };
        let c = &mut self.checks[idx];
        if margin >= -tolerance {
            c.passed += 1;
        } else {
            c.failed += 1;
        }
        c.worst_margin = c.worst_margin.min(margin);
    }

    pub fn check(&self, name: &str) -> Option<&CheckSummary> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn failures(&self) -> usize {
        self.checks.iter().map(|c| c.failed).sum()
    }

    pub fn all_passed(&self) -> bool {
        self.failures() == 0
    }

    /// `key: value` lines.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "checks: {}", self.checks.len());
        let _ = writeln!(s, "failures: {}", self.failures());
        for c in &self.checks {
            let _ = writeln!(
                s,
                "{}: passed={} failed={} worst_margin={:e} tolerance={:e}",
                c.name, c.passed, c.failed, c.worst_margin, c.tolerance
            );
        }
        s
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<(), DiagnosticsError> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["check", "passed", "failed", "worst_margin", "tolerance"])?;
        for c in &self.checks {
            out.write_record([
                c.name.clone(),
                c.passed.to_string(),
                c.failed.to_string(),
                c.worst_margin.to_string(),
                c.tolerance.to_string(),
            ])?;
        }
        out.flush()?;
        Ok(())
    }
}

const SUITE_GRID: usize = 64;

/// Seeded random fields for the suite: band `1 ≤ |k| ≤ n/8`, with L² norms
/// spread over two decades.
pub fn suite_fields(grid: &WaveGrid, seed: u64, count: usize) -> Vec<FourierField> {
    let kmax = (grid.n() / 8) as f64;
    (0..count as u64)
        .map(|i| {
            let amp = 10f64.powf((i % 5) as f64 / 2.0 - 1.0);
            random_field(grid, 1.0, kmax, seed.wrapping_mul(1_000_003).wrapping_add(i)).scaled(amp)
        })
        .collect()
}

/// Runs every property check over `n_fields` seeded random fields.
pub fn inequality_suite(seed: u64, n_fields: usize) -> SuiteReport {
    let grid = WaveGrid::new(SUITE_GRID).expect("valid suite grid");
    inequality_suite_on(&suite_fields(&grid, seed, n_fields))
}

/// `∫|φ|^{p−2}φ·Λ^γφ − (2/p)‖Λ^{γ/2}(φ^{p/2})‖²` for even `p`, evaluated on a
/// grid refined twice so the products are resolved.
pub fn positivity_margin(phi: &FourierField, p: u32, gamma: f64) -> f64 {
    assert!(p >= 2 && p % 2 == 0, "positivity margin needs even p");
    let fine = WaveGrid::new(2 * phi.grid().n()).expect("refined grid");
    let f = phi.resample(&fine);
    let phys = f.to_physical();
    let lap = f.fractional_laplacian(gamma).to_physical();
    let lhs = phys
        .zip_with(&lap, |a, b| a.powi(p as i32 - 1) * b)
        .integral();
    let power = phys.map(|v| v.powi(p as i32 / 2)).to_spectral();
    let rhs = 2.0 / p as f64 * power.sobolev_norm(gamma / 2.0).powi(2);
    lhs - rhs
}

/// [`inequality_suite`] over caller-supplied fields.
pub fn inequality_suite_on(fields: &[FourierField]) -> SuiteReport {
    let mut report = SuiteReport::default();
    let Some(first) = fields.first() else {
        return report;
    };
    let grid = first.grid().clone();
    let spectral_ops: Vec<InterpolantOperator> = [0.25, 1.0 / 6.0]
        .iter()
        .map(|&h| InterpolantOperator::spectral_for_h(h, &grid).expect("valid cutoff"))
        .collect();
    let volume_ops: Vec<InterpolantOperator> = [8, 16]
        .iter()
        .map(|&m| {
            let pou = PartitionOfUnity::with_squares(m, &grid).expect("aligned partition");
            InterpolantOperator::volume_elements(Arc::new(pou))
        })
        .collect();
    let shifted = InterpolantOperator::shifted_volume_elements(Arc::new(
        PartitionOfUnity::with_squares(8, &grid).expect("aligned partition"),
    ));

    for phi in fields {
        let l2 = phi.l2_norm();
        let scale = l2.max(f64::MIN_POSITIVE);

        // Plancherel
        let quad = phi.to_physical().lp_norm(2.0);
        report.record("plancherel", 1e-10 * l2 - (quad - l2).abs(), 0.0);

        // Poincaré with constant one
        let exps = [-1.0, -0.5, 0.0, 0.5, 0.75, 1.0, 1.5];
        for (i, &lo) in exps.iter().enumerate() {
            for &hi in &exps[i..] {
                let (a, b) = (phi.sobolev_norm(lo), phi.sobolev_norm(hi));
                report.record("poincare", b - a, 1e-14 * b);
            }
        }

        // semigroup property of Λ^s
        for (a, b) in [(0.5, 1.0), (1.5, -0.75), (-1.0, 2.0)] {
            let lhs = phi.fractional_laplacian(a).fractional_laplacian(b);
            let rhs = phi.fractional_laplacian(a + b);
            let m = rhs.max_abs_coeff().max(f64::MIN_POSITIVE);
            report.record("laplacian_semigroup", -(&lhs - &rhs).max_abs_coeff() / m, 1e-12);
        }

        // divergence-free velocity
        let (u1, u2) = phi.riesz_perp();
        let div = &u1.gradient().0 + &u2.gradient().1;
        report.record("riesz_divergence", -div.l2_norm(), 1e-12 * scale);
        let speed = (u1.l2_norm().powi(2) + u2.l2_norm().powi(2)).sqrt();
        report.record("riesz_isometry", -(speed - l2).abs(), 1e-12 * scale);

        // Gagliardo–Nirenberg, Plancherel form
        let h0 = phi.sobolev_norm(0.0);
        for (alpha, beta) in [(0.25, 1.0), (0.5, 1.0), (0.75, 1.5), (1.0, 2.0), (0.5, 0.5)] {
            let lhs = phi.sobolev_norm(alpha);
            let rhs = phi.sobolev_norm(beta).powf(alpha / beta) * h0.powf(1.0 - alpha / beta);
            report.record("gagliardo_nirenberg", rhs - lhs, 1e-12 * rhs);
        }

        // fractional positivity
        for gamma in [1.2, 1.5, 2.0] {
            let m2 = positivity_margin(phi, 2, gamma);
            let e = phi.sobolev_norm(gamma / 2.0).powi(2);
            report.record("positivity_p2_equality", -m2.abs(), 1e-10 * e.max(1.0));
            report.record("positivity_p4", positivity_margin(phi, 4, gamma), 1e-8);
        }

        // observation operators
        for op in &spectral_ops {
            let out = op.apply(phi).expect("same grid");
            report.record("spectral_l2_stability", l2 - out.l2_norm(), 1e-12 * scale);
            let twice = op.apply(&out).expect("same grid");
            report.record("spectral_idempotent", -(&twice - &out).max_abs_coeff(), 0.0);
            for beta in [0.5, 1.0] {
                let ratio = match approx_identity_error(op, phi, beta) {
                    Ok((_, r)) => r,
                    Err(_) => 0.0,
                };
                report.record("spectral_approx_identity", 1.0 - ratio, 1e-10);
            }
        }
        for op in &volume_ops {
            let out = op.apply(phi).expect("same grid");
            report.record("volume_l2_stability", 3.0 * l2 - out.l2_norm(), 0.0);
        }
        report.record(
            "shifted_volume_mean",
            -shifted.apply_physical(&phi.to_physical()).mean().abs(),
            1e-13 * scale,
        );
    }

    // linearity over consecutive pairs
    for pair in fields.windows(2) {
        let ops = spectral_ops.iter().chain(&volume_ops).chain(std::iter::once(&shifted));
        for op in ops {
            let (x, y) = (&pair[0], &pair[1]);
            let lhs = op.apply(&x.scaled(2.0).axpy(-0.5, y)).expect("same grid");
            let rhs = op
                .apply(x)
                .expect("same grid")
                .scaled(2.0)
                .axpy(-0.5, &op.apply(y).expect("same grid"));
            let s = x.l2_norm().max(y.l2_norm()).max(f64::MIN_POSITIVE);
            report.record("observer_linearity", -(&lhs - &rhs).l2_norm() / s, 1e-12);
        }
    }
    report
}
