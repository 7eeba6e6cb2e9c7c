//! Plain `key = value` experiment configuration with hypothesis checks.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::Path;
use std::sync::Arc;

use thiserror::Error;

use crate::assimilation::{window_steps, InitialGuess, NudgeParams};
use crate::dynamics::{ForcingShape, ForcingSpec, ImexStepper, NormMonitor, SqgParams};
use crate::observers::{spectral_cutoff, InterpolantOperator, PartitionOfUnity};
use crate::spectral::WaveGrid;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("invalid configuration:\n  {}", .0.join("\n  "))]
    Invalid(Vec<String>),
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OperatorKind {
    Spectral,
    Volume,
    ShiftedVolume,
}

impl OperatorKind {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Spectral => "spectral",
            Self::Volume => "volume",
            Self::ShiftedVolume => "shifted-volume",
        }
    }
}

/// Full description of a run; every field has a default.
#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub n: usize,
    pub kappa: f64,
    pub gamma: f64,
    pub sigma: f64,
    pub p: f64,
    pub mu: f64,
    pub delta: f64,
    pub h: f64,
    pub dt: f64,
    pub spinup_t: f64,
    pub horizon_t: f64,
    pub operator: OperatorKind,
    pub forcing: ForcingSpec,
    /// Seed and L² norm of the state the spin-up starts from.
    pub init_seed: u64,
    pub init_norm: f64,
    pub g_init: InitialGuess,
    /// Fit floor relative to the initial error.
    pub floor_rel: f64,
    pub c0: f64,
    pub c0_prime: f64,
    /// Write snapshots every this many steps; 0 disables them.
    pub snapshot_every: u64,
    pub name: String,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            n: 128,
            kappa: 1.0,
            gamma: 1.5,
            sigma: 0.8,
            p: 8.0,
            mu: 10.0,
            delta: 0.01,
            h: 1.0 / 16.0,
            dt: 0.001,
            spinup_t: 50.0,
            horizon_t: 30.0,
            operator: OperatorKind::Spectral,
            forcing: ForcingSpec::default(),
            init_seed: 1,
            init_norm: 1.0,
            g_init: InitialGuess::Zero,
            floor_rel: 1e-9,
            c0: 1.0,
            c0_prime: 1.0,
            snapshot_every: 0,
            name: "run".into(),
        }
    }
}

fn parse_num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T, String> {
    v.parse().map_err(|_| format!("{key}: cannot parse {v:?}"))
}

/// Accepts plain numbers and `pi/<m>` / `2pi/<m>` for side lengths.
fn parse_length(key: &str, v: &str) -> Result<f64, String> {
    let lower = v.replace(' ', "").to_ascii_lowercase();
    for (prefix, factor) in [("2pi/", 2.0 * PI), ("pi/", PI)] {
        if let Some(rest) = lower.strip_prefix(prefix) {
            let m: f64 = parse_num(key, rest)?;
            return Ok(factor / m);
        }
    }
    parse_num(key, v)
}

impl ExperimentConfig {
    /// Sets one key; unknown keys are errors.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), String> {
        let v = value.trim();
        match key {
            "n" => self.n = parse_num(key, v)?,
            "kappa" => self.kappa = parse_num(key, v)?,
            "gamma" => self.gamma = parse_num(key, v)?,
            "sigma" => self.sigma = parse_num(key, v)?,
            "p" => self.p = if v == "inf" { f64::INFINITY } else { parse_num(key, v)? },
            "mu" => self.mu = parse_num(key, v)?,
            "delta" => self.delta = parse_num(key, v)?,
            "h" => self.h = parse_length(key, v)?,
            "cutoff" => {
                let k: usize = parse_num(key, v)?;
                self.h = 1.0 / k as f64;
            }
            "squares" => {
                let m: usize = parse_num(key, v)?;
                self.h = 2.0 * PI / m as f64;
            }
            "dt" => self.dt = parse_num(key, v)?,
            "spinup_t" => self.spinup_t = parse_num(key, v)?,
            "horizon_t" => self.horizon_t = parse_num(key, v)?,
            "operator" => {
                self.operator = match v {
                    "spectral" => OperatorKind::Spectral,
                    "volume" => OperatorKind::Volume,
                    "shifted-volume" => OperatorKind::ShiftedVolume,
                    _ => return Err(format!("operator: unknown variant {v:?}")),
                }
            }
            "forcing_shape" => {
                self.forcing.shape = match v {
                    "band" => ForcingShape::Band,
                    "shear" => ForcingShape::Shear {
                        wavenumber: match self.forcing.shape {
                            ForcingShape::Shear { wavenumber } => wavenumber,
                            ForcingShape::Band => 4,
                        },
                    },
                    _ => return Err(format!("forcing_shape: unknown shape {v:?}")),
                }
            }
            "forcing_wavenumber" => {
                self.forcing.shape = ForcingShape::Shear {
                    wavenumber: parse_num(key, v)?,
                }
            }
            "forcing_kmin" => self.forcing.kmin = parse_num(key, v)?,
            "forcing_kmax" => self.forcing.kmax = parse_num(key, v)?,
            "forcing_amplitude" => self.forcing.amplitude = parse_num(key, v)?,
            "forcing_seed" => self.forcing.seed = parse_num(key, v)?,
            "init_seed" => self.init_seed = parse_num(key, v)?,
            "init_norm" => self.init_norm = parse_num(key, v)?,
            "g_init" => {
                self.g_init = match v {
                    "zero" => InitialGuess::Zero,
                    "exact" => InitialGuess::ExactTheta,
                    "random" => InitialGuess::RandomBall { seed: 1, norm: 1.0 },
                    _ => return Err(format!("g_init: unknown variant {v:?}")),
                }
            }
            "g_seed" | "g_norm" => {
                let (mut seed, mut norm) = match self.g_init {
                    InitialGuess::RandomBall { seed, norm } => (seed, norm),
                    _ => (1, 1.0),
                };
                if key == "g_seed" {
                    seed = parse_num(key, v)?;
                } else {
                    norm = parse_num(key, v)?;
                }
                self.g_init = InitialGuess::RandomBall { seed, norm };
            }
            "floor_rel" => self.floor_rel = parse_num(key, v)?,
            "c0" => self.c0 = parse_num(key, v)?,
            "c0_prime" => self.c0_prime = parse_num(key, v)?,
            "snapshot_every" => {
                self.snapshot_every = if v == "off" { 0 } else { parse_num(key, v)? }
            }
            "name" => self.name = v.to_string(),
            _ => return Err(format!("unknown key {key:?}")),
        }
        Ok(())
    }

    /// Parses `key = value` lines (`#` starts a comment) over the defaults,
    /// then validates.
    pub fn parse_str(text: &str) -> Result<Self, ConfigError> {
        let mut cfg = Self::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                return Err(ConfigError::Parse {
                    line: i + 1,
                    message: format!("expected key = value, found {line:?}"),
                });
            };
            cfg.set(k.trim(), v)
                .map_err(|message| ConfigError::Parse { line: i + 1, message })?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Every violated hypothesis or consistency rule, tagged.
    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        let (g, s, p) = (self.gamma, self.sigma, self.p);
        if !(g > 1.0 && g <= 2.0) {
            out.push(format!("H1 violated: γ={g} not in (1, 2)"));
        }
        if !(s > 2.0 - g && s <= g) {
            out.push(format!("H2 violated: σ={s} not in (2−γ, γ] = ({}, {g}]", 2.0 - g));
        }
        let two_over_p = 2.0 / p;
        if !(two_over_p > 1.0 - s && two_over_p < g - 1.0) {
            out.push(format!(
                "H3 violated: 2/p={two_over_p} not in (1−σ, γ−1) = ({}, {})",
                1.0 - s,
                g - 1.0
            ));
        }
        let f = &self.forcing;
        let dealias = (self.n / 3) as f64;
        match f.shape {
            ForcingShape::Band => {
                if !(f.kmin >= 1.0 && f.kmax >= f.kmin && f.kmax <= dealias) {
                    out.push(format!(
                        "H4 violated: forcing band [{}, {}] must lie in [1, {dealias}]",
                        f.kmin, f.kmax
                    ));
                }
            }
            ForcingShape::Shear { wavenumber } => {
                if !(wavenumber >= 1 && wavenumber as f64 <= dealias) {
                    out.push(format!(
                        "H4 violated: shear wavenumber {wavenumber} must lie in [1, {dealias}]"
                    ));
                }
            }
        }
        if !(f.amplitude >= 0.0 && f.amplitude.is_finite()) {
            out.push(format!("H4 violated: forcing amplitude {} must be finite and ≥ 0", f.amplitude));
        }
        if !(self.h > 0.0 && self.h < PI / 4.0) {
            out.push(format!("H7 violated: h={} not in (0, π/4)", self.h));
        }
        if !(self.n >= 8 && self.n.is_power_of_two()) {
            out.push(format!("grid violated: n={} must be a power of two ≥ 8", self.n));
        }
        if !(self.kappa > 0.0 && self.kappa.is_finite()) {
            out.push(format!("model violated: κ={} must be positive", self.kappa));
        }
        if !(self.mu >= 0.0 && self.mu.is_finite()) {
            out.push(format!("nudging violated: μ={} must be finite and ≥ 0", self.mu));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            out.push(format!("time violated: dt={} must be positive", self.dt));
        } else if window_steps(self.delta, self.dt).is_err() {
            out.push(format!(
                "delay violated: δ={} is not a positive integer multiple of dt={}",
                self.delta, self.dt
            ));
        }
        if !(self.spinup_t >= 0.0 && self.horizon_t >= 0.0) {
            out.push("time violated: spin-up and horizon must be ≥ 0".into());
        }
        if self.operator != OperatorKind::Spectral && self.n >= 8 {
            let m = (2.0 * PI / self.h).round();
            if (2.0 * PI / m - self.h).abs() > 1e-9 * self.h || m < 3.0 || self.n % m as usize != 0 {
                out.push(format!(
                    "alignment violated: h={} must be 2π/m with m ≥ 3 dividing n={}",
                    self.h, self.n
                ));
            }
        }
        if let InitialGuess::RandomBall { norm, .. } = self.g_init {
            if !(norm >= 0.0 && norm.is_finite()) {
                out.push(format!("g_init violated: norm {norm} must be ≥ 0"));
            }
        }
        if !(self.c0 > 0.0 && self.c0_prime > 0.0) {
            out.push("window violated: c0 and c0_prime must be positive".into());
        }
        if self.name.is_empty() || self.name.contains(['/', '\\']) {
            out.push(format!("name violated: {:?} is not a plain directory name", self.name));
        }
        out
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let v = self.violations();
        if v.is_empty() {
            Ok(())
        } else {
            Err(ConfigError::Invalid(v))
        }
    }

    /// True at the γ = 2 boundary, which is accepted for cross-checks only.
    pub fn gamma_warning(&self) -> bool {
        self.gamma >= 2.0
    }

    pub fn grid(&self) -> WaveGrid {
        WaveGrid::new(self.n).expect("validated grid size")
    }

    pub fn sqg_params(&self, grid: &WaveGrid) -> SqgParams {
        let f = self.forcing.build(grid, self.kappa, self.gamma);
        SqgParams::new(self.kappa, self.gamma, f).expect("validated model parameters")
    }

    pub fn stepper(&self, grid: &WaveGrid) -> ImexStepper {
        ImexStepper::new(self.sqg_params(grid), self.dt).expect("validated step")
    }

    pub fn operator(&self, grid: &WaveGrid) -> InterpolantOperator {
        match self.operator {
            OperatorKind::Spectral => {
                InterpolantOperator::spectral_for_h(self.h, grid).expect("validated h")
            }
            kind => {
                let pou = Arc::new(PartitionOfUnity::build(self.h, grid).expect("validated h"));
                if kind == OperatorKind::Volume {
                    InterpolantOperator::volume_elements(pou)
                } else {
                    InterpolantOperator::shifted_volume_elements(pou)
                }
            }
        }
    }

    pub fn nudge(&self, grid: &WaveGrid) -> NudgeParams {
        NudgeParams::new(self.mu, self.delta, self.operator(grid), self.g_init)
            .expect("validated nudging parameters")
    }

    pub fn monitor(&self) -> NormMonitor {
        NormMonitor {
            p: self.p,
            sigma: self.sigma,
        }
    }

    /// Every key with its resolved value, parseable by [`Self::parse_str`].
    pub fn echo(&self) -> String {
        let mut s = String::new();
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        kv("name", self.name.clone());
        kv("n", self.n.to_string());
        kv("kappa", self.kappa.to_string());
        kv("gamma", self.gamma.to_string());
        kv("sigma", self.sigma.to_string());
        kv("p", self.p.to_string());
        kv("mu", self.mu.to_string());
        kv("delta", self.delta.to_string());
        kv("dt", self.dt.to_string());
        kv("h", self.h.to_string());
        kv("operator", self.operator.as_str().into());
        kv("spinup_t", self.spinup_t.to_string());
        kv("horizon_t", self.horizon_t.to_string());
        match self.forcing.shape {
            ForcingShape::Band => kv("forcing_shape", "band".into()),
            ForcingShape::Shear { wavenumber } => {
                kv("forcing_shape", "shear".into());
                kv("forcing_wavenumber", wavenumber.to_string());
            }
        }
        kv("forcing_kmin", self.forcing.kmin.to_string());
        kv("forcing_kmax", self.forcing.kmax.to_string());
        kv("forcing_amplitude", self.forcing.amplitude.to_string());
        kv("forcing_seed", self.forcing.seed.to_string());
        kv("init_seed", self.init_seed.to_string());
        kv("init_norm", self.init_norm.to_string());
        match self.g_init {
            InitialGuess::Zero => kv("g_init", "zero".into()),
            InitialGuess::ExactTheta => kv("g_init", "exact".into()),
            InitialGuess::RandomBall { seed, norm } => {
                kv("g_init", "random".into());
                kv("g_seed", seed.to_string());
                kv("g_norm", norm.to_string());
            }
        }
        kv("floor_rel", self.floor_rel.to_string());
        kv("c0", self.c0.to_string());
        kv("c0_prime", self.c0_prime.to_string());
        kv("snapshot_every", self.snapshot_every.to_string());
        match self.operator {
            OperatorKind::Spectral => {
                let _ = writeln!(s, "# spectral cutoff K = ceil(1/h) = {}", spectral_cutoff(self.h));
            }
            _ => {
                let m = (2.0 * PI / self.h).round();
                let _ = writeln!(s, "# {m} squares per axis, mollifier radius h/10");
            }
        }
        if self.gamma_warning() {
            let _ = writeln!(s, "# warning: γ = 2 is outside the subcritical range");
        }
        s
    }
}

pub fn parse_config(path: &Path) -> Result<ExperimentConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.display().to_string(),
        source,
    })?;
    ExperimentConfig::parse_str(&text)
}
