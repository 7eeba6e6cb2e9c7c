//! Interpolant observation operators `J_h`: Fourier truncation and smooth
//! volume elements built on a partition of unity.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use thiserror::Error;

use crate::spectral::{FourierField, PhysicalField, WaveGrid};

#[derive(Debug, Error, PartialEq)]
pub enum ObserverError {
    #[error("square side 2π/{squares} does not align with an n={n} grid")]
    Misaligned { squares: usize, n: usize },
    #[error("need at least 3 squares per axis, got {0}")]
    TooFewSquares(usize),
    #[error("h={h} is not of the form 2π/m")]
    NotLatticeSide { h: f64 },
    #[error("H7 violated: h={h} not in (0, π/4)")]
    Resolution { h: f64 },
    #[error("spectral cutoff must be positive")]
    ZeroCutoff,
    #[error("operator grid n={operator} does not match field grid n={field}")]
    GridMismatch { operator: usize, field: usize },
    #[error("approximation ratio undefined for a field with zero Ḣ^β norm")]
    DegenerateField,
}

/// One bump ψ_α stored on a square patch of the grid starting at
/// `(x0, y0)` (indices wrap periodically).
#[derive(Clone, Debug)]
struct Bump {
    x0: usize,
    y0: usize,
    values: Vec<f64>,
}

/// Smooth partition of unity subordinate to the `m × m` squares of side
/// `h = 2π/m` covering [-π, π)², each bump supported in the square dilated
/// by `ε = h/10`.
#[derive(Clone, Debug)]
pub struct PartitionOfUnity {
    grid: WaveGrid,
    squares: usize,
    width: usize,
    bumps: Vec<Bump>,
    integrals: Vec<f64>,
}

impl PartitionOfUnity {
    /// Partition with side `h`; enforces grid alignment and `h < π/4`.
    pub fn build(h: f64, grid: &WaveGrid) -> Result<Self, ObserverError> {
        if !(h > 0.0 && h < PI / 4.0) {
            return Err(ObserverError::Resolution { h });
        }
        let m = (2.0 * PI / h).round();
        if (2.0 * PI / m - h).abs() > 1e-9 * h {
            return Err(ObserverError::NotLatticeSide { h });
        }
        Self::with_squares(m as usize, grid)
    }

    /// Partition with `m` squares per axis. Only checks alignment, so coarse
    /// partitions outside the `h < π/4` regime can be inspected.
    pub fn with_squares(m: usize, grid: &WaveGrid) -> Result<Self, ObserverError> {
        let n = grid.n();
        if m < 3 {
            return Err(ObserverError::TooFewSquares(m));
        }
        if n % m != 0 {
            return Err(ObserverError::Misaligned { squares: m, n });
        }
        let cells = n / m;
        let dx = grid.spacing();
        let eps = 2.0 * PI / m as f64 / 10.0;
        let r = (eps / dx).floor() as usize;
        let kernel = mollifier(r, dx, eps);
        let width = cells + 2 * r;
        if width > n {
            return Err(ObserverError::Misaligned { squares: m, n });
        }

        // ψ_α = χ_{Q_α} * ρ on a (cells + 2r)² patch
        let span = 2 * r + 1;
        let mut raw = vec![0.0; width * width];
        for b in 0..width {
            for a in 0..width {
                let mut acc = 0.0;
                for dj in 0..span {
                    let yy = b as isize - dj as isize;
                    if yy < 0 || yy >= cells as isize {
                        continue;
                    }
                    for di in 0..span {
                        let xx = a as isize - di as isize;
                        if xx >= 0 && xx < cells as isize {
                            acc += kernel[dj * span + di];
                        }
                    }
                }
                raw[b * width + a] = acc.min(1.0);
            }
        }

        let mut bumps = Vec::with_capacity(m * m);
        for j in 0..m {
            for i in 0..m {
                bumps.push(Bump {
                    x0: (i * cells + n - r) % n,
                    y0: (j * cells + n - r) % n,
                    values: raw.clone(),
                });
            }
        }
        let mut pou = Self {
            grid: grid.clone(),
            squares: m,
            width,
            bumps,
            integrals: Vec::new(),
        };

        // discrete renormalisation so Σ_α ψ_α = 1 at every grid point
        let total = pou.sum_values();
        for bump in &mut pou.bumps {
            for b in 0..width {
                let y = (bump.y0 + b) % n;
                for a in 0..width {
                    let x = (bump.x0 + a) % n;
                    let v = &mut bump.values[b * width + a];
                    *v = (*v / total[y * n + x]).clamp(0.0, 1.0);
                }
            }
        }
        let area = grid.cell_area();
        pou.integrals = pou
            .bumps
            .iter()
            .map(|b| b.values.iter().sum::<f64>() * area)
            .collect();
        Ok(pou)
    }

    fn sum_values(&self) -> Vec<f64> {
        let mut total = vec![0.0; self.grid.len()];
        for alpha in 0..self.bumps.len() {
            self.scatter(alpha, 1.0, &mut total);
        }
        total
    }

    fn scatter(&self, alpha: usize, weight: f64, out: &mut [f64]) {
        let n = self.grid.n();
        let bump = &self.bumps[alpha];
        for b in 0..self.width {
            let row = ((bump.y0 + b) % n) * n;
            for a in 0..self.width {
                out[row + (bump.x0 + a) % n] += weight * bump.values[b * self.width + a];
            }
        }
    }

    fn gather(&self, alpha: usize, values: &[f64]) -> f64 {
        let n = self.grid.n();
        let bump = &self.bumps[alpha];
        let mut acc = 0.0;
        for b in 0..self.width {
            let row = ((bump.y0 + b) % n) * n;
            for a in 0..self.width {
                acc += values[row + (bump.x0 + a) % n] * bump.values[b * self.width + a];
            }
        }
        acc
    }

    pub fn grid(&self) -> &WaveGrid {
        &self.grid
    }

    /// Squares per axis.
    pub fn squares(&self) -> usize {
        self.squares
    }

    pub fn len(&self) -> usize {
        self.bumps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bumps.is_empty()
    }

    pub fn h(&self) -> f64 {
        2.0 * PI / self.squares as f64
    }

    pub fn epsilon(&self) -> f64 {
        self.h() / 10.0
    }

    /// `ã(Q_α) = ∫ ψ_α` for every square, by grid quadrature.
    pub fn integrals(&self) -> &[f64] {
        &self.integrals
    }

    /// ψ_α sampled on the full grid.
    pub fn bump(&self, alpha: usize) -> PhysicalField {
        let mut v = vec![0.0; self.grid.len()];
        self.scatter(alpha, 1.0, &mut v);
        PhysicalField::new(&self.grid, v).expect("grid-sized buffer")
    }

    /// `Σ_α ψ_α` on the grid.
    pub fn sum(&self) -> PhysicalField {
        PhysicalField::new(&self.grid, self.sum_values()).expect("grid-sized buffer")
    }

    /// Lower-left corner (square index) of `Q_α`, α in row-major order.
    pub fn square_origin(&self, alpha: usize) -> (f64, f64) {
        let (i, j) = (alpha % self.squares, alpha / self.squares);
        (-PI + i as f64 * self.h(), -PI + j as f64 * self.h())
    }

    /// Local averages `φ̃_α = ∫φψ_α / ∫ψ_α`.
    pub fn local_averages(&self, phi: &PhysicalField) -> Vec<f64> {
        let area = self.grid.cell_area();
        (0..self.bumps.len())
            .map(|alpha| self.gather(alpha, phi.values()) * area / self.integrals[alpha])
            .collect()
    }

    /// `Σ_α w_α ψ_α`, or `Σ_α w_α (ψ_α − ⟨ψ_α⟩)` when `shifted`.
    pub fn synthesize(&self, weights: &[f64], shifted: bool) -> PhysicalField {
        let mut v = vec![0.0; self.grid.len()];
        for (alpha, &w) in weights.iter().enumerate() {
            self.scatter(alpha, w, &mut v);
        }
        if shifted {
            let domain = 4.0 * PI * PI;
            let offset: f64 = weights
                .iter()
                .zip(&self.integrals)
                .map(|(w, a)| w * a / domain)
                .sum();
            v.iter_mut().for_each(|x| *x -= offset);
        }
        PhysicalField::new(&self.grid, v).expect("grid-sized buffer")
    }
}

/// Normalised discrete C^∞ bump `exp(−1/(1−(r/ε)²))` on offsets with `r < ε`.
fn mollifier(r: usize, dx: f64, eps: f64) -> Vec<f64> {
    let span = 2 * r + 1;
    let mut k = vec![0.0; span * span];
    for j in 0..span {
        for i in 0..span {
            let (di, dj) = (i as f64 - r as f64, j as f64 - r as f64);
            let rho = dx * (di * di + dj * dj).sqrt() / eps;
            if rho < 1.0 {
                k[j * span + i] = (-1.0 / (1.0 - rho * rho)).exp();
            }
        }
    }
    let s: f64 = k.iter().sum();
    k.iter_mut().for_each(|v| *v /= s);
    k
}

/// Compact form of `J_hφ` from which the field can be rebuilt linearly:
/// retained Fourier modes or per-square local averages.
#[derive(Clone, Debug, PartialEq)]
pub enum Observation {
    Modes(Vec<Complex64>),
    Weights(Vec<f64>),
}

impl Observation {
    pub fn zeros_like(&self) -> Self {
        match self {
            Self::Modes(v) => Self::Modes(vec![Complex64::new(0.0, 0.0); v.len()]),
            Self::Weights(v) => Self::Weights(vec![0.0; v.len()]),
        }
    }

    /// `self += a·other`.
    pub fn add_scaled(&mut self, a: f64, other: &Observation) {
        match (self, other) {
            (Self::Modes(x), Self::Modes(y)) => {
                x.iter_mut().zip(y).for_each(|(p, q)| *p += q * a);
            }
            (Self::Weights(x), Self::Weights(y)) => {
                x.iter_mut().zip(y).for_each(|(p, q)| *p += q * a);
            }
            _ => panic!("mixing observations from different operators"),
        }
    }

    pub fn scale(&mut self, a: f64) {
        match self {
            Self::Modes(x) => x.iter_mut().for_each(|p| *p *= a),
            Self::Weights(x) => x.iter_mut().for_each(|p| *p *= a),
        }
    }

    pub fn max_abs(&self) -> f64 {
        match self {
            Self::Modes(x) => x.iter().map(|c| c.norm()).fold(0.0, nan_max),
            Self::Weights(x) => x.iter().map(|c| c.abs()).fold(0.0, nan_max),
        }
    }
}

fn nan_max(a: f64, b: f64) -> f64 {
    if a.is_nan() || b.is_nan() {
        f64::NAN
    } else {
        a.max(b)
    }
}

#[derive(Clone, Debug)]
enum Variant {
    SpectralProjection { cutoff: usize, indices: Vec<usize> },
    VolumeElements(Arc<PartitionOfUnity>),
    ShiftedVolumeElements(Arc<PartitionOfUnity>),
}

/// Linear observation operator `J_h`.
#[derive(Clone, Debug)]
pub struct InterpolantOperator {
    grid: WaveGrid,
    h: f64,
    variant: Variant,
}

impl InterpolantOperator {
    /// Keeps modes with `max(|k₁|,|k₂|) ≤ cutoff`; nominal resolution `h = 1/cutoff`.
    pub fn spectral(cutoff: usize, grid: &WaveGrid) -> Result<Self, ObserverError> {
        if cutoff == 0 {
            return Err(ObserverError::ZeroCutoff);
        }
        let kept = cutoff.min(grid.n() / 2 - 1) as f64;
        let indices = grid
            .max_components()
            .iter()
            .enumerate()
            .filter(|(_, &m)| m <= kept)
            .map(|(i, _)| i)
            .collect();
        Ok(Self {
            grid: grid.clone(),
            h: 1.0 / cutoff as f64,
            variant: Variant::SpectralProjection { cutoff, indices },
        })
    }

    /// Spectral projection with cutoff `⌈1/h⌉`.
    pub fn spectral_for_h(h: f64, grid: &WaveGrid) -> Result<Self, ObserverError> {
        if !(h > 0.0) {
            return Err(ObserverError::Resolution { h });
        }
        let mut op = Self::spectral(spectral_cutoff(h), grid)?;
        op.h = h;
        Ok(op)
    }

    pub fn volume_elements(pou: Arc<PartitionOfUnity>) -> Self {
        Self {
            grid: pou.grid().clone(),
            h: pou.h(),
            variant: Variant::VolumeElements(pou),
        }
    }

    pub fn shifted_volume_elements(pou: Arc<PartitionOfUnity>) -> Self {
        Self {
            grid: pou.grid().clone(),
            h: pou.h(),
            variant: Variant::ShiftedVolumeElements(pou),
        }
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn grid(&self) -> &WaveGrid {
        &self.grid
    }

    pub fn cutoff(&self) -> Option<usize> {
        match &self.variant {
            Variant::SpectralProjection { cutoff, .. } => Some(*cutoff),
            _ => None,
        }
    }

    pub fn partition(&self) -> Option<&PartitionOfUnity> {
        match &self.variant {
            Variant::VolumeElements(p) | Variant::ShiftedVolumeElements(p) => Some(p),
            Variant::SpectralProjection { .. } => None,
        }
    }

    /// True when the spectral output differs from the physical-space
    /// interpolant by a removed constant (unshifted volume elements).
    pub fn removes_mean(&self) -> bool {
        matches!(self.variant, Variant::VolumeElements(_))
    }

    fn check(&self, phi: &FourierField) -> Result<(), ObserverError> {
        if phi.grid() != &self.grid {
            return Err(ObserverError::GridMismatch {
                operator: self.grid.n(),
                field: phi.grid().n(),
            });
        }
        Ok(())
    }

    pub fn observe(&self, phi: &FourierField) -> Result<Observation, ObserverError> {
        self.check(phi)?;
        Ok(match &self.variant {
            Variant::SpectralProjection { indices, .. } => {
                Observation::Modes(indices.iter().map(|&i| phi.coeffs()[i]).collect())
            }
            Variant::VolumeElements(p) | Variant::ShiftedVolumeElements(p) => {
                Observation::Weights(p.local_averages(&phi.to_physical()))
            }
        })
    }

    /// Rebuilds `J_hφ` from its compact form.
    pub fn reconstruct(&self, obs: &Observation) -> FourierField {
        match (&self.variant, obs) {
            (Variant::SpectralProjection { indices, .. }, Observation::Modes(m)) => {
                let mut coeffs = vec![Complex64::new(0.0, 0.0); self.grid.len()];
                for (&i, &c) in indices.iter().zip(m) {
                    coeffs[i] = c;
                }
                FourierField::from_coeffs(&self.grid, coeffs).expect("grid-sized buffer")
            }
            (Variant::VolumeElements(p), Observation::Weights(w)) => {
                p.synthesize(w, false).to_spectral()
            }
            (Variant::ShiftedVolumeElements(p), Observation::Weights(w)) => {
                p.synthesize(w, true).to_spectral()
            }
            _ => panic!("observation does not belong to this operator"),
        }
    }

    pub fn apply(&self, phi: &FourierField) -> Result<FourierField, ObserverError> {
        if let Variant::SpectralProjection { cutoff, .. } = &self.variant {
            self.check(phi)?;
            return Ok(phi.truncate_square(*cutoff as i64));
        }
        Ok(self.reconstruct(&self.observe(phi)?))
    }

    /// Physical-space interpolant without the final mean projection. For the
    /// spectral variant this is the truncated field (mean dropped).
    pub fn apply_physical(&self, phi: &PhysicalField) -> PhysicalField {
        match &self.variant {
            Variant::SpectralProjection { cutoff, .. } => {
                phi.to_spectral().truncate_square(*cutoff as i64).to_physical()
            }
            Variant::VolumeElements(p) => p.synthesize(&p.local_averages(phi), false),
            Variant::ShiftedVolumeElements(p) => p.synthesize(&p.local_averages(phi), true),
        }
    }
}

impl fmt::Display for InterpolantOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.variant {
            Variant::SpectralProjection { cutoff, .. } => {
                write!(f, "spectral cutoff={cutoff} h={}", self.h)
            }
            Variant::VolumeElements(p) => {
                write!(f, "volume squares={} h={} eps=h/10", p.squares(), self.h)
            }
            Variant::ShiftedVolumeElements(p) => {
                write!(f, "shifted-volume squares={} h={} eps=h/10", p.squares(), self.h)
            }
        }
    }
}

/// `K(h) = ⌈1/h⌉`.
pub fn spectral_cutoff(h: f64) -> usize {
    // guard against 1/h landing a hair above an integer
    let inv = 1.0 / h;
    let r = inv.round();
    if (inv - r).abs() < 1e-9 * r.max(1.0) {
        r as usize
    } else {
        inv.ceil() as usize
    }
}

/// `(‖φ − J_hφ‖_{L²}, ‖φ − J_hφ‖_{L²} / (h^β ‖φ‖_{Ḣ^β}))`.
pub fn approx_identity_error(
    op: &InterpolantOperator,
    phi: &FourierField,
    beta: f64,
) -> Result<(f64, f64), ObserverError> {
    let norm = phi.sobolev_norm(beta);
    if norm == 0.0 {
        return Err(ObserverError::DegenerateField);
    }
    let err = (phi - &op.apply(phi)?).l2_norm();
    Ok((err, err / (op.h().powf(beta) * norm)))
}

/// Empirical operator constants over a set of fields: the largest
/// `‖J_hφ‖/‖φ‖` (β = 0) and approximation ratios for β = 1/2 and 1.
pub fn measure_constants(
    op: &InterpolantOperator,
    fields: &[FourierField],
) -> Result<Vec<(f64, f64)>, ObserverError> {
    let mut out = vec![(0.0, 0.0), (0.5, 0.0), (1.0, 0.0)];
    for phi in fields {
        let l2 = phi.l2_norm();
        if l2 == 0.0 {
            continue;
        }
        out[0].1 = f64::max(out[0].1, op.apply(phi)?.l2_norm() / l2);
        out[1].1 = f64::max(out[1].1, approx_identity_error(op, phi, 0.5)?.1);
        out[2].1 = f64::max(out[2].1, approx_identity_error(op, phi, 1.0)?.1);
    }
    Ok(out)
}
