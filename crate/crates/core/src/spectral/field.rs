use std::f64::consts::PI;
use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;

use super::{SpectralError, WaveGrid};

const FOUR_PI_SQ: f64 = 4.0 * PI * PI;

/// Zero-mean real scalar field on the torus, stored as the full n×n array of
/// Fourier coefficients `φ̂(k) = (2π)⁻² ∫ φ e^{-ik·x} dx`.
///
/// Every constructor enforces Hermitian symmetry, a zero mean mode and a zero
/// Nyquist row/column.
#[derive(Clone, Debug)]
pub struct FourierField {
    grid: WaveGrid,
    coeffs: Vec<Complex64>,
}

/// Real samples on the uniform collocation grid, row-major (y outer, x inner).
#[derive(Clone, Debug, PartialEq)]
pub struct PhysicalField {
    grid: WaveGrid,
    values: Vec<f64>,
}

impl FourierField {
    pub fn zeros(grid: &WaveGrid) -> Self {
        Self {
            grid: grid.clone(),
            coeffs: vec![Complex64::new(0.0, 0.0); grid.len()],
        }
    }

    /// Builds a field from raw coefficients, projecting onto the admissible class
    /// (Hermitian, zero mean, no Nyquist content).
    pub fn from_coeffs(grid: &WaveGrid, coeffs: Vec<Complex64>) -> Result<Self, SpectralError> {
        if coeffs.len() != grid.len() {
            return Err(SpectralError::LengthMismatch {
                expected: grid.len(),
                found: coeffs.len(),
            });
        }
        Ok(Self::project(grid, coeffs))
    }

    /// Sets the listed modes (and their conjugate partners). Later entries
    /// overwrite earlier ones.
    pub fn from_modes(
        grid: &WaveGrid,
        modes: &[((i64, i64), Complex64)],
    ) -> Result<Self, SpectralError> {
        let mut coeffs = vec![Complex64::new(0.0, 0.0); grid.len()];
        for &((k1, k2), c) in modes {
            let idx = grid
                .index(k1, k2)
                .ok_or(SpectralError::ModeOutOfRange { k1, k2 })?;
            let pidx = grid.partner(idx);
            coeffs[idx] = c;
            coeffs[pidx] = c.conj();
        }
        Ok(Self::project(grid, coeffs))
    }

    pub(crate) fn project(grid: &WaveGrid, coeffs: Vec<Complex64>) -> Self {
        let mut out = Vec::with_capacity(coeffs.len());
        for (idx, c) in coeffs.iter().enumerate() {
            if idx == 0 || grid.is_nyquist(idx) {
                out.push(Complex64::new(0.0, 0.0));
            } else {
                out.push((c + coeffs[grid.partner(idx)].conj()) * 0.5);
            }
        }
        Self {
            grid: grid.clone(),
            coeffs: out,
        }
    }

    pub(crate) fn into_coeffs(self) -> Vec<Complex64> {
        self.coeffs
    }

    /// Wraps coefficients already known to satisfy the invariants.
    pub(crate) fn from_raw(grid: &WaveGrid, coeffs: Vec<Complex64>) -> Self {
        debug_assert_eq!(coeffs[0], Complex64::new(0.0, 0.0));
        Self {
            grid: grid.clone(),
            coeffs,
        }
    }

    pub fn grid(&self) -> &WaveGrid {
        &self.grid
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeff(&self, k1: i64, k2: i64) -> Complex64 {
        self.grid
            .index(k1, k2)
            .map(|i| self.coeffs[i])
            .unwrap_or_default()
    }

    pub fn check_grid(&self, other: &FourierField) -> Result<(), SpectralError> {
        if self.grid != other.grid {
            return Err(SpectralError::GridMismatch {
                left: self.grid.n(),
                right: other.grid.n(),
            });
        }
        Ok(())
    }

    /// Applies a real, even multiplier `m(|k|)`; the mean mode stays zero.
    pub fn apply_radial<F: Fn(f64) -> f64>(&self, m: F) -> Self {
        let coeffs = self
            .coeffs
            .iter()
            .zip(self.grid.magnitudes())
            .map(|(c, &k)| if k == 0.0 { *c } else { c * m(k) })
            .collect();
        Self::from_raw(&self.grid, coeffs)
    }

    /// Λ^s: multiplies mode k by |k|^s. Negative `s` gives the Riesz potential.
    pub fn fractional_laplacian(&self, s: f64) -> Self {
        self.mul_pointwise(&self.grid.powers(s))
    }

    /// Perpendicular Riesz transform `(−R₂θ, R₁θ)` with `R_j = −i k_j/|k|`.
    pub fn riesz_perp(&self) -> (Self, Self) {
        let g = &self.grid;
        let mut u1 = Vec::with_capacity(self.coeffs.len());
        let mut u2 = Vec::with_capacity(self.coeffs.len());
        for (((&c, &k), &k1), &k2) in self.coeffs.iter().zip(g.magnitudes()).zip(g.k1()).zip(g.k2()) {
            if k == 0.0 {
                u1.push(Complex64::new(0.0, 0.0));
                u2.push(Complex64::new(0.0, 0.0));
                continue;
            }
            // −R₂ = i k₂/|k|,  R₁ = −i k₁/|k|
            u1.push(c * Complex64::new(0.0, k2 / k));
            u2.push(c * Complex64::new(0.0, -k1 / k));
        }
        (Self::from_raw(g, u1), Self::from_raw(g, u2))
    }

    /// Spectral gradient `(∂₁φ, ∂₂φ)`.
    pub fn gradient(&self) -> (Self, Self) {
        let g = &self.grid;
        let d1 = self.coeffs.iter().zip(g.k1()).map(|(c, &k1)| c * Complex64::new(0.0, k1)).collect();
        let d2 = self.coeffs.iter().zip(g.k2()).map(|(c, &k2)| c * Complex64::new(0.0, k2)).collect();
        (Self::from_raw(g, d1), Self::from_raw(g, d2))
    }

    /// Homogeneous Sobolev norm `sqrt(4π² Σ_{k≠0} |k|^{2s} |φ̂(k)|²)`.
    pub fn sobolev_norm(&self, s: f64) -> f64 {
        let sum: f64 = if s == 0.0 {
            // the mean coefficient is zero by construction
            self.coeffs.iter().map(|c| c.norm_sqr()).sum()
        } else {
            let w = self.grid.powers(2.0 * s);
            self.coeffs.iter().zip(w.iter()).map(|(c, w)| w * c.norm_sqr()).sum()
        };
        (FOUR_PI_SQ * sum).sqrt()
    }

    pub fn l2_norm(&self) -> f64 {
        self.sobolev_norm(0.0)
    }

    /// L² inner product `4π² Σ conj(a) b`, real for real fields.
    pub fn inner(&self, other: &FourierField) -> f64 {
        FOUR_PI_SQ
            * self
                .coeffs
                .iter()
                .zip(&other.coeffs)
                .map(|(a, b)| (a.conj() * b).re)
                .sum::<f64>()
    }

    /// Zeroes modes with `max(|k₁|,|k₂|) > cutoff`.
    pub fn truncate_square(&self, cutoff: i64) -> Self {
        let cutoff = cutoff as f64;
        let coeffs = self
            .coeffs
            .iter()
            .zip(self.grid.max_components())
            .map(|(&c, &m)| if m > cutoff { Complex64::new(0.0, 0.0) } else { c })
            .collect();
        Self::from_raw(&self.grid, coeffs)
    }

    /// 2/3-rule mask.
    pub fn dealias(&self) -> Self {
        self.truncate_square(self.grid.dealias_cutoff())
    }

    pub fn max_abs_coeff(&self) -> f64 {
        // NaN propagates so blown-up fields never look small
        self.coeffs
            .iter()
            .map(|c| c.norm())
            .fold(0.0, |a, b| if a.is_nan() || b.is_nan() { f64::NAN } else { a.max(b) })
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs.iter().all(|c| c.re.is_finite() && c.im.is_finite())
    }

    pub fn scaled(&self, a: f64) -> Self {
        Self::from_raw(&self.grid, self.coeffs.iter().map(|c| c * a).collect())
    }

    /// `self + a·other`.
    pub fn axpy(&self, a: f64, other: &FourierField) -> Self {
        assert_eq!(self.grid, other.grid, "grid mismatch");
        let coeffs = self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(x, y)| x + y * a)
            .collect();
        Self::from_raw(&self.grid, coeffs)
    }

    /// Applies a per-mode real factor in storage order.
    pub(crate) fn mul_pointwise(&self, factors: &[f64]) -> Self {
        let coeffs = self
            .coeffs
            .iter()
            .zip(factors)
            .map(|(c, f)| c * f)
            .collect();
        Self::from_raw(&self.grid, coeffs)
    }

    pub(crate) fn zip_map<F>(&self, other: &FourierField, f: F) -> Self
    where
        F: Fn(Complex64, Complex64) -> Complex64,
    {
        assert_eq!(self.grid, other.grid, "grid mismatch");
        let coeffs = self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(&a, &b)| f(a, b))
            .collect();
        Self::from_raw(&self.grid, coeffs)
    }

    /// Phase-corrected copy of `map(coeff, index)` ready for an inverse DFT.
    pub(crate) fn synthesis_buffer<F>(&self, map: F) -> Vec<Complex64>
    where
        F: Fn(Complex64, usize) -> Complex64,
    {
        self.coeffs
            .iter()
            .zip(self.grid.signs())
            .enumerate()
            .map(|(i, (&c, &s))| map(c, i) * s)
            .collect()
    }

    /// Forward-transforms physical samples held in the real parts of `data`.
    pub(crate) fn analyse_buffer(grid: &WaveGrid, mut data: Vec<Complex64>) -> Self {
        grid.fft2(&mut data, false);
        let norm = 1.0 / grid.len() as f64;
        for (c, &s) in data.iter_mut().zip(grid.signs()) {
            *c *= norm * s;
        }
        Self::project(grid, data)
    }

    /// [`analyse_buffer`](Self::analyse_buffer) followed by the 2/3 mask, in one pass.
    pub(crate) fn analyse_dealiased(grid: &WaveGrid, data: &mut [Complex64]) -> Self {
        grid.fft2(data, false);
        let n = grid.n();
        let norm = 1.0 / grid.len() as f64;
        let signs = grid.signs();
        let c = grid.dealias_cutoff() as usize;
        // axis indices with |k| ≤ c; the Nyquist line lies outside
        let axis = || (0..=c).chain(n - c..n);
        let mut coeffs = vec![Complex64::new(0.0, 0.0); data.len()];
        for iy in axis() {
            for ix in axis() {
                let idx = iy * n + ix;
                if idx == 0 {
                    continue;
                }
                let p = grid.partner(idx);
                let a = data[idx] * (norm * signs[idx]);
                let b = data[p] * (norm * signs[p]);
                coeffs[idx] = (a + b.conj()) * 0.5;
            }
        }
        Self::from_raw(grid, coeffs)
    }

    pub fn to_physical(&self) -> PhysicalField {
        let mut data = self.synthesis_buffer(|c, _| c);
        self.grid.fft2(&mut data, true);
        PhysicalField {
            grid: self.grid.clone(),
            values: data.into_iter().map(|c| c.re).collect(),
        }
    }

    /// Synthesises two real fields with a single complex transform.
    pub fn to_physical_pair(a: &FourierField, b: &FourierField) -> (PhysicalField, PhysicalField) {
        assert_eq!(a.grid, b.grid, "grid mismatch");
        let i = Complex64::new(0.0, 1.0);
        let mut data = a.synthesis_buffer(|x, idx| x + i * b.coeffs[idx]);
        a.grid.fft2(&mut data, true);
        let re = data.iter().map(|c| c.re).collect();
        let im = data.iter().map(|c| c.im).collect();
        (
            PhysicalField {
                grid: a.grid.clone(),
                values: re,
            },
            PhysicalField {
                grid: a.grid.clone(),
                values: im,
            },
        )
    }

    /// Zero-pads (or truncates) onto another grid, keeping coefficients of the
    /// wavevectors both grids can represent.
    pub fn resample(&self, target: &WaveGrid) -> Self {
        let mut coeffs = vec![Complex64::new(0.0, 0.0); target.len()];
        for (idx, &c) in self.coeffs.iter().enumerate() {
            let (k1, k2) = self.grid.wavevector(idx);
            if let Some(t) = target.index(k1, k2) {
                coeffs[t] = c;
            }
        }
        Self::project(target, coeffs)
    }
}

impl Add for &FourierField {
    type Output = FourierField;
    fn add(self, rhs: &FourierField) -> FourierField {
        self.zip_map(rhs, |a, b| a + b)
    }
}

impl Sub for &FourierField {
    type Output = FourierField;
    fn sub(self, rhs: &FourierField) -> FourierField {
        self.zip_map(rhs, |a, b| a - b)
    }
}

impl Mul<f64> for &FourierField {
    type Output = FourierField;
    fn mul(self, rhs: f64) -> FourierField {
        self.scaled(rhs)
    }
}

impl Neg for &FourierField {
    type Output = FourierField;
    fn neg(self) -> FourierField {
        self.scaled(-1.0)
    }
}

impl PhysicalField {
    pub fn new(grid: &WaveGrid, values: Vec<f64>) -> Result<Self, SpectralError> {
        if values.len() != grid.len() {
            return Err(SpectralError::LengthMismatch {
                expected: grid.len(),
                found: values.len(),
            });
        }
        Ok(Self {
            grid: grid.clone(),
            values,
        })
    }

    pub fn from_fn<F: Fn(f64, f64) -> f64>(grid: &WaveGrid, f: F) -> Self {
        let n = grid.n();
        let mut values = Vec::with_capacity(n * n);
        for iy in 0..n {
            let y = grid.coordinate(iy);
            for ix in 0..n {
                values.push(f(grid.coordinate(ix), y));
            }
        }
        Self {
            grid: grid.clone(),
            values,
        }
    }

    pub fn constant(grid: &WaveGrid, c: f64) -> Self {
        Self {
            grid: grid.clone(),
            values: vec![c; grid.len()],
        }
    }

    pub fn grid(&self) -> &WaveGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn map<F: Fn(f64) -> f64>(&self, f: F) -> Self {
        Self {
            grid: self.grid.clone(),
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn zip_with<F: Fn(f64, f64) -> f64>(&self, other: &PhysicalField, f: F) -> Self {
        assert_eq!(self.grid, other.grid, "grid mismatch");
        Self {
            grid: self.grid.clone(),
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        }
    }

    /// Grid average `(2π)⁻² ∫ φ`.
    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    /// Uniform-grid quadrature of `∫ φ dx`.
    pub fn integral(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.grid.cell_area()
    }

    /// `‖φ‖_{L^p}` by uniform-grid quadrature; `p = f64::INFINITY` gives the max norm.
    pub fn lp_norm(&self, p: f64) -> f64 {
        assert!(p >= 1.0, "Lebesgue exponent must be >= 1");
        if p.is_infinite() {
            return self.values.iter().map(|v| v.abs()).fold(0.0, f64::max);
        }
        let area = self.grid.cell_area();
        if p == 2.0 {
            return (self.values.iter().map(|v| v * v).sum::<f64>() * area).sqrt();
        }
        let sum: f64 = if p.fract() == 0.0 && p <= 32.0 {
            let q = p as i32;
            self.values.iter().map(|v| v.abs().powi(q)).sum()
        } else {
            self.values.iter().map(|v| v.abs().powf(p)).sum()
        };
        (sum * area).powf(1.0 / p)
    }

    /// Forward transform; removes the mean and enforces Hermitian symmetry.
    pub fn to_spectral(&self) -> FourierField {
        let data = self.values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        FourierField::analyse_buffer(&self.grid, data)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::random_field;
    use approx::assert_relative_eq;

    fn grid(n: usize) -> WaveGrid {
        WaveGrid::new(n).unwrap()
    }

    fn cos_x(g: &WaveGrid) -> FourierField {
        PhysicalField::from_fn(g, |x, _| x.cos()).to_spectral()
    }

    #[test]
    fn cos_x_has_half_coefficients() {
        let g = grid(16);
        let f = cos_x(&g);
        assert!((f.coeff(1, 0) - Complex64::new(0.5, 0.0)).norm() < 1e-14);
        assert!((f.coeff(-1, 0) - Complex64::new(0.5, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn fractional_laplacian_single_modes() {
        let g = grid(32);
        let c = FourierField::from_modes(&g, &[((1, 0), Complex64::new(0.5, 0.0))]).unwrap();
        assert!((&c - &cos_x(&g)).max_abs_coeff() < 1e-15);
        for s in [0.5, 1.5, 2.0, -0.7] {
            assert!((&c.fractional_laplacian(s) - &c).max_abs_coeff() < 1e-15);
        }
        let c2 = PhysicalField::from_fn(&g, |x, _| (2.0 * x).cos()).to_spectral();
        let out = c2.fractional_laplacian(1.5).to_physical();
        let want = PhysicalField::from_fn(&g, |x, _| 2f64.powf(1.5) * (2.0 * x).cos());
        for (a, b) in out.values().iter().zip(want.values()) {
            assert!((a - b).abs() < 1e-12, "{a} vs {b}");
        }
        let s3 = PhysicalField::from_fn(&g, |_, y| (3.0 * y).sin()).to_spectral();
        let out = s3.fractional_laplacian(-1.0).to_physical();
        let want = PhysicalField::from_fn(&g, |_, y| (3.0 * y).sin() / 3.0);
        for (a, b) in out.values().iter().zip(want.values()) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn riesz_perp_single_modes() {
        let g = grid(16);
        let (u1, u2) = cos_x(&g).riesz_perp();
        assert!(u1.max_abs_coeff() < 1e-15);
        let want = PhysicalField::from_fn(&g, |x, _| x.sin());
        for (a, b) in u2.to_physical().values().iter().zip(want.values()) {
            assert!((a - b).abs() < 1e-14);
        }
        let cy = PhysicalField::from_fn(&g, |_, y| y.cos()).to_spectral();
        let (u1, u2) = cy.riesz_perp();
        assert!(u2.max_abs_coeff() < 1e-15);
        let want = PhysicalField::from_fn(&g, |_, y| -y.sin());
        for (a, b) in u1.to_physical().values().iter().zip(want.values()) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn riesz_perp_is_divergence_free_and_isometric() {
        let g = grid(32);
        let theta = random_field(&g, 1.0, 10.0, 7);
        let (u1, u2) = theta.riesz_perp();
        let div = &u1.gradient().0 + &u2.gradient().1;
        assert!(div.l2_norm() <= 1e-12 * theta.l2_norm());
        let speed = (u1.l2_norm().powi(2) + u2.l2_norm().powi(2)).sqrt();
        assert_relative_eq!(speed, theta.l2_norm(), max_relative = 1e-12);
    }

    #[test]
    fn sobolev_norm_examples() {
        let g = grid(16);
        assert_relative_eq!(cos_x(&g).sobolev_norm(0.0), 2f64.sqrt() * PI, max_relative = 1e-14);
        let c2 = PhysicalField::from_fn(&g, |x, _| (2.0 * x).cos()).to_spectral();
        assert_relative_eq!(c2.sobolev_norm(1.0), 2.0 * 2f64.sqrt() * PI, max_relative = 1e-14);
        assert_eq!(FourierField::zeros(&g).sobolev_norm(1.3), 0.0);
    }

    #[test]
    fn lp_norm_examples() {
        let g = grid(32);
        assert_eq!(PhysicalField::constant(&g, 0.0).lp_norm(4.0), 0.0);
        let c = PhysicalField::from_fn(&g, |x, _| x.cos());
        assert_relative_eq!(c.lp_norm(2.0), c.to_spectral().sobolev_norm(0.0), max_relative = 1e-10);
        // fine-grid quadrature oracle for ∫cos⁴ over the torus
        let m = 4096;
        let h = 2.0 * PI / m as f64;
        let quad: f64 = (0..m).map(|i| (-PI + i as f64 * h).cos().powi(4)).sum::<f64>() * h * 2.0 * PI;
        assert_relative_eq!(quad, 4.0 * PI * PI * 3.0 / 8.0, max_relative = 1e-12);
        assert_relative_eq!(c.lp_norm(4.0), (1.5 * PI * PI).powf(0.25), max_relative = 1e-12);
        assert_relative_eq!(c.lp_norm(f64::INFINITY), 1.0, max_relative = 1e-14);
    }

    #[test]
    fn round_trip_and_mean_removal() {
        let g = grid(32);
        let f = random_field(&g, 1.0, 15.0, 3);
        let back = f.to_physical().to_spectral();
        assert!((&back - &f).l2_norm() <= 1e-12 * f.l2_norm());

        let ones = PhysicalField::constant(&g, 1.0).to_spectral();
        assert_eq!(ones.max_abs_coeff(), 0.0);

        let p = PhysicalField::from_fn(&g, |x, y| x.cos() + (2.0 * y).sin()).to_spectral();
        let mut big = 0;
        for (idx, c) in p.coeffs().iter().enumerate() {
            let k = g.wavevector(idx);
            let expected = matches!(k, (1, 0) | (-1, 0) | (0, 2) | (0, -2));
            if expected {
                assert!((c.norm() - 0.5).abs() < 1e-14);
                big += 1;
            } else {
                assert!(c.norm() < 1e-13);
            }
        }
        assert_eq!(big, 4);
        assert_eq!(p.coeff(0, 2), p.coeff(0, -2).conj());
    }

    #[test]
    fn constructor_enforces_invariants() {
        let g = grid(8);
        let mut raw = vec![Complex64::new(1.0, 1.0); g.len()];
        raw[g.index(1, 2).unwrap()] = Complex64::new(3.0, -2.0);
        let f = FourierField::from_coeffs(&g, raw).unwrap();
        assert_eq!(f.coeff(0, 0), Complex64::new(0.0, 0.0));
        assert_eq!(f.coeff(-4, 1), Complex64::new(0.0, 0.0));
        assert_eq!(f.coeff(2, -4), Complex64::new(0.0, 0.0));
        for idx in 0..g.len() {
            assert_eq!(f.coeffs()[idx], f.coeffs()[g.partner(idx)].conj());
        }
        assert!(FourierField::from_coeffs(&g, vec![]).is_err());
    }
}
