use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{FourierField, WaveGrid};

/// Seeded random field supported on `kmin ≤ |k| ≤ kmax`, with amplitudes
/// decaying like `(1 + |k|²)^{-1}`, scaled to unit L² norm.
///
/// Returns the zero field when the band holds no admissible modes.
pub fn random_field(grid: &WaveGrid, kmin: f64, kmax: f64, seed: u64) -> FourierField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    random_field_with(grid, kmin, kmax, &mut rng)
}

pub fn random_field_with<R: Rng>(grid: &WaveGrid, kmin: f64, kmax: f64, rng: &mut R) -> FourierField {
    let mut coeffs = vec![Complex64::new(0.0, 0.0); grid.len()];
    for (idx, &k) in grid.magnitudes().iter().enumerate() {
        // draw for every index so the stream does not depend on the band
        let amp: f64 = rng.gen_range(0.5..1.0);
        let phase: f64 = rng.gen_range(0.0..2.0 * PI);
        if k == 0.0 || k < kmin || k > kmax {
            continue;
        }
        coeffs[idx] = Complex64::from_polar(amp / (1.0 + k * k), phase);
    }
    let f = FourierField::project(grid, coeffs);
    let norm = f.l2_norm();
    if norm > 0.0 {
        f.scaled(1.0 / norm)
    } else {
        f
    }
}
