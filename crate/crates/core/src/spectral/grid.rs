use std::cell::RefCell;
use std::f64::consts::PI;
use std::fmt;
use std::sync::{Arc, Mutex};

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use super::SpectralError;

struct Plans {
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

/// Square collocation grid on the torus [-π, π)² together with its integer
/// wavevector lattice.
///
/// Storage index `iy * n + ix` holds wavevector `(k1, k2) = (wavenumber(ix), wavenumber(iy))`;
/// the same row-major order (y outer, x inner) is used for physical samples at
/// `x = -π + ix·2π/n`, `y = -π + iy·2π/n`.
#[derive(Clone)]
pub struct WaveGrid {
    n: usize,
    plans: Arc<Plans>,
    tables: Arc<Tables>,
}

/// Per-index wavevector data in storage order.
struct Tables {
    k1: Vec<f64>,
    k2: Vec<f64>,
    kmag: Vec<f64>,
    kmax: Vec<f64>,
    sign: Vec<f64>,
    partner: Vec<usize>,
    nyquist: Vec<bool>,
    /// Sign-folded synthesis multipliers `(k1 + i k2)/|k|` and `−k2 + i k1`.
    riesz: Vec<Complex64>,
    grad: Vec<Complex64>,
    /// Recently used `|k|^s` tables keyed by the bits of `s`.
    powers: Mutex<Vec<(u64, Arc<[f64]>)>>,
}

const POWER_CACHE: usize = 8;

impl fmt::Debug for WaveGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("WaveGrid").field("n", &self.n).finish()
    }
}

impl PartialEq for WaveGrid {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n
    }
}

impl Eq for WaveGrid {}

impl WaveGrid {
    pub fn new(n: usize) -> Result<Self, SpectralError> {
        if n < 8 || !n.is_power_of_two() {
            return Err(SpectralError::InvalidGridSize(n));
        }
        let mut planner = FftPlanner::new();
        let plans = Plans {
            forward: planner.plan_fft_forward(n),
            inverse: planner.plan_fft_inverse(n),
        };
        let mut tables = Tables {
            k1: Vec::with_capacity(n * n),
            k2: Vec::with_capacity(n * n),
            kmag: Vec::with_capacity(n * n),
            kmax: Vec::with_capacity(n * n),
            sign: Vec::with_capacity(n * n),
            partner: Vec::with_capacity(n * n),
            nyquist: Vec::with_capacity(n * n),
            riesz: Vec::with_capacity(n * n),
            grad: Vec::with_capacity(n * n),
            powers: Mutex::new(Vec::new()),
        };
        for iy in 0..n {
            let k2 = wavenumber(iy, n) as f64;
            for ix in 0..n {
                let k1 = wavenumber(ix, n) as f64;
                tables.k1.push(k1);
                tables.k2.push(k2);
                tables.kmag.push((k1 * k1 + k2 * k2).sqrt());
                tables.kmax.push(k1.abs().max(k2.abs()));
                // samples start at -π, so e^{ik·x_j} carries a factor (-1)^{k1+k2}
                tables.sign.push(if (ix + iy) % 2 == 0 { 1.0 } else { -1.0 });
                tables.partner.push(((n - iy) % n) * n + (n - ix) % n);
                tables.nyquist.push(ix == n / 2 || iy == n / 2);
                let sign = *tables.sign.last().expect("just pushed");
                let kmag = *tables.kmag.last().expect("just pushed");
                tables.riesz.push(if kmag == 0.0 {
                    Complex64::new(0.0, 0.0)
                } else {
                    Complex64::new(k1 / kmag, k2 / kmag) * sign
                });
                tables.grad.push(Complex64::new(-k2, k1) * sign);
            }
        }
        Ok(Self {
            n,
            plans: Arc::new(plans),
            tables: Arc::new(tables),
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.n * self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Grid spacing 2π/n.
    pub fn spacing(&self) -> f64 {
        2.0 * PI / self.n as f64
    }

    /// Area of one collocation cell.
    pub fn cell_area(&self) -> f64 {
        let dx = self.spacing();
        dx * dx
    }

    pub fn coordinate(&self, i: usize) -> f64 {
        -PI + i as f64 * self.spacing()
    }

    pub fn wavenumber(&self, i: usize) -> i64 {
        wavenumber(i, self.n)
    }

    /// Storage index along one axis for wavenumber `k`, or `None` when `k`
    /// is outside `[-n/2, n/2)`.
    pub fn axis_index(&self, k: i64) -> Option<usize> {
        let half = (self.n / 2) as i64;
        if k < -half || k >= half {
            None
        } else if k >= 0 {
            Some(k as usize)
        } else {
            Some((k + self.n as i64) as usize)
        }
    }

    pub fn index(&self, k1: i64, k2: i64) -> Option<usize> {
        Some(self.axis_index(k2)? * self.n + self.axis_index(k1)?)
    }

    pub fn wavevector(&self, idx: usize) -> (i64, i64) {
        (self.wavenumber(idx % self.n), self.wavenumber(idx / self.n))
    }

    /// Euclidean magnitudes |k| in storage order.
    pub fn magnitudes(&self) -> &[f64] {
        &self.tables.kmag
    }

    /// First wavevector components in storage order.
    pub fn k1(&self) -> &[f64] {
        &self.tables.k1
    }

    /// Second wavevector components in storage order.
    pub fn k2(&self) -> &[f64] {
        &self.tables.k2
    }

    /// `max(|k₁|, |k₂|)` in storage order.
    pub fn max_components(&self) -> &[f64] {
        &self.tables.kmax
    }

    /// `|k|^s` in storage order, with 0 at `k = 0`. Tables are cached.
    pub fn powers(&self, s: f64) -> Arc<[f64]> {
        let key = s.to_bits();
        let mut cache = self.tables.powers.lock().unwrap_or_else(|e| e.into_inner());
        if let Some((_, t)) = cache.iter().find(|(k, _)| *k == key) {
            return t.clone();
        }
        let table: Arc<[f64]> = self
            .tables
            .kmag
            .iter()
            .map(|&k| if k == 0.0 { 0.0 } else { k.powf(s) })
            .collect();
        if cache.len() == POWER_CACHE {
            cache.remove(0);
        }
        cache.push((key, table.clone()));
        table
    }

    /// Largest retained |k_j| under the 2/3 rule.
    pub fn dealias_cutoff(&self) -> i64 {
        (self.n / 3) as i64
    }

    pub(crate) fn is_nyquist(&self, idx: usize) -> bool {
        self.tables.nyquist[idx]
    }

    /// Index of the wavevector -k.
    pub(crate) fn partner(&self, idx: usize) -> usize {
        self.tables.partner[idx]
    }

    pub(crate) fn riesz_synthesis(&self) -> &[Complex64] {
        &self.tables.riesz
    }

    pub(crate) fn gradient_synthesis(&self) -> &[Complex64] {
        &self.tables.grad
    }

    /// Phase factor linking DFT output to coefficients on the [-π, π) grid.
    pub(crate) fn signs(&self) -> &[f64] {
        &self.tables.sign
    }

    /// In-place unnormalised 2D DFT over row-major `data`.
    pub(crate) fn fft2(&self, data: &mut [Complex64], inverse: bool) {
        let n = self.n;
        debug_assert_eq!(data.len(), n * n);
        let plan = if inverse {
            &self.plans.inverse
        } else {
            &self.plans.forward
        };
        SCRATCH.with(|cell| {
            let (scratch, spare) = &mut *cell.borrow_mut();
            let need = plan.get_inplace_scratch_len();
            if scratch.len() < need {
                scratch.resize(need, Complex64::new(0.0, 0.0));
            }
            spare.resize(n * n, Complex64::new(0.0, 0.0));
            plan.process_with_scratch(data, &mut scratch[..need]);
            transpose::transpose(data, spare, n, n);
            plan.process_with_scratch(spare, &mut scratch[..need]);
            transpose::transpose(spare, data, n, n);
        });
    }
}

thread_local! {
    // FFT scratch and the transpose target
    static SCRATCH: RefCell<(Vec<Complex64>, Vec<Complex64>)> =
        const { RefCell::new((Vec::new(), Vec::new())) };
}

fn wavenumber(i: usize, n: usize) -> i64 {
    if i < n / 2 {
        i as i64
    } else {
        i as i64 - n as i64
    }
}
