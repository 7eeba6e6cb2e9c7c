//! Periodic Fourier fields on the 2π-torus: transforms, fractional
//! multipliers and norms.

mod field;
mod grid;
mod random;
pub mod snapshot;

use thiserror::Error;

pub use field::{FourierField, PhysicalField};
pub use grid::WaveGrid;
pub use random::{random_field, random_field_with};

#[derive(Debug, Error)]
pub enum SpectralError {
    #[error("grid size {0} must be a power of two and at least 8")]
    InvalidGridSize(usize),
    #[error("grid mismatch: {left} vs {right}")]
    GridMismatch { left: usize, right: usize },
    #[error("expected {expected} values, found {found}")]
    LengthMismatch { expected: usize, found: usize },
    #[error("wavevector ({k1}, {k2}) not representable on this grid")]
    ModeOutOfRange { k1: i64, k2: i64 },
    #[error("snapshot: {0}")]
    Snapshot(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
