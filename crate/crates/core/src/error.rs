//! Error type shared by every module of the crate.

use thiserror::Error;

/// Failures raised by the simulator, the kernel library and the CLI layer.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum MuskatError {
    /// Densities, gap or grid parameters outside their admissible ranges.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    /// The two interfaces touch (or cross) somewhere on the grid.
    #[error("interfaces collide: minimum distance {distance:.3e} at x = {x:.6}")]
    Collision { distance: f64, x: f64 },
    /// Fields that do not decay to the tail tolerance near the grid ends.
    #[error("field `{field}` does not decay near the domain ends (tail {tail:.3e} > {tolerance:.3e})")]
    TailNotDecayed {
        field: String,
        tail: f64,
        tolerance: f64,
    },
    /// Weighted Fourier norms that would overflow or that the grid cannot represent.
    #[error("resolution loss: {0}")]
    ResolutionLoss(String),
    /// The analyticity strip width dropped to zero or below.
    #[error("analyticity strip collapsed (gamma = {0:.3e})")]
    WidthCollapse(f64),
    /// NaN or infinity appeared in a computed field.
    #[error("non-finite value in {0}")]
    NonFinite(String),
    /// Mismatched array lengths or similar caller errors.
    #[error("shape mismatch: {0}")]
    Shape(String),
    /// Configuration file problems.
    #[error("configuration error: {0}")]
    Config(String),
    /// File-system failures.
    #[error("i/o error: {0}")]
    Io(String),
    /// Malformed CSV input given to the plotter.
    #[error("parse error at row {row}: {message}")]
    Parse { row: usize, message: String },
}

pub type Result<T> = std::result::Result<T, MuskatError>;

impl From<std::io::Error> for MuskatError {
    fn from(e: std::io::Error) -> Self {
        MuskatError::Io(e.to_string())
    }
}

impl From<serde_json::Error> for MuskatError {
    fn from(e: serde_json::Error) -> Self {
        MuskatError::Config(e.to_string())
    }
}
