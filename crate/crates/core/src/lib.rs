//! Simulator and verification lab for three stacked fluid layers in a porous
//! medium (the three-phase Muskat problem).
//!
//! * [`geometry`] holds the physical parameters, the periodic grid and states.
//! * [`kernels`] evaluates the singular kernels and their exact identities.
//! * [`velocity`] assembles velocities and right-hand sides by quadrature.
//! * [`norms`] computes analytic-strip norms, dissipation and energy.
//! * [`evolution`] integrates in time with width and collision monitors.
//! * [`experiments`] drives configured runs, sweeps and verification suites.

pub mod error;
pub mod evolution;
pub mod experiments;
pub mod geometry;
pub mod kernels;
pub mod norms;
pub mod spectral;
pub mod velocity;

pub use error::{MuskatError, Result};
pub use rustfft::num_complex::Complex64;
