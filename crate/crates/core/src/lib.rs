//! Periodic Gabor transforms with biorthogonal exchange.
//!
//! Signals of `N` samples are expanded on a critically sampled lattice of
//! `n_time × n_freq = N` Gaussians. The crate provides exact analysis and
//! synthesis, top-K compression with least-squares refinement, separable 2-D
//! transforms for images, Fourier baselines, and the file formats used by
//! the `pgb` command-line tool.

pub mod compression;
pub mod error;
pub mod image2d;
pub mod kernel;
pub mod lattice;
pub mod linalg;
pub mod signal;
pub mod signalio;
pub mod transform;

pub use error::{Error, Mode, Result};
pub use lattice::{build_config, build_gabor_matrix, GaborMatrix, LatticeConfig};
pub use signal::Signal1D;
pub use transform::{build_plan, CoefficientSet, TransformPlan};

pub use num_complex::Complex64;
