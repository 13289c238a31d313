//! Simulation of a two-level quantum emitter driven first by a classical
//! Gaussian pulse and then, through a cascaded master equation, by its own
//! emitted wave packet.
//!
//! The crate is organized bottom-up:
//!
//! - [`linalg`]: self-contained dense complex matrices (dims ≤ 16) with
//!   Hermitian eigenvalues and a matrix exponential.
//! - [`quantum`]: two-level-system operators, physical parameters, the
//!   Gaussian drive envelope, density matrices, and time grids.
//! - [`lindblad`]: driven and cascaded Liouvillians, RK4 propagation, and
//!   two-time correlation maps via quantum regression.
//! - [`observables`]: photon fluxes, averaged/gated g̅²(0), detector-jitter
//!   convolution, decay fits, and HOM scalar formulas.
//!
//! All values are immutable after construction and all operations are pure,
//! so everything can be shared freely across worker threads; correlation
//! maps parallelize internally over rows of the map.

pub mod error;
pub mod linalg;
pub mod lindblad;
pub mod observables;
pub mod quantum;

pub use num_complex::Complex64;

pub use error::{Error, Result};
pub use linalg::ComplexMatrix;
pub use lindblad::{correlation_map, dissipator, propagate, Liouvillian, Trajectory};
pub use observables::{
    convolve_jitter_1d, convolve_jitter_2d, fit_monoexponential, flux_first, flux_second, g2_bar,
    g2_bar_gated, indistinguishability, visibility, CorrelationMap, FitResult, FluxTrace,
};
pub use quantum::{
    collective_jump, embed, gaussian_rabi, sigma_minus, sigma_plus, sigma_z, DensityMatrix,
    PulseSpec, SystemParams, TimeGrid,
};
