//! Single-photon scattering in a one-dimensional coupled-resonator waveguide
//! coupled at two sites to a giant atom with complex on-site energy.
//!
//! The crate covers the whole pipeline: closed-form scattering amplitudes and
//! their stationary-state oracle, spectral singularities and Siegert poles,
//! bound-state profiles and overlap coefficients, and time-domain Gaussian
//! wave-packet simulations on a finite lattice.

// `!(x > 0.0)` style checks are used on purpose so that NaN is rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

#[cfg(feature = "runner")]
pub mod acceptance;
pub mod config;
pub mod dynamics;
pub mod error;
pub mod model;
pub mod modes;
pub mod ode;
#[cfg(feature = "runner")]
pub mod output;
pub mod quad;
#[cfg(feature = "runner")]
pub mod run;
pub mod scattering;
pub mod spectral;

pub use error::{Error, Result};
pub use model::SystemParams;

pub use num_complex::Complex64 as C64;
