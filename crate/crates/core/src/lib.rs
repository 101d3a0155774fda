//! Neural emulation of an atmospheric radiative transfer forward model.
//!
//! The crate is organized around a fully specified synthetic forward model
//! ([`oracle`]) that maps atmospheric state and surface reflectance to
//! top-of-atmosphere reflectance spectra. On top of it sit:
//!
//! - [`sampling`]: design-matrix generation (uniform / Latin hypercube / grid)
//!   with train/validation/test partitioning and input standardization,
//! - [`nn`]: a self-contained feed-forward network engine (forward, reverse-mode
//!   gradients, Glorot init, Adam, analytic input Jacobians, serialization),
//! - [`emulator`]: per-channel subnetworks trained sequentially with weight
//!   propagation, assembled into a spectral surrogate with an analytic,
//!   channel-diagonal reflectance Jacobian,
//! - [`lut`]: the status-quo baseline, a dense multilinear lookup table,
//! - [`retrieval`]: surface-reflectance and joint-state inversion driven by the
//!   emulator's Jacobians,
//! - [`bench`]: accuracy-vs-throughput comparison of oracle, emulator, and LUT.
//!
//! All randomness flows through seedable ChaCha8 generators; fixed seeds give
//! identical results within one build.

pub mod bench;
pub mod emulator;
pub mod error;
pub mod linalg;
pub mod lut;
pub mod nn;
pub mod oracle;
pub mod retrieval;
pub mod sampling;

pub use error::{Error, Result};
