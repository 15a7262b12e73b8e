//! Numerical verification of Gaussian comparison inequalities.
//!
//! This crate estimates both sides of the classical comparison inequalities
//! for Gaussian processes and random operators (Slepian/Gordon-type bounds,
//! the two-sided operator-norm bounds, a Poincaré-type inequality, and the
//! monotone Gaussian interpolation curve) by Monte Carlo, and reports each
//! inequality with a statistical verdict. It also constructs almost-spherical
//! sections: subspaces on which a Lipschitz functional stays within a
//! relative tolerance of its Gaussian mean, together with a machine-checkable
//! certificate.
//!
//! Everything is deterministic given a [`rng::SeedStream`]: estimation is
//! parallel over samples, but per-sample substreams and a fixed reduction
//! order make results independent of worker count.

pub mod dvoretzky;
pub mod error;
pub mod gaussian;
pub mod inequalities;
pub mod interpolation;
pub mod mc;
pub mod norms;
pub mod operators;
pub mod rng;

pub use error::{Error, ErrorClass, Result};
pub use mc::MCEstimate;
pub use rng::SeedStream;
