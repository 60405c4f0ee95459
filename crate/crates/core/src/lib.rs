//! Numerical core for positive radial solutions of
//! `-Δu + λu = t u^{q-1} + u^{2*-1}` in `R^N`, the normalized problems they
//! generate by rescaling, and a harmonically confined cubic-type problem.
//!
//! The crate is `no_std` (with `alloc`). File formats, caching and the CLI
//! live in the `nlsmix` crate.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod confinement;
pub mod continuation;
pub mod error;
pub mod functionals;
pub mod math;
pub mod ode;
pub mod params;
pub mod profile;
pub mod reduction;
pub mod shooting;

pub use error::{Error, Result};
pub use params::ProblemParams;
pub use profile::{Norms, RadialProfile, Tail};
