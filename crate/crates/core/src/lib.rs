//! Numerical laboratory for SDEs whose drift is a distribution of negative
//! Sobolev order.
//!
//! The pipeline is: generate a distributional drift `b` ([`drifts`]), solve the
//! Kolmogorov PDE `du/dt + (1/2) Delta u + b . grad u - (lambda+1) u = -b` in
//! mild form ([`kolmogorov`]), build the transform `phi(t,x) = x + u(t,x)` and
//! its inverse ([`zvonkin`]), simulate the transformed SDE and map it back
//! ([`sde`]), and compare against classical solutions driven by mollified
//! drifts ([`lab`]).
//!
//! Everything lives on a periodic lattice ([`spectral`]); the regularized
//! product `b . grad u` is in [`paraproduct`].

pub mod drifts;
pub mod error;
pub mod kolmogorov;
pub mod lab;
mod linalg;
pub mod paraproduct;
pub mod sde;
pub mod spectral;
pub mod zvonkin;

pub use error::{Error, Result};
