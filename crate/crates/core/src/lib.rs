//! Numerical laboratory for local central limit theorems on Wiener chaos.
//!
//! The crate is organised bottom-up:
//!
//! - [`hermite`]: Hermite polynomials, normalized Hermite functions, Gaussian integrals.
//! - [`schwartz`]: truncated Hermite-function representations of tempered distributions.
//! - [`stein`]: explicit solutions of the distributional Stein equation.
//! - [`fgn`]: fractional Gaussian noise covariance and exact circulant sampling.
//! - [`quadform`]: exact cumulants and densities of second-chaos statistics.
//! - [`cumulants`]: Breuer-Major functionals of general Hermite rank.
//! - [`density`]: density curves, estimators, distances and Edgeworth references.
//! - [`rates`]: experiment orchestration and log-log slope fitting.
//! - [`verify`]: the invariant batteries behind `lclt verify`.

pub mod cumulants;
pub mod density;
pub mod error;
pub mod fgn;
pub mod hermite;
pub mod quadform;
pub mod quadrature;
pub mod rates;
pub mod schwartz;
pub mod stein;
pub mod verify;

pub use error::{Error, Result};
