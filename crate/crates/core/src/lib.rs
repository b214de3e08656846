//! Discrete stochastic analysis on path spaces.
//!
//! The crate is `no_std` (with `alloc`). It provides:
//!
//! * [`wiener`]: a finite-dimensional model of classical Wiener space with
//!   Cameron–Martin calculus, Paley–Wiener integrals, the quasi-invariance
//!   density, flat integration by parts, a discrete Skorohod divergence and the
//!   Ornstein–Uhlenbeck operator.
//! * [`manifold`]: geometry of the embedded circle, sphere and rotation group,
//!   including parallel transport, Ricci curvature, induced connections and
//!   heat-kernel series.
//! * [`sde`]: a Wong–Zakai (Heun) Stratonovich integrator producing Itô maps,
//!   stochastic development, the variational derivative of the Itô map,
//!   generators, Brownian bridges and Bismut loops.
//! * [`pathcalc`]: Bismut tangents, damped derivatives, the fibre-integrated
//!   derivative of the Itô map, cylinder functions and one-forms.
//!
//! Monte Carlo verification routines are generic over an [`Ensemble`], which
//! maps a closure over path indices. [`ensemble::Sequential`] is provided here;
//! the `pathspace` crate supplies a thread-pool implementation. Reductions
//! always fold per-path slots in index order, so results do not depend on
//! scheduling.
#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod ensemble;
pub mod error;
pub mod linalg;
pub(crate) mod math;
pub mod quadrature;
pub mod rng;
pub mod stats;

pub mod manifold;
pub mod pathcalc;
pub mod sde;
pub mod wiener;

pub use ensemble::Ensemble;
pub use error::{Error, Result};
pub use rng::{PathStream, SeedStream};
