//! Discrete classical Wiener space.
//!
//! Paths live on a [`TimeGrid`]; a Brownian path is a [`DrivingPath`] of
//! independent Gaussian increments, and Cameron–Martin directions are
//! piecewise linear with piecewise-constant derivative. On this
//! finite-dimensional Gaussian space the quasi-invariance formula and the
//! integration by parts formula hold exactly, so the Monte Carlo checks here
//! only carry sampling error.

mod brownian;
mod cameron_martin;
mod cylinder;
mod grid;
mod ou;
mod skorohod;
mod verify;

pub use brownian::{sample_brownian, DrivingPath};
pub(crate) use brownian::check_compatible;
pub use cameron_martin::{cm_density, cm_norm_sq, paley_wiener, CameronMartinPath};
pub use cylinder::{h_derivative_flat, FlatCylinderFunction};
pub use grid::TimeGrid;
pub use ou::{ou_apply, SmoothFunction};
pub use skorohod::{
    check_adaptedness, skorohod_discrete, ClosureField, DerivativeSource, HVectorField,
    SkorohodValue,
};
pub use verify::{verify_cm_shift, verify_ibp_flat};

/// Central-difference step used by every finite-difference fallback.
#[inline]
pub fn fd_step(x: f64) -> f64 {
    1e-5 * (1.0 + x.abs())
}
