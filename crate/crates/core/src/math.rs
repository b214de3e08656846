// Float intrinsics for no_std builds.
pub(crate) use libm::{atan2, cos, exp, sin, sqrt, tanh};

#[inline]
pub(crate) fn abs(x: f64) -> f64 {
    libm::fabs(x)
}
