//! Compact embedded manifolds: the circle, the 2-sphere and the rotation group.
//!
//! Points and tangent vectors are ambient coordinate arrays `[f64; A]`; the
//! intrinsic dimension is `N`. Tangent vectors at `x` are ambient vectors in
//! the range of the orthogonal projector `P_x`. The Riemannian metric is the
//! ambient inner product times [`EmbeddedManifold::metric_scale`].

mod circle;
pub mod connection;
pub mod curvature;
mod frame;
pub mod heat_kernel;
mod so3;
mod sphere;

pub use circle::Circle;
pub use connection::{
    adjoint_semi_connection, induced_connection, Connection, InducedConnection, LeftFlat, LeviCivita, RightFlat,
};
pub use curvature::{laplacian_fd, ricci_fd};
pub use frame::{transport_along, Frame};
pub use heat_kernel::{CircleHeatKernel, HeatKernel, So3HeatKernel, SphereHeatKernel};
pub use so3::So3;
pub use sphere::Sphere;

use crate::error::{Error, Result};
use crate::linalg::{dot, scale, sub};
use crate::math::sqrt;
use crate::rng::PathStream;

/// Points closer than this to the manifold are accepted by checked operations.
pub const ON_MANIFOLD_TOL: f64 = 1e-8;

/// A compact manifold embedded in `R^A` with intrinsic dimension `N`.
///
/// The unchecked methods (`project`, `exp`, …) are smooth ambient formulas
/// and are differentiated exactly by the `*_derivative` methods; the
/// variational integrator relies on that consistency.
pub trait EmbeddedManifold<const A: usize, const N: usize>: Send + Sync {
    fn name(&self) -> &'static str;

    /// Riemannian metric is `metric_scale · ⟨u, v⟩_ambient`.
    fn metric_scale(&self) -> f64 {
        1.0
    }

    /// Distance-to-manifold estimate.
    fn residual(&self, x: &[f64; A]) -> f64;

    /// Orthogonal projection `P_x v` onto `T_xM`.
    fn project(&self, x: &[f64; A], v: &[f64; A]) -> [f64; A];

    /// `D_x(P_x v)[dx]` for fixed `v`.
    fn project_derivative(&self, x: &[f64; A], dx: &[f64; A], v: &[f64; A]) -> [f64; A];

    /// Riemannian exponential.
    fn exp(&self, x: &[f64; A], v: &[f64; A]) -> [f64; A];

    /// Directional derivative of `(x, v) ↦ exp(x, v)` along `(dx, dv)`.
    fn exp_derivative(&self, x: &[f64; A], v: &[f64; A], dx: &[f64; A], dv: &[f64; A]) -> [f64; A];

    /// Inverse of `exp` on the injectivity ball; `None` near the cut locus.
    fn log(&self, x: &[f64; A], y: &[f64; A]) -> Option<[f64; A]>;

    fn distance(&self, x: &[f64; A], y: &[f64; A]) -> f64;

    fn injectivity_radius(&self) -> f64;

    /// Parallel transport of `v ∈ T_xM` along the minimizing geodesic to `y`.
    fn transport(&self, x: &[f64; A], y: &[f64; A], v: &[f64; A]) -> Result<[f64; A]>;

    /// `Ric^#` at `x` applied to a tangent vector.
    fn ricci(&self, x: &[f64; A], v: &[f64; A]) -> [f64; A];

    /// Some orthonormal frame of `T_xM`.
    fn reference_frame(&self, x: &[f64; A]) -> [[f64; A]; N];

    fn base_point(&self) -> [f64; A];

    /// A draw from normalized Riemannian volume.
    fn sample_uniform(&self, stream: &mut PathStream) -> [f64; A];

    fn volume(&self) -> f64;

    fn inner(&self, u: &[f64; A], v: &[f64; A]) -> f64 {
        self.metric_scale() * dot(u, v)
    }

    fn norm(&self, v: &[f64; A]) -> f64 {
        sqrt(self.inner(v, v))
    }

    /// Riemannian gradient from an ambient gradient.
    fn gradient(&self, x: &[f64; A], ambient: &[f64; A]) -> [f64; A] {
        scale(1.0 / self.metric_scale(), &self.project(x, ambient))
    }

    fn check_point(&self, x: &[f64; A]) -> Result<()> {
        let r = self.residual(x);
        if r.is_finite() && r <= ON_MANIFOLD_TOL {
            Ok(())
        } else {
            Err(Error::domain(alloc::format!("point is off the manifold (residual {r:.3e})")))
        }
    }

    fn check_tangent(&self, x: &[f64; A], v: &[f64; A]) -> Result<()> {
        let off = crate::linalg::norm(&sub(v, &self.project(x, v)));
        let size = 1.0 + crate::linalg::norm(v);
        if off <= ON_MANIFOLD_TOL * size {
            Ok(())
        } else {
            Err(Error::domain(alloc::format!("vector is not tangent (normal part {off:.3e})")))
        }
    }

    /// Checked `P_x v`.
    fn tangent_project(&self, x: &[f64; A], v: &[f64; A]) -> Result<[f64; A]> {
        self.check_point(x)?;
        Ok(self.project(x, v))
    }

    /// Checked exponential.
    fn retract(&self, x: &[f64; A], v: &[f64; A]) -> Result<[f64; A]> {
        self.check_point(x)?;
        self.check_tangent(x, v)?;
        Ok(self.exp(x, v))
    }

    /// Checked `Ric^#` application.
    fn ricci_operator(&self, x: &[f64; A], v: &[f64; A]) -> Result<[f64; A]> {
        self.check_point(x)?;
        Ok(self.ricci(x, v))
    }
}

/// `sin r / r`
pub(crate) fn sinc(r: f64) -> f64 {
    if r.abs() < 2e-2 {
        let r2 = r * r;
        1.0 - r2 / 6.0 * (1.0 - r2 / 20.0 * (1.0 - r2 / 42.0))
    } else {
        crate::math::sin(r) / r
    }
}

/// `sinc'(r) / r = (r cos r − sin r) / r³`
pub(crate) fn sinc_d(r: f64) -> f64 {
    if r.abs() < 2e-2 {
        let r2 = r * r;
        -1.0 / 3.0 + r2 / 30.0 - r2 * r2 / 840.0 + r2 * r2 * r2 / 45360.0
    } else {
        (r * crate::math::cos(r) - crate::math::sin(r)) / (r * r * r)
    }
}

/// `(1 − cos r) / r²`
pub(crate) fn cosc(r: f64) -> f64 {
    if r.abs() < 2e-2 {
        let r2 = r * r;
        0.5 - r2 / 24.0 + r2 * r2 / 720.0 - r2 * r2 * r2 / 40320.0
    } else {
        (1.0 - crate::math::cos(r)) / (r * r)
    }
}

/// `cosc'(r) / r = (r sin r − 2(1 − cos r)) / r⁴`
pub(crate) fn cosc_d(r: f64) -> f64 {
    if r.abs() < 2e-2 {
        let r2 = r * r;
        -1.0 / 12.0 + r2 / 180.0 - r2 * r2 / 6720.0 + r2 * r2 * r2 / 453600.0
    } else {
        (r * crate::math::sin(r) - 2.0 * (1.0 - crate::math::cos(r))) / (r * r * r * r)
    }
}

/// Gram–Schmidt in the metric `scale·⟨,⟩`; returns the largest change made to
/// any column.
pub(crate) fn gram_schmidt<const A: usize, const N: usize>(cols: &mut [[f64; A]; N], metric: f64) -> f64 {
    let mut worst: f64 = 0.0;
    for j in 0..N {
        let before = cols[j];
        for k in 0..j {
            let c = metric * dot(&cols[j], &cols[k]);
            cols[j] = crate::linalg::axpy(-c, &cols[k], &cols[j]);
        }
        let n = sqrt(metric * dot(&cols[j], &cols[j]));
        cols[j] = scale(1.0 / n, &cols[j]);
        worst = worst.max(sqrt(metric) * crate::linalg::norm(&sub(&cols[j], &before)));
    }
    worst
}
