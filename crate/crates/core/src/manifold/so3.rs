use super::{cosc, cosc_d, sinc, sinc_d, EmbeddedManifold};
use crate::error::{Error, Result};
use crate::linalg::{det, dot, hat, mat_mul, mat_tmul, norm, skew, trace, vee, Mat3, IDENTITY3};
use crate::math::{atan2, sqrt};
use crate::rng::PathStream;
use core::f64::consts::PI;

/// The rotation group `SO(3)` as row-major 3×3 matrices in `R⁹`, with the
/// bi-invariant metric `⟨xξ, xη⟩ = ½ tr(ξᵀη)`. Geodesic distance is the
/// rotation angle.
#[derive(Debug, Default, Clone, Copy)]
pub struct So3;

impl So3 {
    /// Rodrigues formula for `exp([ω]×)`.
    pub fn rodrigues(w: &[f64; 3]) -> Mat3 {
        let th = norm(w);
        let o = hat(w);
        let o2 = mat_mul(&o, &o);
        let (a, b) = (sinc(th), cosc(th));
        core::array::from_fn(|i| IDENTITY3[i] + a * o[i] + b * o2[i])
    }

    fn rodrigues_derivative(w: &[f64; 3], dw: &[f64; 3]) -> Mat3 {
        let th = norm(w);
        let o = hat(w);
        let d = hat(dw);
        let o2 = mat_mul(&o, &o);
        let sym = {
            let p = mat_mul(&d, &o);
            let q = mat_mul(&o, &d);
            core::array::from_fn::<f64, 9, _>(|i| p[i] + q[i])
        };
        let wd = dot(w, dw);
        let (a, b) = (sinc(th), cosc(th));
        let (da, db) = (sinc_d(th) * wd, cosc_d(th) * wd);
        core::array::from_fn(|i| a * d[i] + b * sym[i] + da * o[i] + db * o2[i])
    }

    /// Rotation angle in `[0, π]` and `sin θ · axis`.
    fn angle_axis(r: &Mat3) -> (f64, [f64; 3]) {
        let w = vee(r);
        (atan2(norm(&w), 0.5 * (trace(r) - 1.0)), w)
    }

    pub fn rotation_angle(r: &Mat3) -> f64 {
        Self::angle_axis(r).0
    }

    /// Rotation vector of `r`, for angles below `π − 1e−6`.
    pub fn log_rotation(r: &Mat3) -> Option<[f64; 3]> {
        let (th, w) = Self::angle_axis(r);
        if th > PI - 1e-6 {
            return None;
        }
        let f = 1.0 / sinc(th);
        Some(core::array::from_fn(|i| f * w[i]))
    }

    /// Orthogonality defect `‖xᵀx − I‖_F`.
    pub fn orthogonality_defect(x: &Mat3) -> f64 {
        let g = mat_tmul(x, x);
        sqrt((0..9).map(|i| (g[i] - IDENTITY3[i]).powi(2)).sum())
    }

    pub fn from_quaternion(q: &[f64; 4]) -> Mat3 {
        let [w, x, y, z] = *q;
        [
            1.0 - 2.0 * (y * y + z * z),
            2.0 * (x * y - w * z),
            2.0 * (x * z + w * y),
            2.0 * (x * y + w * z),
            1.0 - 2.0 * (x * x + z * z),
            2.0 * (y * z - w * x),
            2.0 * (x * z - w * y),
            2.0 * (y * z + w * x),
            1.0 - 2.0 * (x * x + y * y),
        ]
    }
}

impl EmbeddedManifold<9, 3> for So3 {
    fn name(&self) -> &'static str {
        "SO3"
    }

    fn metric_scale(&self) -> f64 {
        0.5
    }

    fn residual(&self, x: &[f64; 9]) -> f64 {
        Self::orthogonality_defect(x) + (det(x) - 1.0).abs()
    }

    fn project(&self, x: &[f64; 9], v: &[f64; 9]) -> [f64; 9] {
        mat_mul(x, &skew(&mat_tmul(x, v)))
    }

    fn project_derivative(&self, x: &[f64; 9], dx: &[f64; 9], v: &[f64; 9]) -> [f64; 9] {
        let a = mat_mul(dx, &skew(&mat_tmul(x, v)));
        let b = mat_mul(x, &skew(&mat_tmul(dx, v)));
        core::array::from_fn(|i| a[i] + b[i])
    }

    fn exp(&self, x: &[f64; 9], v: &[f64; 9]) -> [f64; 9] {
        mat_mul(x, &Self::rodrigues(&vee(&mat_tmul(x, v))))
    }

    fn exp_derivative(&self, x: &[f64; 9], v: &[f64; 9], dx: &[f64; 9], dv: &[f64; 9]) -> [f64; 9] {
        let w = vee(&mat_tmul(x, v));
        let p = mat_tmul(dx, v);
        let q = mat_tmul(x, dv);
        let dw = vee(&core::array::from_fn(|i| p[i] + q[i]));
        let a = mat_mul(dx, &Self::rodrigues(&w));
        let b = mat_mul(x, &Self::rodrigues_derivative(&w, &dw));
        core::array::from_fn(|i| a[i] + b[i])
    }

    fn log(&self, x: &[f64; 9], y: &[f64; 9]) -> Option<[f64; 9]> {
        Self::log_rotation(&mat_tmul(x, y)).map(|w| mat_mul(x, &hat(&w)))
    }

    fn distance(&self, x: &[f64; 9], y: &[f64; 9]) -> f64 {
        Self::rotation_angle(&mat_tmul(x, y))
    }

    fn injectivity_radius(&self) -> f64 {
        PI
    }

    /// Levi-Civita transport along `s ↦ x exp(sξ)`: `xη ↦ x E η E` with
    /// `E = exp(ξ/2)`.
    fn transport(&self, x: &[f64; 9], y: &[f64; 9], v: &[f64; 9]) -> Result<[f64; 9]> {
        let r = mat_tmul(x, y);
        let w = Self::log_rotation(&r).ok_or(Error::StepTooLarge {
            distance: Self::rotation_angle(&r),
            limit: PI - 1e-6,
        })?;
        let e = Self::rodrigues(&core::array::from_fn(|i| 0.5 * w[i]));
        let eta = mat_tmul(x, v);
        Ok(mat_mul(&mat_mul(x, &e), &mat_mul(&eta, &e)))
    }

    fn ricci(&self, x: &[f64; 9], v: &[f64; 9]) -> [f64; 9] {
        let p = self.project(x, v);
        core::array::from_fn(|i| 0.5 * p[i])
    }

    fn reference_frame(&self, x: &[f64; 9]) -> [[f64; 9]; 3] {
        core::array::from_fn(|k| {
            let mut e = [0.0; 3];
            e[k] = 1.0;
            mat_mul(x, &hat(&e))
        })
    }

    fn base_point(&self) -> [f64; 9] {
        IDENTITY3
    }

    fn sample_uniform(&self, stream: &mut PathStream) -> [f64; 9] {
        loop {
            let q: [f64; 4] = core::array::from_fn(|_| stream.normal());
            let n = norm(&q);
            if n > 1e-12 {
                return Self::from_quaternion(&core::array::from_fn(|i| q[i] / n));
            }
        }
    }

    fn volume(&self) -> f64 {
        8.0 * PI * PI
    }
}
