use super::sphere;
use super::EmbeddedManifold;
use crate::error::Result;
use crate::math::{atan2, cos, sin};
use crate::rng::PathStream;
use core::f64::consts::PI;

/// The unit circle `S¹ ⊂ R²`.
#[derive(Debug, Default, Clone, Copy)]
pub struct Circle;

impl Circle {
    pub fn point(angle: f64) -> [f64; 2] {
        [cos(angle), sin(angle)]
    }

    pub fn angle(x: &[f64; 2]) -> f64 {
        atan2(x[1], x[0])
    }

    /// Unit tangent `Jx` in the direction of increasing angle.
    pub fn unit_tangent(x: &[f64; 2]) -> [f64; 2] {
        [-x[1], x[0]]
    }

    /// `∫_{S¹} f` by the `n`-point trapezoid rule (spectrally accurate for
    /// smooth periodic integrands).
    pub fn integrate<F: FnMut(&[f64; 2]) -> f64>(n: usize, mut f: F) -> f64 {
        let h = 2.0 * PI / n as f64;
        (0..n).map(|k| f(&Self::point(k as f64 * h))).sum::<f64>() * h
    }

    /// Angle from `y` to `x` in `(−π, π]`.
    pub fn signed_angle(x: &[f64; 2], y: &[f64; 2]) -> f64 {
        atan2(y[0] * x[1] - y[1] * x[0], y[0] * x[0] + y[1] * x[1])
    }
}

impl EmbeddedManifold<2, 1> for Circle {
    fn name(&self) -> &'static str {
        "S1"
    }

    fn residual(&self, x: &[f64; 2]) -> f64 {
        sphere::residual(x)
    }

    fn project(&self, x: &[f64; 2], v: &[f64; 2]) -> [f64; 2] {
        sphere::project(x, v)
    }

    fn project_derivative(&self, x: &[f64; 2], dx: &[f64; 2], v: &[f64; 2]) -> [f64; 2] {
        sphere::project_derivative(x, dx, v)
    }

    fn exp(&self, x: &[f64; 2], v: &[f64; 2]) -> [f64; 2] {
        sphere::exp(x, v)
    }

    fn exp_derivative(&self, x: &[f64; 2], v: &[f64; 2], dx: &[f64; 2], dv: &[f64; 2]) -> [f64; 2] {
        sphere::exp_derivative(x, v, dx, dv)
    }

    fn log(&self, x: &[f64; 2], y: &[f64; 2]) -> Option<[f64; 2]> {
        sphere::log(x, y)
    }

    fn distance(&self, x: &[f64; 2], y: &[f64; 2]) -> f64 {
        sphere::distance(x, y)
    }

    fn injectivity_radius(&self) -> f64 {
        PI
    }

    fn transport(&self, x: &[f64; 2], y: &[f64; 2], v: &[f64; 2]) -> Result<[f64; 2]> {
        sphere::transport(x, y, v)
    }

    fn ricci(&self, _x: &[f64; 2], _v: &[f64; 2]) -> [f64; 2] {
        [0.0; 2]
    }

    fn reference_frame(&self, x: &[f64; 2]) -> [[f64; 2]; 1] {
        [Self::unit_tangent(x)]
    }

    fn base_point(&self) -> [f64; 2] {
        [1.0, 0.0]
    }

    fn sample_uniform(&self, stream: &mut PathStream) -> [f64; 2] {
        Self::point(2.0 * PI * stream.uniform())
    }

    fn volume(&self) -> f64 {
        2.0 * PI
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::dist;

    #[test]
    fn exp_rotates_by_arc_length() {
        let x = Circle::point(0.4);
        let y = Circle.exp(&x, &crate::linalg::scale(1.3, &Circle::unit_tangent(&x)));
        assert!(dist(&y, &Circle::point(1.7)) < 1e-15);
        assert!((Circle::signed_angle(&y, &x) - 1.3).abs() < 1e-15);
        assert!((Circle::signed_angle(&x, &y) + 1.3).abs() < 1e-15);
    }

    #[test]
    fn transport_keeps_unit_tangent() {
        let x = Circle::point(-2.0);
        let y = Circle::point(-0.5);
        let v = Circle::unit_tangent(&x);
        let t = Circle.transport(&x, &y, &v).unwrap();
        assert!(dist(&t, &Circle::unit_tangent(&y)) < 1e-15);
        let t = Circle.transport(&y, &x, &Circle::unit_tangent(&y)).unwrap();
        assert!(dist(&t, &v) < 1e-15);
    }
}
