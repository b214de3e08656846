use super::{sinc, sinc_d, EmbeddedManifold};
use crate::error::{Error, Result};
use crate::linalg::{axpy, dot, lin2, norm, scale};
use crate::math::{atan2, cos, sin, sqrt};
use crate::rng::PathStream;
use core::f64::consts::PI;

// Unit-sphere formulas shared by the circle and the 2-sphere.

pub(crate) fn residual<const A: usize>(x: &[f64; A]) -> f64 {
    (norm(x) - 1.0).abs()
}

pub(crate) fn project<const A: usize>(x: &[f64; A], v: &[f64; A]) -> [f64; A] {
    axpy(-dot(x, v), x, v)
}

pub(crate) fn project_derivative<const A: usize>(x: &[f64; A], dx: &[f64; A], v: &[f64; A]) -> [f64; A] {
    lin2(-dot(dx, v), x, -dot(x, v), dx)
}

pub(crate) fn exp<const A: usize>(x: &[f64; A], v: &[f64; A]) -> [f64; A] {
    let r = norm(v);
    let y = lin2(cos(r), x, sinc(r), v);
    scale(1.0 / norm(&y), &y)
}

pub(crate) fn exp_derivative<const A: usize>(
    x: &[f64; A],
    v: &[f64; A],
    dx: &[f64; A],
    dv: &[f64; A],
) -> [f64; A] {
    let r = norm(v);
    let (c, s, g) = (cos(r), sinc(r), sinc_d(r));
    let vdv = dot(v, dv);
    let y = lin2(c, x, s, v);
    let dy: [f64; A] = core::array::from_fn(|i| c * dx[i] - s * vdv * x[i] + s * dv[i] + g * vdv * v[i]);
    let ny = norm(&y);
    let z = scale(1.0 / ny, &y);
    let zdy = dot(&z, &dy);
    core::array::from_fn(|i| (dy[i] - zdy * z[i]) / ny)
}

/// `(θ, w)` with `w = y − ⟨x,y⟩x` and `θ` the great-circle angle.
fn angle_and_normal<const A: usize>(x: &[f64; A], y: &[f64; A]) -> (f64, [f64; A]) {
    let c = dot(x, y);
    let w = axpy(-c, x, y);
    (atan2(norm(&w), c), w)
}

pub(crate) fn log<const A: usize>(x: &[f64; A], y: &[f64; A]) -> Option<[f64; A]> {
    let (theta, w) = angle_and_normal(x, y);
    if theta > PI - 1e-6 {
        return None;
    }
    let s = norm(&w);
    if s == 0.0 {
        return Some([0.0; A]);
    }
    Some(scale(theta / s, &w))
}

pub(crate) fn distance<const A: usize>(x: &[f64; A], y: &[f64; A]) -> f64 {
    angle_and_normal(x, y).0
}

pub(crate) fn transport<const A: usize>(x: &[f64; A], y: &[f64; A], v: &[f64; A]) -> Result<[f64; A]> {
    let (theta, w) = angle_and_normal(x, y);
    if theta > PI - 1e-6 {
        return Err(Error::StepTooLarge {
            distance: theta,
            limit: PI - 1e-6,
        });
    }
    let s = norm(&w);
    if s == 0.0 {
        return Ok(*v);
    }
    let u = scale(1.0 / s, &w);
    let a = dot(v, &u);
    let moved = lin2(cos(theta), &u, -sin(theta), x);
    Ok(core::array::from_fn(|i| v[i] - a * u[i] + a * moved[i]))
}

pub(crate) fn reference_frame<const A: usize, const N: usize>(x: &[f64; A]) -> [[f64; A]; N] {
    debug_assert_eq!(N + 1, A);
    let mut order: [usize; A] = core::array::from_fn(|i| i);
    order.sort_by(|&a, &b| x[a].abs().total_cmp(&x[b].abs()));
    let mut cols: [[f64; A]; N] = core::array::from_fn(|j| {
        let mut e = [0.0; A];
        e[order[j]] = 1.0;
        project(x, &e)
    });
    super::gram_schmidt(&mut cols, 1.0);
    cols
}

pub(crate) fn sample_uniform<const A: usize>(stream: &mut PathStream) -> [f64; A] {
    loop {
        let g: [f64; A] = core::array::from_fn(|_| stream.normal());
        let n = sqrt(dot(&g, &g));
        if n > 1e-12 {
            return scale(1.0 / n, &g);
        }
    }
}

/// The unit sphere `S² ⊂ R³`.
#[derive(Debug, Default, Clone, Copy)]
pub struct Sphere;

impl Sphere {
    /// `∫_{S²} f` by Gauss–Legendre in `⟨x, axis⟩` and the trapezoid rule in
    /// the azimuth about `axis`.
    pub fn integrate<F: FnMut(&[f64; 3]) -> f64>(axis: &[f64; 3], polar: usize, azimuth: usize, mut f: F) -> f64 {
        let [e1, e2] = reference_frame::<3, 2>(axis);
        let gl = crate::quadrature::GaussLegendre::new(polar);
        let dphi = 2.0 * PI / azimuth as f64;
        let mut total = 0.0;
        for (u, w) in gl.nodes().iter().zip(gl.weights()) {
            let r = sqrt((1.0 - u * u).max(0.0));
            let mut ring = 0.0;
            for k in 0..azimuth {
                let phi = k as f64 * dphi;
                let (c, s) = (cos(phi), sin(phi));
                let z: [f64; 3] = core::array::from_fn(|i| u * axis[i] + r * (c * e1[i] + s * e2[i]));
                ring += f(&z);
            }
            total += w * ring * dphi;
        }
        total
    }
}

impl EmbeddedManifold<3, 2> for Sphere {
    fn name(&self) -> &'static str {
        "S2"
    }

    fn residual(&self, x: &[f64; 3]) -> f64 {
        residual(x)
    }

    fn project(&self, x: &[f64; 3], v: &[f64; 3]) -> [f64; 3] {
        project(x, v)
    }

    fn project_derivative(&self, x: &[f64; 3], dx: &[f64; 3], v: &[f64; 3]) -> [f64; 3] {
        project_derivative(x, dx, v)
    }

    fn exp(&self, x: &[f64; 3], v: &[f64; 3]) -> [f64; 3] {
        exp(x, v)
    }

    fn exp_derivative(&self, x: &[f64; 3], v: &[f64; 3], dx: &[f64; 3], dv: &[f64; 3]) -> [f64; 3] {
        exp_derivative(x, v, dx, dv)
    }

    fn log(&self, x: &[f64; 3], y: &[f64; 3]) -> Option<[f64; 3]> {
        log(x, y)
    }

    fn distance(&self, x: &[f64; 3], y: &[f64; 3]) -> f64 {
        distance(x, y)
    }

    fn injectivity_radius(&self) -> f64 {
        PI
    }

    fn transport(&self, x: &[f64; 3], y: &[f64; 3], v: &[f64; 3]) -> Result<[f64; 3]> {
        transport(x, y, v)
    }

    fn ricci(&self, x: &[f64; 3], v: &[f64; 3]) -> [f64; 3] {
        project(x, v)
    }

    fn reference_frame(&self, x: &[f64; 3]) -> [[f64; 3]; 2] {
        reference_frame(x)
    }

    fn base_point(&self) -> [f64; 3] {
        [0.0, 0.0, 1.0]
    }

    fn sample_uniform(&self, stream: &mut PathStream) -> [f64; 3] {
        sample_uniform(stream)
    }

    fn volume(&self) -> f64 {
        4.0 * PI
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{cross, dist, sub};
    use crate::rng::SeedStream;
    use core::f64::consts::FRAC_PI_2;

    #[test]
    fn projection_examples() {
        let m = Sphere;
        assert_eq!(m.tangent_project(&[0.0, 0.0, 1.0], &[0.0, 0.0, 5.0]).unwrap(), [0.0; 3]);
        assert_eq!(m.tangent_project(&[1.0, 0.0, 0.0], &[1.0, 2.0, 3.0]).unwrap(), [0.0, 2.0, 3.0]);
        assert!(matches!(m.tangent_project(&[1.1, 0.0, 0.0], &[0.0; 3]), Err(Error::Domain(_))));
    }

    #[test]
    fn quarter_great_circle() {
        let y = Sphere.retract(&[1.0, 0.0, 0.0], &[0.0, FRAC_PI_2, 0.0]).unwrap();
        assert!(dist(&y, &[0.0, 1.0, 0.0]) < 1e-15);
        assert_eq!(Sphere.retract(&[1.0, 0.0, 0.0], &[0.0; 3]).unwrap(), [1.0, 0.0, 0.0]);
        assert!(Sphere.retract(&[1.0, 0.0, 0.0], &[1.0, 0.0, 0.0]).is_err());
    }

    #[test]
    fn log_inverts_exp_and_transport_is_isometric() {
        let mut st = SeedStream::new(11).path(0);
        for _ in 0..200 {
            let x = Sphere.sample_uniform(&mut st);
            let v = project(&x, &core::array::from_fn(|_| 1.2 * st.normal()));
            if norm(&v) > 3.0 {
                continue;
            }
            let y = Sphere.exp(&x, &v);
            assert!(residual(&y) < 1e-15);
            let back = Sphere.log(&x, &y).unwrap();
            assert!(dist(&back, &v) < 1e-12);
            let w = project(&x, &core::array::from_fn(|_| st.normal()));
            let tw = Sphere.transport(&x, &y, &w).unwrap();
            let tv = Sphere.transport(&x, &y, &v).unwrap();
            assert!(dot(&tw, &y).abs() < 1e-14);
            assert!((norm(&tw) - norm(&w)).abs() < 1e-13);
            assert!((dot(&tw, &tv) - dot(&w, &v)).abs() < 1e-12);
            // geodesic velocity is parallel
            let vel = scale(-1.0, &Sphere.log(&y, &x).unwrap());
            assert!(dist(&tv, &vel) < 1e-12);
        }
    }

    #[test]
    fn exp_derivative_matches_differences() {
        let mut st = SeedStream::new(12).path(0);
        for _ in 0..50 {
            let x = Sphere.sample_uniform(&mut st);
            let v = project(&x, &core::array::from_fn(|_| st.normal()));
            let dx = project(&x, &core::array::from_fn(|_| st.normal()));
            let dv: [f64; 3] = core::array::from_fn(|_| st.normal());
            let h = 1e-6;
            let p = exp(&axpy(h, &dx, &x), &axpy(h, &dv, &v));
            let q = exp(&axpy(-h, &dx, &x), &axpy(-h, &dv, &v));
            let fd = scale(0.5 / h, &sub(&p, &q));
            assert!(dist(&fd, &exp_derivative(&x, &v, &dx, &dv)) < 1e-8);
            let tiny = scale(1e-9, &v);
            let p = exp(&x, &axpy(h, &dv, &tiny));
            let q = exp(&x, &axpy(-h, &dv, &tiny));
            let fd = scale(0.5 / h, &sub(&p, &q));
            assert!(dist(&fd, &exp_derivative(&x, &tiny, &[0.0; 3], &dv)) < 1e-8);
            let pd = project_derivative(&x, &dx, &dv);
            let fd = scale(0.5 / h, &sub(&project(&axpy(h, &dx, &x), &dv), &project(&axpy(-h, &dx, &x), &dv)));
            assert!(dist(&fd, &pd) < 1e-8);
        }
    }

    #[test]
    fn reference_frame_is_orthonormal_and_tangent() {
        let mut st = SeedStream::new(13).path(0);
        for _ in 0..100 {
            let x = Sphere.sample_uniform(&mut st);
            let [a, b] = Sphere.reference_frame(&x);
            assert!(dot(&a, &b).abs() < 1e-14);
            assert!((norm(&a) - 1.0).abs() < 1e-14 && (norm(&b) - 1.0).abs() < 1e-14);
            assert!(dot(&a, &x).abs() < 1e-14 && dot(&b, &x).abs() < 1e-14);
            assert!(norm(&cross(&a, &b)) > 0.999);
        }
    }
}
