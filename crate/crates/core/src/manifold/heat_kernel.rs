//! Heat kernels of `½△` as truncated eigenfunction series.
//!
//! Densities are with respect to Riemannian volume. Truncation stops once the
//! first omitted term is below [`TERM_TOLERANCE`]; if that cannot be reached
//! within the degree cap and the bound is above [`TAIL_LIMIT`], evaluation
//! fails with an accuracy error carrying the estimate.

use super::{Circle, EmbeddedManifold, So3, Sphere};
use crate::error::{Error, Result};
use crate::linalg::{mat_tmul, scale};
use crate::math::{cos, exp, sin, sqrt};
use core::f64::consts::PI;

pub const TERM_TOLERANCE: f64 = 1e-13;
pub const TAIL_LIMIT: f64 = 1e-10;

pub trait HeatKernel<const A: usize, const N: usize>: Send + Sync {
    fn density(&self, t: f64, x: &[f64; A], y: &[f64; A]) -> Result<f64>;

    /// Riemannian gradient of `x ↦ log p_t(x, y)`.
    fn grad_log(&self, t: f64, x: &[f64; A], y: &[f64; A]) -> Result<[f64; A]>;

    /// Number of series terms used at time `t`.
    fn order(&self, t: f64) -> Result<usize>;
}

fn check_time(t: f64) -> Result<()> {
    if t > 0.0 && t.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(alloc::format!("heat kernel time must be positive, got {t}")))
    }
}

/// Smallest `L` whose first omitted term bound `bound(L + 1)` is below the
/// tolerance.
fn truncation(max: usize, bound: impl Fn(f64) -> f64) -> Result<usize> {
    let mut l = 0usize;
    while bound((l + 1) as f64) > TERM_TOLERANCE {
        l += 1;
        if l >= max {
            let b = bound((l + 1) as f64);
            if b > TAIL_LIMIT {
                return Err(Error::accuracy("heat-kernel series truncation", b));
            }
            break;
        }
    }
    Ok(l)
}

/// Visits `n = 1, 2, …` with Gaussian weights `e_n` satisfying
/// `e_1 = r1`, `e_n / e_{n−1} = r1 qⁿ⁻¹`, until `bound(n, e_n)` is below the
/// term tolerance. Returns the number of terms visited.
fn gaussian_sum(
    max: usize,
    r1: f64,
    q: f64,
    bound: impl Fn(f64, f64) -> f64,
    mut term: impl FnMut(usize, f64),
) -> Result<usize> {
    let (mut e, mut r) = (1.0, r1 / q);
    for n in 1..=max + 1 {
        r *= q;
        e *= r;
        let b = bound(n as f64, e);
        if b <= TERM_TOLERANCE {
            return Ok(n - 1);
        }
        if n > max {
            if b > TAIL_LIMIT {
                return Err(Error::accuracy("heat-kernel series truncation", b));
            }
            break;
        }
        term(n, e);
    }
    Ok(max)
}

/// Density value: series roundoff below `TERM_TOLERANCE · p_t(x, x)` is
/// reported as 0, anything more negative is an error.
fn density_value(p: f64, diagonal: impl FnOnce() -> Result<f64>) -> Result<f64> {
    if p > 0.0 && p.is_finite() {
        return Ok(p);
    }
    if p.is_finite() && -p <= TERM_TOLERANCE * diagonal()? {
        return Ok(0.0);
    }
    Err(Error::accuracy("heat-kernel value is not positive", p))
}

fn positive(p: f64) -> Result<f64> {
    if p > 0.0 && p.is_finite() {
        Ok(p)
    } else {
        Err(Error::accuracy("heat-kernel value is not positive", p))
    }
}

/// Circle kernel: Fourier series above `switch`, wrapped Gaussian below.
#[derive(Debug, Clone, Copy)]
pub struct CircleHeatKernel {
    pub switch: f64,
    pub max_terms: usize,
}

impl Default for CircleHeatKernel {
    fn default() -> Self {
        Self {
            switch: 0.5,
            max_terms: 100_000,
        }
    }
}

impl CircleHeatKernel {
    /// `(p, ∂p/∂φ)` from `(1/2π)(1 + 2Σ e^{−k²t/2} cos kφ)`.
    pub fn fourier(&self, t: f64, phi: f64) -> Result<(f64, f64)> {
        check_time(t)?;
        let (c1, s1) = (cos(phi), sin(phi));
        let (mut c, mut s) = (1.0, 0.0);
        let (mut p, mut dp) = (1.0, 0.0);
        self.fourier_sum(t, |k, e| {
            // angle addition keeps (cos kφ, sin kφ) without per-term trig calls
            (c, s) = (c * c1 - s * s1, s * c1 + c * s1);
            p += 2.0 * e * c;
            dp -= 2.0 * e * k as f64 * s;
        })?;
        Ok((p / (2.0 * PI), dp / (2.0 * PI)))
    }

    fn fourier_sum(&self, t: f64, term: impl FnMut(usize, f64)) -> Result<usize> {
        gaussian_sum(self.max_terms, exp(-t / 2.0), exp(-t), |k, e| (1.0 + k) * e / PI, term)
    }

    /// `(p, ∂p/∂φ)` from `Σ_k g_t(φ + 2πk)`.
    pub fn wrapped(&self, t: f64, phi: f64) -> Result<(f64, f64)> {
        let (p, dlog) = self.wrapped_log(t, phi)?;
        Ok((p, p * dlog))
    }

    /// `(p, ∂ log p/∂φ)`, with the sum rescaled by its dominant term so that
    /// the logarithmic derivative stays finite where `p` underflows.
    fn wrapped_log(&self, t: f64, phi: f64) -> Result<(f64, f64)> {
        check_time(t)?;
        let phi = Circle::signed_angle(&Circle::point(phi), &[1.0, 0.0]);
        let k_max = truncation(self.max_terms, |k| {
            let z = (2.0 * k - 1.0) * PI;
            (1.0 + z / t) * exp(-z * z / (2.0 * t)) / sqrt(2.0 * PI * t)
        })? as i64;
        let z0 = phi * phi;
        let (mut s, mut ds) = (0.0, 0.0);
        for k in -(k_max + 1)..=(k_max + 1) {
            let z = phi + 2.0 * PI * k as f64;
            let w = exp(-(z * z - z0) / (2.0 * t));
            s += w;
            ds -= z / t * w;
        }
        let p = s * exp(-z0 / (2.0 * t)) / sqrt(2.0 * PI * t);
        Ok((p, ds / s))
    }

    pub fn profile(&self, t: f64, phi: f64) -> Result<(f64, f64)> {
        if t < self.switch {
            self.wrapped(t, phi)
        } else {
            self.fourier(t, phi)
        }
    }
}

impl HeatKernel<2, 1> for CircleHeatKernel {
    fn density(&self, t: f64, x: &[f64; 2], y: &[f64; 2]) -> Result<f64> {
        density_value(self.profile(t, Circle::signed_angle(x, y))?.0, || Ok(self.profile(t, 0.0)?.0))
    }

    fn grad_log(&self, t: f64, x: &[f64; 2], y: &[f64; 2]) -> Result<[f64; 2]> {
        let phi = Circle::signed_angle(x, y);
        let dlog = if t < self.switch {
            self.wrapped_log(t, phi)?.1
        } else {
            let (p, dp) = self.fourier(t, phi)?;
            dp / positive(p)?
        };
        Ok(scale(dlog, &Circle::unit_tangent(x)))
    }

    fn order(&self, t: f64) -> Result<usize> {
        check_time(t)?;
        if t < self.switch {
            truncation(self.max_terms, |k| {
                let z = (2.0 * k - 1.0) * PI;
                (1.0 + z / t) * exp(-z * z / (2.0 * t)) / sqrt(2.0 * PI * t)
            })
        } else {
            self.fourier_sum(t, |_, _| {})
        }
    }
}

/// Sphere kernel `Σ_l (2l+1)/(4π) e^{−l(l+1)t/2} P_l(⟨x,y⟩)`.
#[derive(Debug, Clone, Copy)]
pub struct SphereHeatKernel {
    pub max_degree: usize,
}

impl Default for SphereHeatKernel {
    fn default() -> Self {
        Self { max_degree: 4096 }
    }
}

impl SphereHeatKernel {
    fn sum(&self, t: f64, term: impl FnMut(usize, f64)) -> Result<usize> {
        check_time(t)?;
        let q = exp(-t);
        // |P_l| ≤ 1 and |P_l'| ≤ l(l+1)/2 on [−1, 1]
        gaussian_sum(
            self.max_degree,
            q,
            q,
            |l, e| (2.0 * l + 1.0) / (4.0 * PI) * e * (1.0 + l * (l + 1.0) / 2.0),
            term,
        )
    }

    /// `(p, dp/du)` as a function of `u = ⟨x, y⟩`.
    pub fn profile(&self, t: f64, u: f64) -> Result<(f64, f64)> {
        let u = u.clamp(-1.0, 1.0);
        let (mut p_prev, mut p) = (0.0, 1.0);
        let (mut d_prev, mut d) = (0.0, 0.0);
        let (mut s, mut ds) = (1.0, 0.0);
        self.sum(t, |n, e| {
            let lf = (n - 1) as f64;
            // P_{l+1} = ((2l+1) u P_l − l P_{l−1}) / (l+1),  P'_{l+1} = P'_{l−1} + (2l+1) P_l
            let p_next = ((2.0 * lf + 1.0) * u * p - lf * p_prev) / (lf + 1.0);
            let d_next = d_prev + (2.0 * lf + 1.0) * p;
            p_prev = p;
            p = p_next;
            d_prev = d;
            d = d_next;
            let w = (2.0 * n as f64 + 1.0) * e;
            s += w * p;
            ds += w * d;
        })?;
        Ok((s / (4.0 * PI), ds / (4.0 * PI)))
    }
}

impl HeatKernel<3, 2> for SphereHeatKernel {
    fn density(&self, t: f64, x: &[f64; 3], y: &[f64; 3]) -> Result<f64> {
        density_value(self.profile(t, crate::linalg::dot(x, y))?.0, || Ok(self.profile(t, 1.0)?.0))
    }

    fn grad_log(&self, t: f64, x: &[f64; 3], y: &[f64; 3]) -> Result<[f64; 3]> {
        let (p, dp) = self.profile(t, crate::linalg::dot(x, y))?;
        Ok(scale(dp / positive(p)?, &Sphere.project(x, y)))
    }

    fn order(&self, t: f64) -> Result<usize> {
        self.sum(t, |_, _| {})
    }
}

/// Rotation-group kernel `(1/8π²) Σ_l (2l+1) e^{−l(l+1)t/2} χ_l(θ)` with
/// `χ_l(θ) = sin((2l+1)θ/2) / sin(θ/2)`.
#[derive(Debug, Clone, Copy)]
pub struct So3HeatKernel {
    pub max_degree: usize,
}

impl Default for So3HeatKernel {
    fn default() -> Self {
        Self { max_degree: 4096 }
    }
}

impl So3HeatKernel {
    fn sum(&self, t: f64, term: impl FnMut(usize, f64)) -> Result<usize> {
        check_time(t)?;
        let q = exp(-t);
        // |χ_l| ≤ 2l+1 and |χ_l'| ≤ l(l+1)(2l+1)/3
        gaussian_sum(
            self.max_degree,
            q,
            q,
            |l, e| {
                let m = 2.0 * l + 1.0;
                m * m * e * (1.0 + l * (l + 1.0) / 3.0) / (8.0 * PI * PI)
            },
            term,
        )
    }

    /// `(p, dp/dθ / sin θ)` as a function of the rotation angle `θ`.
    pub fn profile(&self, t: f64, theta: f64) -> Result<(f64, f64)> {
        // cos lθ = T_l(c) and sin lθ / sin θ = U_{l−1}(c), both by Chebyshev recurrence
        let c = cos(theta);
        let (mut t_prev, mut t_cur) = (1.0, c);
        let (mut u_prev, mut u_cur) = (0.0, 1.0);
        let (mut chi, mut dchi) = (1.0, 0.0);
        let (mut s, mut ds) = (1.0, 0.0);
        self.sum(t, |l, e| {
            let lf = l as f64;
            chi += 2.0 * t_cur;
            dchi -= 2.0 * lf * u_cur;
            (t_prev, t_cur) = (t_cur, 2.0 * c * t_cur - t_prev);
            (u_prev, u_cur) = (u_cur, 2.0 * c * u_cur - u_prev);
            let w = (2.0 * lf + 1.0) * e;
            s += w * chi;
            ds += w * dchi;
        })?;
        let k = 1.0 / (8.0 * PI * PI);
        Ok((k * s, k * ds))
    }

    /// Density of the rotation angle of a Haar-uniform rotation.
    pub fn haar_angle_density(theta: f64) -> f64 {
        (1.0 - cos(theta)) / PI
    }
}

impl HeatKernel<9, 3> for So3HeatKernel {
    fn density(&self, t: f64, x: &[f64; 9], y: &[f64; 9]) -> Result<f64> {
        density_value(self.profile(t, So3::rotation_angle(&mat_tmul(x, y)))?.0, || Ok(self.profile(t, 0.0)?.0))
    }

    fn grad_log(&self, t: f64, x: &[f64; 9], y: &[f64; 9]) -> Result<[f64; 9]> {
        // ∇θ = −P_x y / sin θ under the half-trace metric
        let theta = So3::rotation_angle(&mat_tmul(x, y));
        let (p, g) = self.profile(t, theta)?;
        Ok(scale(-g / positive(p)?, &So3.project(x, y)))
    }

    fn order(&self, t: f64) -> Result<usize> {
        self.sum(t, |_, _| {})
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{dist, dot};
    use crate::quadrature::GaussLegendre;
    use crate::rng::SeedStream;

    #[test]
    fn sphere_equilibrium_and_normalization() {
        let k = SphereHeatKernel::default();
        let x = [0.0, 0.0, 1.0];
        let y = [0.6, 0.0, 0.8];
        assert!((k.density(40.0, &x, &y).unwrap() - 1.0 / (4.0 * PI)).abs() < 1e-15);
        let gl = GaussLegendre::new(64);
        let mass = 2.0 * PI * gl.integrate(-1.0, 1.0, |u| k.profile(0.5, u).unwrap().0);
        assert!((mass - 1.0).abs() < 1e-10);
    }

    #[test]
    fn circle_representations_agree() {
        let k = CircleHeatKernel::default();
        let (a, da) = k.fourier(0.3, 1.0).unwrap();
        let (b, db) = k.wrapped(0.3, 1.0).unwrap();
        assert!((a - b).abs() < 1e-12);
        assert!((da - db).abs() < 1e-12);
        let mass = Circle::integrate(256, |z| k.density(0.2, &Circle::point(0.3), z).unwrap());
        assert!((mass - 1.0).abs() < 1e-12);
    }

    #[test]
    fn circle_drift_points_along_shorter_arc() {
        let k = CircleHeatKernel::default();
        let y = Circle::point(0.0);
        let x = Circle::point(0.5);
        let g = k.grad_log(0.01, &x, &y).unwrap();
        assert!(dot(&g, &Circle::unit_tangent(&x)) < 0.0);
        // far on the other side, underflow must not produce NaN
        let x = Circle::point(-3.0);
        let g = k.grad_log(1e-3, &x, &y).unwrap();
        assert!(g.iter().all(|c| c.is_finite()));
        assert!(dot(&g, &Circle::unit_tangent(&x)) > 0.0);
    }

    #[test]
    fn sphere_gradient_matches_geodesic_differences() {
        let k = SphereHeatKernel::default();
        let x = [0.0, 0.0, 1.0];
        let y = [libm::sin(1.0), 0.0, libm::cos(1.0)];
        let g = k.grad_log(0.4, &x, &y).unwrap();
        for v in [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.6, -0.8, 0.0]] {
            let h = 1e-5;
            let lp = libm::log(k.density(0.4, &Sphere.exp(&x, &scale(h, &v)), &y).unwrap());
            let lm = libm::log(k.density(0.4, &Sphere.exp(&x, &scale(-h, &v)), &y).unwrap());
            let fd = (lp - lm) / (2.0 * h);
            assert!((fd - dot(&g, &v)).abs() < 1e-8 * (1.0 + fd.abs()));
        }
        assert!(dist(&k.grad_log(0.4, &x, &x).unwrap(), &[0.0; 3]) < 1e-15);
    }

    #[test]
    fn so3_normalization_symmetry_and_gradient() {
        let k = So3HeatKernel::default();
        let gl = GaussLegendre::new(48);
        for t in [0.2, 0.7, 2.0] {
            let mass = 8.0
                * PI
                * PI
                * gl.integrate_composite(0.0, PI, 4, |th| {
                    k.profile(t, th).unwrap().0 * So3HeatKernel::haar_angle_density(th)
                });
            assert!((mass - 1.0).abs() < 1e-10, "t={t} mass={mass}");
        }
        let mut st = SeedStream::new(41).path(0);
        let x = So3.sample_uniform(&mut st);
        let y = So3.sample_uniform(&mut st);
        let a = k.density(0.5, &x, &y).unwrap();
        let b = k.density(0.5, &y, &x).unwrap();
        assert!((a - b).abs() < 1e-12 * a);
        let g = k.grad_log(0.5, &x, &y).unwrap();
        for v in So3.reference_frame(&x) {
            let h = 1e-5;
            let lp = libm::log(k.density(0.5, &So3.exp(&x, &scale(h, &v)), &y).unwrap());
            let lm = libm::log(k.density(0.5, &So3.exp(&x, &scale(-h, &v)), &y).unwrap());
            let fd = (lp - lm) / (2.0 * h);
            assert!((fd - So3.inner(&g, &v)).abs() < 1e-7 * (1.0 + fd.abs()));
        }
    }

    #[test]
    fn bad_time_and_truncation_failures() {
        let k = SphereHeatKernel::default();
        assert!(matches!(k.density(0.0, &[0.0, 0.0, 1.0], &[0.0, 0.0, 1.0]), Err(Error::InvalidArgument(_))));
        let tiny = SphereHeatKernel { max_degree: 8 };
        assert!(matches!(tiny.density(1e-3, &[0.0, 0.0, 1.0], &[0.0, 0.0, 1.0]), Err(Error::Accuracy { .. })));
    }

    #[test]
    fn unresolvable_tails_read_as_zero() {
        let (x, y) = ([0.0, 0.0, 1.0], [0.0, 0.0, -1.0]);
        let k = SphereHeatKernel::default();
        let p = k.density(0.05, &x, &y).unwrap();
        assert!((0.0..1e-12).contains(&p));
        let r = So3HeatKernel::default();
        let flip = [1.0, 0.0, 0.0, 0.0, -1.0, 0.0, 0.0, 0.0, -1.0];
        let q = r.density(0.05, &So3.base_point(), &flip).unwrap();
        assert!((0.0..1e-12).contains(&q));
    }
}
