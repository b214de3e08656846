use crate::linalg::{hat, mat_mul, mat_tmul, scale, vee, Mat3};
use crate::manifold::{Circle, EmbeddedManifold, So3};
use crate::math::sqrt;
use core::f64::consts::FRAC_1_SQRT_2;

/// Coefficients of a Stratonovich equation `dx = X(x)∘dB + A(x)dt` on an
/// embedded manifold, with `B` an `R^m` Brownian motion.
///
/// `X(x)` has a right inverse `Y_x: T_xM → R^m`. Derivative oracles are the
/// exact ambient derivatives of the coefficient formulas.
pub trait SdeSystem<const A: usize, const N: usize>: Send + Sync {
    type Manifold: EmbeddedManifold<A, N>;

    fn manifold(&self) -> &Self::Manifold;

    fn name(&self) -> &'static str;

    /// The drive dimension `m`.
    fn drive_dim(&self) -> usize;

    /// `X(x) e` for `e ∈ R^m`.
    fn diffusion(&self, x: &[f64; A], e: &[f64]) -> [f64; A];

    /// `D_x(X(x) e)[dx]`.
    fn diffusion_derivative(&self, x: &[f64; A], dx: &[f64; A], e: &[f64]) -> [f64; A];

    /// `Y_x v`, written into `out` of length `m`.
    fn right_inverse(&self, x: &[f64; A], v: &[f64; A], out: &mut [f64]);

    fn drift(&self, _x: &[f64; A]) -> [f64; A] {
        [0.0; A]
    }

    fn drift_derivative(&self, _x: &[f64; A], _dx: &[f64; A]) -> [f64; A] {
        [0.0; A]
    }

    /// Largest `|X(x) Y_x e − e|` over a frame of `T_xM`.
    fn right_inverse_defect(&self, x: &[f64; A]) -> f64 {
        let mut y = alloc::vec![0.0; self.drive_dim()];
        let mut worst: f64 = 0.0;
        for e in self.manifold().reference_frame(x) {
            self.right_inverse(x, &e, &mut y);
            let back = self.diffusion(x, &y);
            worst = worst.max(self.manifold().norm(&crate::linalg::sub(&back, &e)));
        }
        worst
    }
}

/// `dx = Jx ∘ dB` on the circle with scalar drive.
#[derive(Debug, Default, Clone, Copy)]
pub struct CircleSystem {
    circle: Circle,
}

impl CircleSystem {
    pub fn new() -> Self {
        Self { circle: Circle }
    }
}

impl SdeSystem<2, 1> for CircleSystem {
    type Manifold = Circle;

    fn manifold(&self) -> &Circle {
        &self.circle
    }

    fn name(&self) -> &'static str {
        "circle-tangent"
    }

    fn drive_dim(&self) -> usize {
        1
    }

    fn diffusion(&self, x: &[f64; 2], e: &[f64]) -> [f64; 2] {
        scale(e[0], &Circle::unit_tangent(x))
    }

    fn diffusion_derivative(&self, _x: &[f64; 2], dx: &[f64; 2], e: &[f64]) -> [f64; 2] {
        scale(e[0], &Circle::unit_tangent(dx))
    }

    fn right_inverse(&self, x: &[f64; 2], v: &[f64; 2], out: &mut [f64]) {
        out[0] = crate::linalg::dot(&Circle::unit_tangent(x), v);
    }
}

/// Gradient system of the embedding: `X(x) e = c·P_x e` with `c` chosen so
/// that `Σ_j X^j ⊗ X^j` is the inverse metric. Drive dimension is `A`.
#[derive(Debug, Clone, Copy)]
pub struct GradientSystem<M> {
    manifold: M,
    c: f64,
}

impl<M> GradientSystem<M> {
    pub fn new<const A: usize, const N: usize>(manifold: M) -> Self
    where
        M: EmbeddedManifold<A, N>,
    {
        let c = 1.0 / sqrt(manifold.metric_scale());
        Self { manifold, c }
    }
}

impl<const A: usize, const N: usize, M: EmbeddedManifold<A, N>> SdeSystem<A, N> for GradientSystem<M> {
    type Manifold = M;

    fn manifold(&self) -> &M {
        &self.manifold
    }

    fn name(&self) -> &'static str {
        "gradient"
    }

    fn drive_dim(&self) -> usize {
        A
    }

    fn diffusion(&self, x: &[f64; A], e: &[f64]) -> [f64; A] {
        let e: &[f64; A] = e.try_into().expect("drive dimension");
        scale(self.c, &self.manifold.project(x, e))
    }

    fn diffusion_derivative(&self, x: &[f64; A], dx: &[f64; A], e: &[f64]) -> [f64; A] {
        let e: &[f64; A] = e.try_into().expect("drive dimension");
        scale(self.c, &self.manifold.project_derivative(x, dx, e))
    }

    fn right_inverse(&self, _x: &[f64; A], v: &[f64; A], out: &mut [f64]) {
        for (o, vi) in out.iter_mut().zip(v) {
            *o = vi / self.c;
        }
    }
}

fn mat3(e: &[f64]) -> [f64; 3] {
    [e[0], e[1], e[2]]
}

/// Left-invariant system `dx = x [dB]×` on `SO(3)`.
#[derive(Debug, Default, Clone, Copy)]
pub struct So3LeftSystem {
    group: So3,
}

impl So3LeftSystem {
    pub fn new() -> Self {
        Self { group: So3 }
    }
}

impl SdeSystem<9, 3> for So3LeftSystem {
    type Manifold = So3;

    fn manifold(&self) -> &So3 {
        &self.group
    }

    fn name(&self) -> &'static str {
        "so3-left"
    }

    fn drive_dim(&self) -> usize {
        3
    }

    fn diffusion(&self, x: &[f64; 9], e: &[f64]) -> [f64; 9] {
        mat_mul(x, &hat(&mat3(e)))
    }

    fn diffusion_derivative(&self, _x: &[f64; 9], dx: &[f64; 9], e: &[f64]) -> [f64; 9] {
        mat_mul(dx, &hat(&mat3(e)))
    }

    fn right_inverse(&self, x: &[f64; 9], v: &[f64; 9], out: &mut [f64]) {
        out[..3].copy_from_slice(&vee(&mat_tmul(x, v)));
    }
}

/// Two-sided system `dx = ([dB¹]× x − x [dB²]×)/√2` on `SO(3)` with drive
/// dimension 6; its induced connection is Levi-Civita.
#[derive(Debug, Default, Clone, Copy)]
pub struct So3BiinvariantSystem {
    group: So3,
}

impl So3BiinvariantSystem {
    pub fn new() -> Self {
        Self { group: So3 }
    }
}

fn two_sided(x: &Mat3, e: &[f64]) -> Mat3 {
    let a = mat_mul(&hat(&mat3(&e[..3])), x);
    let b = mat_mul(x, &hat(&mat3(&e[3..6])));
    core::array::from_fn(|i| FRAC_1_SQRT_2 * (a[i] - b[i]))
}

impl SdeSystem<9, 3> for So3BiinvariantSystem {
    type Manifold = So3;

    fn manifold(&self) -> &So3 {
        &self.group
    }

    fn name(&self) -> &'static str {
        "so3-biinvariant"
    }

    fn drive_dim(&self) -> usize {
        6
    }

    fn diffusion(&self, x: &[f64; 9], e: &[f64]) -> [f64; 9] {
        two_sided(x, e)
    }

    fn diffusion_derivative(&self, _x: &[f64; 9], dx: &[f64; 9], e: &[f64]) -> [f64; 9] {
        two_sided(dx, e)
    }

    fn right_inverse(&self, x: &[f64; 9], v: &[f64; 9], out: &mut [f64]) {
        let right = vee(&crate::linalg::mat_mul(v, &crate::linalg::transpose(x)));
        let left = vee(&mat_tmul(x, v));
        for k in 0..3 {
            out[k] = FRAC_1_SQRT_2 * right[k];
            out[3 + k] = -FRAC_1_SQRT_2 * left[k];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{axpy, dist, sub};
    use crate::manifold::Sphere;
    use crate::rng::{PathStream, SeedStream};
    use alloc::vec::Vec;

    fn check<const A: usize, const N: usize, S: SdeSystem<A, N>>(sys: &S, st: &mut PathStream) {
        let m = sys.manifold();
        for _ in 0..20 {
            let x = m.sample_uniform(st);
            assert!(sys.right_inverse_defect(&x) < 1e-12);
            let e: Vec<f64> = (0..sys.drive_dim()).map(|_| st.normal()).collect();
            let v = sys.diffusion(&x, &e);
            assert!(dist(&m.project(&x, &v), &v) < 1e-12);
            let dx = m.project(&x, &core::array::from_fn(|_| st.normal()));
            let h = 1e-6;
            let fd = scale(
                0.5 / h,
                &sub(&sys.diffusion(&axpy(h, &dx, &x), &e), &sys.diffusion(&axpy(-h, &dx, &x), &e)),
            );
            assert!(dist(&fd, &sys.diffusion_derivative(&x, &dx, &e)) < 1e-8);
            // Σ_j X^j ⊗ X^j equals the inverse metric on covectors
            let w = m.project(&x, &core::array::from_fn(|_| st.normal()));
            let mut q = 0.0;
            for j in 0..sys.drive_dim() {
                let mut ej = alloc::vec![0.0; sys.drive_dim()];
                ej[j] = 1.0;
                q += m.inner(&sys.diffusion(&x, &ej), &w).powi(2);
            }
            assert!((q - m.inner(&w, &w)).abs() < 1e-12 * (1.0 + q));
        }
    }

    #[test]
    fn catalogue_systems_are_consistent() {
        let mut st = SeedStream::new(61).path(0);
        check(&CircleSystem::new(), &mut st);
        check(&GradientSystem::new(Circle), &mut st);
        check(&GradientSystem::new(Sphere), &mut st);
        check(&GradientSystem::new(So3), &mut st);
        check(&So3LeftSystem::new(), &mut st);
        check(&So3BiinvariantSystem::new(), &mut st);
    }
}
