//! Connections on `TM` as finite-difference operators on vector-field oracles.

use super::EmbeddedManifold;
use crate::error::{Error, Result};
use crate::linalg::{mat_mul, mat_tmul, norm, scale, sub, transpose};
use crate::sde::SdeSystem;
use alloc::vec::Vec;

pub type VectorField<'a, const A: usize> = &'a dyn Fn(&[f64; A]) -> [f64; A];

/// `d/ds g(exp(x, s v))` at `s = 0` by central differences.
pub(crate) fn curve_derivative<const A: usize, const N: usize, const K: usize, M, G>(
    m: &M,
    x: &[f64; A],
    v: &[f64; A],
    g: G,
) -> [f64; K]
where
    M: EmbeddedManifold<A, N> + ?Sized,
    G: Fn(&[f64; A]) -> [f64; K],
{
    let h = 1e-5 / norm(v).max(1.0);
    let p = g(&m.exp(x, &scale(h, v)));
    let q = g(&m.exp(x, &scale(-h, v)));
    scale(0.5 / h, &sub(&p, &q))
}

/// A covariant derivative `∇_v U` at `x`.
pub trait Connection<const A: usize, const N: usize>: Send + Sync {
    fn covariant(&self, x: &[f64; A], u: VectorField<'_, A>, v: &[f64; A]) -> Result<[f64; A]>;
}

/// `∇_v U = P_x (D_v U)`.
#[derive(Debug, Clone, Copy)]
pub struct LeviCivita<'m, M: ?Sized>(pub &'m M);

impl<const A: usize, const N: usize, M: EmbeddedManifold<A, N> + ?Sized> Connection<A, N> for LeviCivita<'_, M> {
    fn covariant(&self, x: &[f64; A], u: VectorField<'_, A>, v: &[f64; A]) -> Result<[f64; A]> {
        let d = curve_derivative(self.0, x, v, u);
        Ok(self.0.project(x, &d))
    }
}

/// `∇̆_v U = X(x) d[y ↦ Y_y U(y)]_x(v)`: the trivial connection on `R^m`
/// pushed through `X`.
#[derive(Debug, Clone, Copy)]
pub struct InducedConnection<'s, S: ?Sized>(pub &'s S);

impl<const A: usize, const N: usize, S: SdeSystem<A, N> + ?Sized> Connection<A, N> for InducedConnection<'_, S> {
    fn covariant(&self, x: &[f64; A], u: VectorField<'_, A>, v: &[f64; A]) -> Result<[f64; A]> {
        let sys = self.0;
        let defect = sys.right_inverse_defect(x);
        if !(defect <= 1e-10) {
            return Err(Error::Degenerate(alloc::format!(
                "X(x) has no right inverse on T_xM (defect {defect:.3e})"
            )));
        }
        let m = sys.drive_dim();
        let lifted = |y: &[f64; A]| -> Vec<f64> {
            let mut out = alloc::vec![0.0; m];
            sys.right_inverse(y, &u(y), &mut out);
            out
        };
        let h = 1e-5 / norm(v).max(1.0);
        let p = lifted(&sys.manifold().exp(x, &scale(h, v)));
        let q = lifted(&sys.manifold().exp(x, &scale(-h, v)));
        let d: Vec<f64> = p.iter().zip(&q).map(|(a, b)| (a - b) * 0.5 / h).collect();
        Ok(sys.diffusion(x, &d))
    }
}

/// `induced_connection` as a free function: `∇̆_v U` at `x`.
pub fn induced_connection<const A: usize, const N: usize, S: SdeSystem<A, N> + ?Sized>(
    sys: &S,
    u: VectorField<'_, A>,
    x: &[f64; A],
    v: &[f64; A],
) -> Result<[f64; A]> {
    sys.manifold().check_point(x)?;
    InducedConnection(sys).covariant(x, u, v)
}

/// Flat connection of the left trivialization of `SO(3)`:
/// `∇_v U = x · d/ds[γᵀ U(γ)]`.
#[derive(Debug, Default, Clone, Copy)]
pub struct LeftFlat;

impl Connection<9, 3> for LeftFlat {
    fn covariant(&self, x: &[f64; 9], u: VectorField<'_, 9>, v: &[f64; 9]) -> Result<[f64; 9]> {
        let d = curve_derivative(&super::So3, x, v, |y| mat_tmul(y, &u(y)));
        Ok(mat_mul(x, &d))
    }
}

/// Flat connection of the right trivialization of `SO(3)`:
/// `∇_v U = d/ds[U(γ) γᵀ] · x`.
#[derive(Debug, Default, Clone, Copy)]
pub struct RightFlat;

impl Connection<9, 3> for RightFlat {
    fn covariant(&self, x: &[f64; 9], u: VectorField<'_, 9>, v: &[f64; 9]) -> Result<[f64; 9]> {
        let d = curve_derivative(&super::So3, x, v, |y| mat_mul(&u(y), &transpose(y)));
        Ok(mat_mul(&d, x))
    }
}

/// Lie bracket `[U, V] = D_U V − D_V U` of tangent fields, with step scale `k`.
fn bracket<const A: usize, const N: usize, M: EmbeddedManifold<A, N> + ?Sized>(
    m: &M,
    u: VectorField<'_, A>,
    v: VectorField<'_, A>,
    x: &[f64; A],
) -> [f64; A] {
    let (ux, vx) = (u(x), v(x));
    sub(&curve_derivative(m, x, &ux, v), &curve_derivative(m, x, &vx, u))
}

/// Adjoint connection `∇̂_{U(x)} V = ∇̆_{V(x)} U + [U, V](x)`.
///
/// The bracket is a finite difference unless `bracket_oracle` is given, in
/// which case the two are compared. The finite-difference bracket must be
/// tangent and antisymmetric to `1e−4`.
pub fn adjoint_semi_connection<const A: usize, const N: usize, M, C>(
    m: &M,
    connection: &C,
    u: VectorField<'_, A>,
    v: VectorField<'_, A>,
    x: &[f64; A],
    bracket_oracle: Option<VectorField<'_, A>>,
) -> Result<[f64; A]>
where
    M: EmbeddedManifold<A, N> + ?Sized,
    C: Connection<A, N> + ?Sized,
{
    m.check_point(x)?;
    let uv = bracket(m, u, v, x);
    let vu = bracket(m, v, u, x);
    let size = 1.0 + norm(&uv);
    let anti = norm(&crate::linalg::add(&uv, &vu));
    let normal = norm(&sub(&uv, &m.project(x, &uv)));
    let bad = anti.max(normal);
    if bad > 1e-4 * size {
        return Err(Error::accuracy("vector-field bracket is inconsistent", bad));
    }
    let br = match bracket_oracle {
        Some(b) => {
            let exact = b(x);
            let gap = norm(&sub(&exact, &uv));
            if gap > 1e-4 * size {
                return Err(Error::accuracy("bracket oracle disagrees with finite differences", gap));
            }
            exact
        }
        None => uv,
    };
    let d = connection.covariant(x, u, &v(x))?;
    Ok(crate::linalg::add(&d, &br))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{dist, hat};
    use crate::manifold::{Circle, So3, Sphere};
    use crate::rng::SeedStream;
    use crate::sde::{CircleSystem, GradientSystem, So3BiinvariantSystem, So3LeftSystem};

    fn sphere_field(c: [f64; 3], b: [f64; 9]) -> impl Fn(&[f64; 3]) -> [f64; 3] {
        move |y: &[f64; 3]| {
            let by = crate::linalg::mat_vec(&b, y);
            Sphere.project(y, &crate::linalg::add(&c, &by))
        }
    }

    fn so3_field(c: [f64; 9], b: [f64; 9], d: [f64; 9]) -> impl Fn(&[f64; 9]) -> [f64; 9] {
        move |y: &[f64; 9]| {
            let by = mat_mul(&b, y);
            let yd = mat_mul(y, &d);
            let w: [f64; 9] = core::array::from_fn(|i| c[i] + by[i] + yd[i]);
            So3.project(y, &w)
        }
    }

    #[test]
    fn gradient_system_induces_levi_civita() {
        let mut st = SeedStream::new(71).path(0);
        let sys = GradientSystem::new(Sphere);
        for _ in 0..100 {
            let u = sphere_field(core::array::from_fn(|_| st.normal()), core::array::from_fn(|_| st.normal()));
            let x = Sphere.sample_uniform(&mut st);
            let v = Sphere.project(&x, &core::array::from_fn(|_| st.normal()));
            let a = induced_connection(&sys, &u, &x, &v).unwrap();
            let b = LeviCivita(&Sphere).covariant(&x, &u, &v).unwrap();
            assert!(dist(&a, &b) < 1e-4);
        }
        let zero = |_: &[f64; 3]| [0.0; 3];
        let x = Sphere.base_point();
        assert_eq!(induced_connection(&sys, &zero, &x, &[1.0, 0.0, 0.0]).unwrap(), [0.0; 3]);
    }

    #[test]
    fn circle_constant_speed_field() {
        // U = c·Jx has Y U ≡ c, so ∇̆U = 0; U = sin(θ)·Jx gives cos(θ)·v-speed
        let sys = CircleSystem::new();
        let x = Circle::point(0.7);
        let v = scale(0.3, &Circle::unit_tangent(&x));
        let u = |y: &[f64; 2]| scale(2.0, &Circle::unit_tangent(y));
        assert!(norm(&induced_connection(&sys, &u, &x, &v).unwrap()) < 1e-10);
        let w = |y: &[f64; 2]| scale(Circle::angle(y).sin(), &Circle::unit_tangent(y));
        let got = induced_connection(&sys, &w, &x, &v).unwrap();
        let want = scale(0.3 * libm::cos(0.7), &Circle::unit_tangent(&x));
        assert!(dist(&got, &want) < 1e-9);
    }

    #[test]
    fn adjoint_of_levi_civita_is_itself() {
        let mut st = SeedStream::new(72).path(0);
        for _ in 0..50 {
            let u = sphere_field(core::array::from_fn(|_| st.normal()), core::array::from_fn(|_| st.normal()));
            let v = sphere_field(core::array::from_fn(|_| st.normal()), core::array::from_fn(|_| st.normal()));
            let x = Sphere.sample_uniform(&mut st);
            let lc = LeviCivita(&Sphere);
            let hat_uv = adjoint_semi_connection(&Sphere, &lc, &u, &v, &x, None).unwrap();
            let direct = lc.covariant(&x, &v, &u(&x)).unwrap();
            assert!(dist(&hat_uv, &direct) < 1e-4);
            let same = adjoint_semi_connection(&Sphere, &lc, &u, &u, &x, None).unwrap();
            assert_eq!(same, lc.covariant(&x, &u, &u(&x)).unwrap());
        }
    }

    #[test]
    fn adjoint_of_left_flat_is_right_flat() {
        let mut st = SeedStream::new(73).path(0);
        let sys = So3LeftSystem::new();
        for _ in 0..30 {
            let mut r = || -> [f64; 9] { core::array::from_fn(|_| st.normal()) };
            let u = so3_field(r(), r(), r());
            let v = so3_field(r(), r(), r());
            let x = So3.sample_uniform(&mut st);
            let induced = InducedConnection(&sys);
            let hat_uv = adjoint_semi_connection(&So3, &induced, &u, &v, &x, None).unwrap();
            let right = RightFlat.covariant(&x, &v, &u(&x)).unwrap();
            assert!(dist(&hat_uv, &right) < 1e-4);
            let left = LeftFlat.covariant(&x, &v, &u(&x)).unwrap();
            let via_induced = induced.covariant(&x, &v, &u(&x)).unwrap();
            assert!(dist(&left, &via_induced) < 1e-6);
        }
    }

    #[test]
    fn biinvariant_system_induces_levi_civita() {
        let mut st = SeedStream::new(74).path(0);
        let sys = So3BiinvariantSystem::new();
        for _ in 0..30 {
            let mut r = || -> [f64; 9] { core::array::from_fn(|_| st.normal()) };
            let u = so3_field(r(), r(), r());
            let x = So3.sample_uniform(&mut st);
            let v = mat_mul(&x, &hat(&[st.normal(), st.normal(), st.normal()]));
            let a = induced_connection(&sys, &u, &x, &v).unwrap();
            let b = LeviCivita(&So3).covariant(&x, &u, &v).unwrap();
            assert!(dist(&a, &b) < 1e-4);
        }
    }

    #[test]
    fn inconsistent_bracket_oracle_rejected() {
        let u = sphere_field([1.0, 0.0, 0.0], [0.0; 9]);
        let v = sphere_field([0.0, 1.0, 0.0], [0.0; 9]);
        let wrong = |_: &[f64; 3]| [5.0, 0.0, 0.0];
        let x = [0.0, 0.0, 1.0];
        let r = adjoint_semi_connection(&Sphere, &LeviCivita(&Sphere), &u, &v, &x, Some(&wrong));
        assert!(matches!(r, Err(Error::Accuracy { .. })));
    }
}
