//! Finite-difference curvature and Laplacian oracles, independent of the
//! closed forms in each manifold.

use super::EmbeddedManifold;
use crate::linalg::{dot, scale, sub};
use crate::math::sqrt;

/// Shape operator `II(u, w) = (D_u P) w` by central differences of the
/// projector along the geodesic through `x` with velocity `u`.
fn second_fundamental<const A: usize, const N: usize, M: EmbeddedManifold<A, N> + ?Sized>(
    m: &M,
    x: &[f64; A],
    u: &[f64; A],
    w: &[f64; A],
    h: f64,
) -> [f64; A] {
    let p = m.project(&m.exp(x, &scale(h, u)), w);
    let q = m.project(&m.exp(x, &scale(-h, u)), w);
    scale(0.5 / h, &sub(&p, &q))
}

/// Matrix of `Ric^#` at `x` in the g-orthonormal reference frame, from the
/// Gauss equation `⟨R(X,Y)Z,W⟩ = ⟨II(X,W),II(Y,Z)⟩ − ⟨II(X,Z),II(Y,W)⟩` with a
/// finite-difference second fundamental form.
pub fn ricci_fd<const A: usize, const N: usize, M: EmbeddedManifold<A, N> + ?Sized>(m: &M, x: &[f64; A]) -> [[f64; N]; N] {
    let h = 1e-4;
    let frame = m.reference_frame(x);
    // ambient-orthonormal tangent basis
    let s = sqrt(m.metric_scale());
    let e: [[f64; A]; N] = core::array::from_fn(|i| scale(s, &frame[i]));
    let mean_curv: [f64; A] = {
        let mut acc = [0.0; A];
        for ei in &e {
            let ii = second_fundamental(m, x, ei, ei, h);
            for k in 0..A {
                acc[k] += ii[k];
            }
        }
        acc
    };
    core::array::from_fn(|a| {
        core::array::from_fn(|b| {
            let (ea, eb) = (&frame[a], &frame[b]);
            let mut r = dot(&mean_curv, &second_fundamental(m, x, ea, eb, h));
            for ei in &e {
                r -= dot(&second_fundamental(m, x, ei, eb, h), &second_fundamental(m, x, ea, ei, h));
            }
            r
        })
    })
}

/// Laplace–Beltrami operator by second differences along geodesics in the
/// reference frame directions.
pub fn laplacian_fd<const A: usize, const N: usize, M, F>(m: &M, f: F, x: &[f64; A]) -> f64
where
    M: EmbeddedManifold<A, N> + ?Sized,
    F: Fn(&[f64; A]) -> f64,
{
    let h = 1e-3;
    let f0 = f(x);
    m.reference_frame(x)
        .iter()
        .map(|e| (f(&m.exp(x, &scale(h, e))) + f(&m.exp(x, &scale(-h, e))) - 2.0 * f0) / (h * h))
        .sum()
}
