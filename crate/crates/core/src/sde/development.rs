use super::path::SolutionPath;
use crate::error::{Error, Result};
use crate::manifold::{EmbeddedManifold, Frame};
use crate::wiener::DrivingPath;
use alloc::boxed::Box;
use alloc::vec::Vec;

/// Cartan development of a flat path `b` in `T_{x0}M ≅ R^N` (coordinates in
/// the reference frame at `x0`): `x_{k+1} = exp(x_k, F_k Δb_k)` with frames
/// transported along each geodesic step.
pub fn development<const A: usize, const N: usize, M: EmbeddedManifold<A, N> + ?Sized>(
    m: &M,
    b: &DrivingPath,
    x0: &[f64; A],
) -> Result<SolutionPath<A, N>> {
    if b.dim() != N {
        return Err(Error::invalid(alloc::format!("flat path must have dimension {N}")));
    }
    m.check_point(x0)?;
    let n = b.grid().intervals();
    let mut frames = Vec::with_capacity(n + 1);
    let mut f = Frame::reference(m, x0);
    frames.push(f);
    for i in 0..n {
        let db: &[f64; N] = b.increment(i).try_into().expect("flat path dimension");
        let y = m.exp(f.base(), &f.apply(db));
        f = f.transport(m, &y).map_err(|e| Error::Integrator {
            interval: i,
            source: Box::new(e),
        })?;
        frames.push(f);
    }
    Ok(SolutionPath::from_frames(b.grid().clone(), frames, None))
}

/// Stochastic anti-development: `Δb_k = F_k⁻¹ log_{x_k}(x_{k+1})`.
pub fn antidevelopment<const A: usize, const N: usize, M: EmbeddedManifold<A, N> + ?Sized>(
    m: &M,
    sigma: &SolutionPath<A, N>,
) -> Result<DrivingPath> {
    let n = sigma.grid().intervals();
    let mut inc = Vec::with_capacity(n * N);
    for k in 0..n {
        let (x, y) = (sigma.point(k), sigma.point(k + 1));
        let v = m.log(x, y).ok_or(Error::StepTooLarge {
            distance: m.distance(x, y),
            limit: m.injectivity_radius(),
        })?;
        inc.extend_from_slice(&sigma.frame(k).coords(m, &v));
    }
    DrivingPath::from_increments(sigma.grid().clone(), N, inc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::manifold::{So3, Sphere};
    use crate::wiener::{CameronMartinPath, TimeGrid};
    use alloc::sync::Arc;

    fn smooth_flat(g: &Arc<TimeGrid>, dim: usize) -> DrivingPath {
        let h = CameronMartinPath::from_fn(g.clone(), dim, |t, _, o| {
            for (a, v) in o.iter_mut().enumerate() {
                *v = libm::sin(2.0 * t + a as f64) + 0.5;
            }
        })
        .unwrap();
        DrivingPath::from_cameron_martin(&h)
    }

    #[test]
    fn straight_line_develops_to_great_circle() {
        let g = Arc::new(TimeGrid::uniform(2.0, 400).unwrap());
        let c = 0.7;
        let h = CameronMartinPath::constant(g.clone(), &[c, 0.0]).unwrap();
        let x0 = Sphere.base_point();
        let p = development(&Sphere, &DrivingPath::from_cameron_martin(&h), &x0).unwrap();
        assert!((Sphere.distance(&x0, p.endpoint()) - c * 2.0).abs() < 1e-8);
        let mid = p.point(200);
        // the three points lie on one great circle
        let n = crate::linalg::cross(&x0, mid);
        assert!(crate::linalg::dot(&n, p.endpoint()).abs() < 1e-12);
        let z = development(&Sphere, &DrivingPath::zero(g, 2).unwrap(), &x0).unwrap();
        assert!(z.points().all(|x| *x == x0));
    }

    #[test]
    fn antidevelopment_inverts_development() {
        let g = Arc::new(TimeGrid::uniform(1.0, 256).unwrap());
        let b = smooth_flat(&g, 2);
        let p = development(&Sphere, &b, &[0.6, 0.0, 0.8]).unwrap();
        let back = antidevelopment(&Sphere, &p).unwrap();
        for k in 0..=256 {
            for a in 0..2 {
                assert!((back.value(k)[a] - b.value(k)[a]).abs() < 1e-8);
            }
        }
        let b = smooth_flat(&g, 3);
        let p = development(&So3, &b, &So3.base_point()).unwrap();
        let back = antidevelopment(&So3, &p).unwrap();
        for k in 0..=256 {
            for a in 0..3 {
                assert!((back.value(k)[a] - b.value(k)[a]).abs() < 1e-8);
            }
        }
    }
}
