use super::{gram_schmidt, EmbeddedManifold};
use crate::error::{Error, Result};
use crate::linalg::{norm, sub};

/// Largest Gram–Schmidt correction tolerated after a transport step.
pub const REORTHONORMALIZATION_LIMIT: f64 = 1e-8;

/// An orthonormal frame `U_x: R^N → T_xM`, stored as ambient columns.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Frame<const A: usize, const N: usize> {
    base: [f64; A],
    columns: [[f64; A]; N],
}

impl<const A: usize, const N: usize> Frame<A, N> {
    pub fn new<M: EmbeddedManifold<A, N> + ?Sized>(m: &M, base: [f64; A], columns: [[f64; A]; N]) -> Result<Self> {
        m.check_point(&base)?;
        let f = Self { base, columns };
        let d = f.orthonormality_defect(m).max(f.tangency_defect(m));
        if d > 1e-10 {
            return Err(Error::domain(alloc::format!("columns are not an orthonormal tangent frame ({d:.3e})")));
        }
        Ok(f)
    }

    pub fn reference<M: EmbeddedManifold<A, N> + ?Sized>(m: &M, x: &[f64; A]) -> Self {
        Self {
            base: *x,
            columns: m.reference_frame(x),
        }
    }

    pub fn base(&self) -> &[f64; A] {
        &self.base
    }

    pub fn columns(&self) -> &[[f64; A]; N] {
        &self.columns
    }

    /// `U c`
    pub fn apply(&self, c: &[f64; N]) -> [f64; A] {
        core::array::from_fn(|i| (0..N).map(|j| c[j] * self.columns[j][i]).sum())
    }

    /// `U⁻¹ v` for tangent `v`.
    pub fn coords<M: EmbeddedManifold<A, N> + ?Sized>(&self, m: &M, v: &[f64; A]) -> [f64; N] {
        core::array::from_fn(|j| m.inner(&self.columns[j], v))
    }

    pub fn orthonormality_defect<M: EmbeddedManifold<A, N> + ?Sized>(&self, m: &M) -> f64 {
        let mut worst: f64 = 0.0;
        for a in 0..N {
            for b in 0..N {
                let want = if a == b { 1.0 } else { 0.0 };
                worst = worst.max((m.inner(&self.columns[a], &self.columns[b]) - want).abs());
            }
        }
        worst
    }

    pub fn tangency_defect<M: EmbeddedManifold<A, N> + ?Sized>(&self, m: &M) -> f64 {
        self.columns
            .iter()
            .map(|c| norm(&sub(&m.project(&self.base, c), c)))
            .fold(0.0, f64::max)
    }

    /// Transports the frame to `y` along the connecting geodesic and
    /// re-orthonormalizes.
    pub fn transport<M: EmbeddedManifold<A, N> + ?Sized>(&self, m: &M, y: &[f64; A]) -> Result<Self> {
        let limit = 0.5 * m.injectivity_radius();
        let d = m.distance(&self.base, y);
        if !(d <= limit) {
            return Err(Error::StepTooLarge { distance: d, limit });
        }
        if d == 0.0 && self.base == *y {
            return Ok(*self);
        }
        let mut cols = [[0.0; A]; N];
        for (c, src) in cols.iter_mut().zip(&self.columns) {
            *c = m.project(y, &m.transport(&self.base, y, src)?);
        }
        let fix = gram_schmidt(&mut cols, m.metric_scale());
        if fix > REORTHONORMALIZATION_LIMIT {
            return Err(Error::accuracy("frame re-orthonormalization", fix));
        }
        Ok(Self { base: *y, columns: cols })
    }

    /// Rotation angle taking this frame's first column to `other`'s, measured
    /// in the plane of the first two columns (needs `N ≥ 2`, same base point).
    pub fn relative_angle<M: EmbeddedManifold<A, N> + ?Sized>(&self, m: &M, other: &Self) -> f64 {
        let c = m.inner(&self.columns[0], &other.columns[0]);
        let s = m.inner(&self.columns[1], &other.columns[0]);
        crate::math::atan2(s, c)
    }
}

/// Transports `frame` through consecutive `points`, starting at its base.
pub fn transport_along<const A: usize, const N: usize, M: EmbeddedManifold<A, N> + ?Sized>(
    m: &M,
    points: &[[f64; A]],
    frame: &Frame<A, N>,
) -> Result<Frame<A, N>> {
    let mut f = *frame;
    for p in points {
        f = f.transport(m, p)?;
    }
    Ok(f)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::manifold::{Circle, So3, Sphere};
    use crate::rng::SeedStream;
    use alloc::vec::Vec;
    use core::f64::consts::{FRAC_PI_2, PI};

    fn arc(from: [f64; 3], to: [f64; 3], steps: usize) -> Vec<[f64; 3]> {
        let v = Sphere.log(&from, &to).unwrap();
        (1..=steps)
            .map(|k| Sphere.exp(&from, &crate::linalg::scale(k as f64 / steps as f64, &v)))
            .collect()
    }

    #[test]
    fn octant_holonomy_is_quarter_turn() {
        let (e1, e2, e3) = ([1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]);
        let start = Frame::reference(&Sphere, &e1);
        let mut pts = arc(e1, e2, 64);
        pts.extend(arc(e2, e3, 64));
        pts.extend(arc(e3, e1, 64));
        let end = transport_along(&Sphere, &pts, &start).unwrap();
        let angle = start.relative_angle(&Sphere, &end).abs();
        assert!((angle - FRAC_PI_2).abs() < 1e-12);
    }

    #[test]
    fn identical_point_leaves_frame_unchanged() {
        let x = Sphere.base_point();
        let f = Frame::reference(&Sphere, &x);
        assert_eq!(f.transport(&Sphere, &x).unwrap(), f);
    }

    #[test]
    fn long_walk_stays_orthonormal() {
        let mut st = SeedStream::new(31).path(0);
        let mut f = Frame::reference(&So3, &So3.base_point());
        for _ in 0..10_000 {
            let w: [f64; 3] = core::array::from_fn(|_| 0.05 * st.normal());
            let v = f.apply(&w);
            let y = So3.exp(f.base(), &v);
            f = f.transport(&So3, &y).unwrap();
        }
        assert!(f.orthonormality_defect(&So3) < 1e-10);
        assert!(f.tangency_defect(&So3) < 1e-10);
        assert!(So3.residual(f.base()) < 1e-10);
    }

    #[test]
    fn far_steps_rejected() {
        let f = Frame::reference(&Circle, &Circle::point(0.0));
        assert!(matches!(
            f.transport(&Circle, &Circle::point(0.6 * PI)),
            Err(Error::StepTooLarge { .. })
        ));
    }
}
