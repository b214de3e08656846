use crate::error::{Error, Result};
use crate::manifold::{EmbeddedManifold, Frame};
use crate::wiener::{DrivingPath, TimeGrid};
use alloc::sync::Arc;
use alloc::vec::Vec;

/// Node-wise tolerance for the membership and frame invariants of a path.
pub const PATH_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Scheme {
    /// Heun predictor–corrector on the piecewise-linear (Wong–Zakai) driver.
    #[default]
    WongZakaiHeun,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Retraction {
    #[default]
    Exponential,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct IntegratorConfig {
    pub scheme: Scheme,
    pub substeps: usize,
    pub retraction: Retraction,
    pub variational: bool,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self {
            scheme: Scheme::WongZakaiHeun,
            substeps: 1,
            retraction: Retraction::Exponential,
            variational: true,
        }
    }
}

impl IntegratorConfig {
    pub fn with_substeps(mut self, substeps: usize) -> Self {
        self.substeps = substeps;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.substeps == 0 {
            return Err(Error::invalid("substeps must be at least 1"));
        }
        Ok(())
    }
}

/// A manifold path at grid nodes with its parallel frame path.
#[derive(Debug, Clone)]
pub struct SolutionPath<const A: usize, const N: usize> {
    grid: Arc<TimeGrid>,
    frames: Vec<Frame<A, N>>,
    driver: Option<Arc<DrivingPath>>,
}

impl<const A: usize, const N: usize> SolutionPath<A, N> {
    pub(crate) fn from_frames(grid: Arc<TimeGrid>, frames: Vec<Frame<A, N>>, driver: Option<Arc<DrivingPath>>) -> Self {
        debug_assert_eq!(frames.len(), grid.intervals() + 1);
        Self { grid, frames, driver }
    }

    /// A path through `points` with frames obtained by transporting the
    /// reference frame at the first point.
    pub fn from_points<M: EmbeddedManifold<A, N> + ?Sized>(
        m: &M,
        grid: Arc<TimeGrid>,
        points: &[[f64; A]],
    ) -> Result<Self> {
        if points.len() != grid.intervals() + 1 {
            return Err(Error::invalid("one point per grid node is required"));
        }
        m.check_point(&points[0])?;
        let mut frames = Vec::with_capacity(points.len());
        let mut f = Frame::reference(m, &points[0]);
        frames.push(f);
        for (i, p) in points[1..].iter().enumerate() {
            m.check_point(p)?;
            f = f.transport(m, p).map_err(|e| Error::Integrator {
                interval: i,
                source: alloc::boxed::Box::new(e),
            })?;
            frames.push(f);
        }
        Ok(Self::from_frames(grid, frames, None))
    }

    pub fn grid(&self) -> &Arc<TimeGrid> {
        &self.grid
    }

    pub fn nodes(&self) -> usize {
        self.frames.len()
    }

    pub fn point(&self, k: usize) -> &[f64; A] {
        self.frames[k].base()
    }

    pub fn frame(&self, k: usize) -> &Frame<A, N> {
        &self.frames[k]
    }

    pub fn frames(&self) -> &[Frame<A, N>] {
        &self.frames
    }

    pub fn points(&self) -> impl Iterator<Item = &[f64; A]> + '_ {
        self.frames.iter().map(|f| f.base())
    }

    pub fn endpoint(&self) -> &[f64; A] {
        self.point(self.frames.len() - 1)
    }

    pub fn driver(&self) -> Option<&Arc<DrivingPath>> {
        self.driver.as_ref()
    }

    /// Largest membership residual, frame orthonormality defect and frame
    /// tangency defect over all nodes.
    pub fn invariant_defect<M: EmbeddedManifold<A, N> + ?Sized>(&self, m: &M) -> f64 {
        self.frames
            .iter()
            .map(|f| {
                m.residual(f.base())
                    .max(f.orthonormality_defect(m))
                    .max(f.tangency_defect(m))
            })
            .fold(0.0, f64::max)
    }

    pub fn check_invariants<M: EmbeddedManifold<A, N> + ?Sized>(&self, m: &M) -> Result<()> {
        let d = self.invariant_defect(m);
        if d <= PATH_TOL {
            Ok(())
        } else {
            Err(Error::accuracy("solution path invariants", d))
        }
    }
}

/// Tangent vectors `v(t_k) ∈ T_{σ(t_k)}M` along a solution path.
#[derive(Debug, Clone)]
pub struct TangentPathAlong<const A: usize, const N: usize> {
    path: Arc<SolutionPath<A, N>>,
    vectors: Vec<[f64; A]>,
}

impl<const A: usize, const N: usize> TangentPathAlong<A, N> {
    pub fn new<M: EmbeddedManifold<A, N> + ?Sized>(
        m: &M,
        path: Arc<SolutionPath<A, N>>,
        vectors: Vec<[f64; A]>,
    ) -> Result<Self> {
        if vectors.len() != path.nodes() {
            return Err(Error::invalid("one tangent vector per node is required"));
        }
        for (k, v) in vectors.iter().enumerate() {
            let off = crate::linalg::norm(&crate::linalg::sub(v, &m.project(path.point(k), v)));
            if off > PATH_TOL * (1.0 + crate::linalg::norm(v)) {
                return Err(Error::domain(alloc::format!("vector at node {k} is not tangent ({off:.3e})")));
            }
        }
        Ok(Self { path, vectors })
    }

    pub(crate) fn from_parts(path: Arc<SolutionPath<A, N>>, vectors: Vec<[f64; A]>) -> Self {
        Self { path, vectors }
    }

    pub fn path(&self) -> &Arc<SolutionPath<A, N>> {
        &self.path
    }

    pub fn vector(&self, k: usize) -> &[f64; A] {
        &self.vectors[k]
    }

    pub fn vectors(&self) -> &[[f64; A]] {
        &self.vectors
    }

    /// Frame coordinates `F_k⁻¹ v(t_k)`.
    pub fn frame_coords<M: EmbeddedManifold<A, N> + ?Sized>(&self, m: &M) -> Vec<[f64; N]> {
        self.vectors
            .iter()
            .zip(self.path.frames())
            .map(|(v, f)| f.coords(m, v))
            .collect()
    }
}
