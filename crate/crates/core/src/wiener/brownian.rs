use super::{CameronMartinPath, TimeGrid};
use crate::error::{Error, Result};
use crate::math::sqrt;
use crate::rng::PathStream;
use alloc::sync::Arc;
use alloc::vec::Vec;

/// A sampled flat path: increments per interval and node values as their
/// prefix sums, stored row-major (`m` coordinates per interval / node).
#[derive(Debug, Clone, PartialEq)]
pub struct DrivingPath {
    grid: Arc<TimeGrid>,
    dim: usize,
    increments: Vec<f64>,
    values: Vec<f64>,
}

impl DrivingPath {
    pub fn from_increments(grid: Arc<TimeGrid>, dim: usize, increments: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("driving dimension must be at least 1"));
        }
        if increments.len() != dim * grid.intervals() {
            return Err(Error::invalid("increment count does not match grid and dimension"));
        }
        let mut values = alloc::vec![0.0; dim * (grid.intervals() + 1)];
        for i in 0..grid.intervals() {
            for a in 0..dim {
                values[(i + 1) * dim + a] = values[i * dim + a] + increments[i * dim + a];
            }
        }
        Ok(Self {
            grid,
            dim,
            increments,
            values,
        })
    }

    pub fn zero(grid: Arc<TimeGrid>, dim: usize) -> Result<Self> {
        let n = grid.intervals();
        Self::from_increments(grid, dim, alloc::vec![0.0; dim * n])
    }

    /// The node values of a Cameron–Martin path, read as a driving path.
    pub fn from_cameron_martin(h: &CameronMartinPath) -> Self {
        let grid = h.grid().clone();
        let inc = (0..grid.intervals())
            .flat_map(|i| h.hdot(i).iter().map(move |v| v * h.grid().dt(i)).collect::<Vec<_>>())
            .collect();
        Self::from_increments(grid, h.dim(), inc).expect("consistent shapes")
    }

    pub fn grid(&self) -> &Arc<TimeGrid> {
        &self.grid
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn increment(&self, i: usize) -> &[f64] {
        &self.increments[i * self.dim..(i + 1) * self.dim]
    }

    /// `B(t_k)`.
    #[inline]
    pub fn value(&self, k: usize) -> &[f64] {
        &self.values[k * self.dim..(k + 1) * self.dim]
    }

    pub fn increments(&self) -> &[f64] {
        &self.increments
    }

    /// `σ + t·h`, with `h` given by its increments `ḣ_i Δt_i`.
    pub fn shifted(&self, h: &CameronMartinPath, t: f64) -> Result<Self> {
        check_compatible(self, h)?;
        let mut inc = self.increments.clone();
        for i in 0..self.grid.intervals() {
            let dt = self.grid.dt(i);
            for (a, hd) in h.hdot(i).iter().enumerate() {
                inc[i * self.dim + a] += t * hd * dt;
            }
        }
        Self::from_increments(self.grid.clone(), self.dim, inc)
    }

    /// Sum groups of `factor` increments onto the coarse grid.
    pub fn coarsen(&self, factor: usize, coarse: Arc<TimeGrid>) -> Result<Self> {
        if factor == 0 || coarse.intervals() * factor != self.grid.intervals() {
            return Err(Error::invalid("coarse grid does not match coarsening factor"));
        }
        let mut inc = alloc::vec![0.0; coarse.intervals() * self.dim];
        for i in 0..self.grid.intervals() {
            for a in 0..self.dim {
                inc[(i / factor) * self.dim + a] += self.increments[i * self.dim + a];
            }
        }
        Self::from_increments(coarse, self.dim, inc)
    }
}

pub(crate) fn check_compatible(sigma: &DrivingPath, h: &CameronMartinPath) -> Result<()> {
    if sigma.dim() != h.dim() {
        return Err(Error::invalid("dimension mismatch between path and direction"));
    }
    if !Arc::ptr_eq(sigma.grid(), h.grid()) && sigma.grid().as_ref() != h.grid().as_ref() {
        return Err(Error::invalid("grid mismatch between path and direction"));
    }
    Ok(())
}

/// Brownian increments `ΔB_i ~ N(0, Δt_i·I_m)` drawn from `stream`.
pub fn sample_brownian(grid: &Arc<TimeGrid>, m: usize, stream: &mut PathStream) -> Result<DrivingPath> {
    if m == 0 {
        return Err(Error::invalid("Brownian dimension must be at least 1"));
    }
    let mut inc = Vec::with_capacity(m * grid.intervals());
    for i in 0..grid.intervals() {
        let s = sqrt(grid.dt(i));
        for _ in 0..m {
            inc.push(s * stream.normal());
        }
    }
    DrivingPath::from_increments(grid.clone(), m, inc)
}
