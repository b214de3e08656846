use super::brownian::check_compatible;
use super::{DrivingPath, TimeGrid};
use crate::error::{Error, Result};
use crate::math::exp;
use alloc::sync::Arc;
use alloc::vec::Vec;

/// A finite-energy direction with piecewise-constant derivative `ḣ_i` on each
/// grid interval. Node values `h(t_k) = Σ_{i<k} ḣ_i Δt_i` and the squared
/// norm `Σ_i |ḣ_i|² Δt_i` are cached at construction.
#[derive(Debug, Clone, PartialEq)]
pub struct CameronMartinPath {
    grid: Arc<TimeGrid>,
    dim: usize,
    hdot: Vec<f64>,
    values: Vec<f64>,
    norm_sq: f64,
}

impl CameronMartinPath {
    pub fn new(grid: Arc<TimeGrid>, dim: usize, hdot: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("direction dimension must be at least 1"));
        }
        if hdot.len() != dim * grid.intervals() {
            return Err(Error::invalid("derivative count does not match grid and dimension"));
        }
        if !hdot.iter().all(|v| v.is_finite()) {
            return Err(Error::invalid("derivative values must be finite"));
        }
        let n = grid.intervals();
        let mut values = alloc::vec![0.0; dim * (n + 1)];
        let mut norm_sq = 0.0;
        for i in 0..n {
            let dt = grid.dt(i);
            for a in 0..dim {
                let hd = hdot[i * dim + a];
                values[(i + 1) * dim + a] = values[i * dim + a] + hd * dt;
                norm_sq += hd * hd * dt;
            }
        }
        Ok(Self {
            grid,
            dim,
            hdot,
            values,
            norm_sq,
        })
    }

    pub fn zero(grid: Arc<TimeGrid>, dim: usize) -> Result<Self> {
        let n = grid.intervals();
        Self::new(grid, dim, alloc::vec![0.0; dim * n])
    }

    /// Constant derivative `ḣ ≡ c`.
    pub fn constant(grid: Arc<TimeGrid>, c: &[f64]) -> Result<Self> {
        let n = grid.intervals();
        let hdot = (0..n).flat_map(|_| c.iter().copied()).collect();
        Self::new(grid, c.len(), hdot)
    }

    /// `ḣ_i = f(t_i, t_{i+1})`, written into a slice of length `dim`.
    pub fn from_fn<F: FnMut(f64, f64, &mut [f64])>(grid: Arc<TimeGrid>, dim: usize, mut f: F) -> Result<Self> {
        let n = grid.intervals();
        let mut hdot = alloc::vec![0.0; dim * n];
        for i in 0..n {
            f(grid.node(i), grid.node(i + 1), &mut hdot[i * dim..(i + 1) * dim]);
        }
        Self::new(grid, dim, hdot)
    }

    pub fn grid(&self) -> &Arc<TimeGrid> {
        &self.grid
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn hdot(&self, i: usize) -> &[f64] {
        &self.hdot[i * self.dim..(i + 1) * self.dim]
    }

    pub fn hdot_all(&self) -> &[f64] {
        &self.hdot
    }

    /// `h(t_k)`.
    #[inline]
    pub fn value(&self, k: usize) -> &[f64] {
        &self.values[k * self.dim..(k + 1) * self.dim]
    }

    pub fn norm_sq(&self) -> f64 {
        self.norm_sq
    }

    /// `⟨h, k⟩_H = Σ_i ⟨ḣ_i, k̇_i⟩ Δt_i`.
    pub fn inner(&self, other: &Self) -> Result<f64> {
        if self.dim != other.dim || self.grid.as_ref() != other.grid.as_ref() {
            return Err(Error::invalid("Cameron–Martin paths on different spaces"));
        }
        let mut s = 0.0;
        for i in 0..self.grid.intervals() {
            let dt = self.grid.dt(i);
            for a in 0..self.dim {
                s += self.hdot[i * self.dim + a] * other.hdot[i * self.dim + a] * dt;
            }
        }
        Ok(s)
    }

    /// `a·self + b·other`.
    pub fn combine(&self, a: f64, other: &Self, b: f64) -> Result<Self> {
        if self.dim != other.dim || self.grid.as_ref() != other.grid.as_ref() {
            return Err(Error::invalid("Cameron–Martin paths on different spaces"));
        }
        let hdot = self
            .hdot
            .iter()
            .zip(&other.hdot)
            .map(|(x, y)| a * x + b * y)
            .collect();
        Self::new(self.grid.clone(), self.dim, hdot)
    }
}

/// `|h|²_H = Σ_i |ḣ_i|² Δt_i`.
pub fn cm_norm_sq(h: &CameronMartinPath) -> f64 {
    h.norm_sq()
}

/// Discrete Paley–Wiener integral `Σ_i ⟨ḣ_i, ΔB_i⟩`.
pub fn paley_wiener(h: &CameronMartinPath, sigma: &DrivingPath) -> Result<f64> {
    check_compatible(sigma, h)?;
    let mut s = 0.0;
    for i in 0..sigma.grid().intervals() {
        for (x, y) in h.hdot(i).iter().zip(sigma.increment(i)) {
            s += x * y;
        }
    }
    Ok(s)
}

/// Quasi-invariance density `exp(−t·P(h)(σ) − t²|h|²_H / 2)`.
pub fn cm_density(h: &CameronMartinPath, t: f64, sigma: &DrivingPath) -> Result<f64> {
    let p = paley_wiener(h, sigma)?;
    Ok(exp(-t * p - 0.5 * t * t * h.norm_sq()))
}
