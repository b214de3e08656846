use crate::error::{Error, Result};
use alloc::vec::Vec;

/// Nodes `0 = t_0 < t_1 < … < t_N = T`.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeGrid {
    nodes: Vec<f64>,
}

impl TimeGrid {
    pub fn new(nodes: Vec<f64>) -> Result<Self> {
        if nodes.len() < 2 {
            return Err(Error::invalid("a time grid needs at least one interval"));
        }
        if nodes[0] != 0.0 {
            return Err(Error::invalid("time grid must start at 0"));
        }
        if nodes.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::invalid("time grid nodes must be strictly increasing"));
        }
        if !nodes.iter().all(|t| t.is_finite()) {
            return Err(Error::invalid("time grid nodes must be finite"));
        }
        Ok(Self { nodes })
    }

    /// `intervals` equal steps on `[0, horizon]`; the last node is exactly `horizon`.
    pub fn uniform(horizon: f64, intervals: usize) -> Result<Self> {
        if !(horizon > 0.0) || !horizon.is_finite() {
            return Err(Error::invalid("horizon must be positive"));
        }
        if intervals == 0 {
            return Err(Error::invalid("grid needs at least one interval"));
        }
        let mut nodes: Vec<f64> = (0..=intervals)
            .map(|k| horizon * k as f64 / intervals as f64)
            .collect();
        nodes[intervals] = horizon;
        Self::new(nodes)
    }

    pub fn horizon(&self) -> f64 {
        self.nodes[self.nodes.len() - 1]
    }

    /// Number of intervals `N`.
    pub fn intervals(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    #[inline]
    pub fn node(&self, k: usize) -> f64 {
        self.nodes[k]
    }

    #[inline]
    pub fn dt(&self, i: usize) -> f64 {
        self.nodes[i + 1] - self.nodes[i]
    }

    pub fn max_dt(&self) -> f64 {
        (0..self.intervals()).map(|i| self.dt(i)).fold(0.0, f64::max)
    }

    /// Index of the node equal to `t` (within `1e-12·T`).
    pub fn index_of(&self, t: f64) -> Option<usize> {
        let tol = 1e-12 * self.horizon();
        match self
            .nodes
            .binary_search_by(|x| x.partial_cmp(&t).unwrap_or(core::cmp::Ordering::Less))
        {
            Ok(k) => Some(k),
            Err(k) => [k.wrapping_sub(1), k]
                .into_iter()
                .find(|&j| j < self.nodes.len() && (self.nodes[j] - t).abs() <= tol),
        }
    }

    /// Grid keeping every `factor`-th node.
    pub fn coarsen(&self, factor: usize) -> Result<Self> {
        if factor == 0 || self.intervals() % factor != 0 {
            return Err(Error::invalid("coarsening factor must divide the interval count"));
        }
        Self::new(self.nodes.iter().step_by(factor).copied().collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn rejects_bad_nodes() {
        assert!(TimeGrid::new(vec![0.0]).is_err());
        assert!(TimeGrid::new(vec![0.1, 0.5]).is_err());
        assert!(TimeGrid::new(vec![0.0, 0.5, 0.5]).is_err());
        assert!(TimeGrid::uniform(0.0, 4).is_err());
        assert!(TimeGrid::uniform(1.0, 0).is_err());
    }

    #[test]
    fn uniform_grid_hits_horizon() {
        let g = TimeGrid::uniform(0.7, 3).unwrap();
        assert_eq!(g.horizon(), 0.7);
        assert_eq!(g.intervals(), 3);
        assert_eq!(g.index_of(0.7), Some(3));
        assert_eq!(g.index_of(0.7 / 3.0), Some(1));
        assert_eq!(g.index_of(0.3), None);
        let c = TimeGrid::uniform(1.0, 8).unwrap().coarsen(2).unwrap();
        assert_eq!(c.intervals(), 4);
        assert!(TimeGrid::uniform(1.0, 8).unwrap().coarsen(3).is_err());
    }
}
