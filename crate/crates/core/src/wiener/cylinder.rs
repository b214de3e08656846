use super::{fd_step, CameronMartinPath, DerivativeSource, DrivingPath, TimeGrid};
use crate::error::{Error, Result};
use crate::math::tanh;
use alloc::boxed::Box;
use alloc::vec::Vec;

type ValueFn = Box<dyn Fn(&[f64]) -> f64 + Send + Sync>;
type GradFn = Box<dyn Fn(&[f64], &mut [f64]) + Send + Sync>;

/// `σ ↦ F(σ(t_{j_1}), …, σ(t_{j_k}))` with `F: (R^m)^k → R`.
///
/// Arguments of `F` and of its gradient are the `k·m` stacked coordinates
/// of the path values at the sample nodes.
pub struct FlatCylinderFunction {
    nodes: Vec<usize>,
    dim: usize,
    value: ValueFn,
    gradient: Option<GradFn>,
    bound: Option<f64>,
    tanh_wrapped: bool,
}

impl core::fmt::Debug for FlatCylinderFunction {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_struct("FlatCylinderFunction")
            .field("nodes", &self.nodes)
            .field("dim", &self.dim)
            .field("bound", &self.bound)
            .field("tanh_wrapped", &self.tanh_wrapped)
            .finish()
    }
}

impl FlatCylinderFunction {
    pub fn new(
        nodes: Vec<usize>,
        dim: usize,
        value: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
        gradient: impl Fn(&[f64], &mut [f64]) + Send + Sync + 'static,
    ) -> Self {
        Self {
            nodes,
            dim,
            value: Box::new(value),
            gradient: Some(Box::new(gradient)),
            bound: None,
            tanh_wrapped: false,
        }
    }

    /// Without an analytic gradient; derivatives fall back to central differences.
    pub fn value_only(nodes: Vec<usize>, dim: usize, value: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> Self {
        Self {
            nodes,
            dim,
            value: Box::new(value),
            gradient: None,
            bound: None,
            tanh_wrapped: false,
        }
    }

    /// Sample times given as times; each must be a grid node.
    pub fn node_indices(grid: &TimeGrid, times: &[f64]) -> Result<Vec<usize>> {
        times
            .iter()
            .map(|&t| {
                grid.index_of(t)
                    .ok_or_else(|| Error::invalid("cylinder sample time is not a grid node"))
            })
            .collect()
    }

    /// Declares `sup |F| ≤ bound`.
    pub fn with_bound(mut self, bound: f64) -> Self {
        self.bound = Some(bound);
        self
    }

    /// `tanh ∘ F`, bounded by 1.
    pub fn tanh_wrapped(self) -> Self {
        let Self {
            nodes,
            dim,
            value,
            gradient,
            ..
        } = self;
        let value: alloc::sync::Arc<ValueFn> = alloc::sync::Arc::new(value);
        let v2 = value.clone();
        let gradient = gradient.map(|g| {
            Box::new(move |x: &[f64], out: &mut [f64]| {
                g(x, out);
                let th = tanh(v2(x));
                let s = 1.0 - th * th;
                out.iter_mut().for_each(|o| *o *= s);
            }) as GradFn
        });
        Self {
            nodes,
            dim,
            value: Box::new(move |x| tanh(value(x))),
            gradient,
            bound: Some(1.0),
            tanh_wrapped: true,
        }
    }

    pub fn nodes(&self) -> &[usize] {
        &self.nodes
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn bound(&self) -> Option<f64> {
        self.bound
    }

    pub fn is_tanh_wrapped(&self) -> bool {
        self.tanh_wrapped
    }

    pub fn gradient_source(&self) -> DerivativeSource {
        if self.gradient.is_some() {
            DerivativeSource::Analytic
        } else {
            DerivativeSource::FiniteDifference
        }
    }

    fn check_path(&self, sigma: &DrivingPath) -> Result<()> {
        if sigma.dim() != self.dim {
            return Err(Error::invalid("cylinder function and path dimensions differ"));
        }
        if self.nodes.iter().any(|&k| k > sigma.grid().intervals()) {
            return Err(Error::invalid("cylinder sample node beyond the grid"));
        }
        Ok(())
    }

    fn gather(&self, sigma: &DrivingPath) -> Vec<f64> {
        self.nodes.iter().flat_map(|&k| sigma.value(k).iter().copied()).collect()
    }

    pub fn eval_args(&self, x: &[f64]) -> f64 {
        (self.value)(x)
    }

    pub fn gradient_args(&self, x: &[f64], out: &mut [f64]) {
        match &self.gradient {
            Some(g) => g(x, out),
            None => {
                let mut y = x.to_vec();
                for j in 0..x.len() {
                    let h = fd_step(x[j]);
                    y[j] = x[j] + h;
                    let fp = (self.value)(&y);
                    y[j] = x[j] - h;
                    let fm = (self.value)(&y);
                    y[j] = x[j];
                    out[j] = (fp - fm) / (2.0 * h);
                }
            }
        }
    }

    pub fn eval(&self, sigma: &DrivingPath) -> Result<f64> {
        self.check_path(sigma)?;
        Ok((self.value)(&self.gather(sigma)))
    }

    /// `f(σ + t·h)`, reading the shift at the sample nodes only.
    pub fn eval_shifted(&self, sigma: &DrivingPath, h: &CameronMartinPath, t: f64) -> Result<f64> {
        self.check_path(sigma)?;
        let x: Vec<f64> = self
            .nodes
            .iter()
            .flat_map(|&k| {
                sigma
                    .value(k)
                    .iter()
                    .zip(h.value(k))
                    .map(move |(s, hv)| s + t * hv)
            })
            .collect();
        Ok((self.value)(&x))
    }

    /// Largest relative discrepancy between the gradient oracle and central
    /// differences over the probe points.
    pub fn gradient_discrepancy(&self, probes: &[Vec<f64>]) -> f64 {
        let mut worst: f64 = 0.0;
        for x in probes {
            let mut g = alloc::vec![0.0; x.len()];
            self.gradient_args(x, &mut g);
            let mut y = x.clone();
            for j in 0..x.len() {
                let h = fd_step(x[j]);
                y[j] = x[j] + h;
                let fp = (self.value)(&y);
                y[j] = x[j] - h;
                let fm = (self.value)(&y);
                y[j] = x[j];
                let fd = (fp - fm) / (2.0 * h);
                worst = worst.max((fd - g[j]).abs() / (1.0 + g[j].abs()));
            }
        }
        worst
    }
}

/// `d_H f_σ(h) = Σ_j ⟨∂_j F(σ(t_·)), h(t_j)⟩`.
pub fn h_derivative_flat(f: &FlatCylinderFunction, h: &CameronMartinPath, sigma: &DrivingPath) -> Result<f64> {
    f.check_path(sigma)?;
    super::brownian::check_compatible(sigma, h)?;
    let x = f.gather(sigma);
    let mut g = alloc::vec![0.0; x.len()];
    f.gradient_args(&x, &mut g);
    let m = f.dim;
    let mut s = 0.0;
    for (slot, &k) in f.nodes.iter().enumerate() {
        for a in 0..m {
            s += g[slot * m + a] * h.value(k)[a];
        }
    }
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::sync::Arc;
    use alloc::vec;

    fn grid() -> Arc<TimeGrid> {
        Arc::new(TimeGrid::uniform(1.0, 10).unwrap())
    }

    fn end_linear() -> FlatCylinderFunction {
        FlatCylinderFunction::new(vec![10], 1, |x| x[0], |_, g| g[0] = 1.0)
    }

    #[test]
    fn linear_terminal_value() {
        let g = grid();
        let h = CameronMartinPath::constant(g.clone(), &[1.0]).unwrap();
        let sigma = DrivingPath::zero(g.clone(), 1).unwrap();
        assert!((h_derivative_flat(&end_linear(), &h, &sigma).unwrap() - 1.0).abs() < 1e-14);
        let z = CameronMartinPath::zero(g, 1).unwrap();
        assert_eq!(h_derivative_flat(&end_linear(), &z, &sigma).unwrap(), 0.0);
    }

    #[test]
    fn quadratic_chain_rule() {
        let g = grid();
        let f = FlatCylinderFunction::new(vec![10], 1, |x| x[0] * x[0], |x, o| o[0] = 2.0 * x[0]);
        let mut inc = vec![0.0; 10];
        inc[3] = 0.3;
        let sigma = DrivingPath::from_increments(g.clone(), 1, inc).unwrap();
        let h = CameronMartinPath::constant(g, &[1.0]).unwrap();
        assert!((h_derivative_flat(&f, &h, &sigma).unwrap() - 0.6).abs() < 1e-14);
    }

    #[test]
    fn tanh_wrapping_and_fd_fallback() {
        let f = FlatCylinderFunction::new(vec![3, 10], 2, |x| x[0] * x[3] + x[1], |x, o| {
            o[0] = x[3];
            o[1] = 1.0;
            o[2] = 0.0;
            o[3] = x[0];
        })
        .tanh_wrapped();
        assert_eq!(f.bound(), Some(1.0));
        let probes = vec![vec![0.1, 0.2, 0.3, 0.4], vec![-1.0, 0.5, 2.0, 0.7]];
        assert!(f.gradient_discrepancy(&probes) < 1e-6);
        let fd = FlatCylinderFunction::value_only(vec![10], 1, |x| libm::sin(x[0]));
        assert_eq!(fd.gradient_source(), DerivativeSource::FiniteDifference);
        let mut o = [0.0];
        fd.gradient_args(&[0.4], &mut o);
        assert!((o[0] - libm::cos(0.4)).abs() < 1e-9);
    }

    #[test]
    fn off_grid_times_rejected() {
        let g = grid();
        assert!(FlatCylinderFunction::node_indices(&g, &[0.5, 1.0]).is_ok());
        assert!(FlatCylinderFunction::node_indices(&g, &[0.55]).is_err());
    }
}
