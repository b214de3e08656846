use super::{fd_step, CameronMartinPath, DrivingPath};
use crate::error::{Error, Result};
use crate::rng::PathStream;
use alloc::boxed::Box;
use alloc::vec::Vec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DerivativeSource {
    Analytic,
    FiniteDifference,
}

/// A path-dependent Cameron–Martin direction `σ ↦ V(σ)`.
pub trait HVectorField: Send + Sync {
    fn dim(&self) -> usize;

    /// `V̇_i` depends only on `ΔB_0, …, ΔB_{i−1}`.
    fn is_adapted(&self) -> bool;

    fn evaluate(&self, sigma: &DrivingPath) -> Result<CameronMartinPath>;

    /// `∂V̇_i^a / ∂ΔB_i^a` at `σ`, when an analytic oracle exists.
    fn trace_derivative(&self, _sigma: &DrivingPath, _i: usize, _a: usize) -> Option<f64> {
        None
    }
}

type RowFn = Box<dyn Fn(&DrivingPath, usize, &mut [f64]) + Send + Sync>;
type TraceFn = Box<dyn Fn(&DrivingPath, usize, usize) -> f64 + Send + Sync>;

/// An [`HVectorField`] assembled from closures returning `V̇_i(σ)`.
pub struct ClosureField {
    dim: usize,
    adapted: bool,
    row: RowFn,
    trace: Option<TraceFn>,
}

impl ClosureField {
    pub fn new(
        dim: usize,
        adapted: bool,
        row: impl Fn(&DrivingPath, usize, &mut [f64]) + Send + Sync + 'static,
    ) -> Self {
        Self {
            dim,
            adapted,
            row: Box::new(row),
            trace: None,
        }
    }

    pub fn with_trace(mut self, trace: impl Fn(&DrivingPath, usize, usize) -> f64 + Send + Sync + 'static) -> Self {
        self.trace = Some(Box::new(trace));
        self
    }
}

impl HVectorField for ClosureField {
    fn dim(&self) -> usize {
        self.dim
    }

    fn is_adapted(&self) -> bool {
        self.adapted
    }

    fn evaluate(&self, sigma: &DrivingPath) -> Result<CameronMartinPath> {
        let n = sigma.grid().intervals();
        let mut hdot = alloc::vec![0.0; n * self.dim];
        for i in 0..n {
            (self.row)(sigma, i, &mut hdot[i * self.dim..(i + 1) * self.dim]);
        }
        CameronMartinPath::new(sigma.grid().clone(), self.dim, hdot)
    }

    fn trace_derivative(&self, sigma: &DrivingPath, i: usize, a: usize) -> Option<f64> {
        self.trace.as_ref().map(|t| t(sigma, i, a))
    }
}

/// Discrete divergence split into its two sums.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SkorohodValue {
    /// `Σ_{i,a} V̇_i^a ΔB_i^a − correction`
    pub value: f64,
    /// `Σ_{i,a} V̇_i^a ΔB_i^a`
    pub increment_sum: f64,
    /// `Σ_{i,a} (∂V̇_i^a / ∂ΔB_i^a) Δt_i`
    pub correction: f64,
    pub source: DerivativeSource,
}

/// Gaussian divergence of `V` in increment coordinates:
/// `Σ V̇_i·ΔB_i − Σ (∂V̇_i^a/∂ΔB_i^a) Δt_i`.
///
/// With `source = Analytic` the field's trace oracle is required; with
/// `FiniteDifference` each diagonal derivative is a central difference in the
/// increment and the result is flagged as such.
pub fn skorohod_discrete<V: HVectorField + ?Sized>(
    field: &V,
    sigma: &DrivingPath,
    source: DerivativeSource,
) -> Result<SkorohodValue> {
    if field.dim() != sigma.dim() {
        return Err(Error::invalid("field and path dimensions differ"));
    }
    let v = field.evaluate(sigma)?;
    let grid = sigma.grid();
    let m = sigma.dim();
    let mut increment_sum = 0.0;
    for i in 0..grid.intervals() {
        for a in 0..m {
            increment_sum += v.hdot(i)[a] * sigma.increment(i)[a];
        }
    }
    let mut correction = 0.0;
    for i in 0..grid.intervals() {
        for a in 0..m {
            let d = match source {
                DerivativeSource::Analytic => field.trace_derivative(sigma, i, a).ok_or_else(|| {
                    Error::Unsupported("vector field has no analytic derivative oracle".into())
                })?,
                DerivativeSource::FiniteDifference => fd_trace(field, sigma, i, a)?,
            };
            correction += d * grid.dt(i);
        }
    }
    Ok(SkorohodValue {
        value: increment_sum - correction,
        increment_sum,
        correction,
        source,
    })
}

fn perturbed(sigma: &DrivingPath, i: usize, a: usize, delta: f64) -> Result<DrivingPath> {
    let mut inc = sigma.increments().to_vec();
    inc[i * sigma.dim() + a] += delta;
    DrivingPath::from_increments(sigma.grid().clone(), sigma.dim(), inc)
}

fn fd_trace<V: HVectorField + ?Sized>(field: &V, sigma: &DrivingPath, i: usize, a: usize) -> Result<f64> {
    let x = sigma.increment(i)[a];
    let h = fd_step(x);
    let up = field.evaluate(&perturbed(sigma, i, a, h)?)?.hdot(i)[a];
    let down = field.evaluate(&perturbed(sigma, i, a, -h)?)?.hdot(i)[a];
    Ok((up - down) / (2.0 * h))
}

/// Spot-checks adaptedness: perturbs a random increment `ΔB_j` and confirms
/// `V̇_i` is unchanged for every `i ≤ j`. Returns the indices of failed probes.
pub fn check_adaptedness<V: HVectorField + ?Sized>(
    field: &V,
    sigma: &DrivingPath,
    probes: usize,
    stream: &mut PathStream,
) -> Result<Vec<usize>> {
    let n = sigma.grid().intervals();
    let base = field.evaluate(sigma)?;
    let mut failures = Vec::new();
    for p in 0..probes {
        let j = (stream.next_u64() % n as u64) as usize;
        let a = (stream.next_u64() % sigma.dim() as u64) as usize;
        let moved = field.evaluate(&perturbed(sigma, j, a, 0.5 + stream.uniform())?)?;
        let changed = (0..=j).any(|i| base.hdot(i) != moved.hdot(i));
        if changed {
            failures.push(p);
        }
    }
    Ok(failures)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SeedStream;
    use crate::wiener::{paley_wiener, sample_brownian, TimeGrid};
    use alloc::sync::Arc;

    fn grid() -> Arc<TimeGrid> {
        Arc::new(TimeGrid::uniform(1.0, 32).unwrap())
    }

    #[test]
    fn deterministic_field_is_paley_wiener() {
        let g = grid();
        let h = CameronMartinPath::from_fn(g.clone(), 2, |t, _, o| {
            o[0] = libm::sin(t);
            o[1] = 2.0;
        })
        .unwrap();
        let hh = h.clone();
        let field = ClosureField::new(2, true, move |_, i, o| o.copy_from_slice(hh.hdot(i)))
            .with_trace(|_, _, _| 0.0);
        let sigma = sample_brownian(&g, 2, &mut SeedStream::new(1).path(0)).unwrap();
        let s = skorohod_discrete(&field, &sigma, DerivativeSource::Analytic).unwrap();
        assert!((s.value - paley_wiener(&h, &sigma).unwrap()).abs() < 1e-14);
    }

    #[test]
    fn adapted_field_has_zero_trace() {
        let g = grid();
        let field = ClosureField::new(1, true, |s, i, o| o[0] = s.value(i)[0]).with_trace(|_, _, _| 0.0);
        let sigma = sample_brownian(&g, 1, &mut SeedStream::new(2).path(0)).unwrap();
        let ito: f64 = (0..32).map(|i| sigma.value(i)[0] * sigma.increment(i)[0]).sum();
        for src in [DerivativeSource::Analytic, DerivativeSource::FiniteDifference] {
            let s = skorohod_discrete(&field, &sigma, src).unwrap();
            assert_eq!(s.correction, 0.0);
            assert!((s.value - ito).abs() <= 1e-12);
        }
        let mut st = SeedStream::new(3).path(0);
        assert!(check_adaptedness(&field, &sigma, 50, &mut st).unwrap().is_empty());
    }

    #[test]
    fn anticipating_terminal_value() {
        let g = grid();
        let field = ClosureField::new(1, false, |s, _, o| o[0] = s.value(32)[0]).with_trace(|_, _, _| 1.0);
        let sigma = sample_brownian(&g, 1, &mut SeedStream::new(4).path(0)).unwrap();
        let bt = sigma.value(32)[0];
        let s = skorohod_discrete(&field, &sigma, DerivativeSource::Analytic).unwrap();
        assert!((s.value - (bt * bt - 1.0)).abs() <= 1e-12);
        let fd = skorohod_discrete(&field, &sigma, DerivativeSource::FiniteDifference).unwrap();
        assert!((fd.value - s.value).abs() < 1e-8);
        let mut st = SeedStream::new(5).path(0);
        assert!(!check_adaptedness(&field, &sigma, 20, &mut st).unwrap().is_empty());
    }

    #[test]
    fn missing_oracle_is_unsupported() {
        let g = grid();
        let field = ClosureField::new(1, true, |_, _, o| o[0] = 1.0);
        let sigma = DrivingPath::zero(g, 1).unwrap();
        assert!(matches!(
            skorohod_discrete(&field, &sigma, DerivativeSource::Analytic),
            Err(Error::Unsupported(_))
        ));
    }
}
