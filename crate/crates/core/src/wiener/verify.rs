use super::{cm_density, h_derivative_flat, paley_wiener, sample_brownian, CameronMartinPath, FlatCylinderFunction};
use crate::ensemble::Ensemble;
use crate::error::{Error, Result};
use crate::rng::SeedStream;
use crate::stats::MeanComparison;
use alloc::vec::Vec;

const MIN_SAMPLES: usize = 1_000;

fn collect_pairs<E: Ensemble, F>(ensemble: &E, n: usize, f: F) -> Result<Vec<(f64, f64)>>
where
    F: Fn(usize) -> Result<(f64, f64)> + Sync + Send,
{
    ensemble.map(n, f).into_iter().collect()
}

/// Both sides of the quasi-invariance formula on common random numbers:
/// `E[f(σ)]` against `E[f(σ + t·h) · exp(−t·P(h) − t²|h|²/2)]`.
///
/// `f` must declare a bound (see [`FlatCylinderFunction::tanh_wrapped`]).
pub fn verify_cm_shift<E: Ensemble>(
    f: &FlatCylinderFunction,
    h: &CameronMartinPath,
    t: f64,
    n: usize,
    seeds: SeedStream,
    ensemble: &E,
) -> Result<MeanComparison> {
    if n < MIN_SAMPLES {
        return Err(Error::invalid("at least 1000 samples are required"));
    }
    if f.bound().is_none() {
        return Err(Error::invalid(
            "the test function must be bounded; wrap it with tanh_wrapped()",
        ));
    }
    let grid = h.grid().clone();
    let m = h.dim();
    let pairs = collect_pairs(ensemble, n, |i| {
        let sigma = sample_brownian(&grid, m, &mut seeds.path(i as u64))?;
        let lhs = f.eval(&sigma)?;
        let rhs = f.eval_shifted(&sigma, h, t)? * cm_density(h, t, &sigma)?;
        Ok((lhs, rhs))
    })?;
    Ok(MeanComparison::from_pairs(&pairs, MeanComparison::DEFAULT_THRESHOLD))
}

/// Flat integration by parts: `E[d_H f(h)]` against `E[f · P(h)]`.
pub fn verify_ibp_flat<E: Ensemble>(
    f: &FlatCylinderFunction,
    h: &CameronMartinPath,
    n: usize,
    seeds: SeedStream,
    ensemble: &E,
) -> Result<MeanComparison> {
    if n < MIN_SAMPLES {
        return Err(Error::invalid("at least 1000 samples are required"));
    }
    let grid = h.grid().clone();
    let m = h.dim();
    let pairs = collect_pairs(ensemble, n, |i| {
        let sigma = sample_brownian(&grid, m, &mut seeds.path(i as u64))?;
        let lhs = h_derivative_flat(f, h, &sigma)?;
        let rhs = f.eval(&sigma)? * paley_wiener(h, &sigma)?;
        Ok((lhs, rhs))
    })?;
    Ok(MeanComparison::from_pairs(&pairs, MeanComparison::DEFAULT_THRESHOLD))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensemble::Sequential;
    use crate::wiener::TimeGrid;
    use alloc::sync::Arc;
    use alloc::vec;

    fn setup() -> (Arc<TimeGrid>, CameronMartinPath) {
        let g = Arc::new(TimeGrid::uniform(1.0, 8).unwrap());
        let h = CameronMartinPath::constant(g.clone(), &[1.0]).unwrap();
        (g, h)
    }

    fn tanh_end() -> FlatCylinderFunction {
        FlatCylinderFunction::new(vec![8], 1, |x| libm::tanh(x[0]), |x, o| {
            let t = libm::tanh(x[0]);
            o[0] = 1.0 - t * t
        })
        .with_bound(1.0)
    }

    #[test]
    fn constant_function_and_zero_shift() {
        let (g, h) = setup();
        let one = FlatCylinderFunction::new(vec![8], 1, |_| 1.0, |_, o| o[0] = 0.0).with_bound(1.0);
        let r = verify_cm_shift(&one, &h, 0.8, 2_000, SeedStream::new(1), &Sequential).unwrap();
        assert_eq!(r.lhs_mean, 1.0);
        assert!(r.passed);
        let r0 = verify_cm_shift(&tanh_end(), &h, 0.0, 2_000, SeedStream::new(1), &Sequential).unwrap();
        assert_eq!(r0.difference, 0.0);
        assert!(r0.passed);
        let ibp = verify_ibp_flat(&one, &h, 2_000, SeedStream::new(2), &Sequential).unwrap();
        assert_eq!(ibp.lhs_mean, 0.0);
        assert!(ibp.passed);
        let _ = g;
    }

    #[test]
    fn unbounded_and_small_n_rejected() {
        let (_, h) = setup();
        let lin = FlatCylinderFunction::new(vec![8], 1, |x| x[0], |_, o| o[0] = 1.0);
        assert!(verify_cm_shift(&lin, &h, 0.5, 2_000, SeedStream::new(1), &Sequential).is_err());
        assert!(verify_ibp_flat(&lin, &h, 10, SeedStream::new(1), &Sequential).is_err());
    }

    #[test]
    fn tanh_terminal_passes() {
        let (_, h) = setup();
        let r = verify_cm_shift(&tanh_end(), &h, 0.5, 100_000, SeedStream::new(7), &Sequential).unwrap();
        assert!(r.passed, "{r:?}");
        let r = verify_ibp_flat(&tanh_end(), &h, 100_000, SeedStream::new(8), &Sequential).unwrap();
        assert!(r.passed, "{r:?}");
    }

    #[test]
    fn linear_functional_covariance() {
        // f = P(k): E[d_H f(h)] = ⟨h,k⟩ = E[P(k)P(h)]
        let (g, h) = setup();
        let k = CameronMartinPath::from_fn(g.clone(), 1, |t, _, o| o[0] = 1.0 - t).unwrap();
        let hk = h.inner(&k).unwrap();
        // P(k) as a cylinder function of all node values: Σ k̇_i (B_{i+1} − B_i)
        let kd: Vec<f64> = (0..8).map(|i| k.hdot(i)[0]).collect();
        let kd2 = kd.clone();
        let f = FlatCylinderFunction::new(
            (0..=8).collect(),
            1,
            move |x| (0..8).map(|i| kd[i] * (x[i + 1] - x[i])).sum(),
            move |_, o| {
                for j in 0..=8 {
                    let up = if j >= 1 { kd2[j - 1] } else { 0.0 };
                    let down = if j < 8 { kd2[j] } else { 0.0 };
                    o[j] = up - down;
                }
            },
        );
        let r = verify_ibp_flat(&f, &h, 50_000, SeedStream::new(3), &Sequential).unwrap();
        assert!((r.lhs_mean - hk).abs() < 1e-12);
        assert!(r.passed, "{r:?}");
    }
}
