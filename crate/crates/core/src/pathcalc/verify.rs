use super::cylinder::{cylinder_h_derivative, pullback_one_form, PathCylinderFunction};
use super::tangent::tbar_ito;
use crate::ensemble::Ensemble;
use crate::error::{Error, Result};
use crate::linalg::{dist, norm};
use crate::manifold::{Connection, EmbeddedManifold, InducedConnection, LeviCivita};
use crate::rng::{PathStream, SeedStream};
use crate::sde::{ito_map, ito_map_h_derivative, validate_brownian, IntegratorConfig, SdeSystem};
use crate::stats::MeanComparison;
use crate::wiener::{paley_wiener, sample_brownian, CameronMartinPath, DrivingPath};
use alloc::sync::Arc;
use alloc::vec::Vec;

/// Pathwise tolerance for the two chain-rule routes.
pub const CHAIN_RULE_TOL: f64 = 1e-10;
/// Minimum ensemble size for the path-space integration by parts check.
pub const MIN_IBP_SAMPLES: usize = 10_000;
/// Allowed distance between the induced and Levi-Civita connections.
pub const LEVI_CIVITA_TOL: f64 = 1e-4;

/// `d(f∘I)(h)` at one driving path, by two routes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntertwiningCheck {
    /// Chain rule of `f`'s gradient through the variational integrator.
    pub chain_rule: f64,
    /// `I*(df)(h)`.
    pub pullback: f64,
    /// Central difference of `ε ↦ f(I(ω + εh))`, for reference.
    pub finite_difference: f64,
    pub difference: f64,
    pub passed: bool,
}

/// Compares `d(f∘I)(h)` computed by the chain rule with the pullback of the
/// cylinder differential of `f`.
pub fn verify_intertwining<const A: usize, const N: usize, S: SdeSystem<A, N> + ?Sized>(
    f: &PathCylinderFunction<A>,
    sys: &S,
    omega: &DrivingPath,
    h: &CameronMartinPath,
    x0: &[f64; A],
    cfg: &IntegratorConfig,
) -> Result<IntertwiningCheck> {
    let m = sys.manifold();
    let tv = ito_map_h_derivative(sys, omega, h, x0, cfg)?;
    let chain_rule = cylinder_h_derivative(m, f, &tv)?;
    let pullback = pullback_one_form(&f.differential(), sys, omega, h, x0, cfg)?;
    let eps = 1e-5 / (1.0 + h.norm_sq().sqrt());
    let plus = ito_map(sys, &omega.shifted(h, eps)?, x0, cfg)?;
    let minus = ito_map(sys, &omega.shifted(h, -eps)?, x0, cfg)?;
    let finite_difference = (f.eval(&plus)? - f.eval(&minus)?) / (2.0 * eps);
    let difference = chain_rule - pullback;
    Ok(IntertwiningCheck {
        chain_rule,
        pullback,
        finite_difference,
        difference,
        passed: difference.abs() <= CHAIN_RULE_TOL * (1.0 + chain_rule.abs()),
    })
}

/// `E[d(f∘I)(h)]` against `E[d_H f(T̄I_σ(h))]` on common random numbers:
/// the tower property over the fibres of `I`.
#[allow(clippy::too_many_arguments)]
pub fn intertwining_expectation<E, const A: usize, const N: usize, S>(
    f: &PathCylinderFunction<A>,
    sys: &S,
    h: &CameronMartinPath,
    x0: &[f64; A],
    n: usize,
    cfg: &IntegratorConfig,
    seeds: SeedStream,
    ensemble: &E,
) -> Result<MeanComparison>
where
    E: Ensemble,
    S: SdeSystem<A, N> + Sync + ?Sized,
{
    if n < 2 {
        return Err(Error::invalid("at least two samples are required"));
    }
    let m = sys.manifold();
    let grid = h.grid().clone();
    let pairs: Result<Vec<(f64, f64)>> = ensemble
        .map(n, |i| {
            let omega = sample_brownian(&grid, sys.drive_dim(), &mut seeds.path(i as u64))?;
            let tv = ito_map_h_derivative(sys, &omega, h, x0, cfg)?;
            let a = cylinder_h_derivative(m, f, &tv)?;
            let tb = tbar_ito(sys, tv.path(), h)?;
            Ok((a, cylinder_h_derivative(m, f, &tb)?))
        })
        .into_iter()
        .collect();
    Ok(MeanComparison::from_pairs(&pairs?, MeanComparison::DEFAULT_THRESHOLD))
}

/// Largest `|∇̆_v U − ∇_v U|` over random constant-projected fields `U` and
/// tangent `v` at uniform points; zero when the system induces Levi-Civita.
pub fn levi_civita_defect<const A: usize, const N: usize, S: SdeSystem<A, N> + ?Sized>(
    sys: &S,
    probes: usize,
    stream: &mut PathStream,
) -> Result<f64> {
    let m = sys.manifold();
    let mut worst: f64 = 0.0;
    for _ in 0..probes {
        let x = m.sample_uniform(stream);
        let a: [f64; A] = core::array::from_fn(|_| stream.normal());
        let b: [f64; A] = core::array::from_fn(|_| stream.normal());
        let u = move |y: &[f64; A]| m.project(y, &a);
        let v = m.project(&x, &b);
        let induced = InducedConnection(sys).covariant(&x, &u, &v)?;
        let lc = LeviCivita(m).covariant(&x, &u, &v)?;
        worst = worst.max(dist(&induced, &lc) / (1.0 + norm(&lc)));
    }
    Ok(worst)
}

fn check_ibp_system<const A: usize, const N: usize, S: SdeSystem<A, N> + ?Sized>(sys: &S) -> Result<()> {
    let mut probe = SeedStream::new(0x6962_7070).path(0);
    validate_brownian(sys, 8, &mut probe)?;
    let d = levi_civita_defect(sys, 8, &mut probe)?;
    if d > LEVI_CIVITA_TOL {
        return Err(Error::Degenerate(alloc::format!(
            "system '{}' does not induce the Levi-Civita connection (defect {d:.3e})",
            sys.name()
        )));
    }
    Ok(())
}

/// Path-space integration by parts through the Itô map:
/// `E[d_H f(T̄I_σ(h))]` against `E[(f∘I) · P(h)]`, on common random numbers.
#[allow(clippy::too_many_arguments)]
pub fn verify_ibp_path<E, const A: usize, const N: usize, S>(
    f: &PathCylinderFunction<A>,
    sys: &S,
    h: &CameronMartinPath,
    x0: &[f64; A],
    n: usize,
    cfg: &IntegratorConfig,
    seeds: SeedStream,
    ensemble: &E,
) -> Result<MeanComparison>
where
    E: Ensemble,
    S: SdeSystem<A, N> + Sync + ?Sized,
{
    let mut out = ibp_path_battery(core::slice::from_ref(f), core::slice::from_ref(h), sys, x0, n, cfg, seeds, ensemble)?;
    Ok(out.remove(0))
}

/// [`verify_ibp_path`] for every pair in `fs × hs` (function-major order),
/// sharing one ensemble of solution paths.
#[allow(clippy::too_many_arguments)]
pub fn ibp_path_battery<E, const A: usize, const N: usize, S>(
    fs: &[PathCylinderFunction<A>],
    hs: &[CameronMartinPath],
    sys: &S,
    x0: &[f64; A],
    n: usize,
    cfg: &IntegratorConfig,
    seeds: SeedStream,
    ensemble: &E,
) -> Result<Vec<MeanComparison>>
where
    E: Ensemble,
    S: SdeSystem<A, N> + Sync + ?Sized,
{
    if n < MIN_IBP_SAMPLES {
        return Err(Error::invalid("path-space integration by parts needs at least 10^4 samples"));
    }
    let Some(first) = hs.first() else {
        return Err(Error::invalid("at least one direction is required"));
    };
    if fs.is_empty() {
        return Err(Error::invalid("at least one test function is required"));
    }
    let grid = first.grid().clone();
    if hs.iter().any(|h| h.grid().nodes() != grid.nodes() || h.dim() != sys.drive_dim()) {
        return Err(Error::invalid("directions must share one grid and the drive dimension"));
    }
    check_ibp_system(sys)?;
    let m = sys.manifold();
    let k = fs.len() * hs.len();
    let rows: Result<Vec<Vec<(f64, f64)>>> = ensemble
        .map(n, |i| {
            let omega = sample_brownian(&grid, sys.drive_dim(), &mut seeds.path(i as u64))?;
            let path = Arc::new(ito_map(sys, &omega, x0, cfg)?);
            let values: Vec<f64> = fs.iter().map(|f| f.eval(&path)).collect::<Result<_>>()?;
            let mut row = Vec::with_capacity(k);
            let mut tangents = Vec::with_capacity(hs.len());
            let mut pw = Vec::with_capacity(hs.len());
            for h in hs {
                tangents.push(tbar_ito(sys, &path, h)?);
                pw.push(paley_wiener(h, &omega)?);
            }
            for (f, value) in fs.iter().zip(&values) {
                for (tb, p) in tangents.iter().zip(&pw) {
                    row.push((cylinder_h_derivative(m, f, tb)?, value * p));
                }
            }
            Ok(row)
        })
        .into_iter()
        .collect();
    let rows = rows?;
    Ok((0..k)
        .map(|j| {
            let pairs: Vec<(f64, f64)> = rows.iter().map(|r| r[j]).collect();
            MeanComparison::from_pairs(&pairs, MeanComparison::DEFAULT_THRESHOLD)
        })
        .collect())
}
