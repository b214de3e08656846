//! Criteria 6, 7 and 17: the heat-kernel law of Brownian motion on S².

use super::common::{rel, sphere_marginal_test, P_THRESHOLD};
use super::{find, Context, Outcome, Result};
use crate::config::{ConfigFile, ExperimentConfig};
use crate::report::Check;
use crate::runner::execute;
use pathspace_core::linalg::dot;
use pathspace_core::manifold::{EmbeddedManifold, So3, Sphere};
use pathspace_core::sde::{antidevelopment, development, ito_endpoint, GradientSystem, IntegratorConfig};
use pathspace_core::stats::mean_se;
use pathspace_core::Ensemble;
use pathspace_core::wiener::{sample_brownian, CameronMartinPath, DrivingPath, TimeGrid};
use std::sync::Arc;

/// Two-standard-error band of the Richardson weak-error check.
pub const WEAK_ERROR_SE: f64 = 2.0;
pub const ROUNDTRIP_TOL: f64 = 1e-8;
/// Drift of the binned probabilities away from total mass one.
pub const MASS_TOL: f64 = 1e-10;

fn marginal_checks(us: &[f64], t: f64, bins: usize, label: &str) -> Result<(Vec<Check>, crate::report::DataTable)> {
    let (r, table, mass) = sphere_marginal_test(us, t, bins)?;
    Ok((
        vec![
            Check::exact(format!("{label}: binned heat-kernel mass"), mass, MASS_TOL),
            Check::p_value(format!("{label}: chi-square of <x(T), x0>, {bins} bins"), r.statistic, r.p_value, P_THRESHOLD),
        ],
        table,
    ))
}

pub fn marginal_law(ctx: &Context<'_>) -> Result<Outcome> {
    let cfg = ctx.config;
    let n = cfg.intervals;
    if n % 2 != 0 {
        return Err(super::ExperimentError::Other("intervals must be even for the weak-error check".into()));
    }
    let sys = GradientSystem::new(Sphere);
    let x0 = Sphere.base_point();
    let icfg = IntegratorConfig::default().with_substeps(cfg.substeps);
    let fine = Arc::new(TimeGrid::uniform(cfg.horizon, n)?);
    let coarse = Arc::new(TimeGrid::uniform(cfg.horizon, n / 2)?);
    let seeds = ctx.seeds(0);
    let pairs: Vec<(f64, f64)> = ctx
        .ensemble
        .map(cfg.samples, |i| -> Result<(f64, f64)> {
            let w = sample_brownian(&fine, 3, &mut seeds.path(i as u64))?;
            let xf = ito_endpoint(&sys, &w, &x0, &icfg)?;
            let xc = ito_endpoint(&sys, &w.coarsen(2, coarse.clone())?, &x0, &icfg)?;
            Ok((dot(&xf, &x0), dot(&xc, &x0)))
        })
        .into_iter()
        .collect::<Result<_>>()?;
    let us: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let (mut checks, data) = marginal_checks(&us, cfg.horizon, cfg.count("bins"), &format!("N={n}"))?;
    // E⟨x(T), x0⟩ = e^{−T}: the first zonal harmonic has eigenvalue −1 under ½△
    let exact = (-cfg.horizon).exp();
    let extrapolated: Vec<f64> = pairs.iter().map(|(f, c)| 2.0 * f - c - exact).collect();
    let (bias, se) = mean_se(&extrapolated);
    checks.push(Check::within_se(
        format!("weak error halves from N={} to N={n}: 2 E_{n} - E_{} - exp(-T)", n / 2, n / 2),
        bias,
        se,
        WEAK_ERROR_SE,
    ));
    Ok(Outcome { checks, data })
}

fn smooth_flat(grid: &Arc<TimeGrid>, dim: usize, st: &mut pathspace_core::PathStream) -> Result<DrivingPath> {
    let c: Vec<[f64; 4]> = (0..dim).map(|_| [st.normal(), 1.0 + 3.0 * st.uniform(), st.normal(), 0.5 * st.normal()]).collect();
    let h = CameronMartinPath::from_fn(grid.clone(), dim, |a, b, o| {
        let t = 0.5 * (a + b);
        for (v, k) in o.iter_mut().zip(&c) {
            *v = k[0] * (k[1] * t + k[2]).sin() + k[3];
        }
    })?;
    Ok(DrivingPath::from_cameron_martin(&h))
}

fn roundtrip_gap<const A: usize, const N: usize, M: EmbeddedManifold<A, N>>(m: &M, b: &DrivingPath) -> Result<f64> {
    let back = antidevelopment(m, &development(m, b, &m.base_point())?)?;
    let mut worst: f64 = 0.0;
    for k in 0..=b.grid().intervals() {
        for (x, y) in back.value(k).iter().zip(b.value(k)) {
            worst = worst.max((x - y).abs());
        }
    }
    Ok(worst)
}

pub fn development_roundtrip(ctx: &Context<'_>) -> Result<Outcome> {
    let cfg = ctx.config;
    let smooth = Arc::new(TimeGrid::uniform(cfg.horizon, cfg.count("smooth_intervals"))?);
    let seeds = ctx.seeds(1);
    let (mut s2, mut r3) = (0f64, 0f64);
    for k in 0..cfg.count("smooth_paths") {
        let mut st = seeds.path(k as u64);
        s2 = s2.max(roundtrip_gap(&Sphere, &smooth_flat(&smooth, 2, &mut st)?)?);
        r3 = r3.max(roundtrip_gap(&So3, &smooth_flat(&smooth, 3, &mut st)?)?);
    }
    let x0 = Sphere.base_point();
    let grid = Arc::new(TimeGrid::uniform(cfg.horizon, cfg.intervals)?);
    let bm = ctx.seeds(0);
    let us: Vec<f64> = ctx
        .ensemble
        .map(cfg.samples, |i| -> Result<f64> {
            let b = sample_brownian(&grid, 2, &mut bm.path(i as u64))?;
            Ok(dot(development(&Sphere, &b, &x0)?.endpoint(), &x0))
        })
        .into_iter()
        .collect::<Result<_>>()?;
    let mut checks = vec![
        Check::exact("S2 antidevelopment(development(b)) = b on smooth paths", s2, ROUNDTRIP_TOL),
        Check::exact("SO3 antidevelopment(development(b)) = b on smooth paths", r3, ROUNDTRIP_TOL),
    ];
    let (more, data) = marginal_checks(&us, cfg.horizon, cfg.count("bins"), &format!("developed Brownian motion, N={}", cfg.intervals))?;
    checks.extend(more);
    Ok(Outcome { checks, data })
}

pub fn determinism(ctx: &Context<'_>) -> Result<Outcome> {
    let cfg = ctx.config;
    let exp = find("marginal-law").expect("registered");
    let file = ConfigFile {
        manifold: Some(cfg.manifold.clone()),
        intervals: Some(cfg.intervals),
        horizon: Some(cfg.horizon),
        samples: Some(cfg.samples),
        substeps: Some(cfg.substeps),
        params: [("bins".to_string(), toml::Value::Integer(cfg.count("bins") as i64))].into_iter().collect(),
    };
    let inner = ExperimentConfig::resolve(exp.name, &exp.defaults, &file).map_err(|e| super::ExperimentError::Other(e.to_string()))?;
    let workers = cfg.count("workers");
    let run = |w: usize| execute(exp, &inner, ctx.seed, w).map_err(|e| super::ExperimentError::Other(e.to_string()));
    let one = run(1)?;
    let many = run(workers)?;
    let (ja, jb) = (one.report.to_json_without_timing(), many.report.to_json_without_timing());
    let differing = ja.lines().zip(jb.lines()).filter(|(a, b)| a != b).count() + ja.lines().count().abs_diff(jb.lines().count());
    let rows = one.data.rows.iter().zip(&many.data.rows).filter(|(a, b)| a != b).count()
        + one.data.rows.len().abs_diff(many.data.rows.len());
    let stats: f64 = one
        .report
        .checks
        .iter()
        .zip(&many.report.checks)
        .map(|(a, b)| rel(a.statistic, b.statistic))
        .fold(0.0, f64::max);
    let checks = vec![
        Check::exact(format!("report.json lines differing, 1 vs {workers} workers"), differing as f64, 0.0),
        Check::exact(format!("data.csv rows differing, 1 vs {workers} workers"), rows as f64, 0.0),
        Check::exact("largest relative change of a check statistic", stats, 0.0),
    ];
    Ok(Outcome::checks_only(checks))
}
