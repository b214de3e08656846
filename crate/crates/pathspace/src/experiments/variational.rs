//! Criteria 10–14: derivatives of the Itô map, damped tangents and
//! integration by parts on path space.

use super::common::{comparison_checks, comparison_table, rel};
use super::{Context, Outcome, Result};
use crate::report::{fmt, Check, DataTable};
use pathspace_core::linalg::dot;
use pathspace_core::manifold::{Circle, EmbeddedManifold, So3, Sphere};
use pathspace_core::pathcalc::{
    damped_derivative, damped_inverse, ibp_path_battery, intertwining_expectation, pullback_one_form, tbar_ito,
    verify_intertwining, PathCylinderFunction, CHAIN_RULE_TOL,
};
use pathspace_core::sde::{
    ito_map, ito_map_h_derivative, CircleSystem, GradientSystem, IntegratorConfig, SdeSystem, So3BiinvariantSystem,
};
use pathspace_core::wiener::{sample_brownian, CameronMartinPath, TimeGrid};
use pathspace_core::PathStream;
use std::sync::Arc;

pub const FD_TOL: f64 = 1e-6;
pub const LINEARITY_TOL: f64 = 1e-12;
/// Damped round trip at the reference resolution.
pub const ROUNDTRIP_TOL: f64 = 5e-3;
/// Allowed distance of the refinement ratio from one half.
pub const HALVING_BAND: f64 = 0.1;
/// The discrete damped pair inverts exactly up to rounding.
pub const DISCRETE_INVERSE_TOL: f64 = 1e-10;

fn icfg(ctx: &Context<'_>) -> IntegratorConfig {
    IntegratorConfig::default().with_substeps(ctx.config.substeps)
}

fn grid(ctx: &Context<'_>) -> Result<Arc<TimeGrid>> {
    Ok(Arc::new(TimeGrid::uniform(ctx.config.horizon, ctx.config.intervals)?))
}

/// `ḣ^a(t) = α_a sin(ω_a t + φ_a) + β_a` with random coefficients.
fn random_h(grid: &Arc<TimeGrid>, dim: usize, st: &mut PathStream) -> Result<CameronMartinPath> {
    let c: Vec<[f64; 4]> = (0..dim).map(|_| [st.normal(), 1.0 + 4.0 * st.uniform(), st.normal(), st.normal()]).collect();
    Ok(CameronMartinPath::from_fn(grid.clone(), dim, |a, b, o| {
        let t = 0.5 * (a + b);
        for (v, k) in o.iter_mut().zip(&c) {
            *v = k[0] * (k[1] * t + k[2]).sin() + k[3];
        }
    })?)
}

fn max_gap<const A: usize>(a: &[[f64; A]], b: &[[f64; A]]) -> f64 {
    let size = a.iter().chain(b).flat_map(|v| v.iter()).fold(0f64, |m, x| m.max(x.abs()));
    let gap = a.iter().zip(b).flat_map(|(x, y)| x.iter().zip(y).map(|(p, q)| (p - q).abs())).fold(0f64, f64::max);
    gap / (1.0 + size)
}

/// Worst finite-difference and linearity gaps of the variational derivative.
fn variational_probe<const A: usize, const N: usize, S: SdeSystem<A, N>>(
    sys: &S,
    g: &Arc<TimeGrid>,
    probes: usize,
    cfg: &IntegratorConfig,
    seeds: pathspace_core::SeedStream,
) -> Result<(f64, f64, f64)> {
    let x0 = sys.manifold().base_point();
    let md = sys.drive_dim();
    let (mut fd, mut lin, mut zero) = (0f64, 0f64, 0f64);
    for k in 0..probes {
        let mut st = seeds.path(k as u64);
        let w = sample_brownian(g, md, &mut st)?;
        let (h1, h2) = (random_h(g, md, &mut st)?, random_h(g, md, &mut st)?);
        let (a, b) = (st.normal(), st.normal());
        let d1 = ito_map_h_derivative(sys, &w, &h1, &x0, cfg)?;
        let d2 = ito_map_h_derivative(sys, &w, &h2, &x0, cfg)?;
        let eps = 1e-5 / (1.0 + h1.norm_sq().sqrt());
        let plus = ito_map(sys, &w.shifted(&h1, eps)?, &x0, cfg)?;
        let minus = ito_map(sys, &w.shifted(&h1, -eps)?, &x0, cfg)?;
        let diff: Vec<[f64; A]> = (0..plus.nodes())
            .map(|j| std::array::from_fn(|i| (plus.point(j)[i] - minus.point(j)[i]) / (2.0 * eps)))
            .collect();
        fd = fd.max(max_gap(d1.vectors(), &diff));
        let dc = ito_map_h_derivative(sys, &w, &h1.combine(a, &h2, b)?, &x0, cfg)?;
        let comb: Vec<[f64; A]> = d1
            .vectors()
            .iter()
            .zip(d2.vectors())
            .map(|(p, q)| std::array::from_fn(|i| a * p[i] + b * q[i]))
            .collect();
        lin = lin.max(max_gap(dc.vectors(), &comb));
        let z = ito_map_h_derivative(sys, &w, &CameronMartinPath::zero(g.clone(), md)?, &x0, cfg)?;
        zero = zero.max(z.vectors().iter().flat_map(|v| v.iter()).fold(0f64, |m, x| m.max(x.abs())));
    }
    Ok((fd, lin, zero))
}

pub fn variational_ito(ctx: &Context<'_>) -> Result<Outcome> {
    let g = grid(ctx)?;
    let cfg = icfg(ctx);
    let n = ctx.config.samples;
    let mut rows = Vec::new();
    if ctx.config.includes("circle") {
        rows.push(("S1", variational_probe(&CircleSystem::new(), &g, n, &cfg, ctx.seeds(0))?));
    }
    if ctx.config.includes("sphere") {
        rows.push(("S2 gradient", variational_probe(&GradientSystem::new(Sphere), &g, n, &cfg, ctx.seeds(1))?));
    }
    if ctx.config.includes("so3") {
        rows.push(("SO3 bi-invariant", variational_probe(&So3BiinvariantSystem::new(), &g, n, &cfg, ctx.seeds(2))?));
    }
    let mut checks = Vec::new();
    for (label, (fd, lin, zero)) in rows {
        checks.push(Check::discretization(format!("{label}: variational derivative vs central differences, {n} probes"), fd, FD_TOL));
        checks.push(Check::exact(format!("{label}: linearity in h"), lin, LINEARITY_TOL));
        checks.push(Check::exact(format!("{label}: h = 0 gives 0"), zero, 0.0));
    }
    Ok(Outcome::checks_only(checks))
}

pub fn damped_roundtrip(ctx: &Context<'_>) -> Result<Outcome> {
    let cfg = ctx.config;
    let n = cfg.intervals;
    let levels = [n / 2, n, 2 * n];
    if n < 2 || n % 2 != 0 {
        return Err(super::ExperimentError::Other("intervals must be even".into()));
    }
    let sys = GradientSystem::new(Sphere);
    let x0 = Sphere.base_point();
    let icfg = icfg(ctx);
    let finest = Arc::new(TimeGrid::uniform(cfg.horizon, 2 * n)?);
    let grids: Vec<Arc<TimeGrid>> = levels.iter().map(|&k| TimeGrid::uniform(cfg.horizon, k).map(Arc::new)).collect::<std::result::Result<_, _>>()?;
    let seeds = ctx.seeds(0);
    let mut sq = [0f64; 3];
    let mut worst = [0f64; 3];
    let mut exact: f64 = 0.0;
    let mut data = DataTable::new(&["path", "intervals", "relative_l2_error"]);
    for p in 0..cfg.samples {
        let mut st = seeds.path(p as u64);
        let w = sample_brownian(&finest, 3, &mut st)?;
        let c: [[f64; 3]; 2] = std::array::from_fn(|_| [2.0 * st.uniform() - 1.0, 1.0 + 2.0 * st.uniform(), st.normal()]);
        let field = |t: f64| -> [f64; 2] { std::array::from_fn(|a| c[a][0] * (c[a][1] * t + c[a][2]).cos() + 1.0) };
        for (j, g) in grids.iter().enumerate() {
            let wj = w.coarsen(2 * n / g.intervals(), g.clone())?;
            let path = Arc::new(ito_map(&sys, &wj, &x0, &icfg)?);
            let u: Vec<[f64; 3]> = (0..g.intervals()).map(|i| path.frame(i).apply(&field(g.node(i)))).collect();
            let tangent = damped_inverse(&Sphere, &path, &u)?;
            let d = damped_derivative(&Sphere, &tangent)?;
            let (mut err, mut size) = (0.0, 0.0);
            for (i, di) in d.iter().enumerate() {
                let dt = g.dt(i);
                let target = field(0.5 * (g.node(i) + g.node(i + 1)));
                let held = field(g.node(i));
                for a in 0..2 {
                    err += (di[a] - target[a]).powi(2) * dt;
                    size += target[a].powi(2) * dt;
                    exact = exact.max(rel(di[a], held[a]));
                }
            }
            let r = (err / size).sqrt();
            sq[j] += r * r;
            worst[j] = worst[j].max(r);
            data.push(vec![p.to_string(), g.intervals().to_string(), fmt(r)]);
        }
    }
    let rms: Vec<f64> = sq.iter().map(|s| (s / cfg.samples as f64).sqrt()).collect();
    let checks = vec![
        Check::exact("discrete identity: damped_derivative(damped_inverse(u)) = u on each interval", exact, DISCRETE_INVERSE_TOL),
        Check::discretization(format!("worst relative L2 error against the continuous field, N={n}"), worst[1], ROUNDTRIP_TOL),
        Check::discretization(
            format!("refinement ratio |e(N={})/e(N={}) - 1/2|", levels[1], levels[0]),
            (rms[1] / rms[0] - 0.5).abs(),
            HALVING_BAND,
        ),
        Check::discretization(
            format!("refinement ratio |e(N={})/e(N={}) - 1/2|", levels[2], levels[1]),
            (rms[2] / rms[1] - 0.5).abs(),
            HALVING_BAND,
        ),
    ];
    Ok(Outcome { checks, data })
}

fn membership_probe<const A: usize, const N: usize, S: SdeSystem<A, N>>(
    sys: &S,
    g: &Arc<TimeGrid>,
    probes: usize,
    cfg: &IntegratorConfig,
    seeds: pathspace_core::SeedStream,
    circle: bool,
) -> Result<(f64, f64, f64)> {
    let m = sys.manifold();
    let x0 = m.base_point();
    let md = sys.drive_dim();
    let (mut member, mut invert, mut flat) = (0f64, 0f64, 0f64);
    for k in 0..probes {
        let mut st = seeds.path(k as u64);
        let w = sample_brownian(g, md, &mut st)?;
        let h = random_h(g, md, &mut st)?;
        let path = Arc::new(ito_map(sys, &w, &x0, cfg)?);
        let tb = tbar_ito(sys, &path, &h)?;
        member = member.max(tb.membership_defect(m));
        if !tb.norm_sq().is_finite() {
            member = f64::INFINITY;
        }
        let d = damped_derivative(m, &tb)?;
        let want: Vec<[f64; N]> = (0..g.intervals()).map(|i| path.frame(i).coords(m, &sys.diffusion(path.point(i), h.hdot(i)))).collect();
        invert = invert.max(max_gap(&d, &want));
        if circle {
            for j in 0..path.nodes() {
                flat = flat.max((tb.coords(j)[0] - h.value(j)[0]).abs());
            }
        }
    }
    Ok((member, invert, flat))
}

pub fn tbar_membership(ctx: &Context<'_>) -> Result<Outcome> {
    let g = grid(ctx)?;
    let cfg = icfg(ctx);
    let n = ctx.config.samples;
    let mut checks = Vec::new();
    let mut push = |label: &str, (member, invert, _): (f64, f64, f64)| {
        checks.push(Check::exact(format!("{label}: Bismut membership defect, {n} probes"), member, DISCRETE_INVERSE_TOL));
        checks.push(Check::exact(format!("{label}: damped derivative recovers X(sigma) hdot"), invert, DISCRETE_INVERSE_TOL));
    };
    let mut circle_flat = None;
    if ctx.config.includes("circle") {
        let r = membership_probe(&CircleSystem::new(), &g, n, &cfg, ctx.seeds(0), true)?;
        circle_flat = Some(r.2);
        push("S1", r);
    }
    if ctx.config.includes("sphere") {
        push("S2 gradient", membership_probe(&GradientSystem::new(Sphere), &g, n, &cfg, ctx.seeds(1), false)?);
    }
    if ctx.config.includes("so3") {
        push("SO3 bi-invariant", membership_probe(&So3BiinvariantSystem::new(), &g, n, &cfg, ctx.seeds(2), false)?);
    }
    if let Some(f) = circle_flat {
        checks.push(Check::exact("S1: representing path equals h", f, LINEARITY_TOL));
    }
    Ok(Outcome::checks_only(checks))
}

/// A random cylinder function on S² from a small family.
fn sphere_probe_function(t: f64, st: &mut PathStream) -> Result<PathCylinderFunction<3>> {
    let e: [f64; 3] = std::array::from_fn(|_| st.normal());
    let e2: [f64; 3] = std::array::from_fn(|_| st.normal());
    Ok(match st.next_u64() % 3 {
        0 => PathCylinderFunction::coordinate(Sphere, t, e)?,
        1 => product(Sphere, [0.5 * t, t], e, e2)?,
        _ => tanh_pair(Sphere, [0.25 * t, t], e, e2)?,
    })
}

pub fn intertwining(ctx: &Context<'_>) -> Result<Outcome> {
    let g = grid(ctx)?;
    let cfg = icfg(ctx);
    let sys = GradientSystem::new(Sphere);
    let x0 = Sphere.base_point();
    let probes = ctx.config.count("probes");
    let seeds = ctx.seeds(0);
    let (mut chain, mut fd, mut lin) = (0f64, 0f64, 0f64);
    for k in 0..probes {
        let mut st = seeds.path(k as u64);
        let w = sample_brownian(&g, 3, &mut st)?;
        let (h1, h2) = (random_h(&g, 3, &mut st)?, random_h(&g, 3, &mut st)?);
        let f = sphere_probe_function(g.horizon(), &mut st)?;
        let c = verify_intertwining(&f, &sys, &w, &h1, &x0, &cfg)?;
        chain = chain.max(c.difference.abs() / (1.0 + c.chain_rule.abs()));
        fd = fd.max(rel(c.finite_difference, c.chain_rule));
        let phi = f.differential();
        let p1 = pullback_one_form(&phi, &sys, &w, &h1, &x0, &cfg)?;
        let p2 = pullback_one_form(&phi, &sys, &w, &h2, &x0, &cfg)?;
        let pc = pullback_one_form(&phi, &sys, &w, &h1.combine(2.0, &h2, -0.5)?, &x0, &cfg)?;
        lin = lin.max(rel(pc, 2.0 * p1 - 0.5 * p2));
    }
    let f = PathCylinderFunction::coordinate(Sphere, g.horizon(), [0.0, 0.0, 1.0])?;
    let h = CameronMartinPath::constant(g.clone(), &[1.0, 0.5, -0.3])?;
    let shadow = intertwining_expectation(&f, &sys, &h, &x0, ctx.config.samples, &cfg, ctx.seeds(1), ctx.ensemble)?;
    let rows = vec![("E[d(f o I)(h)] = E[d_H f(tbar I h)], f = <sigma(T), e3>".to_string(), shadow)];
    let mut checks = vec![
        Check::exact(format!("chain rule = pullback of df, {probes} probes"), chain, CHAIN_RULE_TOL),
        Check::discretization("chain rule vs central difference", fd, FD_TOL),
        Check::exact("pullback is linear in h", lin, LINEARITY_TOL),
    ];
    checks.extend(comparison_checks(&rows));
    Ok(Outcome {
        checks,
        data: comparison_table(&rows),
    })
}

/// `⟨σ(t_1), e⟩ ⟨σ(t_2), e2⟩`
fn product<const A: usize, const N: usize, M>(m: M, times: [f64; 2], e: [f64; A], e2: [f64; A]) -> Result<PathCylinderFunction<A>>
where
    M: EmbeddedManifold<A, N> + 'static,
{
    Ok(PathCylinderFunction::from_ambient(
        m,
        times.to_vec(),
        move |xs| dot(&xs[0], &e) * dot(&xs[1], &e2),
        move |xs, out| {
            let (a, b) = (dot(&xs[0], &e), dot(&xs[1], &e2));
            out[0] = e.map(|v| v * b);
            out[1] = e2.map(|v| v * a);
        },
    )?)
}

/// `tanh(⟨σ(t_1), e⟩ + 2⟨σ(t_2), e2⟩)`
fn tanh_pair<const A: usize, const N: usize, M>(m: M, times: [f64; 2], e: [f64; A], e2: [f64; A]) -> Result<PathCylinderFunction<A>>
where
    M: EmbeddedManifold<A, N> + 'static,
{
    let arg = move |xs: &[[f64; A]]| dot(&xs[0], &e) + 2.0 * dot(&xs[1], &e2);
    Ok(PathCylinderFunction::from_ambient(
        m,
        times.to_vec(),
        move |xs| arg(xs).tanh(),
        move |xs, out| {
            let s = 1.0 - arg(xs).tanh().powi(2);
            out[0] = e.map(|v| s * v);
            out[1] = e2.map(|v| 2.0 * s * v);
        },
    )?)
}

/// `⟨σ(T), e⟩`, `⟨σ(T/2), e⟩⟨σ(T), e2⟩`, `tanh(⟨σ(T/4), e⟩ + 2⟨σ(T), e2⟩)`.
fn test_functions<const A: usize, const N: usize, M>(m: M, t: f64, e: [f64; A], e2: [f64; A]) -> Result<Vec<PathCylinderFunction<A>>>
where
    M: EmbeddedManifold<A, N> + Copy + 'static,
{
    Ok(vec![
        PathCylinderFunction::coordinate(m, t, e)?,
        product(m, [0.5 * t, t], e, e2)?,
        tanh_pair(m, [0.25 * t, t], e, e2)?,
    ])
}

fn battery<const A: usize, const N: usize, S: SdeSystem<A, N> + Sync>(
    ctx: &Context<'_>,
    label: &str,
    sys: &S,
    fs: &[PathCylinderFunction<A>],
    hs: &[CameronMartinPath],
    tag: u64,
    rows: &mut Vec<(String, pathspace_core::stats::MeanComparison)>,
) -> Result<()> {
    let x0 = sys.manifold().base_point();
    let r = ibp_path_battery(fs, hs, sys, &x0, ctx.config.samples, &icfg(ctx), ctx.seeds(tag), ctx.ensemble)?;
    for (j, c) in r.into_iter().enumerate() {
        rows.push((format!("{label} f{} h{}", j / hs.len() + 1, j % hs.len() + 1), c));
    }
    Ok(())
}

pub fn path_ibp(ctx: &Context<'_>) -> Result<Outcome> {
    let g = grid(ctx)?;
    let t = g.horizon();
    let mut rows = Vec::new();
    if ctx.config.includes("circle") {
        let fs = test_functions(Circle, t, [0.0, 1.0], [1.0, 0.0])?;
        let hs = [
            CameronMartinPath::constant(g.clone(), &[1.0])?,
            CameronMartinPath::from_fn(g.clone(), 1, |a, b, o| o[0] = 2.0 * (1.0 - 0.5 * (a + b) / t))?,
        ];
        battery(ctx, "S1", &CircleSystem::new(), &fs, &hs, 0, &mut rows)?;
    }
    if ctx.config.includes("sphere") {
        let fs = test_functions(Sphere, t, [0.0, 0.0, 1.0], [1.0, 0.0, 0.0])?;
        let hs = [
            CameronMartinPath::constant(g.clone(), &[1.0, 0.5, -0.3])?,
            CameronMartinPath::from_fn(g.clone(), 3, |a, b, o| {
                o[0] = 0.0;
                o[1] = 2.0 * (1.0 - 0.5 * (a + b) / t);
                o[2] = 1.0;
            })?,
        ];
        battery(ctx, "S2", &GradientSystem::new(Sphere), &fs, &hs, 1, &mut rows)?;
    }
    if ctx.config.includes("so3") {
        let mut e = [0.0; 9];
        e[8] = 1.0;
        let mut e2 = [0.0; 9];
        e2[1] = 0.5;
        e2[3] = 0.5;
        let fs = test_functions(So3, t, e, e2)?;
        let hs = [
            CameronMartinPath::constant(g.clone(), &[1.0, 0.5, -0.3, 0.2, 0.0, 0.7])?,
            CameronMartinPath::from_fn(g.clone(), 6, |a, b, o| {
                let s = 0.5 * (a + b) / t;
                for (k, v) in o.iter_mut().enumerate() {
                    *v = 0.5 * (1.0 - s) * (k as f64 - 2.5);
                }
            })?,
        ];
        battery(ctx, "SO3", &So3BiinvariantSystem::new(), &fs, &hs, 2, &mut rows)?;
    }
    Ok(Outcome {
        checks: comparison_checks(&rows),
        data: comparison_table(&rows),
    })
}
