//! Criteria 15 and 16: bridge marginals, terminal snaps and Bismut loops.

use super::common::{quantile, rel, P_THRESHOLD};
use super::{Context, ExperimentError, Outcome, Result};
use crate::report::{fmt, Check, DataTable};
use crate::stats::{chi_square_counts, ks_test, ks_two_sample};
use pathspace_core::linalg::{add, cross, dot, norm, scale};
use pathspace_core::manifold::{Circle, CircleHeatKernel, EmbeddedManifold, HeatKernel, Sphere, SphereHeatKernel};
use pathspace_core::quadrature::GaussLegendre;
use pathspace_core::sde::{BaseSampler, BridgeConfig, BrownianBridge, CircleSystem, GradientSystem, SdeSystem};
use pathspace_core::{Ensemble, SeedStream};
use std::f64::consts::PI;

/// The quadrature total of the midpoint density must reproduce `p_T(x0, y0)`.
pub const CK_TOL: f64 = 1e-6;
const S2_RINGS: [f64; 7] = [0.0, 0.25, 0.5, 0.75, 1.0, 1.4, PI];
const S2_SECTORS: usize = 6;
const S1_BINS: usize = 32;
/// Smallest expected count per chi-square bin.
const MIN_EXPECTED: f64 = 5.0;

fn bridge_config(ctx: &Context<'_>, intervals: usize) -> BridgeConfig {
    let mut cfg = BridgeConfig::default().with_intervals(intervals);
    cfg.integrator = cfg.integrator.with_substeps(ctx.config.substeps);
    cfg
}

fn collect<T>(xs: Vec<pathspace_core::Result<T>>) -> Result<Vec<T>> {
    Ok(xs.into_iter().collect::<pathspace_core::Result<Vec<T>>>()?)
}

fn first_error(err: &mut Option<pathspace_core::Error>, r: pathspace_core::Result<(f64, f64)>) -> (f64, f64) {
    r.unwrap_or_else(|e| {
        err.get_or_insert(e);
        (0.0, 0.0)
    })
}

/// Binned law of a midpoint sample.
struct Binned {
    labels: Vec<String>,
    counts: Vec<u64>,
    probs: Vec<f64>,
    total: f64,
}

impl Binned {
    fn normalize(mut self) -> Self {
        let s: f64 = self.probs.iter().sum();
        self.probs.iter_mut().for_each(|p| *p /= s);
        self.total = s;
        self
    }

    /// Merges runs of adjacent bins until each expects at least
    /// `MIN_EXPECTED` of `n` counts; a short remainder joins the last group.
    fn merge_sparse(self, n: usize) -> Self {
        let mut out = Binned {
            labels: Vec::new(),
            counts: Vec::new(),
            probs: Vec::new(),
            total: self.total,
        };
        let (mut first, mut c, mut p) = (None, 0u64, 0.0);
        for j in 0..self.probs.len() {
            let start = *first.get_or_insert(j);
            c += self.counts[j];
            p += self.probs[j];
            if p * n as f64 >= MIN_EXPECTED {
                out.labels.push(span(&self.labels, start, j));
                out.counts.push(c);
                out.probs.push(p);
                (first, c, p) = (None, 0, 0.0);
            }
        }
        if let Some(start) = first {
            match out.probs.len() {
                0 => {
                    out.labels.push(span(&self.labels, start, self.probs.len() - 1));
                    out.counts.push(c);
                    out.probs.push(p);
                }
                k => {
                    out.labels[k - 1] = format!("{} + {}", out.labels[k - 1], span(&self.labels, start, self.probs.len() - 1));
                    out.counts[k - 1] += c;
                    out.probs[k - 1] += p;
                }
            }
        }
        out
    }
}

fn span(labels: &[String], a: usize, b: usize) -> String {
    if a == b {
        labels[a].clone()
    } else {
        format!("{} .. {}", labels[a], labels[b])
    }
}

/// S¹: equal angle bins, weights `p_{T/2}(x0, z) p_{T/2}(z, y0)`.
fn circle_midpoint(sep: f64, horizon: f64, angles: &[f64]) -> Result<Binned> {
    let k = CircleHeatKernel::default();
    let gl = GaussLegendre::new(16);
    let h = 0.5 * horizon;
    let edges: Vec<f64> = (0..=S1_BINS).map(|j| -PI + 2.0 * PI * j as f64 / S1_BINS as f64).collect();
    let mut err = None;
    let probs: Vec<f64> = edges
        .windows(2)
        .map(|w| {
            gl.integrate(w[0], w[1], |z| {
                let a = first_error(&mut err, k.profile(h, z)).0;
                let b = first_error(&mut err, k.profile(h, z - sep)).0;
                a * b
            })
        })
        .collect();
    if let Some(e) = err {
        return Err(e.into());
    }
    let mut counts = vec![0u64; S1_BINS];
    for &a in angles {
        let j = (((a + PI) / (2.0 * PI)) * S1_BINS as f64).floor() as isize;
        counts[j.clamp(0, S1_BINS as isize - 1) as usize] += 1;
    }
    Ok(Binned {
        labels: edges.windows(2).map(|w| format!("angle [{:.4}, {:.4})", w[0], w[1])).collect(),
        counts,
        probs,
        total: 0.0,
    }
    .normalize())
}

/// Polar coordinates `(ρ, ψ)` about the geodesic midpoint `c` with the
/// tangent basis `(a, b)`.
fn s2_polar(c: &[f64; 3], a: &[f64; 3], b: &[f64; 3], z: &[f64; 3]) -> (f64, f64) {
    let rho = Sphere.distance(c, z);
    let psi = dot(z, b).atan2(dot(z, a));
    (rho, psi)
}

/// S²: rings about the geodesic midpoint times equal azimuth sectors.
fn sphere_midpoint(x0: &[f64; 3], y0: &[f64; 3], horizon: f64, points: &[[f64; 3]]) -> Result<Binned> {
    let k = SphereHeatKernel::default();
    let gl = GaussLegendre::new(16);
    let h = 0.5 * horizon;
    let (c, a, b) = midpoint_basis(x0, y0)?;
    let sector = 2.0 * PI / S2_SECTORS as f64;
    let mut err = None;
    let mut probs = Vec::new();
    let mut labels = Vec::new();
    for r in S2_RINGS.windows(2) {
        for s in 0..S2_SECTORS {
            let (lo, hi) = (-PI + s as f64 * sector, -PI + (s + 1) as f64 * sector);
            let p = gl.integrate(r[0], r[1], |rho| {
                rho.sin()
                    * gl.integrate(lo, hi, |psi| {
                        let dir = add(&scale(psi.cos(), &a), &scale(psi.sin(), &b));
                        let z = add(&scale(rho.cos(), &c), &scale(rho.sin(), &dir));
                        let p1 = first_error(&mut err, k.profile(h, dot(x0, &z))).0;
                        let p2 = first_error(&mut err, k.profile(h, dot(&z, y0))).0;
                        p1 * p2
                    })
            });
            probs.push(p);
            labels.push(format!("rho [{}, {:.4}) sector {s}", r[0], r[1]));
        }
    }
    if let Some(e) = err {
        return Err(e.into());
    }
    let mut counts = vec![0u64; probs.len()];
    for z in points {
        let (rho, psi) = s2_polar(&c, &a, &b, z);
        let ring = S2_RINGS.windows(2).position(|w| rho < w[1]).unwrap_or(S2_RINGS.len() - 2);
        let s = (((psi + PI) / sector).floor() as usize).min(S2_SECTORS - 1);
        counts[ring * S2_SECTORS + s] += 1;
    }
    Ok(Binned {
        labels,
        counts,
        probs,
        total: 0.0,
    }
    .normalize())
}

/// Geodesic midpoint of `x0, y0` and an orthonormal tangent basis there.
fn midpoint_basis(x0: &[f64; 3], y0: &[f64; 3]) -> Result<([f64; 3], [f64; 3], [f64; 3])> {
    let v = Sphere
        .log(x0, y0)
        .ok_or_else(|| ExperimentError::Other("bridge endpoints are antipodal".into()))?;
    let c = Sphere.exp(x0, &scale(0.5, &v));
    let a = if norm(&v) > 0.0 {
        let w = Sphere.transport(x0, &c, &v)?;
        scale(1.0 / norm(&w), &w)
    } else {
        Sphere.reference_frame(&c)[0]
    };
    let b = cross(&c, &a);
    Ok((c, a, b))
}

fn midpoint_check(label: &str, n: usize, b: Binned, oracle: f64, checks: &mut Vec<Check>, data: &mut DataTable) -> Result<()> {
    let merged = b.merge_sparse(n);
    let b = &merged;
    let r = chi_square_counts(&b.counts, &b.probs)?;
    checks.push(Check::p_value(format!("{label}: midpoint chi-square, {} bins, n={n}", b.counts.len()), r.statistic, r.p_value, P_THRESHOLD));
    checks.push(Check::exact(format!("{label}: quadrature mass vs p_T(x0, y0)"), rel(b.total, oracle), CK_TOL));
    for j in 0..b.counts.len() {
        data.push(vec![label.to_string(), b.labels[j].clone(), b.counts[j].to_string(), fmt(n as f64 * b.probs[j])]);
    }
    Ok(())
}

fn midpoints<const A: usize, const N: usize, S, K>(
    ctx: &Context<'_>,
    bridge: &BrownianBridge<'_, A, N, S, K>,
    ends: (&[f64; A], &[f64; A]),
    n: usize,
    seeds: SeedStream,
) -> Result<Vec<[f64; A]>>
where
    S: SdeSystem<A, N> + Sync,
    K: HeatKernel<A, N> + Sync,
{
    let k = bridge.config().intervals / 2;
    let t = ctx.config.horizon;
    collect(ctx.ensemble.map(n, |i| bridge.sample_node(ends.0, ends.1, t, k, &mut seeds.path(i as u64))))
}

/// 99th percentile of the terminal snap distance at each resolution.
fn snap_percentiles<const A: usize, const N: usize, S, K>(
    ctx: &Context<'_>,
    sys: &S,
    kernel: &K,
    ends: (&[f64; A], &[f64; A]),
    levels: &[usize],
    n: usize,
    tag: u64,
) -> Result<Vec<f64>>
where
    S: SdeSystem<A, N> + Sync,
    K: HeatKernel<A, N> + Sync,
{
    let t = ctx.config.horizon;
    let mut out = Vec::new();
    for (j, &level) in levels.iter().enumerate() {
        let bridge = BrownianBridge::new(sys, kernel, bridge_config(ctx, level))?;
        let seeds = ctx.seeds(tag).derive(j as u64);
        let d = collect(ctx.ensemble.map(n, |i| {
            bridge
                .sample(ends.0, ends.1, t, &mut seeds.path(i as u64))
                .map(|s| s.snap_distance)
        }))?;
        out.push(quantile(&d, 0.99));
    }
    Ok(out)
}

fn monotone_checks(label: &str, levels: &[usize], p99: &[f64], checks: &mut Vec<Check>, data: &mut DataTable) {
    for (l, p) in levels.iter().zip(p99) {
        data.push(vec![format!("{label} snap p99"), l.to_string(), fmt(*p), String::new()]);
    }
    for j in 1..levels.len() {
        checks.push(Check::statistical_at_most(
            format!("{label}: snap p99(N={}) - p99(N={})", levels[j], levels[j - 1]),
            p99[j] - p99[j - 1],
            0.0,
        ));
    }
}

pub fn bridge_law(ctx: &Context<'_>) -> Result<Outcome> {
    let cfg = ctx.config;
    let n = cfg.samples;
    let sep = cfg.param("separation");
    let n_sym = cfg.count("symmetric_samples");
    let n_snap = cfg.count("snap_samples");
    let levels = [cfg.intervals, 2 * cfg.intervals, 4 * cfg.intervals];
    let t = cfg.horizon;
    let mut checks = Vec::new();
    let mut data = DataTable::new(&["label", "bin", "count_or_value", "expected"]);
    if cfg.includes("circle") {
        let sys = CircleSystem::new();
        let k = CircleHeatKernel::default();
        let bridge = BrownianBridge::new(&sys, &k, bridge_config(ctx, cfg.intervals))?;
        let x0 = Circle::point(0.0);
        for (j, (s, count)) in [(sep, n), (0.0, n_sym)].into_iter().enumerate() {
            let y0 = Circle::point(s);
            let pts = midpoints(ctx, &bridge, (&x0, &y0), count, ctx.seeds(j as u64))?;
            let angles: Vec<f64> = pts.iter().map(Circle::angle).collect();
            let b = circle_midpoint(s, t, &angles)?;
            let label = format!("S1 separation {s}");
            midpoint_check(&label, count, b, k.density(t, &x0, &y0)?, &mut checks, &mut data)?;
        }
        let y0 = Circle::point(sep);
        let p99 = snap_percentiles(ctx, &sys, &k, (&x0, &y0), &levels, n_snap, 2)?;
        monotone_checks("S1", &levels, &p99, &mut checks, &mut data);
    }
    if cfg.includes("sphere") {
        let sys = GradientSystem::new(Sphere);
        let k = SphereHeatKernel::default();
        let bridge = BrownianBridge::new(&sys, &k, bridge_config(ctx, cfg.intervals))?;
        let x0 = Sphere.base_point();
        for (j, (s, count)) in [(sep, n), (0.0, n_sym)].into_iter().enumerate() {
            let y0 = [s.sin(), 0.0, s.cos()];
            let pts = midpoints(ctx, &bridge, (&x0, &y0), count, ctx.seeds(10 + j as u64))?;
            let b = sphere_midpoint(&x0, &y0, t, &pts)?;
            let label = format!("S2 separation {s}");
            midpoint_check(&label, count, b, k.density(t, &x0, &y0)?, &mut checks, &mut data)?;
        }
        let y0 = [sep.sin(), 0.0, sep.cos()];
        let p99 = snap_percentiles(ctx, &sys, &k, (&x0, &y0), &levels, n_snap, 12)?;
        monotone_checks("S2", &levels, &p99, &mut checks, &mut data);
    }
    Ok(Outcome { checks, data })
}

/// Per-loop statistics: base coordinate, midpoint coordinate, a quarter-loop
/// increment from the start, one from the middle, and the snap distance.
type LoopStats = (f64, f64, f64, f64, f64);

#[allow(clippy::too_many_arguments)]
fn loops<const A: usize, const N: usize, S, K>(
    ctx: &Context<'_>,
    sys: &S,
    kernel: &K,
    intervals: usize,
    n: usize,
    seeds: SeedStream,
    coord: impl Fn(&[f64; A]) -> f64 + Sync,
    increment: impl Fn(&[f64; A], &[f64; A]) -> f64 + Sync,
) -> Result<Vec<LoopStats>>
where
    S: SdeSystem<A, N> + Sync,
    K: HeatKernel<A, N> + Sync,
{
    let bridge = BrownianBridge::new(sys, kernel, bridge_config(ctx, intervals))?;
    let t = ctx.config.horizon;
    let q = intervals / 4;
    collect(ctx.ensemble.map(n, |i| {
        let l = bridge.sample_loop(t, BaseSampler::Homogeneous, &mut seeds.path(i as u64))?;
        let p = &l.bridge.path;
        Ok((
            coord(&l.base),
            coord(p.point(2 * q)),
            increment(p.point(0), p.point(q)),
            increment(p.point(2 * q), p.point(3 * q)),
            l.bridge.snap_distance,
        ))
    }))
}

#[allow(clippy::too_many_arguments)]
fn loop_checks(
    label: &str,
    a: &[LoopStats],
    b: &[LoopStats],
    uniform_cdf: impl Fn(f64) -> f64 + Copy,
    coord_name: &str,
    limit: f64,
    checks: &mut Vec<Check>,
    data: &mut DataTable,
) -> Result<()> {
    let n = a.len();
    let base: Vec<f64> = a.iter().map(|s| s.0).collect();
    let mid: Vec<f64> = a.iter().map(|s| s.1).collect();
    let start_inc: Vec<f64> = a.iter().map(|s| s.2).collect();
    let mid_inc: Vec<f64> = b.iter().map(|s| s.3).collect();
    let snaps: Vec<f64> = a.iter().map(|s| s.4).collect();
    let r = ks_test(&base, uniform_cdf)?;
    checks.push(Check::p_value(format!("{label}: base point {coord_name} uniform, KS n={n}"), r.statistic, r.p_value, P_THRESHOLD));
    let r = ks_test(&mid, uniform_cdf)?;
    checks.push(Check::p_value(format!("{label}: sigma(T/2) {coord_name} uniform, KS n={n}"), r.statistic, r.p_value, P_THRESHOLD));
    let r = ks_two_sample(&start_inc, &mid_inc)?;
    checks.push(Check::p_value(
        format!("{label}: quarter-loop increment from 0 vs from T/2 (independent loop sets), two-sample KS"),
        r.statistic,
        r.p_value,
        P_THRESHOLD,
    ));
    let p99 = quantile(&snaps, 0.99);
    checks.push(Check::statistical_at_most(format!("{label}: snap distance p99"), p99, limit));
    data.push(vec![label.into(), "snap_p99".into(), fmt(p99)]);
    data.push(vec![label.into(), "mean_base_coordinate".into(), fmt(base.iter().sum::<f64>() / n as f64)]);
    Ok(())
}

pub fn bismut_loop(ctx: &Context<'_>) -> Result<Outcome> {
    let cfg = ctx.config;
    let n = cfg.samples;
    let shift = cfg.count("shift_intervals");
    let limit = cfg.param("snap_limit");
    if cfg.intervals % 4 != 0 || shift % 4 != 0 {
        return Err(ExperimentError::Other("loop grids must have a multiple of 4 intervals".into()));
    }
    let mut checks = Vec::new();
    let mut data = DataTable::new(&["label", "quantity", "value"]);
    if cfg.includes("circle") {
        let sys = CircleSystem::new();
        let k = CircleHeatKernel::default();
        let coord = |x: &[f64; 2]| Circle::angle(x);
        let inc = |x: &[f64; 2], y: &[f64; 2]| Circle::signed_angle(y, x);
        let a = loops(ctx, &sys, &k, cfg.intervals, n, ctx.seeds(0), coord, inc)?;
        let b = loops(ctx, &sys, &k, shift, n, ctx.seeds(1), coord, inc)?;
        loop_checks("S1", &a, &b, |x| (x + PI) / (2.0 * PI), "angle", limit, &mut checks, &mut data)?;
    }
    if cfg.includes("sphere") {
        let sys = GradientSystem::new(Sphere);
        let k = SphereHeatKernel::default();
        let coord = |x: &[f64; 3]| x[2];
        let inc = |x: &[f64; 3], y: &[f64; 3]| Sphere.distance(x, y);
        let a = loops(ctx, &sys, &k, cfg.intervals, n, ctx.seeds(2), coord, inc)?;
        let b = loops(ctx, &sys, &k, shift, n, ctx.seeds(3), coord, inc)?;
        loop_checks("S2", &a, &b, |z| 0.5 * (z + 1.0), "z", limit, &mut checks, &mut data)?;
    }
    Ok(Outcome { checks, data })
}
