//! Criterion 5: heat-kernel series.

use super::{Context, Outcome, Result};
use crate::report::{fmt, Check, DataTable};
use pathspace_core::manifold::{
    Circle, CircleHeatKernel, EmbeddedManifold, HeatKernel, So3, So3HeatKernel, Sphere, SphereHeatKernel,
};
use pathspace_core::quadrature::GaussLegendre;
use pathspace_core::PathStream;
use std::f64::consts::PI;

pub const SYMMETRY_TOL: f64 = 1e-10;
pub const NORMALIZATION_TOL: f64 = 1e-6;
pub const CHAPMAN_KOLMOGOROV_TOL: f64 = 1e-5;
pub const DUAL_TOL: f64 = 1e-10;

const TIMES: [f64; 5] = [0.05, 0.3, 0.7, 1.0, 2.0];

fn symmetry<const A: usize, const N: usize, M, K>(m: &M, k: &K, probes: usize, st: &mut PathStream) -> Result<f64>
where
    M: EmbeddedManifold<A, N>,
    K: HeatKernel<A, N>,
{
    let mut worst: f64 = 0.0;
    for p in 0..probes {
        let t = TIMES[p % TIMES.len()];
        let (x, y) = (m.sample_uniform(st), m.sample_uniform(st));
        let (a, b) = (k.density(t, &x, &y)?, k.density(t, &y, &x)?);
        worst = worst.max((a - b).abs() / a.max(b));
    }
    Ok(worst)
}

fn integrate_circle(nodes: usize, mut f: impl FnMut(&[f64; 2]) -> Result<f64>) -> Result<f64> {
    let mut err = None;
    let v = Circle::integrate(nodes, |z| {
        f(z).unwrap_or_else(|e| {
            err = Some(e);
            0.0
        })
    });
    err.map_or(Ok(v), Err)
}

fn integrate_sphere(axis: &[f64; 3], polar: usize, azimuth: usize, mut f: impl FnMut(&[f64; 3]) -> Result<f64>) -> Result<f64> {
    let mut err = None;
    let v = Sphere::integrate(axis, polar, azimuth, |z| {
        f(z).unwrap_or_else(|e| {
            err = Some(e);
            0.0
        })
    });
    err.map_or(Ok(v), Err)
}

pub fn validity(ctx: &Context<'_>) -> Result<Outcome> {
    let cfg = ctx.config;
    let quad = cfg.intervals.max(64);
    let probes = cfg.samples;
    let mut st = ctx.seeds(0).path(0);
    let (kc, ks, kr) = (CircleHeatKernel::default(), SphereHeatKernel::default(), So3HeatKernel::default());
    let mut checks = Vec::new();
    let mut data = DataTable::new(&["manifold", "quantity", "t", "value", "reference"]);

    if cfg.includes("circle") {
        checks.push(Check::exact("S1 symmetry", symmetry(&Circle, &kc, probes, &mut st)?, SYMMETRY_TOL));
        let x = Circle.sample_uniform(&mut st);
        let mut worst: f64 = 0.0;
        for t in TIMES {
            let total = integrate_circle(quad, |z| Ok(kc.density(t, &x, z)?))?;
            data.push(vec!["circle".into(), "mass".into(), fmt(t), fmt(total), "1".into()]);
            worst = worst.max((total - 1.0).abs());
        }
        checks.push(Check::exact("S1 normalization", worst, NORMALIZATION_TOL));
        let mut worst: f64 = 0.0;
        for (s, t) in [(0.2, 0.3), (0.1, 0.9), (0.4, 0.7)] {
            let (x, y) = (Circle.sample_uniform(&mut st), Circle.sample_uniform(&mut st));
            let lhs = integrate_circle(quad, |z| Ok(kc.density(s, &x, z)? * kc.density(t, z, &y)?))?;
            let rhs = kc.density(s + t, &x, &y)?;
            data.push(vec!["circle".into(), "chapman-kolmogorov".into(), fmt(s + t), fmt(lhs), fmt(rhs)]);
            worst = worst.max((lhs - rhs).abs());
        }
        checks.push(Check::exact("S1 Chapman-Kolmogorov", worst, CHAPMAN_KOLMOGOROV_TOL));
        let mut worst: f64 = 0.0;
        for t in [0.1, 0.3, 1.0, 3.0] {
            for j in 0..64 {
                let phi = -PI + 2.0 * PI * (j as f64 + 0.5) / 64.0;
                let (a, _) = kc.fourier(t, phi)?;
                let (b, _) = kc.wrapped(t, phi)?;
                worst = worst.max((a - b).abs());
            }
        }
        let (a, _) = kc.fourier(0.3, 1.0)?;
        let (b, _) = kc.wrapped(0.3, 1.0)?;
        data.push(vec!["circle".into(), "fourier vs wrapped at angle 1".into(), "0.3".into(), fmt(a), fmt(b)]);
        checks.push(Check::exact("S1 Fourier vs wrapped Gaussian", worst, DUAL_TOL));
    }

    if cfg.includes("sphere") {
        checks.push(Check::exact("S2 symmetry", symmetry(&Sphere, &ks, probes, &mut st)?, SYMMETRY_TOL));
        let x = Sphere.sample_uniform(&mut st);
        let mut worst: f64 = 0.0;
        for t in TIMES {
            let total = integrate_sphere(&x, quad / 2, 8, |z| Ok(ks.density(t, &x, z)?))?;
            data.push(vec!["sphere".into(), "mass".into(), fmt(t), fmt(total), "1".into()]);
            worst = worst.max((total - 1.0).abs());
        }
        checks.push(Check::exact("S2 normalization", worst, NORMALIZATION_TOL));
        let mut worst: f64 = 0.0;
        for (s, t) in [(0.1, 0.2), (0.3, 0.5)] {
            let (x, y) = (Sphere.sample_uniform(&mut st), Sphere.sample_uniform(&mut st));
            let lhs = integrate_sphere(&x, quad / 2, quad, |z| Ok(ks.density(s, &x, z)? * ks.density(t, z, &y)?))?;
            let rhs = ks.density(s + t, &x, &y)?;
            data.push(vec!["sphere".into(), "chapman-kolmogorov".into(), fmt(s + t), fmt(lhs), fmt(rhs)]);
            worst = worst.max((lhs - rhs).abs());
        }
        checks.push(Check::exact("S2 Chapman-Kolmogorov", worst, CHAPMAN_KOLMOGOROV_TOL));
    }

    if cfg.includes("so3") {
        checks.push(Check::exact("SO3 symmetry", symmetry(&So3, &kr, probes, &mut st)?, SYMMETRY_TOL));
        // class function: ∫ p dvol = vol · ∫ p(θ) (1 − cos θ)/π dθ with vol = 8π²
        let gl = GaussLegendre::new(16);
        let mut worst: f64 = 0.0;
        for t in TIMES {
            let mut err = None;
            let total = gl.integrate_composite(0.0, PI, 64, |th| match kr.profile(t, th) {
                Ok((p, _)) => 8.0 * PI * PI * p * So3HeatKernel::haar_angle_density(th),
                Err(e) => {
                    err = Some(e);
                    0.0
                }
            });
            if let Some(e) = err {
                return Err(e.into());
            }
            data.push(vec!["so3".into(), "mass".into(), fmt(t), fmt(total), "1".into()]);
            worst = worst.max((total - 1.0).abs());
        }
        checks.push(Check::exact("SO3 normalization", worst, NORMALIZATION_TOL));
    }
    Ok(Outcome { checks, data })
}
