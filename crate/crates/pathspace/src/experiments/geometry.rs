//! Criteria 8 and 9: holonomy and connections.

use super::{Context, Outcome, Result};
use crate::report::{fmt, Check, DataTable};
use pathspace_core::linalg::{add, dist, dot, mat_mul, mat_vec, scale, sub};
use pathspace_core::manifold::{
    adjoint_semi_connection, induced_connection, transport_along, Circle, Connection, EmbeddedManifold, Frame,
    LeviCivita, So3, Sphere,
};
use pathspace_core::sde::{CircleSystem, GradientSystem, SdeSystem, So3BiinvariantSystem};
use pathspace_core::PathStream;
use std::f64::consts::FRAC_PI_2;

/// Holonomy error allowed per unit of the arc step.
pub const HOLONOMY_STEPS: f64 = 5.0;
pub const CONNECTION_TOL: f64 = 1e-4;

fn arc(from: [f64; 3], to: [f64; 3], steps: usize) -> Result<Vec<[f64; 3]>> {
    let v = Sphere
        .log(&from, &to)
        .ok_or_else(|| super::ExperimentError::Other("arc endpoints are antipodal".into()))?;
    Ok((1..=steps).map(|k| Sphere.exp(&from, &scale(k as f64 / steps as f64, &v))).collect())
}

pub fn holonomy(ctx: &Context<'_>) -> Result<Outcome> {
    let base = ctx.config.intervals;
    let (e1, e2, e3) = ([1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]);
    let mut checks = Vec::new();
    let mut data = DataTable::new(&["steps_per_side", "step_angle", "rotation", "error"]);
    for steps in [(base / 8).max(1), base, base * 8] {
        let start = Frame::reference(&Sphere, &e1);
        let mut pts = arc(e1, e2, steps)?;
        pts.extend(arc(e2, e3, steps)?);
        pts.extend(arc(e3, e1, steps)?);
        let end = transport_along(&Sphere, &pts, &start)?;
        let angle = start.relative_angle(&Sphere, &end).abs();
        let dtheta = FRAC_PI_2 / steps as f64;
        let err = (angle - FRAC_PI_2).abs();
        data.push(vec![steps.to_string(), fmt(dtheta), fmt(angle), fmt(err)]);
        checks.push(Check::discretization(
            format!("octant holonomy - pi/2, {steps} steps per side (threshold 5 x step)"),
            err,
            HOLONOMY_STEPS * dtheta,
        ));
    }
    Ok(Outcome { checks, data })
}

fn normals<const K: usize>(st: &mut PathStream) -> [f64; K] {
    std::array::from_fn(|_| st.normal())
}

/// `U(y) = P_y(c + B y)` on S² and its exact ambient derivative.
struct SphereField {
    c: [f64; 3],
    b: [f64; 9],
}

impl SphereField {
    fn eval(&self, y: &[f64; 3]) -> [f64; 3] {
        Sphere.project(y, &add(&self.c, &mat_vec(&self.b, y)))
    }

    /// `D_v U = Bv − (⟨v, w⟩ + ⟨y, Bv⟩) y − ⟨y, w⟩ v` with `w = c + By`.
    fn derivative(&self, y: &[f64; 3], v: &[f64; 3]) -> [f64; 3] {
        let w = add(&self.c, &mat_vec(&self.b, y));
        let bv = mat_vec(&self.b, v);
        let a = dot(v, &w) + dot(y, &bv);
        sub(&sub(&bv, &scale(a, y)), &scale(dot(y, &w), v))
    }
}

fn so3_field(c: [f64; 9], b: [f64; 9], d: [f64; 9]) -> impl Fn(&[f64; 9]) -> [f64; 9] {
    move |y: &[f64; 9]| {
        let by = mat_mul(&b, y);
        let yd = mat_mul(y, &d);
        let w: [f64; 9] = std::array::from_fn(|i| c[i] + by[i] + yd[i]);
        So3.project(y, &w)
    }
}

fn circle_field(a: [f64; 3]) -> impl Fn(&[f64; 2]) -> [f64; 2] {
    move |y: &[f64; 2]| scale(a[0] + a[1] * y[0] + a[2] * y[1], &Circle::unit_tangent(y))
}

/// Largest induced-vs-Levi-Civita gap and adjoint-vs-Levi-Civita gap.
fn probe<const A: usize, const N: usize, S, F>(
    sys: &S,
    probes: usize,
    st: &mut PathStream,
    mut field: impl FnMut(&mut PathStream) -> F,
) -> Result<(f64, f64)>
where
    S: SdeSystem<A, N>,
    F: Fn(&[f64; A]) -> [f64; A],
{
    let m = sys.manifold();
    let lc = LeviCivita(m);
    let (mut induced, mut adjoint) = (0f64, 0f64);
    for _ in 0..probes {
        let u = field(st);
        let w = field(st);
        let x = m.sample_uniform(st);
        let v = m.project(&x, &normals::<A>(st));
        let a = induced_connection(sys, &u, &x, &v)?;
        induced = induced.max(dist(&a, &lc.covariant(&x, &u, &v)?));
        let hat = adjoint_semi_connection(m, &lc, &u, &w, &x, None)?;
        adjoint = adjoint.max(dist(&hat, &lc.covariant(&x, &w, &u(&x))?));
    }
    Ok((induced, adjoint))
}

pub fn connection(ctx: &Context<'_>) -> Result<Outcome> {
    let cfg = ctx.config;
    let n = cfg.samples;
    let mut st = ctx.seeds(0).path(0);
    let mut checks = Vec::new();
    if cfg.includes("sphere") {
        let sys = GradientSystem::new(Sphere);
        let mut worst: f64 = 0.0;
        for _ in 0..n {
            let f = SphereField {
                c: normals(&mut st),
                b: normals(&mut st),
            };
            let x = Sphere.sample_uniform(&mut st);
            let v = Sphere.project(&x, &normals(&mut st));
            let got = induced_connection(&sys, &|y: &[f64; 3]| f.eval(y), &x, &v)?;
            worst = worst.max(dist(&got, &Sphere.project(&x, &f.derivative(&x, &v))));
        }
        checks.push(Check::discretization(
            format!("S2 gradient system: induced connection vs P_x(analytic D_v U), {n} probes"),
            worst,
            CONNECTION_TOL,
        ));
        let (a, b) = probe(&sys, n, &mut st, |s| {
            let f = SphereField { c: normals(s), b: normals(s) };
            move |y: &[f64; 3]| f.eval(y)
        })?;
        checks.push(Check::discretization(format!("S2 gradient system: induced = Levi-Civita, {n} probes"), a, CONNECTION_TOL));
        checks.push(Check::discretization(format!("S2: adjoint of Levi-Civita = Levi-Civita, {n} probes"), b, CONNECTION_TOL));
    }
    if cfg.includes("circle") {
        for (label, (a, b)) in [
            ("S1 gradient system", probe(&GradientSystem::new(Circle), n, &mut st, |s| circle_field(normals(s)))?),
            ("S1 tangent system", probe(&CircleSystem::new(), n, &mut st, |s| circle_field(normals(s)))?),
        ] {
            checks.push(Check::discretization(format!("{label}: induced = Levi-Civita, {n} probes"), a, CONNECTION_TOL));
            checks.push(Check::discretization(format!("{label}: adjoint of Levi-Civita = Levi-Civita"), b, CONNECTION_TOL));
        }
    }
    if cfg.includes("so3") {
        let fld = |s: &mut PathStream| so3_field(normals(s), normals(s), normals(s));
        for (label, (a, b)) in [
            ("SO3 gradient system", probe(&GradientSystem::new(So3), n, &mut st, fld)?),
            ("SO3 bi-invariant system", probe(&So3BiinvariantSystem::new(), n, &mut st, fld)?),
        ] {
            checks.push(Check::discretization(format!("{label}: induced = Levi-Civita, {n} probes"), a, CONNECTION_TOL));
            checks.push(Check::discretization(format!("{label}: adjoint of Levi-Civita = Levi-Civita"), b, CONNECTION_TOL));
        }
    }
    Ok(Outcome::checks_only(checks))
}
