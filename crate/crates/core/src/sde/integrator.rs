use super::path::{IntegratorConfig, SolutionPath, TangentPathAlong, PATH_TOL};
use super::system::SdeSystem;
use crate::error::{Error, Result};
use crate::linalg::{add, lin2};
use crate::manifold::{EmbeddedManifold, Frame};
use crate::wiener::{CameronMartinPath, DrivingPath};
use alloc::boxed::Box;
use alloc::sync::Arc;
use alloc::vec::Vec;

/// Largest supported drive dimension.
pub const MAX_DRIVE: usize = 16;

pub(crate) struct HeunStep<const A: usize> {
    pub k1: [f64; A],
    pub star: [f64; A],
    pub k2: [f64; A],
    pub w: [f64; A],
    pub next: [f64; A],
}

/// One Heun substep `x ↦ exp(x, P_x ½(k1 + k2))` with
/// `k1 = X(x)db + a1·dt`, `k2 = X(x*)db + a2(x*)·dt`, `x* = exp(x, k1)`.
pub(crate) fn heun<const A: usize, const N: usize, S, D>(
    sys: &S,
    x: &[f64; A],
    db: &[f64],
    dt: f64,
    a1: &[f64; A],
    drift_star: D,
) -> HeunStep<A>
where
    S: SdeSystem<A, N> + ?Sized,
    D: FnOnce(&[f64; A]) -> [f64; A],
{
    let m = sys.manifold();
    let k1 = crate::linalg::axpy(dt, a1, &sys.diffusion(x, db));
    let star = m.exp(x, &k1);
    let a2 = drift_star(&star);
    let k2 = crate::linalg::axpy(dt, &a2, &sys.diffusion(&star, db));
    let w = m.project(x, &lin2(0.5, &k1, 0.5, &k2));
    let next = m.exp(x, &w);
    HeunStep { k1, star, k2, w, next }
}

fn prepare<const A: usize, const N: usize, S: SdeSystem<A, N> + ?Sized>(
    sys: &S,
    omega: &DrivingPath,
    x0: &[f64; A],
    cfg: &IntegratorConfig,
) -> Result<()> {
    cfg.validate()?;
    sys.manifold().check_point(x0)?;
    if omega.dim() != sys.drive_dim() || sys.drive_dim() > MAX_DRIVE {
        return Err(Error::invalid(alloc::format!(
            "driving path dimension {} does not match system drive dimension {}",
            omega.dim(),
            sys.drive_dim()
        )));
    }
    Ok(())
}

fn substep_increment(omega: &DrivingPath, i: usize, s: usize) -> ([f64; MAX_DRIVE], f64) {
    let mut db = [0.0; MAX_DRIVE];
    for (d, b) in db.iter_mut().zip(omega.increment(i)) {
        *d = b / s as f64;
    }
    (db, omega.grid().dt(i) / s as f64)
}

fn integrator_error(interval: usize, e: Error) -> Error {
    Error::Integrator {
        interval,
        source: Box::new(e),
    }
}

/// The Itô map of the Wong–Zakai scheme: the solution path driven by `omega`
/// started at `x0`, with frames parallel along it.
pub fn ito_map<const A: usize, const N: usize, S: SdeSystem<A, N> + ?Sized>(
    sys: &S,
    omega: &DrivingPath,
    x0: &[f64; A],
    cfg: &IntegratorConfig,
) -> Result<SolutionPath<A, N>> {
    prepare(sys, omega, x0, cfg)?;
    let m = sys.manifold();
    let md = sys.drive_dim();
    let n = omega.grid().intervals();
    let mut frames = Vec::with_capacity(n + 1);
    let mut frame = Frame::reference(m, x0);
    frames.push(frame);
    for i in 0..n {
        let (db, dt) = substep_increment(omega, i, cfg.substeps);
        let mut x = *frame.base();
        for _ in 0..cfg.substeps {
            let a = sys.drift(&x);
            x = heun(sys, &x, &db[..md], dt, &a, |y| sys.drift(y)).next;
            frame = frame.transport(m, &x).map_err(|e| integrator_error(i, e))?;
        }
        if m.residual(&x) > PATH_TOL {
            return Err(integrator_error(i, Error::accuracy("point left the manifold", m.residual(&x))));
        }
        frames.push(frame);
    }
    Ok(SolutionPath::from_frames(
        omega.grid().clone(),
        frames,
        Some(Arc::new(omega.clone())),
    ))
}

/// Terminal point of [`ito_map`] without frames.
pub fn ito_endpoint<const A: usize, const N: usize, S: SdeSystem<A, N> + ?Sized>(
    sys: &S,
    omega: &DrivingPath,
    x0: &[f64; A],
    cfg: &IntegratorConfig,
) -> Result<[f64; A]> {
    prepare(sys, omega, x0, cfg)?;
    let m = sys.manifold();
    let md = sys.drive_dim();
    let limit = 0.5 * m.injectivity_radius();
    let mut x = *x0;
    for i in 0..omega.grid().intervals() {
        let (db, dt) = substep_increment(omega, i, cfg.substeps);
        for _ in 0..cfg.substeps {
            let a = sys.drift(&x);
            let step = heun(sys, &x, &db[..md], dt, &a, |y| sys.drift(y));
            let d = m.norm(&step.w);
            if !(d <= limit) {
                return Err(integrator_error(i, Error::StepTooLarge { distance: d, limit }));
            }
            x = step.next;
        }
    }
    if m.residual(&x) > PATH_TOL {
        return Err(Error::accuracy("point left the manifold", m.residual(&x)));
    }
    Ok(x)
}

/// Exact forward-mode derivative of [`ito_map`] in the direction `h`.
///
/// Each Heun substep is linearized through the derivatives of `exp`, `P`, `X`
/// and `A`, with driver perturbation `ḣ_i dt`.
pub fn ito_map_h_derivative<const A: usize, const N: usize, S: SdeSystem<A, N> + ?Sized>(
    sys: &S,
    omega: &DrivingPath,
    h: &CameronMartinPath,
    x0: &[f64; A],
    cfg: &IntegratorConfig,
) -> Result<TangentPathAlong<A, N>> {
    if !cfg.variational {
        return Err(Error::Unsupported("variational derivative is disabled in the integrator config".into()));
    }
    prepare(sys, omega, x0, cfg)?;
    crate::wiener::check_compatible(omega, h)?;
    let m = sys.manifold();
    let md = sys.drive_dim();
    let n = omega.grid().intervals();
    let mut frames = Vec::with_capacity(n + 1);
    let mut vectors = Vec::with_capacity(n + 1);
    let mut frame = Frame::reference(m, x0);
    let mut dx = [0.0; A];
    frames.push(frame);
    vectors.push(dx);
    for i in 0..n {
        let (db, dt) = substep_increment(omega, i, cfg.substeps);
        let db = &db[..md];
        let mut ddb = [0.0; MAX_DRIVE];
        for (d, hd) in ddb.iter_mut().zip(h.hdot(i)) {
            *d = hd * dt;
        }
        let ddb = &ddb[..md];
        let mut x = *frame.base();
        for _ in 0..cfg.substeps {
            let a = sys.drift(&x);
            let s = heun(sys, &x, db, dt, &a, |y| sys.drift(y));
            let dk1 = {
                let p = sys.diffusion_derivative(&x, &dx, db);
                let q = sys.diffusion(&x, ddb);
                let r = sys.drift_derivative(&x, &dx);
                core::array::from_fn(|k| p[k] + q[k] + dt * r[k])
            };
            let dstar = m.exp_derivative(&x, &s.k1, &dx, &dk1);
            let dk2: [f64; A] = {
                let p = sys.diffusion_derivative(&s.star, &dstar, db);
                let q = sys.diffusion(&s.star, ddb);
                let r = sys.drift_derivative(&s.star, &dstar);
                core::array::from_fn(|k| p[k] + q[k] + dt * r[k])
            };
            let half = lin2(0.5, &s.k1, 0.5, &s.k2);
            let dw = add(
                &m.project_derivative(&x, &dx, &half),
                &m.project(&x, &lin2(0.5, &dk1, 0.5, &dk2)),
            );
            dx = m.exp_derivative(&x, &s.w, &dx, &dw);
            x = s.next;
            frame = frame.transport(m, &x).map_err(|e| integrator_error(i, e))?;
        }
        frames.push(frame);
        vectors.push(dx);
    }
    let path = Arc::new(SolutionPath::from_frames(
        omega.grid().clone(),
        frames,
        Some(Arc::new(omega.clone())),
    ));
    Ok(TangentPathAlong::from_parts(path, vectors))
}
