//! Criteria 1–4: classical Wiener space.

use super::common::{comparison_checks, comparison_table, rel};
use super::{Context, Outcome, Result};
use crate::report::{fmt, Check, DataTable};
use pathspace_core::wiener::{
    check_adaptedness, ou_apply, skorohod_discrete, ClosureField, CameronMartinPath, DerivativeSource, DrivingPath,
    FlatCylinderFunction, SmoothFunction, TimeGrid,
};
use pathspace_core::wiener::{sample_brownian, verify_cm_shift, verify_ibp_flat};
use std::f64::consts::PI;
use std::sync::Arc;

/// Identities that hold in exact arithmetic are checked at this relative level.
pub const IDENTITY_TOL: f64 = 1e-12;

struct FlatCase {
    label: &'static str,
    f: FlatCylinderFunction,
    h: CameronMartinPath,
    shift: f64,
}

/// The registered `(f, h, t)` battery; every `f` is bounded through `tanh`.
fn battery(grid: &Arc<TimeGrid>) -> Result<Vec<FlatCase>> {
    let t = grid.horizon();
    let end = FlatCylinderFunction::node_indices(grid, &[t])?;
    let both = FlatCylinderFunction::node_indices(grid, &[0.5 * t, t])?;
    let f1 = FlatCylinderFunction::new(end.clone(), 1, |x| x[0], |_, g| g[0] = 1.0).tanh_wrapped();
    let h1 = CameronMartinPath::constant(grid.clone(), &[1.0])?;
    // F(a, b) = a_1 b_2 + b_1/2 on (σ(T/2), σ(T)) in R²
    let f2 = FlatCylinderFunction::new(
        both,
        2,
        |x| x[0] * x[3] + 0.5 * x[2],
        |x, g| {
            g.fill(0.0);
            g[0] = x[3];
            g[2] = 0.5;
            g[3] = x[0];
        },
    )
    .tanh_wrapped();
    let h2 = CameronMartinPath::from_fn(grid.clone(), 2, |a, b, o| {
        let s = 0.5 * (a + b);
        o[0] = 1.0 - s;
        o[1] = (2.0 * PI * s).cos();
    })?;
    let f3 = FlatCylinderFunction::new(
        end,
        3,
        |x| (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]) / 3.0 - 1.0,
        |x, g| {
            for a in 0..3 {
                g[a] = 2.0 * x[a] / 3.0;
            }
        },
    )
    .tanh_wrapped();
    let h3 = CameronMartinPath::from_fn(grid.clone(), 3, |a, b, o| {
        o[0] = 0.3;
        o[1] = -0.8;
        o[2] = (1.5 * (a + b)).sin();
    })?;
    Ok(vec![
        FlatCase { label: "tanh(B(T)), hdot=1", f: f1, h: h1, shift: 0.5 },
        FlatCase { label: "tanh(B1(T/2) B2(T) + B1(T)/2), R^2", f: f2, h: h2, shift: 1.0 },
        FlatCase { label: "tanh(|B(T)|^2/3 - 1), R^3", f: f3, h: h3, shift: -0.7 },
    ])
}

fn grid(ctx: &Context<'_>) -> Result<Arc<TimeGrid>> {
    Ok(Arc::new(TimeGrid::uniform(ctx.config.horizon, ctx.config.intervals)?))
}

pub fn cm_shift(ctx: &Context<'_>) -> Result<Outcome> {
    let g = grid(ctx)?;
    let mut rows = Vec::new();
    for (k, c) in battery(&g)?.into_iter().enumerate() {
        let r = verify_cm_shift(&c.f, &c.h, c.shift, ctx.config.samples, ctx.seeds(k as u64), ctx.ensemble)?;
        rows.push((format!("cm shift t={}: {}", c.shift, c.label), r));
    }
    Ok(Outcome {
        checks: comparison_checks(&rows),
        data: comparison_table(&rows),
    })
}

pub fn ibp(ctx: &Context<'_>) -> Result<Outcome> {
    let g = grid(ctx)?;
    let mut rows = Vec::new();
    for (k, c) in battery(&g)?.into_iter().enumerate() {
        let r = verify_ibp_flat(&c.f, &c.h, ctx.config.samples, ctx.seeds(k as u64), ctx.ensemble)?;
        rows.push((format!("flat ibp: {}", c.label), r));
    }
    Ok(Outcome {
        checks: comparison_checks(&rows),
        data: comparison_table(&rows),
    })
}

/// Coefficients of `V̇_i^a = Σ_b c_ab sin(w_b B_b(t_i) + φ_b) + d_a t_i B_a(t_i)`.
#[derive(Clone, Copy)]
struct Adapted {
    c: [[f64; 2]; 2],
    w: [f64; 2],
    phi: [f64; 2],
    d: [f64; 2],
}

impl Adapted {
    fn row(&self, sigma: &DrivingPath, i: usize, out: &mut [f64]) {
        let b = sigma.value(i);
        let t = sigma.grid().node(i);
        for a in 0..2 {
            out[a] = (0..2).map(|k| self.c[a][k] * (self.w[k] * b[k] + self.phi[k]).sin()).sum::<f64>() + self.d[a] * t * b[a];
        }
    }
}

pub fn skorohod(ctx: &Context<'_>) -> Result<Outcome> {
    let g = grid(ctx)?;
    let seeds = ctx.seeds(0);
    let n = ctx.config.samples;
    let (mut fd_gap, mut analytic_gap, mut adapt_fail, mut anticip_gap, mut anticip_fd) = (0f64, 0f64, 0usize, 0f64, 0f64);
    let mut data = DataTable::new(&["probe", "ito_sum", "divergence_fd", "b_t_squared_minus_t", "anticipating_divergence"]);
    for k in 0..n {
        let mut st = seeds.path(k as u64);
        let mut r = || st.normal();
        let coeffs = Adapted {
            c: [[r(), r()], [r(), r()]],
            w: [r(), r()],
            phi: [r(), r()],
            d: [r(), r()],
        };
        let sigma = sample_brownian(&g, 2, &mut st)?;
        let field = ClosureField::new(2, true, move |s, i, o| coeffs.row(s, i, o)).with_trace(|_, _, _| 0.0);
        // the Itô sum, evaluated directly from the coefficients
        let mut ito = 0.0;
        let mut row = [0.0; 2];
        for i in 0..g.intervals() {
            coeffs.row(&sigma, i, &mut row);
            ito += row[0] * sigma.increment(i)[0] + row[1] * sigma.increment(i)[1];
        }
        let fd = skorohod_discrete(&field, &sigma, DerivativeSource::FiniteDifference)?;
        let an = skorohod_discrete(&field, &sigma, DerivativeSource::Analytic)?;
        fd_gap = fd_gap.max(rel(fd.value, ito));
        analytic_gap = analytic_gap.max(rel(an.value, ito));
        adapt_fail += check_adaptedness(&field, &sigma, 8, &mut st)?.len();

        let b1 = sample_brownian(&g, 1, &mut st)?;
        let anticipating = ClosureField::new(1, false, |s, _, o| o[0] = s.value(s.grid().intervals())[0]).with_trace(|_, _, _| 1.0);
        let bt = b1.value(g.intervals())[0];
        let want = bt * bt - g.horizon();
        let got = skorohod_discrete(&anticipating, &b1, DerivativeSource::Analytic)?;
        anticip_gap = anticip_gap.max(rel(got.value, want));
        let got_fd = skorohod_discrete(&anticipating, &b1, DerivativeSource::FiniteDifference)?;
        anticip_fd = anticip_fd.max(rel(got_fd.value, want));
        data.push(vec![k.to_string(), fmt(ito), fmt(fd.value), fmt(want), fmt(got.value)]);
    }
    let checks = vec![
        Check::exact(format!("adapted fields ({n}): divergence (finite-difference trace) = Ito sum"), fd_gap, IDENTITY_TOL),
        Check::exact(format!("adapted fields ({n}): divergence (analytic trace) = Ito sum"), analytic_gap, IDENTITY_TOL),
        Check::exact("adaptedness probes violated", adapt_fail as f64, 0.0),
        Check::exact("V = B(T): divergence = B(T)^2 - T", anticip_gap, IDENTITY_TOL),
        Check::discretization("V = B(T): finite-difference trace", anticip_fd, 1e-8),
    ];
    Ok(Outcome { checks, data })
}

/// `x ↦ ⟨a, x⟩`.
struct Linear(Vec<f64>);

impl SmoothFunction for Linear {
    fn dim(&self) -> usize {
        self.0.len()
    }
    fn value(&self, x: &[f64]) -> f64 {
        self.0.iter().zip(x).map(|(a, b)| a * b).sum()
    }
    fn gradient(&self, _: &[f64], out: &mut [f64]) {
        out.copy_from_slice(&self.0);
    }
    fn hessian(&self, _: &[f64], out: &mut [f64]) {
        out.fill(0.0);
    }
}

/// `x ↦ ⟨a, x⟩² − |a|²`, the second Hermite polynomial along `a`.
struct Hermite2(Vec<f64>);

impl SmoothFunction for Hermite2 {
    fn dim(&self) -> usize {
        self.0.len()
    }
    fn value(&self, x: &[f64]) -> f64 {
        let s: f64 = self.0.iter().zip(x).map(|(a, b)| a * b).sum();
        s * s - self.0.iter().map(|a| a * a).sum::<f64>()
    }
    fn gradient(&self, x: &[f64], out: &mut [f64]) {
        let s: f64 = self.0.iter().zip(x).map(|(a, b)| a * b).sum();
        for (o, a) in out.iter_mut().zip(&self.0) {
            *o = 2.0 * s * a;
        }
    }
    fn hessian(&self, _: &[f64], out: &mut [f64]) {
        let n = self.0.len();
        for i in 0..n {
            for j in 0..n {
                out[i * n + j] = 2.0 * self.0[i] * self.0[j];
            }
        }
    }
}

/// Eigen-relations of the OU operator in normalized increment coordinates
/// `x_i = ΔB_i / √Δt_i`, where `P(h) = Σ ḣ_i √Δt_i x_i`.
pub fn ou_eigen(ctx: &Context<'_>) -> Result<Outcome> {
    let g = grid(ctx)?;
    let n = g.intervals();
    let seeds = ctx.seeds(0);
    let mut worst = [0f64; 3];
    let mut oracle: f64 = 0.0;
    let mut data = DataTable::new(&["probe", "p_h", "ou_p_h", "hermite", "ou_hermite"]);
    for k in 0..ctx.config.samples {
        let mut st = seeds.path(k as u64);
        let x: Vec<f64> = (0..n).map(|_| st.normal()).collect();
        let (c0, c1) = (st.normal(), st.normal());
        let h = CameronMartinPath::from_fn(g.clone(), 1, |a, b, o| o[0] = c0 + c1 * (3.0 * (a + b)).sin())?;
        let pw = Linear((0..n).map(|i| h.hdot(i)[0] * g.dt(i).sqrt()).collect());
        let mut e1 = vec![0.0; n];
        e1[0] = 1.0;
        let mut a: Vec<f64> = (0..n).map(|_| st.normal()).collect();
        let norm = a.iter().map(|v| v * v).sum::<f64>().sqrt();
        a.iter_mut().for_each(|v| *v /= norm);
        let (h1, ha) = (Hermite2(e1), Hermite2(a));
        let lp = ou_apply(&pw, &x);
        worst[0] = worst[0].max(rel(lp, -pw.value(&x)));
        let l1 = ou_apply(&h1, &x);
        worst[1] = worst[1].max(rel(l1, -2.0 * h1.value(&x)));
        worst[2] = worst[2].max(rel(ou_apply(&ha, &x), -2.0 * ha.value(&x)));
        for f in [&pw as &dyn SmoothFunction, &h1, &ha] {
            oracle = oracle.max(f.oracle_discrepancy(&x));
        }
        data.push(vec![k.to_string(), fmt(pw.value(&x)), fmt(lp), fmt(h1.value(&x)), fmt(l1)]);
    }
    let checks = vec![
        Check::exact("L P(h) = -P(h)", worst[0], IDENTITY_TOL),
        Check::exact("L (x_1^2 - 1) = -2 (x_1^2 - 1)", worst[1], IDENTITY_TOL),
        Check::exact("L (<a,x>^2 - |a|^2) = -2 f, random unit a", worst[2], IDENTITY_TOL),
        Check::discretization("probe gradient/Hessian oracles vs finite differences", oracle, 1e-6),
    ];
    Ok(Outcome { checks, data })
}
