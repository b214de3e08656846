//! Criterion 18: null calibration and power of the KS and chi-square tests.

use super::common::P_THRESHOLD;
use super::{Context, Outcome, Result};
use crate::report::{fmt, Check, DataTable};
use crate::stats::{chi_square_binned, histogram, ks_test};
use pathspace_core::Ensemble;
use statrs::distribution::{ContinuousCDF, Normal};

/// Nominal level whose empirical rejection rate is calibrated.
pub const LEVEL: f64 = 0.05;
pub const RATE_TOLERANCE: f64 = 0.02;
/// Per-draw size of the KS calibration runs.
pub const KS_SAMPLES: usize = 10_000;
pub const CHI_BINS: usize = 32;
pub const POWER_P: f64 = 1e-6;
/// Expected counts equal observed ones up to the rounding of `n · (c / n)`.
pub const EXACT_TOL: f64 = 1e-12;

fn rate(ps: &[f64]) -> f64 {
    ps.iter().filter(|&&p| p < LEVEL).count() as f64 / ps.len() as f64
}

pub fn calibration(ctx: &Context<'_>) -> Result<Outcome> {
    let reps = ctx.config.count("repetitions");
    let chi_n = ctx.config.count("chi_samples");
    let n = ctx.config.samples;
    let normal = Normal::standard();
    let cdf = |x: f64| normal.cdf(x);

    let seeds = ctx.seeds(0);
    let ks_ps = ctx
        .ensemble
        .map(reps, |r| {
            let mut st = seeds.path(r as u64);
            let xs: Vec<f64> = (0..KS_SAMPLES).map(|_| st.normal()).collect();
            ks_test(&xs, cdf).map(|t| t.p_value)
        })
        .into_iter()
        .collect::<std::result::Result<Vec<_>, _>>()?;

    let edges: Vec<f64> = (0..=CHI_BINS).map(|j| j as f64 / CHI_BINS as f64).collect();
    let probs = vec![1.0 / CHI_BINS as f64; CHI_BINS];
    let seeds = ctx.seeds(1);
    let chi_ps = ctx
        .ensemble
        .map(reps, |r| {
            let mut st = seeds.path(r as u64);
            let xs: Vec<f64> = (0..chi_n).map(|_| st.uniform()).collect();
            chi_square_binned(&xs, &edges, &probs).map(|t| t.p_value)
        })
        .into_iter()
        .collect::<std::result::Result<Vec<_>, _>>()?;

    let mut st = ctx.seeds(2).path(0);
    let shifted: Vec<f64> = (0..n).map(|_| st.normal() + 0.5).collect();
    let power = ks_test(&shifted, cdf)?;
    let constant = ks_test(&vec![0.0; n], cdf)?;

    let xs: Vec<f64> = (0..n).map(|_| st.uniform()).collect();
    let counts = histogram(&xs, &edges)?;
    let empirical: Vec<f64> = counts.iter().map(|&c| c as f64 / n as f64).collect();
    let exact = chi_square_binned(&xs, &edges, &empirical)?;

    let uniform = |p: f64| p.clamp(0.0, 1.0);
    let ks_spread = ks_test(&ks_ps, uniform)?;
    let chi_spread = ks_test(&chi_ps, uniform)?;

    let checks = vec![
        Check::frequency(
            format!("KS null: fraction of p < {LEVEL} over {reps} runs of n={KS_SAMPLES}"),
            rate(&ks_ps),
            LEVEL,
            RATE_TOLERANCE,
        ),
        Check::p_value("KS null: p-values uniform on [0, 1]", ks_spread.statistic, ks_spread.p_value, P_THRESHOLD),
        Check::frequency(
            format!("chi-square null: fraction of p < {LEVEL} over {reps} runs of n={chi_n}, {CHI_BINS} bins"),
            rate(&chi_ps),
            LEVEL,
            RATE_TOLERANCE,
        ),
        Check::p_value("chi-square null: p-values uniform on [0, 1]", chi_spread.statistic, chi_spread.p_value, P_THRESHOLD),
        Check::rejects(format!("KS power: N(0.5, 1) vs N(0, 1), n={n}"), power.statistic, power.p_value, POWER_P),
        Check::rejects(format!("KS power: constant sample vs N(0, 1), n={n}"), constant.statistic, constant.p_value, POWER_P),
        Check::exact("chi-square against its own empirical frequencies: statistic", exact.statistic.abs(), EXACT_TOL),
        Check::exact("chi-square against its own empirical frequencies: 1 - p", (1.0 - exact.p_value).abs(), EXACT_TOL),
    ];

    let mut data = DataTable::new(&["repetition", "ks_p", "chi_square_p"]);
    for (r, (a, b)) in ks_ps.iter().zip(&chi_ps).enumerate() {
        data.push(vec![r.to_string(), fmt(*a), fmt(*b)]);
    }
    Ok(Outcome { checks, data })
}
