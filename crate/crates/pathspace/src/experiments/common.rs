//! Helpers shared by several experiments.

use super::Result;
use crate::report::{fmt, Check, DataTable};
use crate::stats::{chi_square_counts, histogram, TestResult};
use pathspace_core::manifold::SphereHeatKernel;
use pathspace_core::quadrature::GaussLegendre;
use pathspace_core::stats::MeanComparison;
use std::f64::consts::PI;

/// Goodness-of-fit threshold for every p-value check.
pub const P_THRESHOLD: f64 = 0.01;

/// Relative error `|a − b| / (1 + |b|)`.
pub fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / (1.0 + b.abs())
}

/// Equal-width bins of `u = ⟨x, x0⟩` on `[−1, 1]` with their heat-kernel
/// probabilities `∫ 2π p_t(u) du`.
pub fn sphere_cosine_bins(t: f64, bins: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    let k = SphereHeatKernel::default();
    let gl = GaussLegendre::new(16);
    let edges: Vec<f64> = (0..=bins).map(|j| -1.0 + 2.0 * j as f64 / bins as f64).collect();
    let mut probs = Vec::with_capacity(bins);
    for w in edges.windows(2) {
        let mut err = None;
        let p = gl.integrate(w[0], w[1], |u| match k.profile(t, u) {
            Ok((p, _)) => 2.0 * PI * p,
            Err(e) => {
                err = Some(e);
                0.0
            }
        });
        if let Some(e) = err {
            return Err(e.into());
        }
        probs.push(p);
    }
    Ok((edges, probs))
}

/// Chi-square of `⟨x(T), x0⟩` samples against the heat-kernel law, with a
/// per-bin table.
pub fn sphere_marginal_test(us: &[f64], t: f64, bins: usize) -> Result<(TestResult, DataTable, f64)> {
    let (edges, probs) = sphere_cosine_bins(t, bins)?;
    let counts = histogram(us, &edges)?;
    let r = chi_square_counts(&counts, &probs)?;
    let mass: f64 = probs.iter().sum();
    Ok((r, bin_table(&edges, &counts, &probs), (mass - 1.0).abs()))
}

pub fn bin_table(edges: &[f64], counts: &[u64], probs: &[f64]) -> DataTable {
    let n: u64 = counts.iter().sum();
    let total: f64 = probs.iter().sum();
    let mut t = DataTable::new(&["bin", "lower", "upper", "count", "expected"]);
    for j in 0..counts.len() {
        t.push(vec![
            j.to_string(),
            fmt(edges[j]),
            fmt(edges[j + 1]),
            counts[j].to_string(),
            fmt(n as f64 * probs[j] / total),
        ]);
    }
    t
}

/// One row per mean comparison.
pub fn comparison_table(rows: &[(String, MeanComparison)]) -> DataTable {
    let mut t = DataTable::new(&["check", "samples", "lhs_mean", "rhs_mean", "difference", "standard_error"]);
    for (name, c) in rows {
        t.push(vec![
            name.clone(),
            c.samples.to_string(),
            fmt(c.lhs_mean),
            fmt(c.rhs_mean),
            fmt(c.difference),
            fmt(c.standard_error),
        ]);
    }
    t
}

/// Checks for a list of named comparisons.
pub fn comparison_checks(rows: &[(String, MeanComparison)]) -> Vec<Check> {
    rows.iter().map(|(n, c)| Check::mean(n.clone(), c)).collect()
}

/// The `q`-quantile (nearest rank) of `xs`.
pub fn quantile(xs: &[f64], q: f64) -> f64 {
    let mut s = xs.to_vec();
    s.sort_by(f64::total_cmp);
    if s.is_empty() {
        return f64::NAN;
    }
    let k = ((q * s.len() as f64).ceil() as usize).clamp(1, s.len());
    s[k - 1]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cosine_bins_are_a_probability() {
        for t in [0.1, 1.0, 3.0] {
            let (e, p) = sphere_cosine_bins(t, 32).unwrap();
            assert_eq!(e.len(), 33);
            assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-10);
        }
        // t → ∞ tends to uniform in u
        let (_, p) = sphere_cosine_bins(40.0, 4).unwrap();
        assert!(p.iter().all(|x| (x - 0.25).abs() < 1e-12));
    }

    #[test]
    fn nearest_rank_quantile() {
        let xs: Vec<f64> = (1..=100).map(f64::from).collect();
        assert_eq!(quantile(&xs, 0.99), 99.0);
        assert_eq!(quantile(&xs, 1.0), 100.0);
        assert_eq!(quantile(&xs, 0.0), 1.0);
    }
}
