//! Goodness-of-fit statistics.

use statrs::distribution::{ChiSquared, ContinuousCDF};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum StatsError {
    #[error("need at least {needed} samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },
    #[error("bin {bin} expects {expected:.2} counts (< 5); use coarser bins")]
    SparseBin { bin: usize, expected: f64 },
    #[error("invalid binning: {0}")]
    Binning(String),
    #[error("non-finite sample at index {0}")]
    NonFinite(usize),
}

pub const KS_MIN_SAMPLES: usize = 50;
pub const MIN_EXPECTED_COUNT: f64 = 5.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TestResult {
    pub statistic: f64,
    pub p_value: f64,
}

/// Kolmogorov's limiting survival function `Q(λ) = 2 Σ (−1)^{k−1} e^{−2k²λ²}`.
pub fn kolmogorov_survival(lambda: f64) -> f64 {
    if lambda <= 0.0 {
        return 1.0;
    }
    if lambda < 0.3 {
        // the alternating series converges slowly here; use the theta-function form
        // 1 − Q = √(2π)/λ Σ e^{−(2k−1)²π²/(8λ²)}
        let c = std::f64::consts::PI * std::f64::consts::PI / (8.0 * lambda * lambda);
        let s: f64 = (1..=5).map(|k| (-((2 * k - 1) as f64).powi(2) * c).exp()).sum();
        return (1.0 - (2.0 * std::f64::consts::PI).sqrt() / lambda * s).clamp(0.0, 1.0);
    }
    let mut total = 0.0;
    for k in 1..=100 {
        let kf = k as f64;
        let term = (-2.0 * kf * kf * lambda * lambda).exp();
        total += if k % 2 == 1 { term } else { -term };
        if term < 1e-17 {
            break;
        }
    }
    (2.0 * total).clamp(0.0, 1.0)
}

fn sorted(samples: &[f64]) -> Result<Vec<f64>, StatsError> {
    if let Some(i) = samples.iter().position(|x| !x.is_finite()) {
        return Err(StatsError::NonFinite(i));
    }
    let mut s = samples.to_vec();
    s.sort_by(f64::total_cmp);
    Ok(s)
}

/// One-sample Kolmogorov–Smirnov test with the asymptotic p-value,
/// using Stephens' effective-size correction `(√n + 0.12 + 0.11/√n) D`.
pub fn ks_test(samples: &[f64], cdf: impl Fn(f64) -> f64) -> Result<TestResult, StatsError> {
    let n = samples.len();
    if n < KS_MIN_SAMPLES {
        return Err(StatsError::TooFewSamples { needed: KS_MIN_SAMPLES, got: n });
    }
    let s = sorted(samples)?;
    let nf = n as f64;
    let mut d: f64 = 0.0;
    for (i, x) in s.iter().enumerate() {
        let f = cdf(*x);
        d = d.max(f - i as f64 / nf).max((i + 1) as f64 / nf - f);
    }
    let sq = nf.sqrt();
    Ok(TestResult {
        statistic: d,
        p_value: kolmogorov_survival((sq + 0.12 + 0.11 / sq) * d),
    })
}

/// Two-sample Kolmogorov–Smirnov test, asymptotic p-value with the effective
/// size `n m / (n + m)`.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<TestResult, StatsError> {
    for s in [a, b] {
        if s.len() < KS_MIN_SAMPLES {
            return Err(StatsError::TooFewSamples { needed: KS_MIN_SAMPLES, got: s.len() });
        }
    }
    let (a, b) = (sorted(a)?, sorted(b)?);
    let (n, m) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / n - j as f64 / m).abs());
    }
    let ne = ((n * m) / (n + m)).sqrt();
    Ok(TestResult {
        statistic: d,
        p_value: kolmogorov_survival((ne + 0.12 + 0.11 / ne) * d),
    })
}

/// Pearson chi-square of `counts` against `probabilities` (normalized to one)
/// with `k − 1` degrees of freedom.
pub fn chi_square_counts(counts: &[u64], probabilities: &[f64]) -> Result<TestResult, StatsError> {
    if counts.len() != probabilities.len() || counts.len() < 2 {
        return Err(StatsError::Binning("need matching counts and probabilities for at least two bins".into()));
    }
    if probabilities.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
        return Err(StatsError::Binning("probabilities must be finite and non-negative".into()));
    }
    let total_p: f64 = probabilities.iter().sum();
    let n: u64 = counts.iter().sum();
    let mut stat = 0.0;
    for (bin, (&c, &p)) in counts.iter().zip(probabilities).enumerate() {
        let expected = n as f64 * p / total_p;
        if expected < MIN_EXPECTED_COUNT {
            return Err(StatsError::SparseBin { bin, expected });
        }
        let d = c as f64 - expected;
        stat += d * d / expected;
    }
    let dist = ChiSquared::new((counts.len() - 1) as f64).expect("positive degrees of freedom");
    Ok(TestResult {
        statistic: stat,
        p_value: dist.sf(stat),
    })
}

/// Counts of `samples` in the half-open bins `[e_j, e_{j+1})` (the last bin
/// closed); samples outside the edges are an error.
pub fn histogram(samples: &[f64], edges: &[f64]) -> Result<Vec<u64>, StatsError> {
    if edges.len() < 3 || edges.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(StatsError::Binning("edges must be increasing with at least two bins".into()));
    }
    let last = edges.len() - 2;
    let mut counts = vec![0u64; edges.len() - 1];
    for (i, &x) in samples.iter().enumerate() {
        if !x.is_finite() {
            return Err(StatsError::NonFinite(i));
        }
        if x < edges[0] || x > edges[edges.len() - 1] {
            return Err(StatsError::Binning(format!("sample {x} lies outside the bin edges")));
        }
        let j = edges.partition_point(|e| *e <= x).saturating_sub(1).min(last);
        counts[j] += 1;
    }
    Ok(counts)
}

/// Histogram followed by [`chi_square_counts`].
pub fn chi_square_binned(samples: &[f64], edges: &[f64], probabilities: &[f64]) -> Result<TestResult, StatsError> {
    if probabilities.len() + 1 != edges.len() {
        return Err(StatsError::Binning("one probability per bin is required".into()));
    }
    chi_square_counts(&histogram(samples, edges)?, probabilities)
}
