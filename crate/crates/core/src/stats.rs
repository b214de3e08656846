//! Sample moments and paired mean comparisons.

use crate::math::sqrt;

/// Mean and standard error of the mean, folded in slice order.
pub fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, f64::INFINITY);
    }
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, sqrt(var / n))
}

/// Unbiased sample variance.
pub fn variance(xs: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0)
}

/// Comparison of two expectations estimated on common random numbers.
///
/// `difference` is the mean of the per-sample differences `lhs − rhs` and
/// `standard_error` its standard error; the check passes when
/// `|difference| ≤ threshold · standard_error`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanComparison {
    pub samples: usize,
    pub lhs_mean: f64,
    pub rhs_mean: f64,
    pub difference: f64,
    pub standard_error: f64,
    pub threshold: f64,
    pub passed: bool,
}

impl MeanComparison {
    pub const DEFAULT_THRESHOLD: f64 = 3.0;

    pub fn from_pairs(pairs: &[(f64, f64)], threshold: f64) -> Self {
        let n = pairs.len() as f64;
        let lhs_mean = pairs.iter().map(|p| p.0).sum::<f64>() / n;
        let rhs_mean = pairs.iter().map(|p| p.1).sum::<f64>() / n;
        let diffs = pairs.iter().map(|p| p.0 - p.1);
        let difference = diffs.clone().sum::<f64>() / n;
        let var = diffs.map(|d| (d - difference) * (d - difference)).sum::<f64>() / (n - 1.0);
        let standard_error = sqrt(var / n);
        let passed = difference.abs() <= threshold * standard_error;
        Self {
            samples: pairs.len(),
            lhs_mean,
            rhs_mean,
            difference,
            standard_error,
            threshold,
            passed,
        }
    }

    /// `|difference| / standard_error`; zero when both vanish.
    pub fn z_score(&self) -> f64 {
        if self.difference == 0.0 {
            0.0
        } else {
            self.difference.abs() / self.standard_error
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_sides_pass_with_zero_difference() {
        let pairs: alloc::vec::Vec<(f64, f64)> = (0..10).map(|i| (i as f64, i as f64)).collect();
        let c = MeanComparison::from_pairs(&pairs, 3.0);
        assert_eq!(c.difference, 0.0);
        assert_eq!(c.standard_error, 0.0);
        assert!(c.passed);
        assert_eq!(c.z_score(), 0.0);
    }

    #[test]
    fn mean_se_of_constant() {
        let (m, se) = mean_se(&[2.0, 2.0, 2.0]);
        assert_eq!(m, 2.0);
        assert_eq!(se, 0.0);
    }
}
