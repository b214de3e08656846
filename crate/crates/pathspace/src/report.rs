//! Check rows, reports and their files.

use crate::config::ExperimentConfig;
use pathspace_core::stats::MeanComparison;
use serde::{Deserialize, Serialize};
use std::path::Path;

/// Non-finite statistics are written as `null` and read back as NaN.
mod lossy {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
        if x.is_finite() {
            s.serialize_f64(*x)
        } else {
            s.serialize_none()
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::NAN))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CheckKind {
    /// Algebraic identity at a fixed tolerance.
    Exact,
    /// Discretization self-consistency at a stated bound.
    Discretization,
    /// Monte Carlo comparison; subject to the three-seed policy.
    Statistical,
}

/// One pass/fail row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub kind: CheckKind,
    #[serde(with = "lossy")]
    pub statistic: f64,
    /// Standard error or p-value, depending on `rule`.
    pub se_or_p: Option<f64>,
    pub threshold: f64,
    pub rule: String,
    pub passed: bool,
    /// Failed at the primary seed but not reproducibly.
    pub flagged: bool,
    /// Misses over the primary seed and reruns, when reruns happened.
    pub seed_misses: Option<u32>,
}

impl Check {
    fn new(name: impl Into<String>, kind: CheckKind, statistic: f64, se_or_p: Option<f64>, threshold: f64, rule: &str, passed: bool) -> Self {
        Self {
            name: name.into(),
            kind,
            statistic,
            se_or_p,
            threshold,
            rule: rule.into(),
            passed,
            flagged: false,
            seed_misses: None,
        }
    }

    /// `value ≤ threshold`, an algebraic identity.
    pub fn exact(name: impl Into<String>, value: f64, threshold: f64) -> Self {
        Self::new(name, CheckKind::Exact, value, None, threshold, "statistic <= threshold", value <= threshold)
    }

    /// `value ≤ threshold`, a discretization bound.
    pub fn discretization(name: impl Into<String>, value: f64, threshold: f64) -> Self {
        Self::new(name, CheckKind::Discretization, value, None, threshold, "statistic <= threshold", value <= threshold)
    }

    /// `|difference| ≤ k · SE` from a common-random-numbers comparison.
    pub fn mean(name: impl Into<String>, c: &MeanComparison) -> Self {
        let mut ch = Self::new(
            name,
            CheckKind::Statistical,
            c.difference,
            Some(c.standard_error),
            c.threshold,
            "|statistic| <= threshold * se",
            c.passed,
        );
        if c.standard_error == 0.0 && c.difference == 0.0 {
            ch.passed = true;
        }
        ch
    }

    /// `|value| ≤ k · se` for a difference with a known standard error.
    pub fn within_se(name: impl Into<String>, value: f64, se: f64, k: f64) -> Self {
        Self::new(name, CheckKind::Statistical, value, Some(se), k, "|statistic| <= threshold * se", value.abs() <= k * se)
    }

    /// `p > threshold` for a goodness-of-fit test.
    pub fn p_value(name: impl Into<String>, statistic: f64, p: f64, threshold: f64) -> Self {
        Self::new(name, CheckKind::Statistical, statistic, Some(p), threshold, "p > threshold", p > threshold)
    }

    /// `p < threshold`: a power check against a known alternative.
    pub fn rejects(name: impl Into<String>, statistic: f64, p: f64, threshold: f64) -> Self {
        Self::new(name, CheckKind::Statistical, statistic, Some(p), threshold, "p < threshold", p < threshold)
    }

    /// `|value − target| ≤ tolerance` for a Monte Carlo frequency.
    pub fn frequency(name: impl Into<String>, value: f64, target: f64, tolerance: f64) -> Self {
        Self::new(
            name,
            CheckKind::Statistical,
            value,
            None,
            tolerance,
            &format!("|statistic - {target}| <= threshold"),
            (value - target).abs() <= tolerance,
        )
    }

    /// A bound on a Monte Carlo quantity, such as a percentile.
    pub fn statistical_at_most(name: impl Into<String>, value: f64, threshold: f64) -> Self {
        Self::new(name, CheckKind::Statistical, value, None, threshold, "statistic <= threshold", value <= threshold)
    }

    /// NaN statistics never pass.
    pub(crate) fn sanitize(mut self) -> Self {
        if self.statistic.is_nan() || self.se_or_p.is_some_and(f64::is_nan) {
            self.passed = false;
        }
        self
    }
}

/// Per-sample or per-bin output written to `data.csv`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct DataTable {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl DataTable {
    pub fn new(header: &[&str]) -> Self {
        Self {
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    /// A table with one row per check.
    pub fn from_checks(checks: &[Check]) -> Self {
        let mut t = Self::new(&["check", "kind", "statistic", "se_or_p", "threshold", "passed"]);
        for c in checks {
            t.push(vec![
                c.name.clone(),
                serde_json::to_value(c.kind).unwrap().as_str().unwrap_or_default().to_string(),
                fmt(c.statistic),
                c.se_or_p.map(fmt).unwrap_or_default(),
                fmt(c.threshold),
                c.passed.to_string(),
            ]);
        }
        t
    }

    pub fn write(&self, path: &Path) -> std::io::Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(&self.header)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        w.flush()
    }
}

/// Shortest round-trip decimal form.
pub fn fmt(x: f64) -> String {
    format!("{x:?}")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatReport {
    pub name: String,
    pub criterion: u32,
    pub config_hash: String,
    pub config: serde_json::Value,
    pub seed: u64,
    pub version: String,
    pub checks: Vec<Check>,
    pub passed: bool,
    pub wall_clock_seconds: f64,
}

impl StatReport {
    pub fn new(name: &str, criterion: u32, config: &ExperimentConfig, seed: u64, checks: Vec<Check>, seconds: f64) -> Self {
        let passed = checks.iter().all(|c| c.passed);
        Self {
            name: name.to_string(),
            criterion,
            config_hash: config.hash(),
            config: serde_json::to_value(config).expect("config serializes"),
            seed,
            version: env!("CARGO_PKG_VERSION").to_string(),
            checks,
            passed,
            wall_clock_seconds: seconds,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes") + "\n"
    }

    /// The JSON text with the wall-clock field zeroed, for reproducibility checks.
    pub fn to_json_without_timing(&self) -> String {
        let mut r = self.clone();
        r.wall_clock_seconds = 0.0;
        r.to_json()
    }

    pub fn read(path: &Path) -> std::io::Result<Self> {
        let text = std::fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(std::io::Error::other)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed)
    }

    /// Human-readable summary.
    pub fn summary(&self) -> String {
        let mut s = format!(
            "{} (criterion {}): {}  seed {}  config {}  {:.2}s\n",
            self.name,
            self.criterion,
            if self.passed { "PASS" } else { "FAIL" },
            self.seed,
            &self.config_hash[..12.min(self.config_hash.len())],
            self.wall_clock_seconds
        );
        for c in &self.checks {
            let mark = match (c.passed, c.flagged) {
                (true, false) => "ok  ",
                (true, true) => "flag",
                (false, _) => "FAIL",
            };
            let extra = c.se_or_p.map(|v| format!("  se/p {v:.3e}")).unwrap_or_default();
            s.push_str(&format!(
                "  [{mark}] {:<48} {:>12.4e}{extra}  ({} with threshold {:.3e})\n",
                c.name, c.statistic, c.rule, c.threshold
            ));
        }
        s
    }
}
