//! The experiment registry: one experiment per acceptance criterion.

mod bridge;
mod calibration;
mod common;
mod flat;
mod geometry;
mod kernels;
mod marginal;
mod variational;

use crate::config::{Defaults, ExperimentConfig};
use crate::parallel::Threaded;
use crate::report::{Check, DataTable};
use crate::stats::StatsError;
use pathspace_core::SeedStream;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error(transparent)]
    Core(#[from] pathspace_core::Error),
    #[error(transparent)]
    Stats(#[from] StatsError),
    #[error("{0}")]
    Other(String),
}

pub type Result<T> = std::result::Result<T, ExperimentError>;

/// What an experiment sees while it runs.
pub struct Context<'a> {
    pub config: &'a ExperimentConfig,
    pub seed: u64,
    pub ensemble: &'a Threaded,
}

impl Context<'_> {
    /// Streams for the sub-experiment `tag`; distinct tags never share numbers.
    pub fn seeds(&self, tag: u64) -> SeedStream {
        SeedStream::new(self.seed).derive(tag)
    }
}

#[derive(Debug, Clone, Default)]
pub struct Outcome {
    pub checks: Vec<Check>,
    pub data: DataTable,
}

impl Outcome {
    /// Bundles checks with a data table listing them.
    pub fn checks_only(checks: Vec<Check>) -> Self {
        let data = DataTable::from_checks(&checks);
        Self { checks, data }
    }
}

pub struct Experiment {
    pub name: &'static str,
    pub criterion: u32,
    pub summary: &'static str,
    pub defaults: Defaults,
    pub run: fn(&Context<'_>) -> Result<Outcome>,
}

impl std::fmt::Debug for Experiment {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Experiment")
            .field("name", &self.name)
            .field("criterion", &self.criterion)
            .finish_non_exhaustive()
    }
}

const FLAT: &[&str] = &["flat"];
const SPHERE: &[&str] = &["sphere"];
const ANY: &[&str] = &["all", "circle", "sphere", "so3"];
const BRIDGE: &[&str] = &["all", "circle", "sphere"];

const fn defaults(
    manifolds: &'static [&'static str],
    intervals: usize,
    horizon: f64,
    samples: usize,
    params: &'static [(&'static str, f64)],
) -> Defaults {
    Defaults {
        manifolds,
        intervals,
        horizon,
        samples,
        substeps: 1,
        params,
    }
}

static REGISTRY: [Experiment; 18] = [
    Experiment {
        name: "flat-cm-shift",
        criterion: 1,
        summary: "Cameron-Martin quasi-invariance on Wiener space, both sides on common random numbers",
        defaults: defaults(FLAT, 64, 1.0, 100_000, &[]),
        run: flat::cm_shift,
    },
    Experiment {
        name: "flat-ibp",
        criterion: 2,
        summary: "flat integration by parts E[d_H f(h)] = E[f P(h)]",
        defaults: defaults(FLAT, 64, 1.0, 100_000, &[]),
        run: flat::ibp,
    },
    Experiment {
        name: "skorohod-adapted",
        criterion: 3,
        summary: "discrete divergence of adapted fields is the Ito sum; B(T)^2 - T for V = B(T)",
        defaults: defaults(FLAT, 32, 1.0, 100, &[]),
        run: flat::skorohod,
    },
    Experiment {
        name: "ou-eigen",
        criterion: 4,
        summary: "Ornstein-Uhlenbeck eigenvalues -1 on P(h) and -2 on second Hermite probes",
        defaults: defaults(FLAT, 16, 1.0, 100, &[]),
        run: flat::ou_eigen,
    },
    Experiment {
        name: "heat-kernel-validity",
        criterion: 5,
        summary: "heat kernels: symmetry, normalization, Chapman-Kolmogorov, circle dual representation",
        defaults: defaults(ANY, 256, 1.0, 100, &[]),
        run: kernels::validity,
    },
    Experiment {
        name: "marginal-law",
        criterion: 6,
        summary: "gradient SDE on S2: chi-square of <x(T), x0> against the heat kernel; weak-error halving",
        defaults: defaults(SPHERE, 1024, 1.0, 100_000, &[("bins", 32.0)]),
        run: marginal::marginal_law,
    },
    Experiment {
        name: "development-roundtrip",
        criterion: 7,
        summary: "antidevelopment of development is the identity; developed Brownian motion has the heat-kernel law",
        defaults: defaults(SPHERE, 1024, 1.0, 100_000, &[("bins", 32.0), ("smooth_paths", 20.0), ("smooth_intervals", 256.0)]),
        run: marginal::development_roundtrip,
    },
    Experiment {
        name: "holonomy",
        criterion: 8,
        summary: "parallel transport around the octant triangle rotates frames by pi/2",
        defaults: defaults(SPHERE, 64, 1.0, 1, &[]),
        run: geometry::holonomy,
    },
    Experiment {
        name: "connection-eq7",
        criterion: 9,
        summary: "induced connection of gradient systems is Levi-Civita; the adjoint of Levi-Civita is itself",
        defaults: defaults(ANY, 1, 1.0, 100, &[]),
        run: geometry::connection,
    },
    Experiment {
        name: "variational-ito",
        criterion: 10,
        summary: "variational derivative of the Ito map against finite differences; linearity in h",
        defaults: defaults(ANY, 256, 1.0, 20, &[]),
        run: variational::variational_ito,
    },
    Experiment {
        name: "damped-roundtrip",
        criterion: 11,
        summary: "damped derivative of the damped inverse on S2; first-order error under refinement",
        defaults: defaults(SPHERE, 1024, 1.0, 20, &[]),
        run: variational::damped_roundtrip,
    },
    Experiment {
        name: "tbar-membership",
        criterion: 12,
        summary: "fibre-integrated derivatives are Bismut tangents inverting to X(sigma) hdot",
        defaults: defaults(ANY, 256, 1.0, 100, &[]),
        run: variational::tbar_membership,
    },
    Experiment {
        name: "intertwining",
        criterion: 13,
        summary: "d(f o I) by chain rule and by pullback; expectation against the fibre-integrated version",
        defaults: defaults(SPHERE, 128, 1.0, 100_000, &[("probes", 100.0)]),
        run: variational::intertwining,
    },
    Experiment {
        name: "path-ibp",
        criterion: 14,
        summary: "path-space integration by parts through the Ito map, 3 manifolds x 3 functions x 2 directions",
        defaults: defaults(ANY, 128, 1.0, 100_000, &[]),
        run: variational::path_ibp,
    },
    Experiment {
        name: "bridge-law",
        criterion: 15,
        summary: "Brownian bridge midpoint law on S1 and S2; terminal snap shrinks under refinement",
        defaults: defaults(
            BRIDGE,
            512,
            1.0,
            100_000,
            &[("separation", 1.0), ("snap_samples", 10_000.0), ("symmetric_samples", 10_000.0)],
        ),
        run: bridge::bridge_law,
    },
    Experiment {
        name: "bismut-loop",
        criterion: 16,
        summary: "Bismut loops: uniform base points, rotation invariance, loop closure",
        defaults: defaults(BRIDGE, 2048, 0.5, 10_000, &[("shift_intervals", 512.0), ("snap_limit", 0.05)]),
        run: bridge::bismut_loop,
    },
    Experiment {
        name: "determinism",
        criterion: 17,
        summary: "marginal-law reports are byte-identical on 1 and 8 workers",
        defaults: defaults(SPHERE, 1024, 1.0, 100_000, &[("bins", 32.0), ("workers", 8.0)]),
        run: marginal::determinism,
    },
    Experiment {
        name: "stat-calibration",
        criterion: 18,
        summary: "null calibration and power of the KS and chi-square tests",
        defaults: defaults(
            FLAT,
            32,
            1.0,
            10_000,
            &[("repetitions", 200.0), ("chi_samples", 100_000.0)],
        ),
        run: calibration::calibration,
    },
];

/// All experiments in criterion order.
pub fn registry() -> &'static [Experiment] {
    &REGISTRY
}

pub fn find(name: &str) -> Option<&'static Experiment> {
    REGISTRY.iter().find(|e| e.name == name)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn registry_is_complete_and_ordered() {
        assert_eq!(registry().len(), 18);
        for (i, e) in registry().iter().enumerate() {
            assert_eq!(e.criterion as usize, i + 1);
            assert!(find(e.name).is_some());
        }
        assert!(find("nonexistent").is_none());
    }
}
