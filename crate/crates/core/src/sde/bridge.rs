use super::generator::validate_brownian;
use super::integrator::{heun, MAX_DRIVE};
use super::path::{IntegratorConfig, SolutionPath};
use super::system::SdeSystem;
use crate::error::{Error, Result};
use crate::linalg::scale;
use crate::manifold::{EmbeddedManifold, Frame, HeatKernel};
use crate::math::sqrt;
use crate::rng::{PathStream, SeedStream};
use crate::wiener::{sample_brownian, TimeGrid};
use alloc::sync::Arc;
use alloc::vec::Vec;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BridgeConfig {
    /// Grid intervals on `[0, T]`.
    pub intervals: usize,
    /// Integration stops `snap_steps` intervals before `T`; the remaining
    /// nodes follow the geodesic to the endpoint.
    pub snap_steps: usize,
    /// Drift is capped at `cap_constant / √(T − t)`.
    pub cap_constant: f64,
    /// Abort when the cap is active on this many consecutive intervals.
    pub max_consecutive_caps: usize,
    pub integrator: IntegratorConfig,
}

impl Default for BridgeConfig {
    fn default() -> Self {
        Self {
            intervals: 1024,
            snap_steps: 1,
            cap_constant: 10.0,
            max_consecutive_caps: 64,
            integrator: IntegratorConfig::default(),
        }
    }
}

impl BridgeConfig {
    pub fn with_intervals(mut self, intervals: usize) -> Self {
        self.intervals = intervals;
        self
    }

    fn validate(&self) -> Result<()> {
        self.integrator.validate()?;
        if self.intervals < 2 || self.snap_steps == 0 || self.snap_steps >= self.intervals {
            return Err(Error::invalid("bridge needs 1 ≤ snap_steps < intervals"));
        }
        if !(self.cap_constant > 0.0) {
            return Err(Error::invalid("drift cap constant must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct BridgeSample<const A: usize, const N: usize> {
    pub path: SolutionPath<A, N>,
    /// Geodesic distance covered by the terminal snap.
    pub snap_distance: f64,
    /// Drift evaluations that hit the cap.
    pub cap_activations: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BaseSampler {
    /// `p_T(y, y)` is constant on a homogeneous space, so `y` is uniform.
    Homogeneous,
    /// Uniform proposals accepted with probability `p_T(y, y) / bound`.
    Rejection { bound: f64, max_tries: usize },
}

#[derive(Debug, Clone)]
pub struct LoopSample<const A: usize, const N: usize> {
    pub base: [f64; A],
    pub bridge: BridgeSample<A, N>,
    pub proposals: usize,
}

/// Brownian bridge sampler: integrates `dx = X∘dB + ∇ log p_{T−t}(x, y0) dt`
/// for a Brownian system, validated by generator probes on construction.
pub struct BrownianBridge<'a, const A: usize, const N: usize, S: ?Sized, K: ?Sized> {
    sys: &'a S,
    kernel: &'a K,
    cfg: BridgeConfig,
    generator_defect: f64,
}

struct Run<const A: usize, const N: usize> {
    frames: Vec<Frame<A, N>>,
    caps: usize,
}

impl<'a, const A: usize, const N: usize, S, K> BrownianBridge<'a, A, N, S, K>
where
    S: SdeSystem<A, N> + ?Sized,
    K: HeatKernel<A, N> + ?Sized,
{
    pub fn new(sys: &'a S, kernel: &'a K, cfg: BridgeConfig) -> Result<Self> {
        cfg.validate()?;
        let mut probe = SeedStream::new(0x6272_6964_6765).path(0);
        let generator_defect = validate_brownian(sys, 8, &mut probe)?;
        Ok(Self {
            sys,
            kernel,
            cfg,
            generator_defect,
        })
    }

    pub fn config(&self) -> &BridgeConfig {
        &self.cfg
    }

    pub fn generator_defect(&self) -> f64 {
        self.generator_defect
    }

    fn drift(&self, t_left: f64, x: &[f64; A], y0: &[f64; A], caps: &mut usize) -> Result<[f64; A]> {
        let g = self.kernel.grad_log(t_left, x, y0)?;
        let cap = self.cfg.cap_constant / sqrt(t_left);
        let size = self.sys.manifold().norm(&g);
        if size > cap {
            *caps += 1;
            return Ok(scale(cap / size, &g));
        }
        Ok(g)
    }

    /// Integrates intervals `0..stop`.
    fn run(&self, x0: &[f64; A], y0: &[f64; A], horizon: f64, stop: usize, stream: &mut PathStream) -> Result<Run<A, N>> {
        let m = self.sys.manifold();
        m.check_point(x0)?;
        m.check_point(y0)?;
        if !(horizon > 0.0) {
            return Err(Error::invalid("bridge horizon must be positive"));
        }
        let grid = Arc::new(TimeGrid::uniform(horizon, self.cfg.intervals)?);
        let md = self.sys.drive_dim();
        let omega = sample_brownian(&grid, md, stream)?;
        let subs = self.cfg.integrator.substeps;
        let mut frames = Vec::with_capacity(self.cfg.intervals + 1);
        let mut frame = Frame::reference(m, x0);
        frames.push(frame);
        let mut caps = 0usize;
        let mut streak = 0usize;
        for i in 0..stop {
            let dt = grid.dt(i) / subs as f64;
            let mut db = [0.0; MAX_DRIVE];
            for (d, b) in db.iter_mut().zip(omega.increment(i)) {
                *d = b / subs as f64;
            }
            let before = caps;
            let mut x = *frame.base();
            for s in 0..subs {
                let t = grid.node(i) + s as f64 * dt;
                let a = self.drift(horizon - t, &x, y0, &mut caps)?;
                let mut err = None;
                let step = heun(self.sys, &x, &db[..md], dt, &a, |z| {
                    self.drift(horizon - t - dt, z, y0, &mut caps).unwrap_or_else(|e| {
                        err = Some(e);
                        [0.0; A]
                    })
                });
                if let Some(e) = err {
                    return Err(e);
                }
                x = step.next;
                frame = frame.transport(m, &x).map_err(|e| {
                    Error::BridgeFailure(alloc::format!("interval {i}: {e}"))
                })?;
            }
            frames.push(frame);
            streak = if caps > before { streak + 1 } else { 0 };
            if streak >= self.cfg.max_consecutive_caps {
                return Err(Error::BridgeFailure(alloc::format!(
                    "drift cap active on {streak} consecutive intervals ending at t = {:.4} ({caps} activations)",
                    grid.node(i + 1)
                )));
            }
        }
        Ok(Run { frames, caps })
    }

    /// A full bridge from `x0` to `y0` over `[0, horizon]`.
    pub fn sample(&self, x0: &[f64; A], y0: &[f64; A], horizon: f64, stream: &mut PathStream) -> Result<BridgeSample<A, N>> {
        let n = self.cfg.intervals;
        let stop = n - self.cfg.snap_steps;
        let Run { mut frames, caps } = self.run(x0, y0, horizon, stop, stream)?;
        let m = self.sys.manifold();
        let last = *frames[stop].base();
        let snap_distance = m.distance(&last, y0);
        let v = m
            .log(&last, y0)
            .ok_or_else(|| Error::BridgeFailure(alloc::format!("snap from distance {snap_distance:.3} is undefined")))?;
        let mut frame = frames[stop];
        for j in 1..=self.cfg.snap_steps {
            let p = if j == self.cfg.snap_steps {
                *y0
            } else {
                m.exp(&last, &scale(j as f64 / self.cfg.snap_steps as f64, &v))
            };
            frame = frame
                .transport(m, &p)
                .map_err(|e| Error::BridgeFailure(alloc::format!("terminal snap: {e}")))?;
            frames.push(frame);
        }
        let grid = Arc::new(TimeGrid::uniform(horizon, n)?);
        Ok(BridgeSample {
            path: SolutionPath::from_frames(grid, frames, None),
            snap_distance,
            cap_activations: caps,
        })
    }

    /// The bridge position at node `k < intervals − snap_steps + 1`, from the
    /// same random numbers [`Self::sample`] would use.
    pub fn sample_node(&self, x0: &[f64; A], y0: &[f64; A], horizon: f64, k: usize, stream: &mut PathStream) -> Result<[f64; A]> {
        if k > self.cfg.intervals - self.cfg.snap_steps {
            return Err(Error::invalid("node lies inside the snap window"));
        }
        let run = self.run(x0, y0, horizon, k, stream)?;
        Ok(*run.frames[k].base())
    }

    /// Draws a loop from Bismut's measure `∝ ∫ p_T(y, y) μ_{y,y} dy`.
    pub fn sample_loop(&self, horizon: f64, base: BaseSampler, stream: &mut PathStream) -> Result<LoopSample<A, N>> {
        let m = self.sys.manifold();
        let (y, proposals) = match base {
            BaseSampler::Homogeneous => (m.sample_uniform(stream), 1),
            BaseSampler::Rejection { bound, max_tries } => {
                let mut found = None;
                for tries in 1..=max_tries {
                    let y = m.sample_uniform(stream);
                    let p = self.kernel.density(horizon, &y, &y)?;
                    if p > bound * (1.0 + 1e-12) {
                        return Err(Error::invalid("rejection bound is below p_T(y, y)"));
                    }
                    if stream.uniform() * bound <= p {
                        found = Some((y, tries));
                        break;
                    }
                }
                found.ok_or_else(|| Error::BridgeFailure("base-point rejection sampler exhausted".into()))?
            }
        };
        let bridge = self.sample(&y, &y, horizon, stream)?;
        Ok(LoopSample {
            base: y,
            bridge,
            proposals,
        })
    }
}

/// One bridge sample from `x0` to `y0`; see [`BrownianBridge`].
pub fn brownian_bridge_path<const A: usize, const N: usize, S, K>(
    sys: &S,
    kernel: &K,
    x0: &[f64; A],
    y0: &[f64; A],
    horizon: f64,
    cfg: BridgeConfig,
    stream: &mut PathStream,
) -> Result<BridgeSample<A, N>>
where
    S: SdeSystem<A, N> + ?Sized,
    K: HeatKernel<A, N> + ?Sized,
{
    BrownianBridge::new(sys, kernel, cfg)?.sample(x0, y0, horizon, stream)
}

/// One loop from Bismut's measure with the homogeneous base-point sampler.
pub fn sample_bismut_loop<const A: usize, const N: usize, S, K>(
    sys: &S,
    kernel: &K,
    horizon: f64,
    cfg: BridgeConfig,
    stream: &mut PathStream,
) -> Result<LoopSample<A, N>>
where
    S: SdeSystem<A, N> + ?Sized,
    K: HeatKernel<A, N> + ?Sized,
{
    BrownianBridge::new(sys, kernel, cfg)?.sample_loop(horizon, BaseSampler::Homogeneous, stream)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::manifold::{Circle, CircleHeatKernel, Sphere, SphereHeatKernel};
    use crate::sde::{CircleSystem, GradientSystem};

    #[test]
    fn circle_bridge_hits_endpoint() {
        let sys = CircleSystem::new();
        let k = CircleHeatKernel::default();
        let cfg = BridgeConfig::default().with_intervals(512);
        let b = BrownianBridge::new(&sys, &k, cfg).unwrap();
        let x0 = Circle::point(0.0);
        let y0 = Circle::point(1.0);
        let mut st = SeedStream::new(101).path(0);
        let s = b.sample(&x0, &y0, 0.5, &mut st).unwrap();
        assert_eq!(s.path.endpoint(), &y0);
        assert!(s.snap_distance < 0.2);
        s.path.check_invariants(&Circle).unwrap();
        // the prefix run reproduces the node exactly
        let mut st = SeedStream::new(101).path(0);
        let mid = b.sample_node(&x0, &y0, 0.5, 256, &mut st).unwrap();
        assert_eq!(&mid, s.path.point(256));
    }

    #[test]
    fn loops_close() {
        let sys = GradientSystem::new(Sphere);
        let k = SphereHeatKernel::default();
        let b = BrownianBridge::new(&sys, &k, BridgeConfig::default().with_intervals(256)).unwrap();
        let mut st = SeedStream::new(102).path(0);
        let l = b.sample_loop(0.5, BaseSampler::Homogeneous, &mut st).unwrap();
        assert_eq!(l.bridge.path.endpoint(), &l.base);
        assert_eq!(l.bridge.path.point(0), &l.base);
        let bound = k.density(0.5, &Sphere.base_point(), &Sphere.base_point()).unwrap();
        let r = b
            .sample_loop(0.5, BaseSampler::Rejection { bound, max_tries: 100 }, &mut st)
            .unwrap();
        assert_eq!(r.proposals, 1);
    }

    #[test]
    fn non_brownian_system_rejected() {
        struct Slow;
        impl SdeSystem<2, 1> for Slow {
            type Manifold = Circle;
            fn manifold(&self) -> &Circle {
                &Circle
            }
            fn name(&self) -> &'static str {
                "slow"
            }
            fn drive_dim(&self) -> usize {
                1
            }
            fn diffusion(&self, x: &[f64; 2], e: &[f64]) -> [f64; 2] {
                scale(0.5 * e[0], &Circle::unit_tangent(x))
            }
            fn diffusion_derivative(&self, _x: &[f64; 2], dx: &[f64; 2], e: &[f64]) -> [f64; 2] {
                scale(0.5 * e[0], &Circle::unit_tangent(dx))
            }
            fn right_inverse(&self, x: &[f64; 2], v: &[f64; 2], out: &mut [f64]) {
                out[0] = 2.0 * crate::linalg::dot(&Circle::unit_tangent(x), v);
            }
        }
        let k = CircleHeatKernel::default();
        assert!(matches!(
            BrownianBridge::new(&Slow, &k, BridgeConfig::default()),
            Err(Error::Degenerate(_))
        ));
    }
}
