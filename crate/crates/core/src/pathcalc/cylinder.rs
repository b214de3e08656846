use super::tangent::AlongPath;
use crate::error::{Error, Result};
use crate::linalg::{norm, scale, sub};
use crate::manifold::EmbeddedManifold;
use crate::sde::{ito_map_h_derivative, IntegratorConfig, SdeSystem, SolutionPath};
use crate::wiener::{CameronMartinPath, DrivingPath, TimeGrid};
use alloc::sync::Arc;
use alloc::vec::Vec;

type Value<const A: usize> = Arc<dyn Fn(&[[f64; A]]) -> f64 + Send + Sync>;
type Slots<const A: usize> = Arc<dyn Fn(&[[f64; A]], &mut [[f64; A]]) + Send + Sync>;
type SlotDerivative<const A: usize> = Arc<dyn Fn(&[[f64; A]], &[[f64; A]], &mut [[f64; A]]) + Send + Sync>;

/// Tangency tolerance for gradient oracles.
pub const GRADIENT_TANGENCY_TOL: f64 = 1e-10;
/// Relative tolerance of gradient oracles against retraction differences.
pub const GRADIENT_ORACLE_TOL: f64 = 1e-6;

fn check_times(times: &[f64]) -> Result<()> {
    if times.is_empty() {
        return Err(Error::invalid("at least one sample time is required"));
    }
    if !times.iter().all(|t| t.is_finite() && *t >= 0.0) || times.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::invalid("sample times must be finite, non-negative and increasing"));
    }
    Ok(())
}

fn resolve(grid: &TimeGrid, times: &[f64]) -> Result<Vec<usize>> {
    times
        .iter()
        .map(|&t| {
            grid.index_of(t)
                .ok_or_else(|| Error::invalid(alloc::format!("sample time {t} is not a grid node")))
        })
        .collect()
}

fn gather<const A: usize, const N: usize>(path: &SolutionPath<A, N>, nodes: &[usize]) -> Vec<[f64; A]> {
    nodes.iter().map(|&k| *path.point(k)).collect()
}

/// `σ ↦ F(σ(t_1), …, σ(t_k))` with a Riemannian gradient oracle per slot.
#[derive(Clone)]
pub struct PathCylinderFunction<const A: usize> {
    times: Vec<f64>,
    value: Value<A>,
    gradient: Slots<A>,
}

impl<const A: usize> core::fmt::Debug for PathCylinderFunction<A> {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_struct("PathCylinderFunction").field("times", &self.times).finish_non_exhaustive()
    }
}

impl<const A: usize> PathCylinderFunction<A> {
    /// `gradient(xs, out)` writes the Riemannian gradient in slot `i` to `out[i]`.
    pub fn new(
        times: Vec<f64>,
        value: impl Fn(&[[f64; A]]) -> f64 + Send + Sync + 'static,
        gradient: impl Fn(&[[f64; A]], &mut [[f64; A]]) + Send + Sync + 'static,
    ) -> Result<Self> {
        check_times(&times)?;
        Ok(Self {
            times,
            value: Arc::new(value),
            gradient: Arc::new(gradient),
        })
    }

    /// Builds the Riemannian gradient from an ambient one, `∇f = s⁻¹ P_x ∇̄f`.
    pub fn from_ambient<const N: usize, M>(
        m: M,
        times: Vec<f64>,
        value: impl Fn(&[[f64; A]]) -> f64 + Send + Sync + 'static,
        ambient_gradient: impl Fn(&[[f64; A]], &mut [[f64; A]]) + Send + Sync + 'static,
    ) -> Result<Self>
    where
        M: EmbeddedManifold<A, N> + 'static,
    {
        Self::new(times, value, move |xs, out| {
            ambient_gradient(xs, out);
            for (x, g) in xs.iter().zip(out.iter_mut()) {
                *g = m.gradient(x, g);
            }
        })
    }

    /// `⟨σ(t), e⟩` in ambient coordinates.
    pub fn coordinate<const N: usize, M>(m: M, t: f64, e: [f64; A]) -> Result<Self>
    where
        M: EmbeddedManifold<A, N> + 'static,
    {
        Self::from_ambient(m, alloc::vec![t], move |xs| crate::linalg::dot(&xs[0], &e), move |_, out| out[0] = e)
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn slots(&self) -> usize {
        self.times.len()
    }

    pub fn nodes(&self, grid: &TimeGrid) -> Result<Vec<usize>> {
        resolve(grid, &self.times)
    }

    pub fn value_at(&self, xs: &[[f64; A]]) -> f64 {
        (self.value)(xs)
    }

    pub fn gradient_at(&self, xs: &[[f64; A]]) -> Vec<[f64; A]> {
        let mut out = alloc::vec![[0.0; A]; xs.len()];
        (self.gradient)(xs, &mut out);
        out
    }

    pub fn eval<const N: usize>(&self, path: &SolutionPath<A, N>) -> Result<f64> {
        let nodes = self.nodes(path.grid())?;
        Ok(self.value_at(&gather(path, &nodes)))
    }

    /// The differential `dF` as a cylinder one-form without a derivative
    /// oracle; attach one with [`CylinderOneForm::with_derivative`].
    pub fn differential(&self) -> CylinderOneForm<A> {
        let g = self.gradient.clone();
        CylinderOneForm {
            times: self.times.clone(),
            covectors: g,
            derivative: None,
        }
    }

    /// `(tangency defect, relative oracle discrepancy)` at `xs`, the latter
    /// against central differences along `exp` in every frame direction.
    pub fn oracle_discrepancy<const N: usize, M: EmbeddedManifold<A, N> + ?Sized>(
        &self,
        m: &M,
        xs: &[[f64; A]],
    ) -> (f64, f64) {
        let grads = self.gradient_at(xs);
        let mut tangency: f64 = 0.0;
        let mut worst: f64 = 0.0;
        let scale_ref = 1.0 + grads.iter().map(|g| m.norm(g)).fold(0.0, f64::max);
        for (i, (x, g)) in xs.iter().zip(&grads).enumerate() {
            tangency = tangency.max(norm(&sub(g, &m.project(x, g))));
            for e in m.reference_frame(x) {
                let h = 1e-5;
                let mut plus = xs.to_vec();
                let mut minus = xs.to_vec();
                plus[i] = m.exp(x, &scale(h, &e));
                minus[i] = m.exp(x, &scale(-h, &e));
                let fd = (self.value_at(&plus) - self.value_at(&minus)) / (2.0 * h);
                worst = worst.max((fd - m.inner(g, &e)).abs() / scale_ref);
            }
        }
        (tangency, worst)
    }

    /// Checks the gradient oracle at the sample points of `path`.
    pub fn validate<const N: usize, M: EmbeddedManifold<A, N> + ?Sized>(
        &self,
        m: &M,
        path: &SolutionPath<A, N>,
    ) -> Result<()> {
        let nodes = self.nodes(path.grid())?;
        let (tan, fd) = self.oracle_discrepancy(m, &gather(path, &nodes));
        if tan > GRADIENT_TANGENCY_TOL {
            return Err(Error::accuracy("gradient oracle is not tangent", tan));
        }
        if fd > GRADIENT_ORACLE_TOL {
            return Err(Error::accuracy("gradient oracle disagrees with finite differences", fd));
        }
        Ok(())
    }
}

/// `φ_σ(v) = Σ_i ⟨α_i(σ(t_·)), v(t_i)⟩` for covector fields `α_i` on `M^k`,
/// given by their metric duals.
#[derive(Clone)]
pub struct CylinderOneForm<const A: usize> {
    times: Vec<f64>,
    covectors: Slots<A>,
    derivative: Option<SlotDerivative<A>>,
}

impl<const A: usize> core::fmt::Debug for CylinderOneForm<A> {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_struct("CylinderOneForm")
            .field("times", &self.times)
            .field("has_derivative", &self.derivative.is_some())
            .finish_non_exhaustive()
    }
}

impl<const A: usize> CylinderOneForm<A> {
    pub fn new(times: Vec<f64>, covectors: impl Fn(&[[f64; A]], &mut [[f64; A]]) + Send + Sync + 'static) -> Result<Self> {
        check_times(&times)?;
        Ok(Self {
            times,
            covectors: Arc::new(covectors),
            derivative: None,
        })
    }

    /// `derivative(xs, dxs, out)` writes the ambient directional derivative
    /// `Dα_i(xs)[dxs]` of the covector formulas to `out[i]`.
    pub fn with_derivative(
        mut self,
        derivative: impl Fn(&[[f64; A]], &[[f64; A]], &mut [[f64; A]]) + Send + Sync + 'static,
    ) -> Self {
        self.derivative = Some(Arc::new(derivative));
        self
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn has_derivative(&self) -> bool {
        self.derivative.is_some()
    }

    pub fn covectors_at(&self, xs: &[[f64; A]]) -> Vec<[f64; A]> {
        let mut out = alloc::vec![[0.0; A]; xs.len()];
        (self.covectors)(xs, &mut out);
        out
    }

    /// `φ` at points `xs` on slot vectors `vs`.
    pub fn apply_at<const N: usize, M: EmbeddedManifold<A, N> + ?Sized>(
        &self,
        m: &M,
        xs: &[[f64; A]],
        vs: &[[f64; A]],
    ) -> f64 {
        self.covectors_at(xs).iter().zip(vs).map(|(a, v)| m.inner(a, v)).sum()
    }

    /// `φ_σ(v)` for a tangent field along `σ`.
    pub fn evaluate<const N: usize, M: EmbeddedManifold<A, N> + ?Sized>(
        &self,
        m: &M,
        path: &SolutionPath<A, N>,
        vectors: &[[f64; A]],
    ) -> Result<f64> {
        if vectors.len() != path.nodes() {
            return Err(Error::invalid("one tangent vector per node is required"));
        }
        let nodes = resolve(path.grid(), &self.times)?;
        let vs: Vec<[f64; A]> = nodes.iter().map(|&k| vectors[k]).collect();
        Ok(self.apply_at(m, &gather(path, &nodes), &vs))
    }
}

/// `d_H F(v) = Σ_i ⟨grad_i F(σ(t_·)), v(t_i)⟩`.
pub fn cylinder_h_derivative<const A: usize, const N: usize, M, V>(
    m: &M,
    f: &PathCylinderFunction<A>,
    v: &V,
) -> Result<f64>
where
    M: EmbeddedManifold<A, N> + ?Sized,
    V: AlongPath<A, N> + ?Sized,
{
    let path = v.solution();
    let nodes = f.nodes(path.grid())?;
    let xs = gather(path, &nodes);
    let grads = f.gradient_at(&xs);
    let vs = v.frame_coordinates(m);
    Ok(nodes
        .iter()
        .zip(&grads)
        .map(|(&k, g)| m.inner(g, &path.frame(k).apply(&vs[k])))
        .sum())
}

/// `I*(φ)_ω(h) = φ(T_ω I(h))` through the variational integrator.
pub fn pullback_one_form<const A: usize, const N: usize, S: SdeSystem<A, N> + ?Sized>(
    phi: &CylinderOneForm<A>,
    sys: &S,
    omega: &DrivingPath,
    h: &CameronMartinPath,
    x0: &[f64; A],
    cfg: &IntegratorConfig,
) -> Result<f64> {
    let tv = ito_map_h_derivative(sys, omega, h, x0, cfg)?;
    phi.evaluate(sys.manifold(), tv.path(), tv.vectors())
}

/// The exterior derivative of a cylinder one-form on the slot restrictions
/// of `v` and `w`: `dφ(v, w) = Σ_i ⟨Dα_i[v], w_i⟩ − ⟨Dα_i[w], v_i⟩`.
pub fn exterior_derivative_cylinder<const A: usize, const N: usize, M, V, W>(
    m: &M,
    phi: &CylinderOneForm<A>,
    v: &V,
    w: &W,
) -> Result<f64>
where
    M: EmbeddedManifold<A, N> + ?Sized,
    V: AlongPath<A, N> + ?Sized,
    W: AlongPath<A, N> + ?Sized,
{
    let d = phi
        .derivative
        .as_ref()
        .ok_or_else(|| Error::Unsupported("the one-form has no derivative oracle".into()))?;
    let path = v.solution();
    let other = w.solution();
    if !Arc::ptr_eq(path, other) && (path.grid().nodes() != other.grid().nodes() || !path.points().eq(other.points())) {
        return Err(Error::invalid("tangent fields lie along different paths"));
    }
    let nodes = resolve(path.grid(), &phi.times)?;
    let xs = gather(path, &nodes);
    let cv = v.frame_coordinates(m);
    let cw = w.frame_coordinates(m);
    let vs: Vec<[f64; A]> = nodes.iter().map(|&k| path.frame(k).apply(&cv[k])).collect();
    let ws: Vec<[f64; A]> = nodes.iter().map(|&k| path.frame(k).apply(&cw[k])).collect();
    let mut dv = alloc::vec![[0.0; A]; xs.len()];
    let mut dw = alloc::vec![[0.0; A]; xs.len()];
    d(&xs, &vs, &mut dv);
    d(&xs, &ws, &mut dw);
    Ok((0..xs.len()).map(|i| m.inner(&dv[i], &ws[i]) - m.inner(&dw[i], &vs[i])).sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::dot;
    use crate::manifold::Sphere;
    use crate::pathcalc::{parallel_h_field, BismutTangent};
    use crate::rng::SeedStream;
    use crate::sde::{ito_map, GradientSystem};
    use crate::wiener::sample_brownian;

    const E3: [f64; 3] = [0.0, 0.0, 1.0];
    const E1: [f64; 3] = [1.0, 0.0, 0.0];

    fn path_and_field(seed: u64) -> (Arc<SolutionPath<3, 2>>, BismutTangent<3, 2>, BismutTangent<3, 2>) {
        let sys = GradientSystem::new(Sphere);
        let g = Arc::new(TimeGrid::uniform(1.0, 32).unwrap());
        let w = sample_brownian(&g, 3, &mut SeedStream::new(seed).path(0)).unwrap();
        let p = Arc::new(ito_map(&sys, &w, &Sphere.base_point(), &IntegratorConfig::default()).unwrap());
        let h1 = CameronMartinPath::from_fn(g.clone(), 2, |t, _, o| {
            o[0] = 1.0;
            o[1] = t;
        })
        .unwrap();
        let h2 = CameronMartinPath::from_fn(g.clone(), 2, |t, _, o| {
            o[0] = libm::sin(4.0 * t);
            o[1] = -1.0;
        })
        .unwrap();
        (p.clone(), parallel_h_field(&p, &h1).unwrap(), parallel_h_field(&p, &h2).unwrap())
    }

    /// `⟨x_a, e⟩` with the derivative of its Riemannian gradient `e − ⟨x,e⟩x`.
    fn coord_form(slots: usize, slot: usize, e: [f64; 3], times: Vec<f64>) -> CylinderOneForm<3> {
        CylinderOneForm::new(times, move |xs, out| {
            for o in out.iter_mut() {
                *o = [0.0; 3];
            }
            out[slot] = Sphere.project(&xs[slot], &e);
        })
        .unwrap()
        .with_derivative(move |xs, dxs, out| {
            for o in out.iter_mut().take(slots) {
                *o = [0.0; 3];
            }
            let (x, dx) = (&xs[slot], &dxs[slot]);
            out[slot] = core::array::from_fn(|k| -dot(dx, &e) * x[k] - dot(x, &e) * dx[k]);
        })
    }

    /// `f dg` with `f = ⟨x_0, e1⟩`, `g = ⟨x_1, e3⟩`.
    fn product_form(times: Vec<f64>) -> CylinderOneForm<3> {
        CylinderOneForm::new(times, |xs, out| {
            out[0] = [0.0; 3];
            out[1] = crate::linalg::scale(dot(&xs[0], &E1), &Sphere.project(&xs[1], &E3));
        })
        .unwrap()
        .with_derivative(|xs, dxs, out| {
            out[0] = [0.0; 3];
            let f = dot(&xs[0], &E1);
            let df = dot(&dxs[0], &E1);
            let g = Sphere.project(&xs[1], &E3);
            let (x, dx) = (&xs[1], &dxs[1]);
            let dg: [f64; 3] = core::array::from_fn(|k| -dot(dx, &E3) * x[k] - dot(x, &E3) * dx[k]);
            out[1] = core::array::from_fn(|k| df * g[k] + f * dg[k]);
        })
    }

    #[test]
    fn terminal_coordinate_derivative() {
        let (p, v, _) = path_and_field(1);
        let f = PathCylinderFunction::coordinate(Sphere, 1.0, E3).unwrap();
        f.validate(&Sphere, &p).unwrap();
        let d = cylinder_h_derivative(&Sphere, &f, &v).unwrap();
        let expect = dot(&Sphere.project(p.endpoint(), &E3), &v.vector(32));
        assert!((d - expect).abs() < 1e-14);
        let z = parallel_h_field(&p, &CameronMartinPath::zero(p.grid().clone(), 2).unwrap()).unwrap();
        assert_eq!(cylinder_h_derivative(&Sphere, &f, &z).unwrap(), 0.0);
        let off = PathCylinderFunction::coordinate(Sphere, 0.3, E3).unwrap();
        assert!(matches!(cylinder_h_derivative(&Sphere, &off, &v), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn bad_gradient_oracle_detected() {
        let (p, _, _) = path_and_field(2);
        let wrong = PathCylinderFunction::new(alloc::vec![1.0], |xs| xs[0][2], |_, out| out[0] = E3).unwrap();
        assert!(wrong.validate(&Sphere, &p).is_err());
    }

    #[test]
    fn exterior_derivative_identities() {
        let (_, v, w) = path_and_field(3);
        let exact = coord_form(2, 1, E3, alloc::vec![0.5, 1.0]);
        assert!(exterior_derivative_cylinder(&Sphere, &exact, &v, &w).unwrap().abs() < 1e-12);
        let fdg = product_form(alloc::vec![0.5, 1.0]);
        let a = exterior_derivative_cylinder(&Sphere, &fdg, &v, &w).unwrap();
        let b = exterior_derivative_cylinder(&Sphere, &fdg, &w, &v).unwrap();
        assert!((a + b).abs() < 1e-12);
        // Leibniz: d(f dg)(v, w) = df(v) dg(w) − df(w) dg(v)
        let f = PathCylinderFunction::coordinate(Sphere, 0.5, E1).unwrap();
        let g = PathCylinderFunction::coordinate(Sphere, 1.0, E3).unwrap();
        let (fv, fw) = (cylinder_h_derivative(&Sphere, &f, &v).unwrap(), cylinder_h_derivative(&Sphere, &f, &w).unwrap());
        let (gv, gw) = (cylinder_h_derivative(&Sphere, &g, &v).unwrap(), cylinder_h_derivative(&Sphere, &g, &w).unwrap());
        assert!((a - (fv * gw - fw * gv)).abs() < 1e-12);
        let bare = CylinderOneForm::new(alloc::vec![1.0], |_, out: &mut [[f64; 3]]| out[0] = [0.0; 3]).unwrap();
        assert!(matches!(exterior_derivative_cylinder(&Sphere, &bare, &v, &w), Err(Error::Unsupported(_))));
    }

    #[test]
    fn pullback_of_differential_is_chain_rule() {
        let sys = GradientSystem::new(Sphere);
        let g = Arc::new(TimeGrid::uniform(1.0, 32).unwrap());
        let w = sample_brownian(&g, 3, &mut SeedStream::new(4).path(0)).unwrap();
        let h = CameronMartinPath::constant(g.clone(), &[0.3, -1.0, 0.5]).unwrap();
        let cfg = IntegratorConfig::default();
        let x0 = Sphere.base_point();
        let f = PathCylinderFunction::coordinate(Sphere, 1.0, E3).unwrap();
        let lhs = pullback_one_form(&f.differential(), &sys, &w, &h, &x0, &cfg).unwrap();
        let tv = ito_map_h_derivative(&sys, &w, &h, &x0, &cfg).unwrap();
        let rhs = cylinder_h_derivative(&Sphere, &f, &tv).unwrap();
        assert!((lhs - rhs).abs() < 1e-12);
        let zero = CameronMartinPath::zero(g.clone(), 3).unwrap();
        assert_eq!(pullback_one_form(&f.differential(), &sys, &w, &zero, &x0, &cfg).unwrap(), 0.0);
    }
}
