use crate::error::{Error, Result};
use crate::linalg::{norm, sub};
use crate::manifold::{EmbeddedManifold, Frame};
use crate::sde::{SdeSystem, SolutionPath, TangentPathAlong, PATH_TOL};
use crate::wiener::CameronMartinPath;
use alloc::sync::Arc;
use alloc::vec::Vec;

/// A tangent vector field along `σ` of the form `v(t_k) = F_k h(t_k)`, where
/// `F_k` are the parallel frames of `σ` and `h` is a representing path in
/// frame coordinates with piecewise-constant derivative.
#[derive(Debug, Clone)]
pub struct BismutTangent<const A: usize, const N: usize> {
    path: Arc<SolutionPath<A, N>>,
    rep: CameronMartinPath,
}

impl<const A: usize, const N: usize> BismutTangent<A, N> {
    pub fn new(path: Arc<SolutionPath<A, N>>, rep: CameronMartinPath) -> Result<Self> {
        if rep.dim() != N {
            return Err(Error::invalid(alloc::format!(
                "representing path has dimension {}, the manifold has {N}",
                rep.dim()
            )));
        }
        if rep.grid().nodes() != path.grid().nodes() {
            return Err(Error::invalid("representing path and solution path use different grids"));
        }
        Ok(Self { path, rep })
    }

    pub fn path(&self) -> &Arc<SolutionPath<A, N>> {
        &self.path
    }

    pub fn representing(&self) -> &CameronMartinPath {
        &self.rep
    }

    /// `h(t_k)` in frame coordinates.
    pub fn coords(&self, k: usize) -> [f64; N] {
        core::array::from_fn(|a| self.rep.value(k)[a])
    }

    /// `v(t_k) = F_k h(t_k)`.
    pub fn vector(&self, k: usize) -> [f64; A] {
        self.path.frame(k).apply(&self.coords(k))
    }

    pub fn vectors(&self) -> Vec<[f64; A]> {
        (0..self.path.nodes()).map(|k| self.vector(k)).collect()
    }

    /// `Σ |ḣ_i|² Δt_i`.
    pub fn norm_sq(&self) -> f64 {
        self.rep.norm_sq()
    }

    pub fn to_tangent_path(&self) -> TangentPathAlong<A, N> {
        TangentPathAlong::from_parts(self.path.clone(), self.vectors())
    }

    /// Largest violation of the membership conditions: tangency of `v`,
    /// `v(0) = 0`, agreement of frame coordinates with `h`, and the cached
    /// norm against a recomputation.
    pub fn membership_defect<M: EmbeddedManifold<A, N> + ?Sized>(&self, m: &M) -> f64 {
        let mut worst: f64 = 0.0;
        for k in 0..self.path.nodes() {
            let v = self.vector(k);
            let x = self.path.point(k);
            worst = worst.max(norm(&sub(&v, &m.project(x, &v))));
            let c = self.path.frame(k).coords(m, &v);
            let h = self.coords(k);
            for a in 0..N {
                worst = worst.max((c[a] - h[a]).abs());
            }
        }
        worst = worst.max(norm(&self.vector(0)));
        let grid = self.rep.grid();
        let recomputed: f64 = (0..grid.intervals())
            .map(|i| self.rep.hdot(i).iter().map(|d| d * d).sum::<f64>() * grid.dt(i))
            .sum();
        let n = self.norm_sq();
        if !n.is_finite() {
            return f64::INFINITY;
        }
        worst.max((recomputed - n).abs() / (1.0 + n))
    }
}

/// Anything that can be read as frame coordinates along a solution path.
pub trait AlongPath<const A: usize, const N: usize> {
    fn solution(&self) -> &Arc<SolutionPath<A, N>>;
    fn frame_coordinates<M: EmbeddedManifold<A, N> + ?Sized>(&self, m: &M) -> Vec<[f64; N]>;
}

impl<const A: usize, const N: usize> AlongPath<A, N> for BismutTangent<A, N> {
    fn solution(&self) -> &Arc<SolutionPath<A, N>> {
        &self.path
    }

    fn frame_coordinates<M: EmbeddedManifold<A, N> + ?Sized>(&self, _m: &M) -> Vec<[f64; N]> {
        (0..self.path.nodes()).map(|k| self.coords(k)).collect()
    }
}

impl<const A: usize, const N: usize> AlongPath<A, N> for TangentPathAlong<A, N> {
    fn solution(&self) -> &Arc<SolutionPath<A, N>> {
        self.path()
    }

    fn frame_coordinates<M: EmbeddedManifold<A, N> + ?Sized>(&self, m: &M) -> Vec<[f64; N]> {
        self.frame_coords(m)
    }
}

/// Driver's parallel field `V^h`: the Bismut tangent along `σ` whose
/// representing path is `h` itself.
pub fn parallel_h_field<const A: usize, const N: usize>(
    path: &Arc<SolutionPath<A, N>>,
    h: &CameronMartinPath,
) -> Result<BismutTangent<A, N>> {
    BismutTangent::new(path.clone(), h.clone())
}

/// `F^ᵀ Ric^# F` at a frame, in the metric.
pub fn ricci_matrix<const A: usize, const N: usize, M: EmbeddedManifold<A, N> + ?Sized>(
    m: &M,
    frame: &Frame<A, N>,
) -> [[f64; N]; N] {
    let cols = frame.columns();
    let x = frame.base();
    let mut r = [[0.0; N]; N];
    for b in 0..N {
        let rb = m.ricci(x, &cols[b]);
        for a in 0..N {
            r[a][b] = m.inner(&cols[a], &rb);
        }
    }
    r
}

fn mat_apply<const N: usize>(r: &[[f64; N]; N], h: &[f64; N]) -> [f64; N] {
    core::array::from_fn(|a| (0..N).map(|b| r[a][b] * h[b]).sum())
}

/// The damped derivative `D/dt + ½ Ric^#` of a field along `σ`, in frame
/// coordinates, one value per interval:
/// `(h_{i+1} − h_i)/Δt_i + ½ R̄_i h̄_i` with `R̄_i`, `h̄_i` the interval
/// midpoint averages.
pub fn damped_derivative<const A: usize, const N: usize, M, V>(m: &M, v: &V) -> Result<Vec<[f64; N]>>
where
    M: EmbeddedManifold<A, N> + ?Sized,
    V: AlongPath<A, N> + ?Sized,
{
    let path = v.solution();
    let grid = path.grid();
    let h = v.frame_coordinates(m);
    if h.len() != grid.intervals() + 1 {
        return Err(Error::invalid("field and path have different node counts"));
    }
    let mut r_prev = ricci_matrix(m, path.frame(0));
    let mut out = Vec::with_capacity(grid.intervals());
    for i in 0..grid.intervals() {
        let r_next = ricci_matrix(m, path.frame(i + 1));
        let dt = grid.dt(i);
        let mid: [f64; N] = core::array::from_fn(|a| 0.5 * (h[i][a] + h[i + 1][a]));
        let rm: [[f64; N]; N] = core::array::from_fn(|a| core::array::from_fn(|b| 0.5 * (r_prev[a][b] + r_next[a][b])));
        let rh = mat_apply(&rm, &mid);
        out.push(core::array::from_fn(|a| (h[i + 1][a] - h[i][a]) / dt + 0.5 * rh[a]));
        r_prev = r_next;
    }
    Ok(out)
}

/// Inverse of [`damped_derivative`]: solves `ḣ = F^ᵀu − ½ R h`, `h(0) = 0`,
/// by the trapezoidal rule, with `u_i ∈ T_{σ(t_i)}M` held on interval `i`.
pub fn damped_inverse<const A: usize, const N: usize, M: EmbeddedManifold<A, N> + ?Sized>(
    m: &M,
    path: &Arc<SolutionPath<A, N>>,
    u: &[[f64; A]],
) -> Result<BismutTangent<A, N>> {
    let grid = path.grid();
    if u.len() != grid.intervals() {
        return Err(Error::invalid("one vector per interval is required"));
    }
    let mut coords = Vec::with_capacity(u.len());
    for (i, ui) in u.iter().enumerate() {
        let x = path.point(i);
        let off = norm(&sub(ui, &m.project(x, ui)));
        if off > PATH_TOL * (1.0 + norm(ui)) {
            return Err(Error::domain(alloc::format!("u on interval {i} is not tangent ({off:.3e})")));
        }
        coords.push(path.frame(i).coords(m, ui));
    }
    damped_inverse_coords(m, path, &coords)
}

/// [`damped_inverse`] with `u` already in frame coordinates.
pub fn damped_inverse_coords<const A: usize, const N: usize, M: EmbeddedManifold<A, N> + ?Sized>(
    m: &M,
    path: &Arc<SolutionPath<A, N>>,
    u: &[[f64; N]],
) -> Result<BismutTangent<A, N>> {
    let grid = path.grid();
    if u.len() != grid.intervals() {
        return Err(Error::invalid("one vector per interval is required"));
    }
    let mut h = [0.0; N];
    let mut hdot = Vec::with_capacity(N * u.len());
    let mut r_prev = ricci_matrix(m, path.frame(0));
    for (i, ui) in u.iter().enumerate() {
        let r_next = ricci_matrix(m, path.frame(i + 1));
        let dt = grid.dt(i);
        // (I + Δt/4 R̄) h_{i+1} = h_i + Δt u_i − Δt/4 R̄ h_i, matching the midpoint form above
        let rm: [[f64; N]; N] = core::array::from_fn(|a| core::array::from_fn(|b| 0.5 * (r_prev[a][b] + r_next[a][b])));
        let rh = mat_apply(&rm, &h);
        let rhs: [f64; N] = core::array::from_fn(|a| h[a] + dt * ui[a] - 0.25 * dt * rh[a]);
        let lhs: [[f64; N]; N] =
            core::array::from_fn(|a| core::array::from_fn(|b| if a == b { 1.0 } else { 0.0 } + 0.25 * dt * rm[a][b]));
        let next = crate::linalg::solve(&lhs, &rhs)
            .ok_or_else(|| Error::accuracy("damped inverse step is singular; refine the grid", dt))?;
        for a in 0..N {
            hdot.push((next[a] - h[a]) / dt);
        }
        h = next;
        r_prev = r_next;
    }
    let rep = CameronMartinPath::new(grid.clone(), N, hdot)?;
    BismutTangent::new(path.clone(), rep)
}

/// `T̄I_σ(h) = W(X(σ)ḣ)`: the damped inverse of `u_i = X(σ(t_i)) ḣ_i`.
pub fn tbar_ito<const A: usize, const N: usize, S: SdeSystem<A, N> + ?Sized>(
    sys: &S,
    path: &Arc<SolutionPath<A, N>>,
    h: &CameronMartinPath,
) -> Result<BismutTangent<A, N>> {
    if h.dim() != sys.drive_dim() {
        return Err(Error::invalid(alloc::format!(
            "direction has dimension {}, the system is driven by {}",
            h.dim(),
            sys.drive_dim()
        )));
    }
    if h.grid().nodes() != path.grid().nodes() {
        return Err(Error::invalid("direction and path use different grids"));
    }
    let m = sys.manifold();
    let u: Vec<[f64; N]> = (0..path.grid().intervals())
        .map(|i| path.frame(i).coords(m, &sys.diffusion(path.point(i), h.hdot(i))))
        .collect();
    damped_inverse_coords(m, path, &u)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{dist, dot};
    use crate::manifold::{Circle, Sphere};
    use crate::rng::SeedStream;
    use crate::sde::{ito_map, CircleSystem, GradientSystem, IntegratorConfig};
    use crate::wiener::{sample_brownian, TimeGrid};

    fn sphere_path(n: usize, seed: u64) -> Arc<SolutionPath<3, 2>> {
        let sys = GradientSystem::new(Sphere);
        let g = Arc::new(TimeGrid::uniform(1.0, n).unwrap());
        let w = sample_brownian(&g, 3, &mut SeedStream::new(seed).path(0)).unwrap();
        Arc::new(ito_map(&sys, &w, &Sphere.base_point(), &IntegratorConfig::default()).unwrap())
    }

    #[test]
    fn parallel_field_is_isometric_and_zero_at_start() {
        let p = sphere_path(64, 1);
        let h = CameronMartinPath::from_fn(p.grid().clone(), 2, |t, _, o| {
            o[0] = libm::cos(3.0 * t);
            o[1] = 1.0 - t;
        })
        .unwrap();
        let v = parallel_h_field(&p, &h).unwrap();
        for k in 0..p.nodes() {
            let hk = h.value(k);
            let hn = libm::sqrt(hk[0] * hk[0] + hk[1] * hk[1]);
            assert!((Sphere.norm(&v.vector(k)) - hn).abs() < 1e-10);
        }
        assert_eq!(v.vector(0), [0.0; 3]);
        assert!(v.membership_defect(&Sphere) < 1e-12);
        let z = parallel_h_field(&p, &CameronMartinPath::zero(p.grid().clone(), 2).unwrap()).unwrap();
        assert!(z.vectors().iter().all(|v| *v == [0.0; 3]));
    }

    #[test]
    fn circle_parallel_field_is_angle_shift() {
        let sys = CircleSystem::new();
        let g = Arc::new(TimeGrid::uniform(1.0, 32).unwrap());
        let w = sample_brownian(&g, 1, &mut SeedStream::new(2).path(0)).unwrap();
        let p = Arc::new(ito_map(&sys, &w, &Circle.base_point(), &IntegratorConfig::default()).unwrap());
        let h = CameronMartinPath::from_fn(g.clone(), 1, |t, _, o| o[0] = t * t).unwrap();
        let v = parallel_h_field(&p, &h).unwrap();
        let eps = 1e-6;
        for k in 0..p.nodes() {
            let x = p.point(k);
            let th = Circle::angle(x);
            let shifted = Circle::point(th + eps * h.value(k)[0]);
            let back = Circle::point(th - eps * h.value(k)[0]);
            let fd: [f64; 2] = core::array::from_fn(|a| (shifted[a] - back[a]) / (2.0 * eps));
            assert!(dist(&fd, &v.vector(k)) < 1e-9, "node {k}");
        }
    }

    #[test]
    fn damped_derivative_on_sphere_and_circle() {
        let p = sphere_path(128, 3);
        let c = [0.7, -0.2];
        let h = CameronMartinPath::constant(p.grid().clone(), &c).unwrap();
        let v = parallel_h_field(&p, &h).unwrap();
        let d = damped_derivative(&Sphere, &v).unwrap();
        for (i, di) in d.iter().enumerate() {
            let t_mid = 0.5 * (p.grid().node(i) + p.grid().node(i + 1));
            for a in 0..2 {
                assert!((di[a] - (c[a] + 0.5 * c[a] * t_mid)).abs() < 1e-10);
            }
        }
        // linearity
        let h2 = CameronMartinPath::from_fn(p.grid().clone(), 2, |t, _, o| {
            o[0] = libm::sin(5.0 * t);
            o[1] = t;
        })
        .unwrap();
        let v2 = parallel_h_field(&p, &h2).unwrap();
        let comb = parallel_h_field(&p, &h.combine(2.0, &h2, -3.0).unwrap()).unwrap();
        let d2 = damped_derivative(&Sphere, &v2).unwrap();
        let dc = damped_derivative(&Sphere, &comb).unwrap();
        for i in 0..d.len() {
            for a in 0..2 {
                let lin = 2.0 * d[i][a] - 3.0 * d2[i][a];
                assert!((dc[i][a] - lin).abs() < 1e-12 * (1.0 + lin.abs()));
            }
        }
    }

    #[test]
    fn circle_inverse_is_plain_integration() {
        let sys = CircleSystem::new();
        let g = Arc::new(TimeGrid::uniform(1.0, 50).unwrap());
        let w = sample_brownian(&g, 1, &mut SeedStream::new(4).path(0)).unwrap();
        let p = Arc::new(ito_map(&sys, &w, &Circle.base_point(), &IntegratorConfig::default()).unwrap());
        let u: Vec<[f64; 2]> = (0..50)
            .map(|i| crate::linalg::scale(libm::cos(i as f64), &Circle::unit_tangent(p.point(i))))
            .collect();
        let v = damped_inverse(&Circle, &p, &u).unwrap();
        let mut acc = 0.0;
        for k in 1..=50 {
            acc += libm::cos((k - 1) as f64) * g.dt(k - 1);
            assert!((v.coords(k)[0] - acc).abs() < 1e-10);
        }
        // T̄I on the circle system has representing path h itself
        let h = CameronMartinPath::from_fn(g.clone(), 1, |t, _, o| o[0] = libm::exp(t)).unwrap();
        let tb = tbar_ito(&sys, &p, &h).unwrap();
        for k in 0..=50 {
            assert!((tb.coords(k)[0] - h.value(k)[0]).abs() < 1e-12);
        }
    }

    #[test]
    fn tbar_inverts_to_diffusion_of_hdot() {
        let sys = GradientSystem::new(Sphere);
        let p = sphere_path(256, 5);
        let h = CameronMartinPath::from_fn(p.grid().clone(), 3, |t, _, o| {
            o[0] = 1.0;
            o[1] = t;
            o[2] = -0.5;
        })
        .unwrap();
        let tb = tbar_ito(&sys, &p, &h).unwrap();
        assert!(tb.membership_defect(&Sphere) < 1e-12);
        let d = damped_derivative(&Sphere, &tb).unwrap();
        for (i, di) in d.iter().enumerate() {
            let u = sys.diffusion(p.point(i), h.hdot(i));
            let c = p.frame(i).coords(&Sphere, &u);
            assert!((di[0] - c[0]).abs() < 1e-10 && (di[1] - c[1]).abs() < 1e-10);
        }
        let z = tbar_ito(&sys, &p, &CameronMartinPath::zero(p.grid().clone(), 3).unwrap()).unwrap();
        assert_eq!(z.norm_sq(), 0.0);
        assert!(tbar_ito(&sys, &p, &CameronMartinPath::zero(p.grid().clone(), 2).unwrap()).is_err());
    }

    #[test]
    fn non_tangent_input_rejected() {
        let p = sphere_path(8, 6);
        let u: Vec<[f64; 3]> = (0..8).map(|i| *p.point(i)).collect();
        assert!(matches!(damped_inverse(&Sphere, &p, &u), Err(Error::Domain(_))));
        let _ = dot(&u[0], &u[0]);
    }
}
