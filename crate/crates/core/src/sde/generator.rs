use super::integrator::MAX_DRIVE;
use super::system::SdeSystem;
use crate::error::{Error, Result};
use crate::linalg::dot;
use crate::manifold::{laplacian_fd, EmbeddedManifold};
use crate::rng::PathStream;
use crate::wiener::SmoothFunction;
use alloc::vec::Vec;

/// Largest tolerated mismatch between `f`'s oracles and central differences.
pub const ORACLE_TOL: f64 = 1e-6;

/// `(½ Σ_j L_{X^j} L_{X^j} + L_A) f` at `x`, from `f`'s ambient gradient and
/// Hessian oracles.
pub fn generator_apply<const A: usize, const N: usize, S, F>(sys: &S, f: &F, x: &[f64; A]) -> Result<f64>
where
    S: SdeSystem<A, N> + ?Sized,
    F: SmoothFunction + ?Sized,
{
    if f.dim() != A {
        return Err(Error::invalid("function is defined on the wrong ambient space"));
    }
    sys.manifold().check_point(x)?;
    let bad = f.oracle_discrepancy(x);
    if !(bad <= ORACLE_TOL) {
        return Err(Error::accuracy("function oracles disagree with finite differences", bad));
    }
    Ok(generator_unchecked(sys, f, x))
}

fn generator_unchecked<const A: usize, const N: usize, S, F>(sys: &S, f: &F, x: &[f64; A]) -> f64
where
    S: SdeSystem<A, N> + ?Sized,
    F: SmoothFunction + ?Sized,
{
    let mut g = [0.0; A];
    f.gradient(x, &mut g);
    let mut hess = alloc::vec![0.0; A * A];
    f.hessian(x, &mut hess);
    let md = sys.drive_dim();
    let mut total = 0.0;
    for j in 0..md {
        let mut e = [0.0; MAX_DRIVE];
        e[j] = 1.0;
        let xj = sys.diffusion(x, &e[..md]);
        let dxj = sys.diffusion_derivative(x, &xj, &e[..md]);
        let mut quad = 0.0;
        for a in 0..A {
            for b in 0..A {
                quad += xj[a] * hess[a * A + b] * xj[b];
            }
        }
        total += 0.5 * (quad + dot(&g, &dxj));
    }
    total + dot(&g, &sys.drift(x))
}

/// An affine-plus-quadratic probe `f(x) = ⟨c, x⟩ + ⟨x, Q x⟩` on `R^A`.
#[derive(Debug, Clone)]
pub struct QuadraticProbe {
    linear: Vec<f64>,
    quadratic: Vec<f64>,
}

impl QuadraticProbe {
    pub fn new(linear: Vec<f64>, quadratic: Vec<f64>) -> Result<Self> {
        let n = linear.len();
        if quadratic.len() != n * n {
            return Err(Error::invalid("quadratic part must be n × n"));
        }
        Ok(Self { linear, quadratic })
    }

    /// `f(x) = x_index`.
    pub fn coordinate(dim: usize, index: usize) -> Self {
        let mut linear = alloc::vec![0.0; dim];
        linear[index] = 1.0;
        Self {
            linear,
            quadratic: alloc::vec![0.0; dim * dim],
        }
    }

    pub fn random(dim: usize, stream: &mut PathStream) -> Self {
        Self {
            linear: (0..dim).map(|_| stream.normal()).collect(),
            quadratic: (0..dim * dim).map(|_| stream.normal()).collect(),
        }
    }
}

impl SmoothFunction for QuadraticProbe {
    fn dim(&self) -> usize {
        self.linear.len()
    }

    fn value(&self, x: &[f64]) -> f64 {
        let n = self.dim();
        let mut s: f64 = self.linear.iter().zip(x).map(|(c, v)| c * v).sum();
        for a in 0..n {
            for b in 0..n {
                s += x[a] * self.quadratic[a * n + b] * x[b];
            }
        }
        s
    }

    fn gradient(&self, x: &[f64], out: &mut [f64]) {
        let n = self.dim();
        for a in 0..n {
            out[a] = self.linear[a] + (0..n).map(|b| (self.quadratic[a * n + b] + self.quadratic[b * n + a]) * x[b]).sum::<f64>();
        }
    }

    fn hessian(&self, _x: &[f64], out: &mut [f64]) {
        let n = self.dim();
        for a in 0..n {
            for b in 0..n {
                out[a * n + b] = self.quadratic[a * n + b] + self.quadratic[b * n + a];
            }
        }
    }
}

/// Largest `|generator f − ½△f|` over random quadratic probes at uniform
/// random points; `△` is the finite-difference Laplace–Beltrami operator.
pub fn brownian_defect<const A: usize, const N: usize, S: SdeSystem<A, N> + ?Sized>(
    sys: &S,
    probes: usize,
    stream: &mut PathStream,
) -> Result<f64> {
    let m = sys.manifold();
    let mut worst: f64 = 0.0;
    for _ in 0..probes {
        let x = m.sample_uniform(stream);
        let f = QuadraticProbe::random(A, stream);
        let lhs = generator_apply(sys, &f, &x)?;
        let rhs = 0.5 * laplacian_fd(m, |y: &[f64; A]| f.value(y), &x);
        worst = worst.max((lhs - rhs).abs() / (1.0 + rhs.abs()));
    }
    Ok(worst)
}

/// Requires the generator to be `½△` on probes to `1e−5` relative.
pub fn validate_brownian<const A: usize, const N: usize, S: SdeSystem<A, N> + ?Sized>(
    sys: &S,
    probes: usize,
    stream: &mut PathStream,
) -> Result<f64> {
    let d = brownian_defect(sys, probes, stream)?;
    if d <= 1e-5 {
        Ok(d)
    } else {
        Err(Error::Degenerate(alloc::format!(
            "system '{}' is not a Brownian system (generator defect {d:.3e})",
            sys.name()
        )))
    }
}
