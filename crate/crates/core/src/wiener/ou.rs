use super::fd_step;
use alloc::vec::Vec;

/// A smooth function on `R^n` with gradient and Hessian oracles.
pub trait SmoothFunction {
    fn dim(&self) -> usize;
    fn value(&self, x: &[f64]) -> f64;
    fn gradient(&self, x: &[f64], out: &mut [f64]);
    /// Row-major `n × n` Hessian.
    fn hessian(&self, x: &[f64], out: &mut [f64]);

    /// Largest relative mismatch of the oracles against central differences.
    fn oracle_discrepancy(&self, x: &[f64]) -> f64 {
        let n = self.dim();
        let mut g = alloc::vec![0.0; n];
        let mut hs = alloc::vec![0.0; n * n];
        self.gradient(x, &mut g);
        self.hessian(x, &mut hs);
        let mut y: Vec<f64> = x.to_vec();
        let mut worst: f64 = 0.0;
        let mut gp = alloc::vec![0.0; n];
        let mut gm = alloc::vec![0.0; n];
        for j in 0..n {
            let h = fd_step(x[j]);
            y[j] = x[j] + h;
            let fp = self.value(&y);
            self.gradient(&y, &mut gp);
            y[j] = x[j] - h;
            let fm = self.value(&y);
            self.gradient(&y, &mut gm);
            y[j] = x[j];
            let d = (fp - fm) / (2.0 * h);
            worst = worst.max((d - g[j]).abs() / (1.0 + g[j].abs()));
            for i in 0..n {
                let d2 = (gp[i] - gm[i]) / (2.0 * h);
                worst = worst.max((d2 - hs[i * n + j]).abs() / (1.0 + hs[i * n + j].abs()));
            }
        }
        worst
    }
}

/// Ornstein–Uhlenbeck operator on `R^n`: `△f(x) − ⟨x, ∇f(x)⟩`.
pub fn ou_apply<F: SmoothFunction + ?Sized>(f: &F, x: &[f64]) -> f64 {
    let n = f.dim();
    let mut g = alloc::vec![0.0; n];
    let mut h = alloc::vec![0.0; n * n];
    f.gradient(x, &mut g);
    f.hessian(x, &mut h);
    let lap: f64 = (0..n).map(|i| h[i * n + i]).sum();
    let radial: f64 = x.iter().zip(&g).map(|(a, b)| a * b).sum();
    lap - radial
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    struct Linear(Vec<f64>);
    impl SmoothFunction for Linear {
        fn dim(&self) -> usize {
            self.0.len()
        }
        fn value(&self, x: &[f64]) -> f64 {
            self.0.iter().zip(x).map(|(a, b)| a * b).sum()
        }
        fn gradient(&self, _: &[f64], out: &mut [f64]) {
            out.copy_from_slice(&self.0);
        }
        fn hessian(&self, _: &[f64], out: &mut [f64]) {
            out.fill(0.0);
        }
    }

    struct Hermite2;
    impl SmoothFunction for Hermite2 {
        fn dim(&self) -> usize {
            3
        }
        fn value(&self, x: &[f64]) -> f64 {
            x[0] * x[0] - 1.0
        }
        fn gradient(&self, x: &[f64], out: &mut [f64]) {
            out.fill(0.0);
            out[0] = 2.0 * x[0];
        }
        fn hessian(&self, _: &[f64], out: &mut [f64]) {
            out.fill(0.0);
            out[0] = 2.0;
        }
    }

    struct Constant;
    impl SmoothFunction for Constant {
        fn dim(&self) -> usize {
            2
        }
        fn value(&self, _: &[f64]) -> f64 {
            4.0
        }
        fn gradient(&self, _: &[f64], out: &mut [f64]) {
            out.fill(0.0);
        }
        fn hessian(&self, _: &[f64], out: &mut [f64]) {
            out.fill(0.0);
        }
    }

    #[test]
    fn eigenfunctions() {
        let x = [0.3, -1.1, 2.0];
        let f = Linear(vec![1.0, 0.5, -2.0]);
        assert!((ou_apply(&f, &x) + f.value(&x)).abs() < 1e-12);
        assert!((ou_apply(&Hermite2, &x) + 2.0 * Hermite2.value(&x)).abs() < 1e-12);
        assert_eq!(ou_apply(&Constant, &[1.0, 2.0]), 0.0);
        assert!(Hermite2.oracle_discrepancy(&x) < 1e-6);
    }
}
