//! Small fixed-size vector and 3×3 matrix helpers.
//!
//! Matrices are stored row-major in `[f64; 9]`, which is also the ambient
//! coordinate layout of the rotation group.

use crate::math::sqrt;

pub type Vector<const A: usize> = [f64; A];
pub type Mat3 = [f64; 9];

#[inline]
pub fn dot<const A: usize>(u: &[f64; A], v: &[f64; A]) -> f64 {
    let mut s = 0.0;
    for i in 0..A {
        s += u[i] * v[i];
    }
    s
}

#[inline]
pub fn norm<const A: usize>(u: &[f64; A]) -> f64 {
    sqrt(dot(u, u))
}

#[inline]
pub fn add<const A: usize>(u: &[f64; A], v: &[f64; A]) -> [f64; A] {
    core::array::from_fn(|i| u[i] + v[i])
}

#[inline]
pub fn sub<const A: usize>(u: &[f64; A], v: &[f64; A]) -> [f64; A] {
    core::array::from_fn(|i| u[i] - v[i])
}

#[inline]
pub fn scale<const A: usize>(a: f64, u: &[f64; A]) -> [f64; A] {
    core::array::from_fn(|i| a * u[i])
}

/// `a·u + v`
#[inline]
pub fn axpy<const A: usize>(a: f64, u: &[f64; A], v: &[f64; A]) -> [f64; A] {
    core::array::from_fn(|i| a * u[i] + v[i])
}

#[inline]
pub fn lin2<const A: usize>(a: f64, u: &[f64; A], b: f64, v: &[f64; A]) -> [f64; A] {
    core::array::from_fn(|i| a * u[i] + b * v[i])
}

#[inline]
pub fn dist<const A: usize>(u: &[f64; A], v: &[f64; A]) -> f64 {
    norm(&sub(u, v))
}

#[inline]
pub fn max_abs<const A: usize>(u: &[f64; A]) -> f64 {
    u.iter().fold(0.0, |m, x| if x.abs() > m { x.abs() } else { m })
}

pub fn cross(a: &[f64; 3], b: &[f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

pub const IDENTITY3: Mat3 = [1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0];

pub fn mat_mul(a: &Mat3, b: &Mat3) -> Mat3 {
    let mut c = [0.0; 9];
    for i in 0..3 {
        for j in 0..3 {
            let mut s = 0.0;
            for k in 0..3 {
                s += a[3 * i + k] * b[3 * k + j];
            }
            c[3 * i + j] = s;
        }
    }
    c
}

pub fn transpose(a: &Mat3) -> Mat3 {
    [a[0], a[3], a[6], a[1], a[4], a[7], a[2], a[5], a[8]]
}

/// `aᵀ b` without forming the transpose.
pub fn mat_tmul(a: &Mat3, b: &Mat3) -> Mat3 {
    let mut c = [0.0; 9];
    for i in 0..3 {
        for j in 0..3 {
            let mut s = 0.0;
            for k in 0..3 {
                s += a[3 * k + i] * b[3 * k + j];
            }
            c[3 * i + j] = s;
        }
    }
    c
}

pub fn mat_vec(a: &Mat3, v: &[f64; 3]) -> [f64; 3] {
    [
        a[0] * v[0] + a[1] * v[1] + a[2] * v[2],
        a[3] * v[0] + a[4] * v[1] + a[5] * v[2],
        a[6] * v[0] + a[7] * v[1] + a[8] * v[2],
    ]
}

pub fn trace(a: &Mat3) -> f64 {
    a[0] + a[4] + a[8]
}

pub fn det(a: &Mat3) -> f64 {
    a[0] * (a[4] * a[8] - a[5] * a[7]) - a[1] * (a[3] * a[8] - a[5] * a[6])
        + a[2] * (a[3] * a[7] - a[4] * a[6])
}

/// Skew-symmetric matrix `[w]×` with `[w]× v = w × v`.
pub fn hat(w: &[f64; 3]) -> Mat3 {
    [0.0, -w[2], w[1], w[2], 0.0, -w[0], -w[1], w[0], 0.0]
}

/// Inverse of [`hat`] applied to the skew part of `a`.
pub fn vee(a: &Mat3) -> [f64; 3] {
    [
        0.5 * (a[7] - a[5]),
        0.5 * (a[2] - a[6]),
        0.5 * (a[3] - a[1]),
    ]
}

pub fn skew(a: &Mat3) -> Mat3 {
    let t = transpose(a);
    core::array::from_fn(|i| 0.5 * (a[i] - t[i]))
}

/// Solve `m x = b` for a small dense system (Gaussian elimination with
/// partial pivoting). Returns `None` for a numerically singular matrix.
pub fn solve<const N: usize>(m: &[[f64; N]; N], b: &[f64; N]) -> Option<[f64; N]> {
    let mut a = *m;
    let mut x = *b;
    for col in 0..N {
        let mut piv = col;
        for r in col + 1..N {
            if a[r][col].abs() > a[piv][col].abs() {
                piv = r;
            }
        }
        if a[piv][col].abs() < 1e-300 {
            return None;
        }
        a.swap(col, piv);
        x.swap(col, piv);
        for r in col + 1..N {
            let f = a[r][col] / a[col][col];
            for c in col..N {
                a[r][c] -= f * a[col][c];
            }
            x[r] -= f * x[col];
        }
    }
    for col in (0..N).rev() {
        let mut s = x[col];
        for c in col + 1..N {
            s -= a[col][c] * x[c];
        }
        x[col] = s / a[col][col];
    }
    Some(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hat_vee_roundtrip() {
        let w = [0.3, -1.2, 2.5];
        assert_eq!(vee(&hat(&w)), w);
        let v = [1.0, 2.0, -0.5];
        let a = mat_vec(&hat(&w), &v);
        let b = cross(&w, &v);
        for i in 0..3 {
            assert!((a[i] - b[i]).abs() < 1e-15);
        }
    }

    #[test]
    fn solve_small_system() {
        let m = [[2.0, 1.0, 0.0], [1.0, 3.0, 1.0], [0.0, 1.0, 4.0]];
        let x = [1.0, -2.0, 0.5];
        let b: [f64; 3] = core::array::from_fn(|i| (0..3).map(|j| m[i][j] * x[j]).sum());
        let y = solve(&m, &b).unwrap();
        for i in 0..3 {
            assert!((x[i] - y[i]).abs() < 1e-14);
        }
        assert!(solve(&[[1.0, 2.0], [2.0, 4.0]], &[1.0, 1.0]).is_none());
    }

    #[test]
    fn tmul_matches_transpose_product() {
        let a = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0, 10.0];
        let b = [0.5, -1.0, 2.0, 0.0, 1.0, 1.0, 3.0, -2.0, 0.25];
        assert_eq!(mat_tmul(&a, &b), mat_mul(&transpose(&a), &b));
        assert!((det(&a) - (-3.0)).abs() < 1e-12);
    }
}
