//! Dense matrix exponential by scaling and squaring with a degree-13 Pade
//! approximant.

use faer::linalg::solvers::Solve;
use faer::Mat;

use crate::error::{Error, Result};
use crate::C64;

const PADE13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];
const THETA13: f64 = 5.371920351148152;

fn norm1(a: &Mat<C64>) -> f64 {
    (0..a.ncols()).map(|j| (0..a.nrows()).map(|i| a[(i, j)].norm()).sum::<f64>()).fold(0.0, f64::max)
}

fn axpy(terms: &[(f64, &Mat<C64>)], n: usize) -> Mat<C64> {
    Mat::from_fn(n, n, |i, j| terms.iter().map(|(c, m)| *c * m[(i, j)]).sum())
}

pub fn expm(a: &Mat<C64>) -> Result<Mat<C64>> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(Error::DimensionMismatch("expm of a non-square matrix".into()));
    }
    let norm = norm1(a);
    if !norm.is_finite() {
        return Err(Error::LinearAlgebra("expm of a non-finite matrix".into()));
    }
    let s = if norm > THETA13 { (norm / THETA13).log2().ceil() as i32 } else { 0 };
    let f = 0.5f64.powi(s);
    let a = Mat::from_fn(n, n, |i, j| a[(i, j)] * f);
    let id = Mat::<C64>::identity(n, n);
    let a2 = &a * &a;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;
    let b = &PADE13;
    let u_inner = axpy(&[(b[13], &a6), (b[11], &a4), (b[9], &a2)], n);
    let u_tail = axpy(&[(b[7], &a6), (b[5], &a4), (b[3], &a2), (b[1], &id)], n);
    let u = &a * &(&(&a6 * &u_inner) + &u_tail);
    let v_inner = axpy(&[(b[12], &a6), (b[10], &a4), (b[8], &a2)], n);
    let v_tail = axpy(&[(b[6], &a6), (b[4], &a4), (b[2], &a2), (b[0], &id)], n);
    let v = &(&a6 * &v_inner) + &v_tail;
    let p = &v + &u;
    let q = &v - &u;
    let mut r = q.partial_piv_lu().solve(&p);
    for _ in 0..s {
        r = &r * &r;
    }
    if (0..n).any(|j| (0..n).any(|i| !r[(i, j)].re.is_finite() || !r[(i, j)].im.is_finite())) {
        return Err(Error::LinearAlgebra("expm produced non-finite entries".into()));
    }
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diagonal_and_nilpotent() {
        let d = Mat::from_fn(3, 3, |i, j| if i == j { C64::new(i as f64 - 1.5, 0.3 * i as f64) } else { C64::new(0.0, 0.0) });
        let e = expm(&d).unwrap();
        for i in 0..3 {
            assert!((e[(i, i)] - d[(i, i)].exp()).norm() < 1e-14 * d[(i, i)].exp().norm().max(1.0));
        }
        // exp([[0, x], [0, 0]]) = [[1, x], [0, 1]]
        let mut n = Mat::<C64>::zeros(2, 2);
        n[(0, 1)] = C64::new(50.0, -3.0);
        let e = expm(&n).unwrap();
        assert!((e[(0, 1)] - n[(0, 1)]).norm() < 1e-12 * 50.0);
        assert!((e[(0, 0)] - 1.0).norm() < 1e-13);
    }

    #[test]
    fn rotation_generator_large_norm() {
        // exp(t [[0, -1], [1, 0]]) is a rotation by t
        let t = 123.4;
        let g = Mat::from_fn(2, 2, |i, j| C64::new(if i == 1 && j == 0 { t } else if i == 0 && j == 1 { -t } else { 0.0 }, 0.0));
        let e = expm(&g).unwrap();
        assert!((e[(0, 0)].re - t.cos()).abs() < 1e-11);
        assert!((e[(1, 0)].re - t.sin()).abs() < 1e-11);
    }

    #[test]
    fn semigroup_property() {
        let a = Mat::from_fn(5, 5, |i, j| C64::new(((i * 7 + j * 3) % 5) as f64 - 2.0, ((i + 2 * j) % 3) as f64 * 0.5));
        let half = Mat::from_fn(5, 5, |i, j| a[(i, j)] * 0.5);
        let e = expm(&a).unwrap();
        let h = expm(&half).unwrap();
        assert!((&(&h * &h) - &e).norm_max() < 1e-12 * e.norm_max());
    }
}
