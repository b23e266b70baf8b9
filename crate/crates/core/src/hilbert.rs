//! Truncated two-mode Fock space.
//!
//! Operators are dense complex matrices tagged with their mode cutoffs. The
//! joint space is always ordered `a (x) b`, so the basis index of `|i, j>` is
//! `i * n_b + j`.

use std::ops::{Add, Mul, Sub};

use faer::Mat;

use crate::error::{Error, Result};
use crate::C64;

/// Hermiticity tolerance of a valid density matrix (relative to its norm).
pub const HERMITIAN_TOL: f64 = 1e-10;
pub const TRACE_TOL: f64 = 1e-10;
/// Most negative eigenvalue tolerated from Fock-space truncation.
pub const EIGEN_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct Operator {
    /// Cutoffs of the constituent modes, outermost first.
    pub dims: Vec<usize>,
    pub data: Mat<C64>,
}

fn side(dims: &[usize]) -> usize {
    dims.iter().product()
}

impl Operator {
    pub fn new(dims: Vec<usize>, data: Mat<C64>) -> Result<Self> {
        let n = side(&dims);
        if data.nrows() != n || data.ncols() != n {
            return Err(Error::DimensionMismatch(format!(
                "operator of shape {}x{} does not match dims {dims:?}",
                data.nrows(),
                data.ncols()
            )));
        }
        Ok(Self { dims, data })
    }

    pub fn identity(dims: Vec<usize>) -> Self {
        let n = side(&dims);
        Self { dims, data: Mat::identity(n, n) }
    }

    pub fn zeros(dims: Vec<usize>) -> Self {
        let n = side(&dims);
        Self { dims, data: Mat::zeros(n, n) }
    }

    pub fn dim(&self) -> usize {
        self.data.nrows()
    }

    pub fn dagger(&self) -> Self {
        Self { dims: self.dims.clone(), data: self.data.adjoint().to_owned() }
    }

    pub fn scale(&self, c: C64) -> Self {
        Self { dims: self.dims.clone(), data: Mat::from_fn(self.dim(), self.dim(), |i, j| self.data[(i, j)] * c) }
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.data[(i, j)]
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> f64 {
        let n = self.dim();
        let mut m = 0.0f64;
        for j in 0..n {
            for i in 0..n {
                m = m.max(self.data[(i, j)].norm());
            }
        }
        m
    }

    fn check_same(&self, other: &Self, what: &str) -> Result<()> {
        if self.dims != other.dims {
            return Err(Error::DimensionMismatch(format!("{what}: {:?} vs {:?}", self.dims, other.dims)));
        }
        Ok(())
    }

    pub fn try_mul(&self, other: &Self) -> Result<Self> {
        self.check_same(other, "product")?;
        Ok(Self { dims: self.dims.clone(), data: &self.data * &other.data })
    }

    pub fn try_add(&self, other: &Self) -> Result<Self> {
        self.check_same(other, "sum")?;
        Ok(Self { dims: self.dims.clone(), data: &self.data + &other.data })
    }

    pub fn try_sub(&self, other: &Self) -> Result<Self> {
        self.check_same(other, "difference")?;
        Ok(Self { dims: self.dims.clone(), data: &self.data - &other.data })
    }

    /// `self * other - other * self`.
    pub fn commutator(&self, other: &Self) -> Result<Self> {
        self.try_mul(other)?.try_sub(&other.try_mul(self)?)
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        let n = self.dim();
        let scale = self.max_abs().max(1.0);
        (0..n).all(|j| (0..n).all(|i| (self.data[(i, j)] - self.data[(j, i)].conj()).norm() <= tol * scale))
    }

    pub fn trace(&self) -> C64 {
        (0..self.dim()).map(|i| self.data[(i, i)]).sum()
    }
}

macro_rules! binop {
    ($trait:ident, $method:ident, $inner:ident) => {
        impl $trait<&Operator> for &Operator {
            type Output = Operator;
            /// Panics on mismatched dims; use the `try_` variant to get an error.
            fn $method(self, rhs: &Operator) -> Operator {
                self.$inner(rhs).expect("operator dimensions must match")
            }
        }
    };
}
binop!(Mul, mul, try_mul);
binop!(Add, add, try_add);
binop!(Sub, sub, try_sub);

impl Mul<C64> for &Operator {
    type Output = Operator;
    fn mul(self, rhs: C64) -> Operator {
        self.scale(rhs)
    }
}

impl Mul<f64> for &Operator {
    type Output = Operator;
    fn mul(self, rhs: f64) -> Operator {
        self.scale(C64::new(rhs, 0.0))
    }
}

/// Single-mode annihilation operator, `a |n> = sqrt(n) |n-1>`.
pub fn annihilation(cutoff: usize) -> Result<Operator> {
    if cutoff < 2 {
        return Err(Error::invalid(format!("Fock cutoff must be at least 2, got {cutoff}")));
    }
    let data = Mat::from_fn(cutoff, cutoff, |i, j| {
        if j == i + 1 {
            C64::new((j as f64).sqrt(), 0.0)
        } else {
            C64::new(0.0, 0.0)
        }
    });
    Ok(Operator { dims: vec![cutoff], data })
}

/// Single-mode number operator.
pub fn number(cutoff: usize) -> Result<Operator> {
    let a = annihilation(cutoff)?;
    Ok(&a.dagger() * &a)
}

pub fn tensor(a: &Operator, b: &Operator) -> Operator {
    let mut dims = a.dims.clone();
    dims.extend_from_slice(&b.dims);
    Operator { dims, data: a.data.kron(&b.data) }
}

pub fn dagger(a: &Operator) -> Operator {
    a.dagger()
}

/// `Tr(A rho)`.
pub fn expectation(a: &Operator, rho: &DensityMatrix) -> Result<C64> {
    if a.dims != rho.dims {
        return Err(Error::DimensionMismatch(format!("expectation: {:?} vs {:?}", a.dims, rho.dims)));
    }
    Ok(trace_product(&a.data, &rho.data))
}

/// `Tr(A B)` without forming the product.
pub fn trace_product(a: &Mat<C64>, b: &Mat<C64>) -> C64 {
    let n = a.nrows();
    let mut acc = C64::new(0.0, 0.0);
    for i in 0..n {
        for k in 0..n {
            acc += a[(i, k)] * b[(k, i)];
        }
    }
    acc
}

/// Mode operators `(a, b)` on the joint space `a (x) b`.
#[derive(Debug, Clone)]
pub struct TwoMode {
    pub a: Operator,
    pub b: Operator,
    pub identity: Operator,
}

impl TwoMode {
    pub fn new(n_a: usize, n_b: usize) -> Result<Self> {
        let a1 = annihilation(n_a)?;
        let b1 = annihilation(n_b)?;
        let ia = Operator::identity(vec![n_a]);
        let ib = Operator::identity(vec![n_b]);
        Ok(Self { a: tensor(&a1, &ib), b: tensor(&ia, &b1), identity: Operator::identity(vec![n_a, n_b]) })
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.a.dims[0], self.a.dims[1])
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    pub dims: Vec<usize>,
    pub data: Mat<C64>,
}

impl DensityMatrix {
    /// Validate Hermiticity, unit trace and positivity.
    pub fn new(dims: Vec<usize>, data: Mat<C64>) -> Result<Self> {
        let op = Operator::new(dims, data)?;
        if !op.is_hermitian(HERMITIAN_TOL) {
            return Err(Error::NonPhysical("density matrix is not Hermitian".into()));
        }
        let tr = op.trace();
        if (tr - 1.0).norm() > TRACE_TOL {
            return Err(Error::NonPhysical(format!("density matrix trace is {tr}")));
        }
        let rho = Self { dims: op.dims, data: op.data };
        let min = rho.min_eigenvalue()?;
        if min < -EIGEN_TOL {
            return Err(Error::NonPhysical(format!("density matrix has eigenvalue {min:e}")));
        }
        Ok(rho)
    }

    /// Wrap without validation; for intermediate results that are checked later.
    pub fn new_unchecked(dims: Vec<usize>, data: Mat<C64>) -> Self {
        Self { dims, data }
    }

    pub fn dim(&self) -> usize {
        self.data.nrows()
    }

    pub fn as_operator(&self) -> Operator {
        Operator { dims: self.dims.clone(), data: self.data.clone() }
    }

    pub fn trace(&self) -> C64 {
        (0..self.dim()).map(|i| self.data[(i, i)]).sum()
    }

    /// Pure Fock vacuum.
    pub fn vacuum(dims: Vec<usize>) -> Self {
        let n = side(&dims);
        let mut data = Mat::zeros(n, n);
        data[(0, 0)] = C64::new(1.0, 0.0);
        Self { dims, data }
    }

    /// Product of single-mode thermal states, renormalized after truncation.
    pub fn thermal(dims: Vec<usize>, occupations: &[f64]) -> Result<Self> {
        if occupations.len() != dims.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} occupations for {} modes",
                occupations.len(),
                dims.len()
            )));
        }
        let mut diag = vec![1.0];
        for (&cut, &n) in dims.iter().zip(occupations) {
            if !(n >= 0.0) {
                return Err(Error::invalid(format!("negative occupation {n}")));
            }
            let q = n / (1.0 + n);
            let mode: Vec<f64> = (0..cut).map(|k| q.powi(k as i32)).collect();
            let z: f64 = mode.iter().sum();
            diag = diag.iter().flat_map(|&d| mode.iter().map(move |&m| d * m / z)).collect();
        }
        let n = diag.len();
        let data = Mat::from_fn(n, n, |i, j| if i == j { C64::new(diag[i], 0.0) } else { C64::new(0.0, 0.0) });
        Ok(Self { dims, data })
    }

    /// Enforce exact Hermiticity: `(rho + rho^dag) / 2`.
    pub fn hermitize(&mut self) {
        let n = self.dim();
        let h = Mat::from_fn(n, n, |i, j| 0.5 * (self.data[(i, j)] + self.data[(j, i)].conj()));
        self.data = h;
    }

    pub fn hermiticity_error(&self) -> f64 {
        let n = self.dim();
        let mut m = 0.0f64;
        for j in 0..n {
            for i in 0..n {
                m = m.max((self.data[(i, j)] - self.data[(j, i)].conj()).norm());
            }
        }
        m
    }

    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        let mut h = self.clone();
        h.hermitize();
        let eig = h
            .data
            .self_adjoint_eigenvalues(faer::Side::Lower)
            .map_err(|e| Error::LinearAlgebra(format!("Hermitian eigensolver failed: {e:?}")))?;
        Ok(eig)
    }

    pub fn min_eigenvalue(&self) -> Result<f64> {
        Ok(self.eigenvalues()?.into_iter().fold(f64::INFINITY, f64::min))
    }

    /// Fidelity with a pure reference state given by its ket.
    pub fn overlap_with_pure(&self, ket: &[C64]) -> C64 {
        let n = self.dim();
        let mut acc = C64::new(0.0, 0.0);
        for i in 0..n {
            for j in 0..n {
                acc += ket[i].conj() * self.data[(i, j)] * ket[j];
            }
        }
        acc
    }
}
