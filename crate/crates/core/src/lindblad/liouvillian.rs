//! Sparse Liouvillian in column-stacked vectorization.
//!
//! `vec(rho)[j * n + i] = rho[i, j]`, so `vec(A rho B) = (B^T (x) A) vec(rho)`.

use faer::sparse::{SparseColMat, Triplet};
use faer::Mat;

use super::params::SystemParams;
use crate::error::{Error, Result};
use crate::hilbert::{Operator, TwoMode};
use crate::C64;

/// Largest superoperator side accepted (Hilbert dimension 200).
pub const MAX_LIOUVILLE_DIM: usize = 40_000;

#[derive(Debug, Clone)]
pub struct Liouvillian {
    pub dims: (usize, usize),
    /// Mean-field shift `(alpha, beta)` applied to `(a, b)`, if any.
    pub displacement: Option<(C64, C64)>,
    n: usize,
    col_ptr: Vec<usize>,
    row_idx: Vec<usize>,
    values: Vec<C64>,
}

/// Mode operators shifted by the displacement, `a + alpha` and `b + beta`.
fn shifted_modes(modes: &TwoMode, displacement: Option<(C64, C64)>) -> (Operator, Operator) {
    match displacement {
        None => (modes.a.clone(), modes.b.clone()),
        Some((alpha, beta)) => (&modes.a + &(&modes.identity * alpha), &modes.b + &(&modes.identity * beta)),
    }
}

/// Pump-frame Hamiltonian, with `a -> a + alpha`, `b -> b + beta` substituted
/// when a displacement is given.
pub fn hamiltonian(p: &SystemParams, modes: &TwoMode, displacement: Option<(C64, C64)>) -> Operator {
    let (a, b) = shifted_modes(modes, displacement);
    let (ad, bd) = (a.dagger(), b.dagger());
    let mut h = &(&ad * &a) * (-p.delta_a);
    h = &h + &(&(&bd * &b) * (-p.delta_b));
    h = &h + &(&(&(&ad * &b) + &(&bd * &a)) * p.j);
    let bdbd = &bd * &bd;
    let bb = &b * &b;
    h = &h + &(&(&bdbd * &bb) * (-p.u));
    h = &h + &(&ad * p.eta_a);
    h = &h + &(&a * p.eta_a.conj());
    h = &h + &(&bd * p.eta_b);
    h = &h + &(&b * p.eta_b.conj());
    // constant terms from the substitution stay in H; they commute with rho
    h
}

/// Jump operators with their rates: each channel contributes
/// `rate (n+1) L[c]` and `rate n L[c^dag]`.
pub fn jump_operators(p: &SystemParams, modes: &TwoMode, displacement: Option<(C64, C64)>) -> Vec<(f64, Operator)> {
    let (a, b) = shifted_modes(modes, displacement);
    let mut out = Vec::new();
    for ch in p.channels() {
        let c = &(&a * ch.a_coef) + &(&b * ch.b_coef);
        out.push((ch.rate * (ch.n_th + 1.0), c.clone()));
        if ch.n_th > 0.0 {
            out.push((ch.rate * ch.n_th, c.dagger()));
        }
    }
    out
}

fn nonzeros(op: &Mat<C64>) -> Vec<(usize, usize, C64)> {
    let mut out = Vec::new();
    for j in 0..op.ncols() {
        for i in 0..op.nrows() {
            let v = op[(i, j)];
            if v != C64::new(0.0, 0.0) {
                out.push((i, j, v));
            }
        }
    }
    out
}

/// Triplets of `coef * A rho B`.
fn push_sandwich(out: &mut Vec<(usize, usize, C64)>, n: usize, coef: C64, a: &[(usize, usize, C64)], b: &[(usize, usize, C64)]) {
    for &(i, k, av) in a {
        for &(l, j, bv) in b {
            out.push((j * n + i, l * n + k, coef * av * bv));
        }
    }
}

fn identity_nz(n: usize) -> Vec<(usize, usize, C64)> {
    (0..n).map(|i| (i, i, C64::new(1.0, 0.0))).collect()
}

impl Liouvillian {
    /// Assemble `-i[H, .] + sum_k rate_k L[c_k]` from a Hamiltonian and jumps.
    pub fn from_parts(dims: (usize, usize), displacement: Option<(C64, C64)>, h: &Operator, jumps: &[(f64, Operator)]) -> Result<Self> {
        let n = h.dim();
        if n != dims.0 * dims.1 {
            return Err(Error::DimensionMismatch(format!("Hamiltonian side {n} vs dims {dims:?}")));
        }
        if n * n > MAX_LIOUVILLE_DIM {
            return Err(Error::DimensionOverflow { dim: n * n, limit: MAX_LIOUVILLE_DIM });
        }
        // effective non-Hermitian generator K = -iH - (1/2) sum rate c^dag c
        let mut k = Mat::from_fn(n, n, |i, j| C64::new(0.0, -1.0) * h.data[(i, j)]);
        for (rate, c) in jumps {
            let cdc = &c.dagger().data * &c.data;
            k = Mat::from_fn(n, n, |i, j| k[(i, j)] - 0.5 * rate * cdc[(i, j)]);
        }
        let one = C64::new(1.0, 0.0);
        let id = identity_nz(n);
        let k_nz = nonzeros(&k);
        let kd_nz = nonzeros(&k.adjoint().to_owned());
        let mut trip = Vec::new();
        push_sandwich(&mut trip, n, one, &k_nz, &id);
        push_sandwich(&mut trip, n, one, &id, &kd_nz);
        for (rate, c) in jumps {
            let c_nz = nonzeros(&c.data);
            let cd_nz = nonzeros(&c.dagger().data);
            push_sandwich(&mut trip, n, C64::new(*rate, 0.0), &c_nz, &cd_nz);
        }
        Ok(Self::from_triplets(dims, displacement, n, trip))
    }

    fn from_triplets(dims: (usize, usize), displacement: Option<(C64, C64)>, n: usize, mut trip: Vec<(usize, usize, C64)>) -> Self {
        trip.sort_unstable_by_key(|&(r, c, _)| (c, r));
        let size = n * n;
        let mut col_ptr = vec![0usize; size + 1];
        let mut row_idx = Vec::with_capacity(trip.len());
        let mut values: Vec<C64> = Vec::with_capacity(trip.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in trip {
            if last == Some((r, c)) {
                *values.last_mut().expect("merged entry") += v;
            } else {
                row_idx.push(r);
                values.push(v);
                col_ptr[c + 1] += 1;
                last = Some((r, c));
            }
        }
        for c in 0..size {
            col_ptr[c + 1] += col_ptr[c];
        }
        Self { dims, displacement, n, col_ptr, row_idx, values }
    }

    /// Hilbert-space dimension.
    pub fn hilbert_dim(&self) -> usize {
        self.n
    }

    /// Side of the superoperator matrix.
    pub fn size(&self) -> usize {
        self.n * self.n
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Entries as `(row, col, value)`.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, C64)> + '_ {
        (0..self.size()).flat_map(move |c| (self.col_ptr[c]..self.col_ptr[c + 1]).map(move |k| (self.row_idx[k], c, self.values[k])))
    }

    pub fn apply(&self, x: &[C64]) -> Vec<C64> {
        let mut y = vec![C64::new(0.0, 0.0); self.size()];
        for (c, &xc) in x.iter().enumerate() {
            if xc == C64::new(0.0, 0.0) {
                continue;
            }
            for k in self.col_ptr[c]..self.col_ptr[c + 1] {
                y[self.row_idx[k]] += self.values[k] * xc;
            }
        }
        y
    }

    /// `L(rho)` as a matrix.
    pub fn apply_to(&self, rho: &Mat<C64>) -> Mat<C64> {
        unvec(&self.apply(&vec(rho)), self.n)
    }

    pub fn to_dense(&self) -> Mat<C64> {
        let mut m = Mat::zeros(self.size(), self.size());
        for (r, c, v) in self.entries() {
            m[(r, c)] += v;
        }
        m
    }

    pub fn to_faer(&self) -> Result<SparseColMat<usize, C64>> {
        let trip: Vec<Triplet<usize, usize, C64>> = self.entries().map(|(r, c, v)| Triplet::new(r, c, v)).collect();
        SparseColMat::try_new_from_triplets(self.size(), self.size(), &trip).map_err(|e| Error::LinearAlgebra(format!("{e:?}")))
    }

    /// `max_col |sum_i L[(i,i), col]|` relative to `max |L|`: zero for a
    /// trace-preserving generator.
    pub fn trace_preservation_error(&self) -> f64 {
        let n = self.n;
        let mut worst = 0.0f64;
        for c in 0..self.size() {
            let mut s = C64::new(0.0, 0.0);
            for k in self.col_ptr[c]..self.col_ptr[c + 1] {
                let r = self.row_idx[k];
                if r % n == r / n {
                    s += self.values[k];
                }
            }
            worst = worst.max(s.norm());
        }
        worst / self.max_abs().max(f64::MIN_POSITIVE)
    }

    /// Rates of `<a>` and `<b>` generated from the vacuum. In a displaced frame
    /// built at the mean-field fixed point these linear drive terms cancel.
    pub fn residual_drive(&self) -> Result<(C64, C64)> {
        let modes = TwoMode::new(self.dims.0, self.dims.1)?;
        let mut vac = Mat::zeros(self.n, self.n);
        vac[(0, 0)] = C64::new(1.0, 0.0);
        let d = self.apply_to(&vac);
        let ea = crate::hilbert::trace_product(&modes.a.data, &d);
        let eb = crate::hilbert::trace_product(&modes.b.data, &d);
        Ok((ea, eb))
    }
}

/// Column-stacked vectorization.
pub fn vec(m: &Mat<C64>) -> Vec<C64> {
    let n = m.nrows();
    let mut v = Vec::with_capacity(n * m.ncols());
    for j in 0..m.ncols() {
        for i in 0..n {
            v.push(m[(i, j)]);
        }
    }
    v
}

pub fn unvec(v: &[C64], n: usize) -> Mat<C64> {
    Mat::from_fn(n, n, |i, j| v[j * n + i])
}

/// Liouvillian of the parameter set, plain or displaced by `(alpha, beta)`.
pub fn build_liouvillian(p: &SystemParams, displacement: Option<(C64, C64)>, cutoffs: (usize, usize)) -> Result<Liouvillian> {
    p.validate()?;
    let dim = cutoffs.0 * cutoffs.1;
    if dim.saturating_mul(dim) > MAX_LIOUVILLE_DIM {
        return Err(Error::DimensionOverflow { dim: dim.saturating_mul(dim), limit: MAX_LIOUVILLE_DIM });
    }
    let modes = TwoMode::new(cutoffs.0, cutoffs.1)?;
    let h = hamiltonian(p, &modes, displacement);
    let jumps = jump_operators(p, &modes, displacement);
    Liouvillian::from_parts(cutoffs, displacement, &h, &jumps)
}
