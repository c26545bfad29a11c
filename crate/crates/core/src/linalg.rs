//! Dense complex linear algebra used by every design routine.
//!
//! Matrices are `nalgebra::DMatrix<Complex<f64>>`, column-major, so the
//! column-stacking `vec` operator is a straight copy of the storage.

use alloc::format;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex;

use crate::error::{dim_err, Error, Result};

pub type C64 = Complex<f64>;
pub type ComplexMatrix = DMatrix<C64>;
pub type ComplexVector = DVector<C64>;

/// Magnitude below which an entry counts as zero when fixing the SVD phase.
const PHASE_ZERO: f64 = 1e-12;

/// Stacks the columns of `m`; entry `(i, j)` lands at `j * rows + i`.
pub fn vectorize(m: &ComplexMatrix) -> ComplexVector {
    ComplexVector::from_column_slice(m.as_slice())
}

/// Inverse of [`vectorize`].
pub fn unvec(v: &ComplexVector, rows: usize, cols: usize) -> Result<ComplexMatrix> {
    if v.len() != rows * cols {
        return Err(dim_err(
            "unvec",
            format!("vector of length {} cannot fill {rows}x{cols}", v.len()),
        ));
    }
    Ok(ComplexMatrix::from_column_slice(rows, cols, v.as_slice()))
}

/// Kronecker product; block `(i, j)` of the result is `a[(i, j)] * b`.
pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    let (ra, ca) = a.shape();
    let (rb, cb) = b.shape();
    let mut out = ComplexMatrix::zeros(ra * rb, ca * cb);
    for j in 0..ca {
        for i in 0..ra {
            let s = a[(i, j)];
            if s == C64::new(0.0, 0.0) {
                continue;
            }
            let mut block = out.view_mut((i * rb, j * cb), (rb, cb));
            block.zip_apply(b, |o, x| *o = s * x);
        }
    }
    out
}

/// Column-wise Kronecker product: column `j` is `kron(a[:, j], b[:, j])`.
pub fn khatri_rao(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<ComplexMatrix> {
    if a.ncols() != b.ncols() {
        return Err(dim_err(
            "khatri_rao",
            format!("column counts differ ({} vs {})", a.ncols(), b.ncols()),
        ));
    }
    let (ra, rb) = (a.nrows(), b.nrows());
    let mut out = ComplexMatrix::zeros(ra * rb, a.ncols());
    for j in 0..a.ncols() {
        for i in 0..ra {
            let s = a[(i, j)];
            for r in 0..rb {
                out[(i * rb + r, j)] = s * b[(r, j)];
            }
        }
    }
    Ok(out)
}

/// Thin singular value decomposition `m = u * diag(s) * v^H`.
///
/// Singular values are sorted in descending order. Each left singular vector
/// is rotated so that its first non-negligible entry is real and
/// non-negative; the matching right vector gets the same rotation.
#[derive(Debug, Clone)]
pub struct Svd {
    pub u: ComplexMatrix,
    pub s: Vec<f64>,
    pub v: ComplexMatrix,
}

impl Svd {
    pub fn rank(&self, rel_tol: f64) -> usize {
        numerical_rank_of(&self.s, rel_tol)
    }

    pub fn reconstruct(&self) -> ComplexMatrix {
        let mut us = self.u.clone();
        for (j, &sj) in self.s.iter().enumerate() {
            us.column_mut(j).scale_mut(sj);
        }
        us * self.v.adjoint()
    }
}

pub fn svd(m: &ComplexMatrix) -> Svd {
    let raw = m.clone().svd(true, true);
    let u_raw = raw.u.expect("u requested");
    let vt_raw = raw.v_t.expect("v_t requested");
    let p = raw.singular_values.len();

    let mut order: Vec<usize> = (0..p).collect();
    order.sort_by(|&a, &b| {
        raw.singular_values[b]
            .partial_cmp(&raw.singular_values[a])
            .unwrap_or(core::cmp::Ordering::Equal)
    });

    let mut u = ComplexMatrix::zeros(m.nrows(), p);
    let mut v = ComplexMatrix::zeros(m.ncols(), p);
    let mut s = Vec::with_capacity(p);
    for (dst, &src) in order.iter().enumerate() {
        s.push(raw.singular_values[src]);
        u.set_column(dst, &u_raw.column(src));
        let vcol: ComplexVector = vt_raw.row(src).adjoint();
        v.set_column(dst, &vcol);
    }
    fix_phase(&mut u, &mut v);
    Svd { u, s, v }
}

fn fix_phase(u: &mut ComplexMatrix, v: &mut ComplexMatrix) {
    for j in 0..u.ncols() {
        let lead = u.column(j).iter().copied().find(|z| z.norm() > PHASE_ZERO);
        if let Some(z) = lead {
            let rot = (z / z.norm()).conj();
            u.column_mut(j).iter_mut().for_each(|x| *x *= rot);
            v.column_mut(j).iter_mut().for_each(|x| *x *= rot);
        }
    }
}

/// Number of singular values above `rel_tol * s_max`.
pub fn numerical_rank(m: &ComplexMatrix, rel_tol: f64) -> usize {
    let s = m.clone().singular_values();
    let v: Vec<f64> = s.iter().copied().collect();
    numerical_rank_of(&v, rel_tol)
}

fn numerical_rank_of(s: &[f64], rel_tol: f64) -> usize {
    let smax = s.iter().copied().fold(0.0_f64, f64::max);
    if smax == 0.0 {
        return 0;
    }
    s.iter().filter(|&&x| x > rel_tol * smax).count()
}

/// Moore-Penrose pseudo-inverse with the usual `max(m, n) * eps * s_max` cutoff.
pub fn pinv(m: &ComplexMatrix) -> ComplexMatrix {
    let d = svd(m);
    let smax = d.s.first().copied().unwrap_or(0.0);
    let cutoff = (m.nrows().max(m.ncols()) as f64) * f64::EPSILON * smax;
    let mut vs = d.v.clone();
    for (j, &sj) in d.s.iter().enumerate() {
        let inv = if sj > cutoff { 1.0 / sj } else { 0.0 };
        vs.column_mut(j).scale_mut(inv);
    }
    vs * d.u.adjoint()
}

/// Eigendecomposition of a Hermitian matrix, eigenvalues in descending order.
pub fn hermitian_eigen(m: &ComplexMatrix) -> Result<(Vec<f64>, ComplexMatrix)> {
    if !m.is_square() {
        return Err(dim_err("hermitian_eigen", format!("{}x{} is not square", m.nrows(), m.ncols())));
    }
    let asym = hermitian_asymmetry(m);
    if asym > 1e-8 {
        return Err(Error::NotHermitian { asymmetry: asym });
    }
    let eig = m.clone().symmetric_eigen();
    let n = eig.eigenvalues.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[b]
            .partial_cmp(&eig.eigenvalues[a])
            .unwrap_or(core::cmp::Ordering::Equal)
    });
    let mut vecs = ComplexMatrix::zeros(n, n);
    let mut vals = Vec::with_capacity(n);
    for (dst, &src) in order.iter().enumerate() {
        vals.push(eig.eigenvalues[src]);
        vecs.set_column(dst, &eig.eigenvectors.column(src));
    }
    Ok((vals, vecs))
}

/// `||m - m^H||_F / max(||m||_F, 1)`.
pub fn hermitian_asymmetry(m: &ComplexMatrix) -> f64 {
    (m - m.adjoint()).norm() / m.norm().max(1.0)
}

pub fn is_finite(m: &ComplexMatrix) -> bool {
    m.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

pub fn trace_re(m: &ComplexMatrix) -> f64 {
    m.diagonal().iter().map(|z| z.re).sum()
}
