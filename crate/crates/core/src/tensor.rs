//! Three-way complex tensors stored as a stack of frontal slices.
//!
//! Unfolding conventions for a tensor with slices `G_0 .. G_{K-1}` (each `I x J`):
//!
//! * mode 1: `I x JK`, the horizontal concatenation `[G_0, .., G_{K-1}]`
//! * mode 2: `J x IK`, `[G_0^T, .., G_{K-1}^T]`
//! * mode 3: `K x IJ`, row `k` is `vec(G_k)^T`
//!
//! With these, a tensor whose slices are `A B_k C^T` unfolds as
//! `A [B]_(1) (I_K ⊗ C)^T`, `C [B]_(2) (I_K ⊗ A)^T` and `[B]_(3) (C ⊗ A)^T`.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{dim_err, Error, Result};
use crate::linalg::{svd, unvec, vectorize, ComplexMatrix};

#[derive(Debug, Clone, PartialEq)]
pub struct ComplexTensor3 {
    rows: usize,
    cols: usize,
    slices: Vec<ComplexMatrix>,
}

impl ComplexTensor3 {
    pub fn zeros(rows: usize, cols: usize, depth: usize) -> Self {
        Self {
            rows,
            cols,
            slices: (0..depth).map(|_| ComplexMatrix::zeros(rows, cols)).collect(),
        }
    }

    /// Builds a tensor whose frontal slice `k` is `slices[k]`.
    pub fn from_slices(slices: Vec<ComplexMatrix>) -> Result<Self> {
        let first = slices
            .first()
            .ok_or_else(|| dim_err("ComplexTensor3::from_slices", "no slices supplied".into()))?;
        let (rows, cols) = first.shape();
        if let Some((k, bad)) = slices.iter().enumerate().find(|(_, s)| s.shape() != (rows, cols)) {
            return Err(dim_err(
                "ComplexTensor3::from_slices",
                format!("slice {k} is {:?}, expected {:?}", bad.shape(), (rows, cols)),
            ));
        }
        Ok(Self { rows, cols, slices })
    }

    /// `(I, J, K)`.
    pub fn dims(&self) -> (usize, usize, usize) {
        (self.rows, self.cols, self.slices.len())
    }

    pub fn slice(&self, k: usize) -> &ComplexMatrix {
        &self.slices[k]
    }

    pub fn slices(&self) -> &[ComplexMatrix] {
        &self.slices
    }

    pub fn into_slices(self) -> Vec<ComplexMatrix> {
        self.slices
    }

    pub fn frobenius_norm(&self) -> f64 {
        libm::sqrt(self.slices.iter().map(|s| s.norm_squared()).sum::<f64>())
    }

    pub fn mode_unfold(&self, mode: usize) -> Result<ComplexMatrix> {
        let (i, j, k) = self.dims();
        match mode {
            1 => {
                let mut out = ComplexMatrix::zeros(i, j * k);
                for (kk, s) in self.slices.iter().enumerate() {
                    out.view_mut((0, kk * j), (i, j)).copy_from(s);
                }
                Ok(out)
            }
            2 => {
                let mut out = ComplexMatrix::zeros(j, i * k);
                for (kk, s) in self.slices.iter().enumerate() {
                    out.view_mut((0, kk * i), (j, i)).copy_from(&s.transpose());
                }
                Ok(out)
            }
            3 => {
                let mut out = ComplexMatrix::zeros(k, i * j);
                for (kk, s) in self.slices.iter().enumerate() {
                    out.row_mut(kk).copy_from(&vectorize(s).transpose());
                }
                Ok(out)
            }
            n => Err(Error::InvalidMode(n)),
        }
    }

    /// Inverse of [`mode_unfold`](Self::mode_unfold) for a tensor of shape `dims`.
    pub fn fold(mode: usize, m: &ComplexMatrix, dims: (usize, usize, usize)) -> Result<Self> {
        let (i, j, k) = dims;
        let expected = match mode {
            1 => (i, j * k),
            2 => (j, i * k),
            3 => (k, i * j),
            n => return Err(Error::InvalidMode(n)),
        };
        if m.shape() != expected {
            return Err(dim_err(
                "ComplexTensor3::fold",
                format!("mode-{mode} matrix is {:?}, expected {:?}", m.shape(), expected),
            ));
        }
        let slices = (0..k)
            .map(|kk| match mode {
                1 => Ok(m.columns(kk * j, j).into_owned()),
                2 => Ok(m.columns(kk * i, i).transpose()),
                _ => unvec(&m.row(kk).transpose(), i, j),
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { rows: i, cols: j, slices })
    }

    /// n-mode product `T x_n m`, defined by `[T x_n m]_(n) = m [T]_(n)`.
    pub fn mode_product(&self, mode: usize, m: &ComplexMatrix) -> Result<Self> {
        let (i, j, k) = self.dims();
        let along = match mode {
            1 => i,
            2 => j,
            3 => k,
            n => return Err(Error::InvalidMode(n)),
        };
        if m.ncols() != along {
            return Err(dim_err(
                "ComplexTensor3::mode_product",
                format!("factor has {} columns, mode {mode} has size {along}", m.ncols()),
            ));
        }
        let p = m.nrows();
        let dims = match mode {
            1 => (p, j, k),
            2 => (i, p, k),
            _ => (i, j, p),
        };
        match mode {
            // Slice-wise forms avoid materializing the wide unfoldings.
            1 => Self::from_slices(self.slices.iter().map(|s| m * s).collect()),
            2 => Self::from_slices(self.slices.iter().map(|s| s * m.transpose()).collect()),
            _ => Self::fold(3, &(m * self.mode_unfold(3)?), dims),
        }
    }

    /// Full higher-order SVD.
    pub fn hosvd(&self) -> Hosvd {
        let factors = [1, 2, 3].map(|n| svd(&self.mode_unfold(n).expect("valid mode")).u);
        let core = self
            .mode_product(1, &factors[0].adjoint())
            .and_then(|t| t.mode_product(2, &factors[1].adjoint()))
            .and_then(|t| t.mode_product(3, &factors[2].adjoint()))
            .expect("factor shapes match unfoldings");
        Hosvd { core, factors }
    }
}

/// `T = core x_1 U1 x_2 U2 x_3 U3`, with `U_n` the left singular vectors of `[T]_(n)`.
#[derive(Debug, Clone)]
pub struct Hosvd {
    pub core: ComplexTensor3,
    pub factors: [ComplexMatrix; 3],
}

impl Hosvd {
    pub fn reconstruct(&self) -> ComplexTensor3 {
        self.core
            .mode_product(1, &self.factors[0])
            .and_then(|t| t.mode_product(2, &self.factors[1]))
            .and_then(|t| t.mode_product(3, &self.factors[2]))
            .expect("factor shapes match core")
    }
}
